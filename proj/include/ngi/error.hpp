// Copyright 2026 The ngi Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NGI_ERROR_HPP_
#define NGI_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace ngi {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument or violated precondition on the caller's side.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (corpus, ARPA, manifest, checkpoint).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace ngi

#endif  // NGI_ERROR_HPP_
