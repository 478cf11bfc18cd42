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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "ngi/ngi.h"

namespace {

std::string Take(char* s) {
  std::string out = s ? s : "";
  ngi_string_free(s);
  return out;
}

ngi_corpus* Words(std::vector<const char*> words) {
  ngi_corpus* c = nullptr;
  REQUIRE(ngi_corpus_from_words(words.data(), words.size(), &c) == NGI_OK);
  return c;
}

ngi_corpus* Benchmark() {
  std::vector<std::string> types = {"bead", "cafe", "face", "deaf", "babe", "fade",
                                    "aced", "dace", "abed", "bade"};
  std::vector<const char*> words;
  for (size_t i = 0; i < types.size(); ++i)
    for (size_t r = 0; r < 6 + i % 3; ++r) words.push_back(types[i].c_str());
  return Words(words);
}

}  // namespace

TEST_CASE("C API: corpus and n-gram model") {
  CHECK(std::string(ngi_version()).size() > 0);
  ngi_corpus* c = Words({"ab"});
  CHECK(ngi_corpus_size(c) == 1);
  CHECK(ngi_corpus_token_count(c) == 3);
  char* cs = nullptr;
  REQUIRE(ngi_corpus_charset(c, &cs) == NGI_OK);
  CHECK(Take(cs) == "ab");

  ngi_lm* lm = nullptr;
  REQUIRE(ngi_lm_estimate(c, nullptr, 2, &lm) == NGI_OK);
  CHECK(ngi_lm_order(lm) == 2);
  CHECK(ngi_lm_charset_size(lm) == 3);
  double score = 0.0;
  REQUIRE(ngi_lm_score(lm, "", 1, "a", &score) == NGI_OK);
  CHECK(score == doctest::Approx(std::log10(2.0 / 3)).epsilon(1e-12));
  REQUIRE(ngi_lm_score(lm, "", 1, "</s>", &score) == NGI_OK);
  CHECK(score == doctest::Approx(std::log10(1.0 / 6)).epsilon(1e-12));
  double dist[3];
  REQUIRE(ngi_lm_dist_vector(lm, "", 1, dist, 3) == NGI_OK);
  CHECK(dist[0] + dist[1] + dist[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ngi_lm_dist_vector(lm, "", 1, dist, 2) == NGI_ERR_USAGE);
  CHECK(ngi_lm_score(lm, "", 1, "z", &score) != NGI_OK);
  CHECK(std::string(ngi_last_error()).size() > 0);

  double ppl = 0.0;
  REQUIRE(ngi_lm_perplexity(lm, c, &ppl) == NGI_OK);
  CHECK(ppl >= 1.0);
  CHECK(ppl < 3.0);

  const auto dir = std::filesystem::temp_directory_path() / "ngi_test_capi";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "lm.arpa").string();
  REQUIRE(ngi_lm_save(lm, path.c_str()) == NGI_OK);
  ngi_lm* back = nullptr;
  REQUIRE(ngi_lm_load(path.c_str(), &back) == NGI_OK);
  char *f1 = nullptr, *f2 = nullptr;
  REQUIRE(ngi_lm_fingerprint(lm, &f1) == NGI_OK);
  REQUIRE(ngi_lm_fingerprint(back, &f2) == NGI_OK);
  CHECK(Take(f1) == Take(f2));
  ngi_lm* missing = nullptr;
  CHECK(ngi_lm_load((dir / "none.arpa").string().c_str(), &missing) == NGI_ERR_DATA);
  CHECK(missing == nullptr);
  ngi_lm_free(back);
  ngi_lm_free(lm);
  ngi_corpus_free(c);
  std::filesystem::remove_all(dir);
}

TEST_CASE("C API: argument validation") {
  ngi_corpus* out = nullptr;
  CHECK(ngi_corpus_from_words(nullptr, 1, &out) == NGI_ERR_USAGE);
  CHECK(ngi_corpus_load(nullptr, &out) == NGI_ERR_USAGE);
  ngi_corpus* c = Words({"ab", "ba"});
  ngi_lm* lm = nullptr;
  CHECK(ngi_lm_estimate(c, nullptr, 0, &lm) == NGI_ERR_USAGE);
  ngi_manifest* m = nullptr;
  CHECK(ngi_split(c, "random", 1, &m) == NGI_ERR_USAGE);
  ngi_corpus_free(c);
  // Freeing NULL is a no-op.
  ngi_corpus_free(nullptr);
  ngi_lm_free(nullptr);
  ngi_model_free(nullptr);
  ngi_string_free(nullptr);
}

TEST_CASE("C API: split, train, decode, switch models") {
  ngi_corpus* c = Benchmark();
  ngi_manifest* m = nullptr;
  REQUIRE(ngi_split(c, "lexicon", 3, &m) == NGI_OK);
  size_t total = 0;
  for (const char* part : {"source_train", "source_val", "source_test", "target_ng", "target_test"})
    total += ngi_manifest_part_size(m, part);
  CHECK(total == ngi_corpus_size(c));
  CHECK(ngi_manifest_part_size(m, "bogus") == 0);

  ngi_corpus *dev = nullptr, *ng = nullptr;
  REQUIRE(ngi_corpus_subset(c, m, "source_dev", &dev) == NGI_OK);
  REQUIRE(ngi_corpus_subset(c, m, "target_ng", &ng) == NGI_OK);
  CHECK(ngi_corpus_size(dev) ==
        ngi_manifest_part_size(m, "source_train") + ngi_manifest_part_size(m, "source_val"));
  ngi_lm *src = nullptr, *tgt = nullptr;
  REQUIRE(ngi_lm_estimate(dev, c, 3, &src) == NGI_OK);
  REQUIRE(ngi_lm_estimate(ng, c, 3, &tgt) == NGI_OK);

  char *json = nullptr, *table = nullptr;
  REQUIRE(ngi_audit(m, c, 3, &json, &table) == NGI_OK);
  CHECK(Take(json).find("source_dev") != std::string::npos);
  CHECK(!Take(table).empty());

  ngi_synth_config sc;
  ngi_synth_config_default(&sc);
  CHECK(sc.proto_dim == 16);
  ngi_dataset* d = nullptr;
  REQUIRE(ngi_dataset_synthesize(c, &sc, 3, &d) == NGI_OK);
  CHECK(ngi_dataset_size(d) == ngi_corpus_size(c));

  ngi_train_config tc;
  ngi_train_config_default(&tc);
  CHECK(tc.d == 256);
  CHECK(tc.tfe == 0.1);
  CHECK(tc.noise_tau == 0.2);
  REQUIRE(ngi_train_config_preset("desk", &tc) == NGI_OK);
  CHECK(tc.d == 64);
  tc.d = 16;
  tc.heads = 2;
  tc.layers = 1;
  tc.ffn_dim = 32;
  tc.epochs = 3;
  tc.seed = 3;
  ngi_model* model = nullptr;
  CHECK(ngi_train(d, m, nullptr, &tc, nullptr, nullptr, &model) == NGI_ERR_USAGE);
  int lines = 0;
  REQUIRE(ngi_train(d, m, src, &tc, [](const char*, void* u) { ++*static_cast<int*>(u); },
                    &lines, &model) == NGI_OK);
  CHECK(lines == 3);
  CHECK(ngi_model_uses_ngi(model) == 1);

  char* hash = nullptr;
  REQUIRE(ngi_model_param_hash(model, &hash) == NGI_OK);
  const std::string before = Take(hash);
  char *a = nullptr, *b = nullptr, *again = nullptr;
  REQUIRE(ngi_decode(model, d, 0, src, nullptr, 0, 0.0, &a) == NGI_OK);
  REQUIRE(ngi_decode(model, d, 0, tgt, nullptr, 0, 0.0, &b) == NGI_OK);
  REQUIRE(ngi_decode(model, d, 0, tgt, nullptr, 0, 0.0, &again) == NGI_OK);
  Take(a);
  CHECK(Take(b) == Take(again));
  CHECK(ngi_decode(model, d, 0, nullptr, nullptr, 0, 0.0, &a) == NGI_ERR_USAGE);
  CHECK(ngi_decode(model, d, 999999, src, nullptr, 0, 0.0, &a) == NGI_ERR_USAGE);
  REQUIRE(ngi_model_param_hash(model, &hash) == NGI_OK);
  CHECK(Take(hash) == before);

  double greedy = 0.0, beam = 0.0;
  char* report = nullptr;
  REQUIRE(ngi_evaluate(model, d, m, "target_test", tgt, nullptr, 0, 0.0, &greedy, &report) == NGI_OK);
  CHECK(Take(report).find("\"cer\"") != std::string::npos);
  REQUIRE(ngi_evaluate(model, d, m, "target_test", tgt, tgt, 1, 0.0, &beam, nullptr) == NGI_OK);
  CHECK(beam == greedy);

  const auto dir = std::filesystem::temp_directory_path() / "ngi_test_capi_model";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "model.bin").string();
  REQUIRE(ngi_model_save(model, path.c_str()) == NGI_OK);
  ngi_model* loaded = nullptr;
  REQUIRE(ngi_model_load(path.c_str(), &loaded) == NGI_OK);
  REQUIRE(ngi_model_param_hash(loaded, &hash) == NGI_OK);
  CHECK(Take(hash) == before);
  char* info = nullptr;
  REQUIRE(ngi_model_info(loaded, &info) == NGI_OK);
  CHECK(Take(info).find("max_len") != std::string::npos);
  std::filesystem::remove_all(dir);

  ngi_model_free(loaded);
  ngi_model_free(model);
  ngi_dataset_free(d);
  ngi_lm_free(src);
  ngi_lm_free(tgt);
  ngi_corpus_free(dev);
  ngi_corpus_free(ng);
  ngi_manifest_free(m);
  ngi_corpus_free(c);
}

TEST_CASE("C API: experiment") {
  ngi_experiment_config ec;
  ngi_experiment_config_default(&ec);
  ec.preset = "smoke";
  const uint64_t seeds[] = {2};
  ec.seeds = seeds;
  ec.n_seeds = 1;
  char *json = nullptr, *table = nullptr;
  int pass = -1;
  REQUIRE(ngi_experiment(&ec, nullptr, nullptr, &json, &table, &pass) == NGI_OK);
  CHECK((pass == 0 || pass == 1));
  CHECK(Take(json).find("\"seeds\"") != std::string::npos);
  CHECK(!Take(table).empty());
  ec.preset = "nope";
  CHECK(ngi_experiment(&ec, nullptr, nullptr, nullptr, nullptr, &pass) == NGI_ERR_USAGE);
}
