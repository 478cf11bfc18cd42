/* Copyright 2026 The ngi Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * C interface of the ngi library. Every object is an opaque handle owned
 * by the caller and released with its _free function. Functions return an
 * ngi_status; on failure ngi_last_error() describes the problem (per
 * thread, valid until the next call on that thread). Strings returned
 * through char** are NUL-terminated UTF-8 and released with
 * ngi_string_free.
 */

#ifndef NGI_NGI_H_
#define NGI_NGI_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NGI_API __declspec(dllexport)
#else
#define NGI_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  NGI_OK = 0,
  NGI_ERR_USAGE = 1,    /* invalid arguments or configuration */
  NGI_ERR_DATA = 2,     /* malformed or inconsistent input data */
  NGI_ERR_IO = 3,       /* file could not be read or written */
  NGI_ERR_INTERNAL = 4
} ngi_status;

typedef struct ngi_corpus ngi_corpus;
typedef struct ngi_lm ngi_lm;
typedef struct ngi_manifest ngi_manifest;
typedef struct ngi_dataset ngi_dataset;
typedef struct ngi_model ngi_model;

typedef void (*ngi_log_fn)(const char* line, void* user);

NGI_API const char* ngi_version(void);
NGI_API const char* ngi_last_error(void);
NGI_API void ngi_string_free(char* s);

/* Corpus: one word per line, UTF-8. */
NGI_API ngi_status ngi_corpus_load(const char* path, ngi_corpus** out);
NGI_API ngi_status ngi_corpus_from_words(const char* const* words, size_t n,
                                         ngi_corpus** out);
NGI_API size_t ngi_corpus_size(const ngi_corpus* c);
NGI_API size_t ngi_corpus_token_count(const ngi_corpus* c);
/* Distinct characters of the corpus in code point order. */
NGI_API ngi_status ngi_corpus_charset(const ngi_corpus* c, char** out);
NGI_API void ngi_corpus_free(ngi_corpus* c);

/* Witten-Bell n-gram over the charset of charset_source (NULL: corpus). */
NGI_API ngi_status ngi_lm_estimate(const ngi_corpus* corpus,
                                   const ngi_corpus* charset_source, int order,
                                   ngi_lm** out);
NGI_API ngi_status ngi_lm_load(const char* path, ngi_lm** out);
NGI_API ngi_status ngi_lm_save(const ngi_lm* lm, const char* path);
NGI_API int ngi_lm_order(const ngi_lm* lm);
/* K: predictable symbols including the end-of-word symbol. */
NGI_API int ngi_lm_charset_size(const ngi_lm* lm);
NGI_API ngi_status ngi_lm_fingerprint(const ngi_lm* lm, char** out);
/* log10 P(next | context). The context is a word prefix, preceded by the
 * start symbol when at_word_start is non-zero. next is one character or
 * "</s>". */
NGI_API ngi_status ngi_lm_score(const ngi_lm* lm, const char* context,
                                int at_word_start, const char* next,
                                double* out);
/* Distribution over the K symbols (end-of-word last); out has room for k. */
NGI_API ngi_status ngi_lm_dist_vector(const ngi_lm* lm, const char* context,
                                      int at_word_start, double* out,
                                      size_t k);
NGI_API ngi_status ngi_lm_perplexity(const ngi_lm* lm, const ngi_corpus* c,
                                     double* out);
NGI_API void ngi_lm_free(ngi_lm* lm);

/* strategy: "lexicon" or "kmeans". */
NGI_API ngi_status ngi_split(const ngi_corpus* c, const char* strategy,
                             uint64_t seed, ngi_manifest** out);
NGI_API ngi_status ngi_manifest_load(const char* path, ngi_manifest** out);
NGI_API ngi_status ngi_manifest_save(const ngi_manifest* m, const char* path);
NGI_API ngi_status ngi_manifest_to_json(const ngi_manifest* m, char** out);
/* Size of one of source_train, source_val, source_test, target_ng,
 * target_test; 0 for an unknown name. */
NGI_API size_t ngi_manifest_part_size(const ngi_manifest* m, const char* part);
/* Words of one manifest part, or "source_dev" (train and val), in index
 * order. */
NGI_API ngi_status ngi_corpus_subset(const ngi_corpus* c, const ngi_manifest* m,
                                     const char* part, ngi_corpus** out);
NGI_API void ngi_manifest_free(ngi_manifest* m);

/* Cross-perplexity report; either output may be NULL. */
NGI_API ngi_status ngi_audit(const ngi_manifest* m, const ngi_corpus* c,
                             int order, char** json, char** table);

typedef struct {
  int proto_dim;               /* 16 */
  int frames_per_char;         /* 1 */
  double noise_sigma;          /* 0.3 */
  const char* confusion_pairs; /* "ao,ei": comma-separated symbol pairs */
  int terminator;              /* 1: append an end-of-word frame */
} ngi_synth_config;

NGI_API void ngi_synth_config_default(ngi_synth_config* cfg);
/* One sample per corpus word, in corpus order. */
NGI_API ngi_status ngi_dataset_synthesize(const ngi_corpus* c,
                                          const ngi_synth_config* cfg,
                                          uint64_t seed, ngi_dataset** out);
NGI_API ngi_status ngi_dataset_load(const char* dir, ngi_dataset** out);
NGI_API ngi_status ngi_dataset_save(const ngi_dataset* d, const char* dir);
NGI_API size_t ngi_dataset_size(const ngi_dataset* d);
NGI_API void ngi_dataset_free(ngi_dataset* d);

typedef struct {
  int ngi;          /* 1: n-gram injection */
  int d;            /* 256 */
  int heads;        /* 8 */
  int layers;       /* 2 */
  int ffn_dim;      /* 1024 */
  double dropout;   /* 0.1 */
  int epochs;       /* 60 */
  int batch_size;   /* 128 */
  double lr;        /* 3e-4 */
  double tfe;       /* 0.1 */
  double noise_a;   /* -0.1 */
  double noise_b;   /* 0.1 */
  double noise_tau; /* 0.2 */
  uint64_t seed;    /* 1 */
} ngi_train_config;

NGI_API void ngi_train_config_default(ngi_train_config* cfg);
/* "paper" (the defaults) or "desk" (d=64, 4 heads, lr 1e-3, batch 16,
 * 40 epochs). */
NGI_API ngi_status ngi_train_config_preset(const char* name,
                                           ngi_train_config* cfg);

/* Trains on the source_train samples of the manifest. lm feeds the
 * injection: required iff cfg->ngi, and its charset must be the dataset's. */
NGI_API ngi_status ngi_train(const ngi_dataset* d, const ngi_manifest* m,
                             const ngi_lm* lm, const ngi_train_config* cfg,
                             ngi_log_fn log, void* user, ngi_model** out);
NGI_API ngi_status ngi_model_load(const char* path, ngi_model** out);
NGI_API ngi_status ngi_model_save(const ngi_model* model, const char* path);
NGI_API int ngi_model_uses_ngi(const ngi_model* model);
/* Header fields as JSON: config, seed, n-gram fingerprint, metadata. */
NGI_API ngi_status ngi_model_info(const ngi_model* model, char** out);
/* FNV-1a digest of every parameter value, hex. */
NGI_API ngi_status ngi_model_param_hash(const ngi_model* model, char** out);
NGI_API void ngi_model_free(ngi_model* model);

/* Recognizes sample `index` of the dataset. Greedy when beam_width is 0;
 * otherwise beam search fusing fusion_lm with weight lambda. inject_lm is
 * required iff the model uses injection. */
NGI_API ngi_status ngi_decode(const ngi_model* model, const ngi_dataset* d,
                              size_t index, const ngi_lm* inject_lm,
                              const ngi_lm* fusion_lm, int beam_width,
                              double lambda, char** out);

/* CER over one manifest part (NULL manifest: every sample). Greedy when
 * beam_width is 0. report receives a JSON summary and may be NULL. */
NGI_API ngi_status ngi_evaluate(const ngi_model* model, const ngi_dataset* d,
                                const ngi_manifest* m, const char* part,
                                const ngi_lm* inject_lm,
                                const ngi_lm* fusion_lm, int beam_width,
                                double lambda, double* cer, char** report);

typedef struct {
  const char* preset;     /* "desk", "paper" or "smoke" */
  const uint64_t* seeds;  /* NULL: the preset's seeds */
  size_t n_seeds;
  const char* strategy;   /* NULL: lexicon */
  int beam_width;         /* 0: preset value */
  int ablate_order3;
  int ablate_noise;
  int jobs;               /* parallel training and evaluation runs */
} ngi_experiment_config;

NGI_API void ngi_experiment_config_default(ngi_experiment_config* cfg);
/* Full grid; json/table may be NULL; all_pass receives 1 when every
 * directional check holds. */
NGI_API ngi_status ngi_experiment(const ngi_experiment_config* cfg,
                                  ngi_log_fn log, void* user, char** json,
                                  char** table, int* all_pass);

#ifdef __cplusplus
}
#endif

#endif /* NGI_NGI_H_ */
