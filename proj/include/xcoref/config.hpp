#pragma once

#include <cstdint>
#include <string>

#include "xcoref/corpus.hpp"
#include "xcoref/engine.hpp"
#include "xcoref/scorer.hpp"

namespace xcoref {

// Every tunable of a run. Defaults are the published hyper-parameters; the
// file format is one `key = value` per line with `#` comments.
struct RunConfig {
  int word_dim = 300;
  int char_dim = 300;
  int char_hidden = 50;
  int ctx_dim = 1024;
  int hidden = 4261;
  int feature_dim = 50;
  bool joint = true;  // false drops d(m) and the pair-feature embeddings

  double delta_train = 0.5;
  double delta_infer = 0.5;
  int max_iterations = 10;
  int k = 20;  // <= 0 selects K by silhouette

  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  int batch_size = 16;
  int epochs = 1;
  bool reinit_scorers = false;
  int workers = 0;  // 0 = hardware concurrency

  bool augment_links = true;
  EntityInit entity_init = EntityInit::wd_system;

  std::string static_vectors;   // empty = all-zero word vectors
  std::string context_vectors;  // empty = hash fallback
  std::string char_vectors;     // optional pre-trained char embeddings
  std::uint64_t context_seed = 0;

  // Throws ParseError for unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  // Canonical text form; parse_config(to_text()) reproduces the config.
  std::string to_text() const;

  ScorerShape scorer_shape() const;
  MergeParams merge_params() const;
  int resolved_workers() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace xcoref
