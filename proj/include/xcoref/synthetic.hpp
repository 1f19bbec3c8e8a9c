#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xcoref/corpus.hpp"

namespace xcoref {

// Generator for small annotated corpora with known coreference structure.
//
// Each topic has `event_chains` gold event chains arranged in pairs; both
// chains of a pair draw their predicate words from the same concept, so only
// their arguments tell them apart. Every event chain owns an Arg0 entity chain
// and an Arg1 entity chain with distinct names. A mention uses the chain's
// primary predicate word with probability `same_lemma_prob`, otherwise a
// synonym with a different lemma. Word vectors of a concept's words are the
// concept vector plus `word_noise` Gaussian noise. Sentences read
// `[Arg0 entity] [event] [Arg1 entity] filler...`; SRL links are emitted with
// probability `srl_coverage`, leaving the rest to the nearest-entity heuristic.
// Topic vocabularies are disjoint so document clustering recovers the topics.
struct SyntheticSpec {
  int topics = 7;
  int docs_per_topic = 4;
  int event_chains = 6;
  int mentions_per_event_chain = 4;
  double arg1_prob = 0.5;
  double same_lemma_prob = 0.8;
  double srl_coverage = 0.7;
  int word_dim = 32;
  double word_noise = 0.3;
  bool ambiguous_pairs = true;
  std::uint64_t seed = 7;
};

struct SyntheticData {
  Corpus corpus;
  std::map<std::string, Eigen::VectorXd> words;  // static word vectors
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

// Documents whose gold topic id is in `topic_ids`, as a new corpus.
Corpus subset_by_topic(const Corpus& corpus, const std::vector<std::string>& topic_ids);

}  // namespace xcoref
