#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xcoref/corpus.hpp"

namespace xcoref {

struct Prf {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  Prf muc;
  Prf b_cubed;
  Prf ceaf_e;
  double conll_f1 = 0.0;
};

// All metrics require `pred` and `gold` to cover the same mention set and
// throw InvariantError otherwise.

// Link-based (Vilain et al.). A zero denominator yields 0 for that side.
Prf muc(const Partition& pred, const Partition& gold);
// Mention-based (Bagga & Baldwin), singletons included.
Prf b_cubed(const Partition& pred, const Partition& gold);
// Entity-based with phi4 similarity and an optimal one-to-one alignment.
Prf ceaf_e(const Partition& pred, const Partition& gold);
double conll_f1(const Partition& pred, const Partition& gold);
EvalReport evaluate(const Partition& pred, const Partition& gold);

// phi4(K, R) = 2|K n R| / (|K| + |R|), rows = gold, cols = pred.
Eigen::MatrixXd phi4_matrix(const Partition& gold, const Partition& pred);

// Maximum-weight one-to-one assignment on a rectangular weight matrix
// (Kuhn-Munkres). Returns the assigned column per row, -1 when unassigned.
std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights);

// Fixed-width table in MUC, B3, CEAF-e, CoNLL column order (percentages).
std::string format_report(const std::string& label, const EvalReport& report);
std::string format_report_header();

// Mentions of one kind within a topic that share the head-token lemma form one
// cluster.
Partition lemma_baseline(const Corpus& corpus, const Topic& topic, MentionKind kind);
Partition lemma_baseline(const Corpus& corpus, const std::vector<Topic>& topics, MentionKind kind);

// Clusters restricted to `mentions`; clusters left empty are dropped.
Partition restrict_partition(const Partition& partition, const std::vector<std::string>& mentions);

struct SignificanceResult {
  double observed_delta = 0.0;  // mean per-topic CoNLL F1 of A minus B
  double bootstrap_p = 1.0;     // share of topic resamples with mean delta <= 0
  double permutation_p = 1.0;   // paired sign-flip test, two-sided, add-one smoothed
  std::vector<double> topic_deltas;
};

// Paired tests over per-topic CoNLL F1 differences. Deterministic given seed.
SignificanceResult significance(const Partition& pred_a, const Partition& pred_b,
                                const Partition& gold,
                                const std::vector<std::vector<std::string>>& topic_mentions,
                                int n_resamples, std::uint64_t seed);
SignificanceResult significance_from_deltas(std::vector<double> deltas, int n_resamples,
                                            std::uint64_t seed);

}  // namespace xcoref
