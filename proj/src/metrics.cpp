#include "xcoref/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <set>
#include <unordered_map>

#include "xcoref/error.hpp"

namespace xcoref {

namespace {

using ClusterOf = std::unordered_map<std::string, int>;

ClusterOf index_of(const Partition& p) {
  ClusterOf out;
  for (std::size_t c = 0; c < p.size(); ++c) {
    for (const std::string& id : p[c]) {
      if (!out.emplace(id, static_cast<int>(c)).second) {
        throw InvariantError("mention '" + id + "' appears in two clusters");
      }
    }
  }
  return out;
}

void check_same_mentions(const ClusterOf& pred, const ClusterOf& gold) {
  if (pred.size() != gold.size()) {
    throw InvariantError("prediction covers " + std::to_string(pred.size()) +
                         " mentions, gold covers " + std::to_string(gold.size()));
  }
  for (const auto& [id, c] : gold) {
    if (!pred.count(id)) throw InvariantError("mention '" + id + "' missing from prediction");
  }
}

double f1_of(double r, double p) { return r + p > 0.0 ? 2.0 * r * p / (r + p) : 0.0; }

Prf make_prf(double r, double p) { return {r, p, f1_of(r, p)}; }

// Sum over key clusters of (|K| - #response clusters K is split into), and of (|K| - 1).
std::pair<double, double> muc_side(const Partition& key, const ClusterOf& response) {
  double num = 0.0, den = 0.0;
  for (const Cluster& k : key) {
    std::set<int> parts;
    for (const std::string& id : k) parts.insert(response.at(id));
    num += static_cast<double>(k.size() - parts.size());
    den += static_cast<double>(k.size() - 1);
  }
  return {num, den};
}

double b_cubed_side(const Partition& response, const ClusterOf& key) {
  double total = 0.0, count = 0.0;
  for (const Cluster& r : response) {
    std::unordered_map<int, double> overlap;
    for (const std::string& id : r) overlap[key.at(id)] += 1.0;
    for (const auto& [k, n] : overlap) total += n * n / static_cast<double>(r.size());
    count += static_cast<double>(r.size());
  }
  return count > 0.0 ? total / count : 0.0;
}

}  // namespace

Prf muc(const Partition& pred, const Partition& gold) {
  const ClusterOf pi = index_of(pred), gi = index_of(gold);
  check_same_mentions(pi, gi);
  const auto [rn, rd] = muc_side(gold, pi);
  const auto [pn, pd] = muc_side(pred, gi);
  return make_prf(rd > 0.0 ? rn / rd : 0.0, pd > 0.0 ? pn / pd : 0.0);
}

Prf b_cubed(const Partition& pred, const Partition& gold) {
  const ClusterOf pi = index_of(pred), gi = index_of(gold);
  check_same_mentions(pi, gi);
  return make_prf(b_cubed_side(gold, pi), b_cubed_side(pred, gi));
}

Eigen::MatrixXd phi4_matrix(const Partition& gold, const Partition& pred) {
  const ClusterOf pi = index_of(pred);
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(gold.size()),
                                              static_cast<Eigen::Index>(pred.size()));
  for (std::size_t g = 0; g < gold.size(); ++g) {
    std::unordered_map<int, double> overlap;
    for (const std::string& id : gold[g]) {
      if (auto it = pi.find(id); it != pi.end()) overlap[it->second] += 1.0;
    }
    for (const auto& [p, n] : overlap) {
      phi(static_cast<Eigen::Index>(g), p) =
          2.0 * n / static_cast<double>(gold[g].size() + pred[p].size());
    }
  }
  return phi;
}

std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights) {
  const int rows = static_cast<int>(weights.rows());
  const int cols = static_cast<int>(weights.cols());
  std::vector<int> result(rows, -1);
  if (rows == 0 || cols == 0) return result;
  const int n = std::max(rows, cols);
  const double top = weights.maxCoeff();
  // Square cost matrix; padding cells cost as much as a zero-weight match.
  const auto cost = [&](int i, int j) {
    return (i < rows && j < cols) ? top - weights(i, j) : top;
  };

  // Shortest augmenting path formulation with potentials, 1-indexed.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (int j = 1; j <= n; ++j) {
    const int i = match[j] - 1;
    if (i >= 0 && i < rows && j - 1 < cols) result[i] = j - 1;
  }
  return result;
}

Prf ceaf_e(const Partition& pred, const Partition& gold) {
  const ClusterOf pi = index_of(pred), gi = index_of(gold);
  check_same_mentions(pi, gi);
  const Eigen::MatrixXd phi = phi4_matrix(gold, pred);
  const std::vector<int> assign = max_weight_assignment(phi);
  double sim = 0.0;
  for (std::size_t g = 0; g < assign.size(); ++g) {
    if (assign[g] >= 0) sim += phi(static_cast<Eigen::Index>(g), assign[g]);
  }
  const double r = gold.empty() ? 0.0 : sim / static_cast<double>(gold.size());
  const double p = pred.empty() ? 0.0 : sim / static_cast<double>(pred.size());
  return make_prf(r, p);
}

EvalReport evaluate(const Partition& pred, const Partition& gold) {
  EvalReport r;
  r.muc = muc(pred, gold);
  r.b_cubed = b_cubed(pred, gold);
  r.ceaf_e = ceaf_e(pred, gold);
  r.conll_f1 = (r.muc.f1 + r.b_cubed.f1 + r.ceaf_e.f1) / 3.0;
  return r;
}

double conll_f1(const Partition& pred, const Partition& gold) {
  return evaluate(pred, gold).conll_f1;
}

std::string format_report_header() {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-16s | %6s %6s %6s | %6s %6s %6s | %6s %6s %6s | %6s\n",
                "", "MUC R", "P", "F1", "B3 R", "P", "F1", "CEAF R", "P", "F1", "CoNLL");
  return buf;
}

std::string format_report(const std::string& label, const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%-16s | %6.1f %6.1f %6.1f | %6.1f %6.1f %6.1f | %6.1f %6.1f %6.1f | %6.1f\n",
                label.c_str(), 100 * r.muc.recall, 100 * r.muc.precision, 100 * r.muc.f1,
                100 * r.b_cubed.recall, 100 * r.b_cubed.precision, 100 * r.b_cubed.f1,
                100 * r.ceaf_e.recall, 100 * r.ceaf_e.precision, 100 * r.ceaf_e.f1,
                100 * r.conll_f1);
  return buf;
}

Partition lemma_baseline(const Corpus& corpus, const Topic& topic, MentionKind kind) {
  std::map<std::string, Cluster> by_lemma;
  for (const std::string& id : topic_mentions(corpus, topic, kind)) {
    const Mention& m = corpus.mention(id);
    by_lemma[corpus.token(m, m.head_idx).lemma].push_back(id);
  }
  Partition out;
  for (auto& [lemma, c] : by_lemma) out.push_back(std::move(c));
  canonicalize(out);
  return out;
}

Partition lemma_baseline(const Corpus& corpus, const std::vector<Topic>& topics, MentionKind kind) {
  Partition out;
  for (const Topic& t : topics) {
    for (Cluster& c : lemma_baseline(corpus, t, kind)) out.push_back(std::move(c));
  }
  canonicalize(out);
  return out;
}

Partition restrict_partition(const Partition& partition, const std::vector<std::string>& mentions) {
  const std::set<std::string> keep(mentions.begin(), mentions.end());
  Partition out;
  for (const Cluster& c : partition) {
    Cluster r;
    for (const std::string& id : c) {
      if (keep.count(id)) r.push_back(id);
    }
    if (!r.empty()) out.push_back(std::move(r));
  }
  return out;
}

SignificanceResult significance_from_deltas(std::vector<double> deltas, int n_resamples,
                                            std::uint64_t seed) {
  SignificanceResult res;
  res.topic_deltas = std::move(deltas);
  const std::vector<double>& d = res.topic_deltas;
  const std::size_t n = d.size();
  if (n == 0 || n_resamples <= 0) return res;
  const auto mean = [&](const auto& value_at) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += value_at(i);
    return s / static_cast<double>(n);
  };
  res.observed_delta = mean([&](std::size_t i) { return d[i]; });

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::bernoulli_distribution flip(0.5);
  constexpr double kTol = 1e-12;
  int not_better = 0, as_extreme = 0;
  for (int s = 0; s < n_resamples; ++s) {
    if (mean([&](std::size_t) { return d[pick(rng)]; }) <= kTol) ++not_better;
  }
  for (int s = 0; s < n_resamples; ++s) {
    const double m = mean([&](std::size_t i) { return flip(rng) ? -d[i] : d[i]; });
    if (std::abs(m) >= std::abs(res.observed_delta) - kTol) ++as_extreme;
  }
  res.bootstrap_p = static_cast<double>(not_better) / n_resamples;
  res.permutation_p = (as_extreme + 1.0) / (n_resamples + 1.0);
  return res;
}

SignificanceResult significance(const Partition& pred_a, const Partition& pred_b,
                                const Partition& gold,
                                const std::vector<std::vector<std::string>>& topic_mentions,
                                int n_resamples, std::uint64_t seed) {
  std::vector<double> deltas;
  for (const auto& mentions : topic_mentions) {
    const Partition g = restrict_partition(gold, mentions);
    deltas.push_back(conll_f1(restrict_partition(pred_a, mentions), g) -
                     conll_f1(restrict_partition(pred_b, mentions), g));
  }
  return significance_from_deltas(std::move(deltas), n_resamples, seed);
}

}  // namespace xcoref
