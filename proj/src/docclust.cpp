#include "xcoref/docclust.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <unordered_map>

#include "xcoref/error.hpp"

namespace xcoref {

namespace {

constexpr int kMaxAutoK = 40;

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Squared distance of every row of x to every centroid.
Eigen::MatrixXd squared_distances(const DocMatrix& x, const Eigen::VectorXd& row_norms,
                                  const Eigen::MatrixXd& centroids) {
  const Eigen::MatrixXd cross = x * centroids.transpose();
  const Eigen::VectorXd c_norms = centroids.rowwise().squaredNorm();
  Eigen::MatrixXd d = (-2.0 * cross).colwise() + row_norms;
  d.rowwise() += c_norms.transpose();
  return d.cwiseMax(0.0);
}

Eigen::MatrixXd kmeans_plus_plus(const DocMatrix& x, const Eigen::VectorXd& row_norms, int k,
                                 std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.row(0) = Eigen::RowVectorXd(x.row(first(rng)));
  Eigen::VectorXd closest = squared_distances(x, row_norms, centroids.topRows(1)).col(0);
  for (int c = 1; c < k; ++c) {
    const double total = closest.sum();
    Eigen::Index pick = 0;
    if (total <= 0.0) {
      // All remaining points coincide with a center; take the first unused index.
      pick = c % n;
    } else {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (pick = 0; pick < n - 1; ++pick) {
        r -= closest(pick);
        if (r <= 0.0) break;
      }
    }
    centroids.row(c) = Eigen::RowVectorXd(x.row(pick));
    const Eigen::VectorXd d = squared_distances(x, row_norms, centroids.row(c)).col(0);
    closest = closest.cwiseMin(d);
  }
  return centroids;
}

KMeansResult lloyd(const DocMatrix& x, const Eigen::VectorXd& row_norms, Eigen::MatrixXd centroids,
                   int max_iterations) {
  const Eigen::Index n = x.rows();
  const int k = static_cast<int>(centroids.rows());
  KMeansResult result;
  result.labels.assign(n, -1);
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::MatrixXd d = squared_distances(x, row_norms, centroids);
    std::vector<int> labels(n);
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      inertia += d.row(i).minCoeff(&best);
      labels[i] = static_cast<int>(best);
    }
    result.inertia_history.push_back(inertia);
    result.inertia = inertia;
    const bool converged = labels == result.labels;
    result.labels = std::move(labels);
    if (converged) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    std::vector<int> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(result.labels[i]) += Eigen::RowVectorXd(x.row(i));
      ++counts[result.labels[i]];
    }
    // Empty clusters take the point farthest from its current centroid.
    std::vector<double> own(n);
    for (Eigen::Index i = 0; i < n; ++i) own[i] = d(i, result.labels[i]);
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centroids.row(c) = sums.row(c) / counts[c];
        continue;
      }
      const auto far = std::max_element(own.begin(), own.end()) - own.begin();
      own[far] = -1.0;
      centroids.row(c) = Eigen::RowVectorXd(x.row(far));
    }
  }
  result.centroids = std::move(centroids);
  return result;
}

}  // namespace

std::vector<std::string> doc_terms(const Document& doc) {
  std::vector<std::string> terms;
  for (const auto& sent : doc.sentences) {
    for (const Token& t : sent) {
      std::string w = lowercase(t.surface);
      if (!w.empty() && !is_stop_word(w)) terms.push_back(std::move(w));
    }
  }
  return terms;
}

std::vector<DocVector> tfidf_vectors(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& docs) {
  std::vector<std::map<std::string, double>> tf(docs.size());
  std::unordered_map<std::string, int> df;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& terms = docs[d].second;
    for (std::size_t n = 1; n <= 3; ++n) {
      for (std::size_t i = 0; i + n <= terms.size(); ++i) {
        std::string gram = terms[i];
        for (std::size_t j = 1; j < n; ++j) gram += ' ' + terms[i + j];
        tf[d][gram] += 1.0;
      }
    }
    for (const auto& [gram, count] : tf[d]) ++df[gram];
  }
  const double n_docs = static_cast<double>(docs.size());
  std::vector<DocVector> out;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    DocVector v{docs[d].first, {}};
    double norm2 = 0.0;
    for (const auto& [gram, count] : tf[d]) {
      const double idf = std::log((1.0 + n_docs) / (1.0 + df[gram])) + 1.0;
      const double w = count * idf;
      v.weights.emplace(gram, w);
      norm2 += w * w;
    }
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& [gram, w] : v.weights) w *= inv;
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<DocVector> tfidf_vectors(const Corpus& corpus) {
  std::vector<std::pair<std::string, std::vector<std::string>>> docs;
  for (const Document& doc : corpus.documents()) docs.emplace_back(doc.doc_id, doc_terms(doc));
  return tfidf_vectors(docs);
}

DocMatrix to_matrix(const std::vector<DocVector>& vectors) {
  std::map<std::string, int> vocab;
  for (const DocVector& v : vectors) {
    for (const auto& [gram, w] : v.weights) vocab.emplace(gram, 0);
  }
  int next = 0;
  for (auto& [gram, idx] : vocab) idx = next++;
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < vectors.size(); ++r) {
    for (const auto& [gram, w] : vectors[r].weights) {
      triplets.emplace_back(static_cast<int>(r), vocab.at(gram), w);
    }
  }
  DocMatrix m(static_cast<Eigen::Index>(vectors.size()), std::max(next, 1));
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

KMeansResult kmeans(const DocMatrix& x, int k, std::uint64_t seed, const KMeansOptions& options) {
  if (k < 1 || k > x.rows()) {
    throw InvariantError("K=" + std::to_string(k) + " out of range [1, " +
                         std::to_string(x.rows()) + "]");
  }
  Eigen::VectorXd row_norms(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) row_norms(i) = x.row(i).squaredNorm();

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(r));
    KMeansResult run = lloyd(x, row_norms, kmeans_plus_plus(x, row_norms, k, rng),
                             options.max_iterations);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

double silhouette_score(const DocMatrix& x, const std::vector<int>& labels) {
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd gram = Eigen::MatrixXd(x * x.transpose());
  const Eigen::VectorXd norms = gram.diagonal();
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<int> sizes(k, 0);
  for (int l : labels) ++sizes[l];

  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sizes[labels[i]] <= 1) continue;
    std::vector<double> sum(k, 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      sum[labels[j]] += std::sqrt(std::max(0.0, norms(i) + norms(j) - 2.0 * gram(i, j)));
    }
    const double a = sum[labels[i]] / (sizes[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c != labels[i] && sizes[c] > 0) b = std::min(b, sum[c] / sizes[c]);
    }
    const double denom = std::max(a, b);
    if (std::isfinite(b) && denom > 0.0) total += (b - a) / denom;
  }
  return n > 0 ? total / static_cast<double>(n) : 0.0;
}

int select_k(const DocMatrix& x, int k_min, int k_max, std::uint64_t seed) {
  if (k_min > k_max || k_min < 2 || k_max > x.rows() - 1) {
    throw InvariantError("empty or invalid K range [" + std::to_string(k_min) + ", " +
                         std::to_string(k_max) + "]");
  }
  int best_k = k_min;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    const double s = silhouette_score(x, kmeans(x, k, seed).labels);
    if (s > best) {
      best = s;
      best_k = k;
    }
  }
  return best_k;
}

std::map<std::string, int> cluster_documents(const Corpus& corpus, int k, std::uint64_t seed) {
  const std::vector<DocVector> vectors = tfidf_vectors(corpus);
  std::map<std::string, int> out;
  if (vectors.empty()) return out;
  const DocMatrix x = to_matrix(vectors);
  if (k <= 0) {
    const int k_max = std::min<int>(static_cast<int>(x.rows()) - 1, kMaxAutoK);
    k = k_max >= 2 ? select_k(x, 2, k_max, seed) : 1;
  }
  k = std::min<int>(k, static_cast<int>(x.rows()));
  const KMeansResult result = kmeans(x, k, seed);
  for (std::size_t i = 0; i < vectors.size(); ++i) out[vectors[i].doc_id] = result.labels[i];
  return out;
}

namespace {

double entropy(const std::map<std::string, double>& counts, double n) {
  double h = 0.0;
  for (const auto& [label, c] : counts) {
    if (c > 0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

double comb2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

ClusteringQuality clustering_quality(const std::map<std::string, std::string>& pred,
                                     const std::map<std::string, std::string>& gold) {
  if (pred.size() != gold.size()) throw InvariantError("clusterings label different doc sets");
  std::map<std::pair<std::string, std::string>, double> joint;
  std::map<std::string, double> pred_counts, gold_counts;
  for (const auto& [doc, g] : gold) {
    auto it = pred.find(doc);
    if (it == pred.end()) throw InvariantError("document '" + doc + "' missing from prediction");
    joint[{g, it->second}] += 1.0;
    gold_counts[g] += 1.0;
    pred_counts[it->second] += 1.0;
  }
  const double n = static_cast<double>(gold.size());
  ClusteringQuality q;
  if (n == 0) return q;

  const double h_gold = entropy(gold_counts, n);
  const double h_pred = entropy(pred_counts, n);
  double h_gold_given_pred = 0.0, h_pred_given_gold = 0.0;
  for (const auto& [key, c] : joint) {
    h_gold_given_pred -= (c / n) * std::log(c / pred_counts[key.second]);
    h_pred_given_gold -= (c / n) * std::log(c / gold_counts[key.first]);
  }
  q.homogeneity = h_gold > 0.0 ? 1.0 - h_gold_given_pred / h_gold : 1.0;
  q.completeness = h_pred > 0.0 ? 1.0 - h_pred_given_gold / h_pred : 1.0;
  q.v_measure = q.homogeneity + q.completeness > 0.0
                    ? 2.0 * q.homogeneity * q.completeness / (q.homogeneity + q.completeness)
                    : 0.0;

  double sum_joint = 0.0, sum_pred = 0.0, sum_gold = 0.0;
  for (const auto& [key, c] : joint) sum_joint += comb2(c);
  for (const auto& [label, c] : pred_counts) sum_pred += comb2(c);
  for (const auto& [label, c] : gold_counts) sum_gold += comb2(c);
  const double expected = n > 1.0 ? sum_pred * sum_gold / comb2(n) : 0.0;
  const double max_index = 0.5 * (sum_pred + sum_gold);
  // Identical trivial clusterings (all-one or all-singletons on both sides).
  q.ari = max_index == expected ? 1.0 : (sum_joint - expected) / (max_index - expected);
  return q;
}

}  // namespace xcoref
