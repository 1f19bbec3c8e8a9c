#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support.hpp"
#include "xcoref/docclust.hpp"
#include "xcoref/error.hpp"

using namespace xcoref;
using namespace xcoref::testing;

namespace {

std::map<std::string, std::string> as_strings(const std::vector<int>& labels) {
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < labels.size(); ++i) out["d" + std::to_string(i)] = std::to_string(labels[i]);
  return out;
}

// Direct evaluation of the silhouette definition on dense rows.
double naive_silhouette(const Eigen::MatrixXd& x, const std::vector<int>& labels) {
  const int n = static_cast<int>(x.rows());
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    std::map<int, std::pair<double, int>> by_cluster;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      auto& [sum, count] = by_cluster[labels[j]];
      sum += (x.row(i) - x.row(j)).norm();
      ++count;
    }
    if (!by_cluster.count(labels[i])) continue;  // singleton cluster scores 0
    const double a = by_cluster[labels[i]].first / by_cluster[labels[i]].second;
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [c, sc] : by_cluster) {
      if (c != labels[i]) b = std::min(b, sc.first / sc.second);
    }
    total += (b - a) / std::max(a, b);
  }
  return total / n;
}

}  // namespace

TEST_CASE("stop words") {
  CHECK(is_stop_word("the"));
  CHECK(is_stop_word("of"));
  CHECK(is_stop_word("yourselves"));
  CHECK_FALSE(is_stop_word("earthquake"));
  CHECK_FALSE(is_stop_word("The"));  // callers lowercase first
}

TEST_CASE("tf-idf matches scikit-learn on a two-document example") {
  DocBuilder a("a"), b("b");
  a.sentence("apple banana");
  b.sentence("The apple cherry apple");
  const std::vector<DocVector> v = tfidf_vectors(Corpus({a.build(), b.build()}));
  REQUIRE(v.size() == 2);
  // Reference values from TfidfVectorizer(ngram_range=(1,3), stop_words='english').
  CHECK(v[0].weights.size() == 3);
  CHECK(v[0].weights.at("apple") == doctest::Approx(0.44943642).epsilon(1e-7));
  CHECK(v[0].weights.at("apple banana") == doctest::Approx(0.6316672).epsilon(1e-7));
  CHECK(v[0].weights.at("banana") == doctest::Approx(0.6316672).epsilon(1e-7));
  CHECK(v[1].weights.size() == 5);
  CHECK(v[1].weights.at("apple") == doctest::Approx(0.57973867).epsilon(1e-7));
  CHECK(v[1].weights.at("apple cherry apple") == doctest::Approx(0.40740124).epsilon(1e-7));
  CHECK(v[1].weights.at("cherry apple") == doctest::Approx(0.40740124).epsilon(1e-7));
  CHECK(v[1].weights.count("the") == 0);
}

TEST_CASE("k-means inertia never increases across Lloyd iterations") {
  const DocMatrix x = to_matrix(tfidf_vectors(three_group_corpus(6)));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (int k = 2; k <= 6; ++k) {
      const KMeansResult r = kmeans(x, k, seed);
      REQUIRE(!r.inertia_history.empty());
      for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
        CHECK(r.inertia_history[i] <= r.inertia_history[i - 1] + 1e-12);
      }
      CHECK(r.inertia == doctest::Approx(r.inertia_history.back()));
      std::set<int> used(r.labels.begin(), r.labels.end());
      CHECK(used.size() == static_cast<std::size_t>(k));
    }
  }
}

TEST_CASE("k-means is deterministic given the seed and rejects bad K") {
  const DocMatrix x = to_matrix(tfidf_vectors(three_group_corpus()));
  CHECK(kmeans(x, 3, 9).labels == kmeans(x, 3, 9).labels);
  CHECK_THROWS_AS(kmeans(x, 0, 1), InvariantError);
  CHECK_THROWS_AS(kmeans(x, 13, 1), InvariantError);
}

TEST_CASE("silhouette agrees with the direct definition") {
  const DocMatrix x = to_matrix(tfidf_vectors(three_group_corpus()));
  const Eigen::MatrixXd dense(x);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> pick(0, 3);
    std::vector<int> labels(static_cast<std::size_t>(x.rows()));
    for (int& l : labels) l = pick(rng);
    CHECK(silhouette_score(x, labels) == doctest::Approx(naive_silhouette(dense, labels)).epsilon(1e-10));
  }
}

TEST_CASE("disjoint vocabularies: K = 3 selected and recovered exactly") {
  const Corpus c = three_group_corpus();
  const DocMatrix x = to_matrix(tfidf_vectors(c));
  CHECK(select_k(x, 2, 8, 0) == 3);
  const std::map<std::string, int> topics = cluster_documents(c, 0, 0);
  std::map<std::string, std::string> pred, gold;
  for (const Document& d : c.documents()) {
    pred[d.doc_id] = std::to_string(topics.at(d.doc_id));
    gold[d.doc_id] = *d.gold_topic_id;
  }
  const ClusteringQuality q = clustering_quality(pred, gold);
  CHECK(q.homogeneity == doctest::Approx(1.0));
  CHECK(q.completeness == doctest::Approx(1.0));
  CHECK(q.v_measure == doctest::Approx(1.0));
  CHECK(q.ari == doctest::Approx(1.0));
  CHECK_THROWS_AS(select_k(x, 5, 4, 0), InvariantError);
}

TEST_CASE("clustering quality matches scikit-learn reference values") {
  struct Case {
    std::vector<int> gold, pred;
    double h, c, v, ari;
  };
  const std::vector<Case> cases = {
      {{0, 0, 1, 1}, {0, 0, 1, 2}, 1.0, 0.666666666666667, 0.8, 0.571428571428571},
      {{0, 0, 0, 1, 1, 2}, {0, 0, 1, 1, 2, 2}, 0.543112347358942, 0.5, 0.520665246398482, 0.074074074074074},
      {{0, 0, 0, 0}, {0, 1, 2, 3}, 1.0, 0.0, 0.0, 0.0},
      {{0, 1, 2, 0, 1, 2}, {0, 0, 1, 1, 2, 2}, 0.369070246428542, 0.369070246428542, 0.369070246428542, -0.25},
  };
  for (const Case& k : cases) {
    const ClusteringQuality q = clustering_quality(as_strings(k.pred), as_strings(k.gold));
    CHECK(q.homogeneity == doctest::Approx(k.h).epsilon(1e-12));
    CHECK(q.completeness == doctest::Approx(k.c).epsilon(1e-12));
    CHECK(q.v_measure == doctest::Approx(k.v).epsilon(1e-12));
    CHECK(q.ari == doctest::Approx(k.ari).epsilon(1e-12));
  }
}

TEST_CASE("clustering quality is invariant to label renaming") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> pick(0, 4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> gold(15), pred(15);
    for (int& g : gold) g = pick(rng);
    for (int& p : pred) p = pick(rng);
    std::vector<int> renamed = pred;
    for (int& p : renamed) p = 10 - p;
    const ClusteringQuality a = clustering_quality(as_strings(pred), as_strings(gold));
    const ClusteringQuality b = clustering_quality(as_strings(renamed), as_strings(gold));
    CHECK(a.v_measure == doctest::Approx(b.v_measure).epsilon(1e-12));
    CHECK(a.ari == doctest::Approx(b.ari).epsilon(1e-12));
  }
}
