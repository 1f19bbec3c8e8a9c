#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "xcoref/corpus.hpp"

namespace xcoref {

bool is_stop_word(std::string_view word);

struct DocVector {
  std::string doc_id;
  std::map<std::string, double> weights;  // n-gram ("a b c") -> tf-idf
};

// Lowercased surface tokens of every sentence, stop words removed.
std::vector<std::string> doc_terms(const Document& doc);

// Unigram..trigram TF-IDF with smoothed idf ln((1+N)/(1+df)) + 1, L2-normalized.
std::vector<DocVector> tfidf_vectors(const std::vector<std::pair<std::string, std::vector<std::string>>>& docs);
std::vector<DocVector> tfidf_vectors(const Corpus& corpus);

// Row-major sparse document-term matrix in doc order, column per distinct n-gram.
using DocMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
DocMatrix to_matrix(const std::vector<DocVector>& vectors);

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;  // K x dims
  double inertia = 0.0;
  // Inertia after every assignment step of the winning restart.
  std::vector<double> inertia_history;
};

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 300;
};

// Lloyd's algorithm with k-means++ seeding on the rows of `x`; the restart with
// the lowest inertia wins (ties to the earlier restart).
KMeansResult kmeans(const DocMatrix& x, int k, std::uint64_t seed, const KMeansOptions& options = {});

// Mean silhouette coefficient (Euclidean). Samples in singleton clusters score 0.
double silhouette_score(const DocMatrix& x, const std::vector<int>& labels);

// K in [k_min, k_max] maximizing the mean silhouette; ties go to the smaller K.
int select_k(const DocMatrix& x, int k_min, int k_max, std::uint64_t seed);

// doc_id -> topic index. `k` <= 0 selects K by silhouette over [2, min(#docs-1, 40)].
std::map<std::string, int> cluster_documents(const Corpus& corpus, int k, std::uint64_t seed);

struct ClusteringQuality {
  double homogeneity = 0.0;
  double completeness = 0.0;
  double v_measure = 0.0;
  double ari = 0.0;
};

// Both maps must label the same doc set.
ClusteringQuality clustering_quality(const std::map<std::string, std::string>& pred,
                                     const std::map<std::string, std::string>& gold);

}  // namespace xcoref
