#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "xcoref/corpus.hpp"
#include "xcoref/deps.hpp"
#include "xcoref/embed.hpp"
#include "xcoref/scorer.hpp"

namespace xcoref {

struct MergeParams {
  double delta_train = 0.5;
  double delta_infer = 0.5;
  int max_iterations = 10;
};

// Symmetric mention-pair scores for one side of one topic. Filled once per
// pass and read-only while merging.
class PairScoreCache {
 public:
  PairScoreCache() = default;
  explicit PairScoreCache(std::vector<std::string> ids);

  const std::vector<std::string>& ids() const { return ids_; }
  int index(const std::string& id) const;  // throws when absent
  void set(int i, int j, double score);
  double at(int i, int j) const { return scores_(i, j); }
  double score(const std::string& a, const std::string& b) const;

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, int> index_;
  Eigen::MatrixXd scores_;
};

// Average mention linkage between two disjoint clusters.
double cluster_pair_score(const Cluster& a, const Cluster& b, const PairScoreCache& cache);

struct MergeOutcome {
  Partition partition;
  int merges = 0;
};

// Greedy agglomerative merging: repeatedly merges the cluster pair with the
// highest average-linkage score while it is >= delta. Ties go to the pair
// whose (smaller, larger) cluster minimum ids sort first.
MergeOutcome merge_clusters(Partition side, const PairScoreCache& cache, double delta);

// Read-only resources shared by every topic.
struct EngineContext {
  const Corpus& corpus;
  const StaticVectorStore& words;
  const ContextVectorStore& contexts;
  RoleIndex roles;

  EngineContext(const Corpus& c, const StaticVectorStore& w, const ContextVectorStore& x)
      : corpus(c), words(w), contexts(x), roles(c) {}
};

// Scorer inputs for every mention of one side of a topic under a given
// configuration (the UpdateJointFeatures step).
struct SideFeatures {
  MentionKind kind = MentionKind::event;
  std::vector<std::string> ids;
  std::vector<MentionInput<double>> inputs;
  std::vector<PairFeatures> features;  // row-major ids.size() x ids.size()

  const PairFeatures& pair(int i, int j) const {
    return features[static_cast<std::size_t>(i) * ids.size() + static_cast<std::size_t>(j)];
  }
};

// Span vectors use the encoder of `scorer`; argument blocks read the other
// side's clusters in `config`.
SideFeatures build_side_features(const EngineContext& ctx, const Topic& topic,
                                 const Configuration& config, MentionKind kind,
                                 const PairScorer<double>& scorer);

// Source of pairwise scores for one side of a topic.
class SideScorer {
 public:
  virtual ~SideScorer() = default;
  virtual PairScoreCache score(const EngineContext& ctx, const Topic& topic,
                               const Configuration& config, MentionKind kind) const = 0;
};

// Trained network. `workers` > 1 fans pair scoring out over threads.
class NeuralSideScorer : public SideScorer {
 public:
  NeuralSideScorer(const PairScorer<double>& scorer, int workers = 1)
      : scorer_(scorer), workers_(workers) {}
  PairScoreCache score(const EngineContext& ctx, const Topic& topic, const Configuration& config,
                       MentionKind kind) const override;

 private:
  const PairScorer<double>& scorer_;
  int workers_;
};

// Same network evaluated in 32-bit arithmetic.
class NeuralSideScorerF32 : public SideScorer {
 public:
  explicit NeuralSideScorerF32(const PairScorer<double>& scorer);
  PairScoreCache score(const EngineContext& ctx, const Topic& topic, const Configuration& config,
                       MentionKind kind) const override;

 private:
  const PairScorer<double>& reference_;
  PairScorer<float> scorer_;
};

// Scores 1 for mentions sharing a gold cluster, else 0.
class GoldOracleScorer : public SideScorer {
 public:
  PairScoreCache score(const EngineContext& ctx, const Topic& topic, const Configuration& config,
                       MentionKind kind) const override;
};

// Scores from a caller-supplied function of two mention ids.
class FunctionScorer : public SideScorer {
 public:
  using Fn = std::function<double(const std::string&, const std::string&)>;
  explicit FunctionScorer(Fn fn) : fn_(std::move(fn)) {}
  PairScoreCache score(const EngineContext& ctx, const Topic& topic, const Configuration& config,
                       MentionKind kind) const override;

 private:
  Fn fn_;
};

struct TopicResult {
  Configuration config;
  int iterations = 0;
  int entity_merges = 0;
  int event_merges = 0;
};

struct InferOptions {
  MergeParams merge;
  EntityInit entity_init = EntityInit::wd_system;
  // Checks the disjoint-cover invariant after every merge pass.
  bool check_invariants = true;
};

// Alternating entity/event clustering per topic: events start as singletons,
// entities as within-document clusters; each iteration re-derives entity
// features from the event clusters, merges entities, then does the same for
// events. Stops after an iteration without merges or at max_iterations.
std::vector<TopicResult> infer(const EngineContext& ctx, const std::vector<Topic>& topics,
                               const SideScorer& entity_scorer, const SideScorer& event_scorer,
                               const InferOptions& options);

struct TrainOptions {
  MergeParams merge;
  ScorerShape shape;
  double learning_rate = 1e-3;
  int batch_size = 16;
  int epochs = 1;  // passes over the generated pairs per scorer update
  bool reinit_scorers = false;
  std::uint64_t seed = 0;
  // Pre-trained character embeddings applied to every freshly built encoder.
  const StaticVectorStore* char_vectors = nullptr;
  // Called after every scorer update with (topic, iteration, side, mean loss).
  std::function<void(const std::string&, int, MentionKind, double)> on_update;
};

// Configuration-simulating training over gold topics, starting from gold
// within-document entity clusters and singleton events.
JointModel train(const EngineContext& ctx, const std::vector<Topic>& topics,
                 const TrainOptions& options);

// One scorer update on the cross-cluster pairs of `features`' current side.
double train_side(PairScorer<double>& scorer, Adam<double>& optimizer, const SideFeatures& features,
                  const Partition& predicted, const std::unordered_map<std::string, std::string>& gold,
                  int batch_size, int epochs, std::uint64_t seed);

// mention_id -> gold cluster id for one kind.
std::unordered_map<std::string, std::string> gold_labels(const Corpus& corpus, MentionKind kind);

// Writes `{mention_id, kind, topic_id, gold_cluster_id, full, context, dep}` per
// mention as JSON lines.
void dump_vectors(const EngineContext& ctx, const std::vector<TopicResult>& results,
                  const std::vector<Topic>& topics, const JointModel& model, const std::string& path);

}  // namespace xcoref
