#include "xcoref/engine.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "xcoref/error.hpp"

namespace xcoref {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

MentionKind other(MentionKind kind) {
  return kind == MentionKind::entity ? MentionKind::event : MentionKind::entity;
}

// Runs body(i) for i in [0, n) across `workers` threads, rows interleaved.
void parallel_rows(int n, int workers, const std::function<void(int)>& body) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) body(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace

// ---------------------------------------------------------------------------

PairScoreCache::PairScoreCache(std::vector<std::string> ids) : ids_(std::move(ids)) {
  const auto n = static_cast<Eigen::Index>(ids_.size());
  scores_ = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < ids_.size(); ++i) index_[ids_[i]] = static_cast<int>(i);
}

int PairScoreCache::index(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw InvariantError("pair score cache has no entry for '" + id + "'");
  return it->second;
}

void PairScoreCache::set(int i, int j, double score) {
  scores_(i, j) = score;
  scores_(j, i) = score;
}

double PairScoreCache::score(const std::string& a, const std::string& b) const {
  const double s = scores_(index(a), index(b));
  if (std::isnan(s)) throw InvariantError("pair score cache misses ('" + a + "', '" + b + "')");
  return s;
}

double cluster_pair_score(const Cluster& a, const Cluster& b, const PairScoreCache& cache) {
  Cluster sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  // Sum in a fixed order so S(a, b) and S(b, a) agree bit-for-bit.
  const Cluster& first = sa.front() < sb.front() ? sa : sb;
  const Cluster& second = sa.front() < sb.front() ? sb : sa;
  double sum = 0.0;
  for (const std::string& x : first) {
    for (const std::string& y : second) sum += cache.score(x, y);
  }
  return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

MergeOutcome merge_clusters(Partition side, const PairScoreCache& cache, double delta) {
  canonicalize(side);
  const std::size_t n = side.size();
  std::vector<bool> active(n, true);
  Eigen::MatrixXd scp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      scp(i, j) = scp(j, i) = cluster_pair_score(side[i], side[j], cache);
    }
  }

  MergeOutcome out;
  for (;;) {
    int bi = -1, bj = -1;
    double best = -std::numeric_limits<double>::infinity();
    const auto key = [&](int i, int j) {
      const std::string& x = side[i].front();
      const std::string& y = side[j].front();
      return x < y ? std::pair(x, y) : std::pair(y, x);
    };
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const double s = scp(i, j);
        if (s > best || (bi >= 0 && s == best && key(i, j) < key(bi, bj))) {
          best = s;
          bi = static_cast<int>(i);
          bj = static_cast<int>(j);
        }
      }
    }
    if (bi < 0 || !(best >= delta)) break;

    Cluster merged;
    std::merge(side[bi].begin(), side[bi].end(), side[bj].begin(), side[bj].end(),
               std::back_inserter(merged));
    side[bi] = std::move(merged);
    side[bj].clear();
    active[bj] = false;
    ++out.merges;
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || static_cast<int>(k) == bi) continue;
      scp(bi, k) = scp(k, bi) = cluster_pair_score(side[bi], side[k], cache);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (active[i]) out.partition.push_back(std::move(side[i]));
  }
  canonicalize(out.partition);
  return out;
}

// ---------------------------------------------------------------------------

SideFeatures build_side_features(const EngineContext& ctx, const Topic& topic,
                                 const Configuration& config, MentionKind kind,
                                 const PairScorer<double>& scorer) {
  const ScorerShape& shape = scorer.shape();
  const VectorLayout& layout = shape.layout;
  if (ctx.words.dim() != layout.word_dim || ctx.contexts.dim() != layout.ctx_dim) {
    throw InvariantError("vector stores (word " + std::to_string(ctx.words.dim()) + ", context " +
                         std::to_string(ctx.contexts.dim()) + ") do not match the model (word " +
                         std::to_string(layout.word_dim) + ", context " +
                         std::to_string(layout.ctx_dim) + ")");
  }
  SideFeatures out;
  out.kind = kind;
  out.ids = topic_mentions(ctx.corpus, topic, kind);
  const PartitionIndex fillers(config.side(other(kind)));

  SpanTable<double> spans;
  if (layout.use_dep) {
    for (const std::string& id : topic_mentions(ctx.corpus, topic, other(kind))) {
      spans.emplace(id, span_vector(ctx.corpus, ctx.corpus.mention(id), ctx.words, scorer.encoder));
    }
  }
  for (const std::string& id : out.ids) {
    const Mention& m = ctx.corpus.mention(id);
    MentionInput<double> in;
    in.context = context_vector(m, ctx.contexts);
    in.word = span_word_vector(ctx.corpus, m, ctx.words);
    in.text = ctx.corpus.span_text(m);
    if (layout.use_dep) {
      in.dep = dep_vector(ctx.roles.slots(id), fillers, spans, layout.span_dim());
    }
    out.inputs.push_back(std::move(in));
  }
  const std::size_t n = out.ids.size();
  out.features.assign(n * n, PairFeatures());
  for (std::size_t i = 0; i < n; ++i) {
    const Mention& a = ctx.corpus.mention(out.ids[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      const PairFeatures f = pair_features(a, ctx.corpus.mention(out.ids[j]), ctx.roles, fillers);
      out.features[i * n + j] = f;
      out.features[j * n + i] = f;
    }
  }
  return out;
}

PairScoreCache NeuralSideScorer::score(const EngineContext& ctx, const Topic& topic,
                                       const Configuration& config, MentionKind kind) const {
  const SideFeatures feats = build_side_features(ctx, topic, config, kind, scorer_);
  const int n = static_cast<int>(feats.ids.size());
  std::vector<Vector<double>> vectors(n);
  parallel_rows(n, workers_, [&](int i) { vectors[i] = scorer_.mention_vector(feats.inputs[i]); });
  PairScoreCache cache(feats.ids);
  parallel_rows(n, workers_, [&](int i) {
    for (int j = i + 1; j < n; ++j) {
      cache.set(i, j, scorer_.score_symmetric(vectors[i], vectors[j], feats.pair(i, j)));
    }
  });
  return cache;
}

NeuralSideScorerF32::NeuralSideScorerF32(const PairScorer<double>& scorer)
    : reference_(scorer), scorer_(scorer.cast<float>()) {}

PairScoreCache NeuralSideScorerF32::score(const EngineContext& ctx, const Topic& topic,
                                          const Configuration& config, MentionKind kind) const {
  const SideFeatures feats = build_side_features(ctx, topic, config, kind, reference_);
  const int n = static_cast<int>(feats.ids.size());
  std::vector<Vector<float>> vectors;
  for (const MentionInput<double>& in : feats.inputs) {
    MentionInput<float> f{in.context.cast<float>(), in.word.cast<float>(), in.dep.cast<float>(), in.text};
    vectors.push_back(scorer_.mention_vector(f));
  }
  PairScoreCache cache(feats.ids);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      cache.set(i, j, scorer_.score_symmetric(vectors[i], vectors[j], feats.pair(i, j)));
    }
  }
  return cache;
}

PairScoreCache GoldOracleScorer::score(const EngineContext& ctx, const Topic& topic,
                                       const Configuration&, MentionKind kind) const {
  const std::vector<std::string> ids = topic_mentions(ctx.corpus, topic, kind);
  PairScoreCache cache(ids);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& gi = ctx.corpus.mention(ids[i]).gold_cluster_id;
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      const auto& gj = ctx.corpus.mention(ids[j]).gold_cluster_id;
      cache.set(static_cast<int>(i), static_cast<int>(j), gi && gj && *gi == *gj ? 1.0 : 0.0);
    }
  }
  return cache;
}

PairScoreCache FunctionScorer::score(const EngineContext& ctx, const Topic& topic,
                                     const Configuration&, MentionKind kind) const {
  const std::vector<std::string> ids = topic_mentions(ctx.corpus, topic, kind);
  PairScoreCache cache(ids);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      cache.set(static_cast<int>(i), static_cast<int>(j), fn_(ids[i], ids[j]));
    }
  }
  return cache;
}

// ---------------------------------------------------------------------------

std::vector<TopicResult> infer(const EngineContext& ctx, const std::vector<Topic>& topics,
                               const SideScorer& entity_scorer, const SideScorer& event_scorer,
                               const InferOptions& options) {
  std::vector<TopicResult> results;
  for (const Topic& topic : topics) {
    TopicResult r;
    r.config.topic_id = topic.topic_id;
    r.config.event_clusters = singleton_events(ctx.corpus, topic);
    r.config.entity_clusters = init_entities(ctx.corpus, topic, options.entity_init);
    canonicalize(r.config.event_clusters);
    for (int it = 0; it < options.merge.max_iterations; ++it) {
      ++r.iterations;
      int merges = 0;
      for (MentionKind kind : {MentionKind::entity, MentionKind::event}) {
        const SideScorer& scorer = kind == MentionKind::entity ? entity_scorer : event_scorer;
        const PairScoreCache cache = scorer.score(ctx, topic, r.config, kind);
        MergeOutcome outcome = merge_clusters(r.config.side(kind), cache, options.merge.delta_infer);
        r.config.side(kind) = std::move(outcome.partition);
        (kind == MentionKind::entity ? r.entity_merges : r.event_merges) += outcome.merges;
        merges += outcome.merges;
        if (options.check_invariants) check_configuration(ctx.corpus, topic, r.config);
      }
      if (merges == 0) break;
    }
    results.push_back(std::move(r));
  }
  return results;
}

std::unordered_map<std::string, std::string> gold_labels(const Corpus& corpus, MentionKind kind) {
  std::unordered_map<std::string, std::string> out;
  for (const Mention* m : corpus.all_mentions()) {
    if (m->kind == kind && m->gold_cluster_id) out[m->mention_id] = *m->gold_cluster_id;
  }
  return out;
}

double train_side(PairScorer<double>& scorer, Adam<double>& optimizer, const SideFeatures& features,
                  const Partition& predicted, const std::unordered_map<std::string, std::string>& gold,
                  int batch_size, int epochs, std::uint64_t seed) {
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < features.ids.size(); ++i) index[features.ids[i]] = static_cast<int>(i);
  std::vector<TrainPair> pairs;
  for (const LabelledPair& lp : make_training_pairs(predicted, gold, seed)) {
    const int a = index.at(lp.a);
    const int b = index.at(lp.b);
    pairs.push_back({a, b, lp.label, features.pair(a, b)});
  }
  if (pairs.empty()) return 0.0;

  std::mt19937_64 rng(splitmix64(seed));
  double total = 0.0;
  int batches = 0;
  const std::size_t step = static_cast<std::size_t>(std::max(1, batch_size));
  for (int epoch = 0; epoch < epochs; ++epoch) {
    if (epoch > 0) std::shuffle(pairs.begin(), pairs.end(), rng);
    for (std::size_t start = 0; start < pairs.size(); start += step) {
      const std::size_t len = std::min(step, pairs.size() - start);
      total += scorer.train_batch(std::span<const TrainPair>(pairs.data() + start, len),
                                  features.inputs, optimizer);
      ++batches;
    }
  }
  return total / batches;
}

JointModel train(const EngineContext& ctx, const std::vector<Topic>& topics,
                 const TrainOptions& options) {
  const CharVocab vocab = corpus_char_vocab(ctx.corpus);
  AdamOptions adam;
  adam.learning_rate = options.learning_rate;
  std::uint64_t stream = splitmix64(options.seed);
  const auto next_seed = [&] { return stream = splitmix64(stream); };

  const auto fresh_scorer = [&] {
    PairScorer<double> s(options.shape, vocab, next_seed());
    if (options.char_vectors) s.encoder.load_embeddings(*options.char_vectors);
    return s;
  };

  JointModel model;
  model.entity = fresh_scorer();
  model.event = fresh_scorer();
  model.entity_optimizer = Adam<double>(adam);
  model.event_optimizer = Adam<double>(adam);

  const auto gold_entity = gold_labels(ctx.corpus, MentionKind::entity);
  const auto gold_event = gold_labels(ctx.corpus, MentionKind::event);

  for (const Topic& topic : topics) {
    Configuration config;
    config.topic_id = topic.topic_id;
    config.event_clusters = singleton_events(ctx.corpus, topic);
    config.entity_clusters = init_entities(ctx.corpus, topic, EntityInit::gold_wd);
    for (int it = 0; it < options.merge.max_iterations; ++it) {
      int merges = 0;
      for (MentionKind kind : {MentionKind::entity, MentionKind::event}) {
        PairScorer<double>& scorer = model.side(kind);
        Adam<double>& optimizer = model.optimizer(kind);
        if (options.reinit_scorers) {
          scorer = fresh_scorer();
          optimizer = Adam<double>(adam);
        }
        const SideFeatures feats = build_side_features(ctx, topic, config, kind, scorer);
        const double loss =
            train_side(scorer, optimizer, feats, config.side(kind),
                       kind == MentionKind::entity ? gold_entity : gold_event, options.batch_size,
                       options.epochs, next_seed());
        if (options.on_update) options.on_update(topic.topic_id, it, kind, loss);

        const PairScoreCache cache = NeuralSideScorer(scorer).score(ctx, topic, config, kind);
        MergeOutcome outcome = merge_clusters(config.side(kind), cache, options.merge.delta_train);
        config.side(kind) = std::move(outcome.partition);
        merges += outcome.merges;
        check_configuration(ctx.corpus, topic, config);
      }
      if (merges == 0) break;
    }
  }
  return model;
}

void dump_vectors(const EngineContext& ctx, const std::vector<TopicResult>& results,
                  const std::vector<Topic>& topics, const JointModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vector dump '" + path + "'");
  const auto as_list = [](const auto& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  for (std::size_t t = 0; t < topics.size(); ++t) {
    for (MentionKind kind : {MentionKind::entity, MentionKind::event}) {
      const PairScorer<double>& scorer = model.side(kind);
      const VectorLayout& layout = scorer.shape().layout;
      const SideFeatures feats = build_side_features(ctx, topics[t], results[t].config, kind, scorer);
      for (std::size_t i = 0; i < feats.ids.size(); ++i) {
        const Vector<double> full = scorer.mention_vector(feats.inputs[i]);
        const Mention& m = ctx.corpus.mention(feats.ids[i]);
        nlohmann::json j = {{"mention_id", m.mention_id},
                            {"kind", to_string(kind)},
                            {"topic_id", topics[t].topic_id}};
        j["gold_cluster_id"] = m.gold_cluster_id ? nlohmann::json(*m.gold_cluster_id) : nlohmann::json();
        j["full"] = as_list(full);
        j["context"] = as_list(full.segment(layout.context_offset(), layout.ctx_dim));
        j["dep"] = as_list(full.segment(layout.dep_offset(), layout.dep_dim()));
        out << j.dump() << '\n';
      }
    }
  }
}

}  // namespace xcoref
