#pragma once

// Helpers shared by the unit tests and the acceptance runner. The oracles here
// are deliberately naive re-implementations, independent of the library code
// they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xcoref/corpus.hpp"
#include "xcoref/engine.hpp"
#include "xcoref/scorer.hpp"
#include "xcoref/synthetic.hpp"

namespace xcoref::testing {

class DocBuilder {
 public:
  DocBuilder(std::string doc_id, std::string topic = "t0") {
    doc_.doc_id = std::move(doc_id);
    doc_.gold_topic_id = std::move(topic);
  }

  // Whitespace-separated words; returns the sentence index.
  int sentence(const std::string& text) {
    std::istringstream in(text);
    std::vector<Token> tokens;
    for (std::string w; in >> w;) tokens.push_back({w, w, {}, {}, {}});
    doc_.sentences.push_back(std::move(tokens));
    return static_cast<int>(doc_.sentences.size()) - 1;
  }

  Token& token(int sent, int tok) { return doc_.sentences[sent][tok]; }

  DocBuilder& mention(const std::string& id, MentionKind kind, int sent, int start, int end,
                      const std::string& gold = "", int head = -1) {
    Mention m;
    m.mention_id = id;
    m.kind = kind;
    m.doc_id = doc_.doc_id;
    m.sent_idx = sent;
    m.start = start;
    m.end = end;
    m.head_idx = head < 0 ? end : head;
    if (!gold.empty()) m.gold_cluster_id = gold;
    doc_.mentions.push_back(m);
    return *this;
  }

  DocBuilder& event(const std::string& id, int sent, int tok, const std::string& gold = "") {
    return mention(id, MentionKind::event, sent, tok, tok, gold);
  }
  DocBuilder& entity(const std::string& id, int sent, int start, int end, const std::string& gold = "") {
    return mention(id, MentionKind::entity, sent, start, end, gold);
  }

  DocBuilder& link(const std::string& event, const std::string& entity, Role role) {
    doc_.argument_links.push_back({event, entity, role, LinkSource::srl});
    return *this;
  }

  DocBuilder& wd(Partition clusters) {
    doc_.wd_entity_clusters = std::move(clusters);
    return *this;
  }

  Document build() const { return doc_; }

 private:
  Document doc_;
};

inline std::vector<std::string> make_ids(int n, const std::string& prefix = "m") {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

template <typename Rng>
Partition random_partition(const std::vector<std::string>& ids, Rng& rng) {
  if (ids.empty()) return {};
  std::uniform_int_distribution<int> k_dist(1, static_cast<int>(ids.size()));
  const int k = k_dist(rng);
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::map<int, Cluster> by_label;
  for (const std::string& id : ids) by_label[pick(rng)].push_back(id);
  Partition out;
  for (auto& [label, c] : by_label) out.push_back(std::move(c));
  return out;
}

// Same clusters under new (random) ordering of clusters and members.
template <typename Rng>
Partition shuffled(Partition p, Rng& rng) {
  for (Cluster& c : p) std::shuffle(c.begin(), c.end(), rng);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

// Best total weight over every injective row->column assignment.
inline double brute_force_assignment(const Eigen::MatrixXd& w) {
  const int rows = static_cast<int>(w.rows()), cols = static_cast<int>(w.cols());
  if (rows == 0 || cols == 0) return 0.0;
  const int n = std::max(rows, cols);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int r = 0; r < rows; ++r) {
      if (perm[r] < cols) total += w(r, perm[r]);
    }
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Textbook greedy average-linkage agglomeration, recomputing every cluster pair
// score from scratch at each step. Ties go to the lexicographically smallest
// (min id of one cluster, min id of the other) with the smaller first.
inline Partition naive_agglomerate(Partition clusters,
                                   const std::function<double(const std::string&, const std::string&)>& s,
                                   double delta) {
  const auto min_id = [](const Cluster& c) { return *std::min_element(c.begin(), c.end()); };
  for (;;) {
    double best = -std::numeric_limits<double>::infinity();
    std::pair<std::string, std::string> best_key;
    int bi = -1, bj = -1;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        double total = 0.0;
        for (const auto& a : clusters[i]) {
          for (const auto& b : clusters[j]) total += s(a, b);
        }
        const double avg = total / static_cast<double>(clusters[i].size() * clusters[j].size());
        const std::string a = min_id(clusters[i]), b = min_id(clusters[j]);
        const std::pair<std::string, std::string> key = a < b ? std::pair{a, b} : std::pair{b, a};
        if (avg > best || (avg == best && key < best_key)) {
          best = avg;
          best_key = key;
          bi = static_cast<int>(i);
          bj = static_cast<int>(j);
        }
      }
    }
    if (bi < 0 || best < delta) break;
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    clusters.erase(clusters.begin() + bj);
  }
  canonicalize(clusters);
  return clusters;
}

// Tiny network dimensions for fast tests.
inline ScorerShape tiny_shape(bool joint = true, int hidden = 8) {
  ScorerShape s;
  s.layout = {3, 4, 3, joint};
  s.char_dim = 3;
  s.hidden = hidden;
  s.feature_dim = 2;
  s.use_pair_features = joint;
  return s;
}

template <typename Rng>
MentionInput<double> random_input(const ScorerShape& shape, const std::string& text, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const auto draw = [&](int size) {
    Vector<double> v(size);
    for (int i = 0; i < size; ++i) v(i) = n(rng);
    return v;
  };
  const VectorLayout& l = shape.layout;
  return {draw(l.ctx_dim), draw(l.word_dim), draw(l.dep_dim()), text};
}

// Largest relative error between backprop and central differences over every
// parameter of a freshly initialised scorer (pair-feature embeddings and the
// character encoder included). Relative error uses max(|a|, |n|, 1e-6) as the
// denominator so exactly-zero gradients do not divide by zero.
inline double scorer_gradient_error(std::uint64_t seed, int hidden = 8) {
  const ScorerShape shape = tiny_shape(true, hidden);
  const CharVocab vocab(U"abcde");
  PairScorer<double> scorer(shape, vocab, seed);
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::vector<MentionInput<double>> inputs;
  for (const char* text : {"abc", "bad", "cab e", "zz"}) inputs.push_back(random_input(shape, text, rng));
  const std::vector<TrainPair> batch = {
      {0, 1, 1.0, PairFeatures("0001")}, {0, 2, 0.0, PairFeatures("0000")},
      {1, 3, 1.0, PairFeatures("1010")}, {2, 3, 0.0, PairFeatures("0110")},
      {3, 0, 1.0, PairFeatures("1111")}};

  scorer.compute_gradients(batch, inputs);
  std::vector<Matrix<double>> analytic;
  for (Param<double>* p : scorer.parameters()) analytic.push_back(p->grad);

  double worst = 0.0;
  // At h = 1e-6 cancellation error (~1e-10 absolute) swamps gradients of
  // order 1e-6; 1e-5 keeps both truncation and roundoff well below 1e-4.
  const double h = 1e-5;
  std::size_t k = 0;
  for (Param<double>* p : scorer.parameters()) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double saved = p->value.data()[i];
      p->value.data()[i] = saved + h;
      const double up = scorer.compute_gradients(batch, inputs);
      p->value.data()[i] = saved - h;
      const double down = scorer.compute_gradients(batch, inputs);
      p->value.data()[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[k].data()[i];
      worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6}));
    }
    ++k;
  }
  return worst;
}

// Three groups of documents with disjoint vocabularies; gold topics g0..g2.
inline Corpus three_group_corpus(int docs_per_group = 4) {
  const std::vector<std::vector<std::string>> vocab = {
      {"earthquake", "magnitude", "tremor", "epicenter", "rescue", "collapse"},
      {"election", "ballot", "candidate", "vote", "senate", "campaign"},
      {"merger", "shares", "acquisition", "deal", "investor", "stock"}};
  std::mt19937_64 rng(3);
  std::vector<Document> docs;
  for (std::size_t g = 0; g < vocab.size(); ++g) {
    for (int d = 0; d < docs_per_group; ++d) {
      DocBuilder b("g" + std::to_string(g) + "d" + std::to_string(d), "g" + std::to_string(g));
      for (int s = 0; s < 3; ++s) {
        std::string text = "the";
        std::uniform_int_distribution<std::size_t> pick(0, vocab[g].size() - 1);
        for (int w = 0; w < 5; ++w) text += " " + vocab[g][pick(rng)];
        b.sentence(text + " of");
      }
      docs.push_back(b.build());
    }
  }
  return Corpus(std::move(docs));
}

// One small random topic (at most 12 mentions) from the synthetic generator.
inline Corpus oracle_topic(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SyntheticSpec spec;
  spec.topics = 1;
  spec.docs_per_topic = 2;
  spec.event_chains = 2;
  spec.mentions_per_event_chain = 2;
  spec.arg1_prob = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  spec.ambiguous_pairs = std::bernoulli_distribution(0.5)(rng);
  spec.word_dim = 4;
  spec.seed = seed;
  return generate_synthetic(spec).corpus;
}

// Two events with identical text and context whose Arg0 fillers sit in two
// different documents; the only thing that can tell the configurations apart
// is the entity clustering of those fillers.
struct JointProbe {
  bool span_context_identical = false;  // v1 and v2 agree outside d(m)
  bool diff_confined = false;           // every changed input coordinate is in a d or f block
  bool d_changed = false;               // each of the three d blocks changed
  bool f_changed = false;
  bool f_false_before = false;
  bool f_true_after = false;
};

inline JointProbe run_joint_probe() {
  DocBuilder d1("d1"), d2("d2");
  d1.sentence("alpha shot");
  d2.sentence("beta shot");
  d1.entity("a1", 0, 0, 0).event("v1", 0, 1).link("v1", "a1", Role::arg0).wd({{"a1"}});
  d2.entity("a2", 0, 0, 0).event("v2", 0, 1).link("v2", "a2", Role::arg0).wd({{"a2"}});
  const Corpus corpus({d1.build(), d2.build()});

  const ScorerShape shape = tiny_shape();
  StaticVectorStore words(shape.layout.word_dim);
  words.insert("alpha", Eigen::Vector4d(1, 2, 3, 4));
  words.insert("beta", Eigen::Vector4d(-1, 0.5, 2, 0));
  words.insert("shot", Eigen::Vector4d(0.25, 0.25, -1, 1));
  ContextVectorStore contexts(shape.layout.ctx_dim);
  contexts.insert({"d1", 0, 1}, Eigen::Vector3d(0.1, 0.2, 0.3));
  contexts.insert({"d2", 0, 1}, Eigen::Vector3d(0.1, 0.2, 0.3));
  contexts.insert({"d1", 0, 0}, Eigen::Vector3d(1, 0, 0));
  contexts.insert({"d2", 0, 0}, Eigen::Vector3d(0, 1, 0));
  const EngineContext ctx(corpus, words, contexts);
  const PairScorer<double> scorer(shape, corpus_char_vocab(corpus), 17);
  const Topic topic{"t", {"d1", "d2"}};

  const auto pair_input_under = [&](const Partition& entities, PairFeatures& f) {
    const Configuration config{"t", entities, {{"v1"}, {"v2"}}};
    const SideFeatures feats = build_side_features(ctx, topic, config, MentionKind::event, scorer);
    f = feats.pair(0, 1);
    return std::pair{scorer.pair_input(scorer.mention_vector(feats.inputs[0]),
                                       scorer.mention_vector(feats.inputs[1]), f),
                     std::pair{scorer.mention_vector(feats.inputs[0]), scorer.mention_vector(feats.inputs[1])}};
  };
  PairFeatures before, after;
  const auto [x_before, v_before] = pair_input_under({{"a1"}, {"a2"}}, before);
  const auto [x_after, v_after] = pair_input_under({{"a1", "a2"}}, after);

  const VectorLayout& l = shape.layout;
  const Eigen::Index n = l.full_dim();
  const auto in_d = [&](Eigen::Index i) {
    const Eigen::Index off = i % n;
    return i < 3 * n && off >= l.dep_offset() && off < l.dep_offset() + l.dep_dim();
  };
  const auto in_f = [&](Eigen::Index i) {
    return i >= shape.feature_offset() && i < shape.feature_offset() + shape.feature_dim;
  };

  JointProbe probe;
  probe.span_context_identical =
      v_before.first.head(l.dep_offset()) == v_before.second.head(l.dep_offset());
  probe.diff_confined = true;
  std::array<bool, 3> d_seen{};
  for (Eigen::Index i = 0; i < x_before.size(); ++i) {
    if (x_before(i) == x_after(i)) continue;
    if (in_d(i)) d_seen[static_cast<std::size_t>(i / n)] = true;
    else if (in_f(i)) probe.f_changed = true;
    else probe.diff_confined = false;
  }
  probe.d_changed = d_seen[0] && d_seen[1] && d_seen[2];
  probe.f_false_before = !before[0];
  probe.f_true_after = after[0];
  return probe;
}

}  // namespace xcoref::testing
