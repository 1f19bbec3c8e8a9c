#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "xcoref/deps.hpp"
#include "xcoref/embed.hpp"
#include "xcoref/error.hpp"
#include "xcoref/params.hpp"

namespace xcoref {

struct ScorerShape {
  VectorLayout layout;
  int char_dim = 300;
  int hidden = 4261;
  int feature_dim = 50;
  bool use_pair_features = true;

  int input_dim() const {
    return 3 * layout.full_dim() + (use_pair_features ? static_cast<int>(kNumRoles) * feature_dim : 0);
  }
  int feature_offset() const { return 3 * layout.full_dim(); }
};

// Everything about a mention the scorer needs except the char encoding, which
// depends on trainable parameters.
template <typename Scalar>
struct MentionInput {
  Vector<Scalar> context;
  Vector<Scalar> word;
  Vector<Scalar> dep;  // frozen at the last joint-feature update
  std::string text;
};

struct TrainPair {
  int a = 0;  // indices into the MentionInput list
  int b = 0;
  double label = 0.0;
  PairFeatures features;
};

inline constexpr double kBceClip = 1e-7;

// Binary cross entropy with the probability clipped to [eps, 1 - eps].
inline double bce(double p, double label, double eps = kBceClip) {
  const double q = std::clamp(p, eps, 1.0 - eps);
  return -(label * std::log(q) + (1.0 - label) * std::log(1.0 - q));
}

// Pairwise mention scorer: feed-forward network over
// [v_i; v_j; v_i * v_j; embed(f)] with two ReLU layers and a sigmoid output,
// plus the character encoder feeding the span block of v.
template <typename Scalar>
class PairScorer {
 public:
  struct Trace {
    Vector<Scalar> x, h1, h2;
    Scalar p = 0;
  };

  PairScorer() = default;
  PairScorer(const ScorerShape& shape, CharVocab vocab, std::uint64_t seed) : shape_(shape) {
    std::mt19937_64 rng(seed);
    encoder = CharEncoder<Scalar>(std::move(vocab), shape.char_dim, shape.layout.char_hidden, rng());
    const int d = shape.input_dim();
    const int h = shape.hidden;
    w1.resize(h, d);
    b1.resize(h, 1);
    w2.resize(h, h);
    b2.resize(h, 1);
    w3.resize(1, h);
    b3.resize(1, 1);
    const Scalar bound_in = Scalar(1) / std::sqrt(static_cast<Scalar>(d));
    const Scalar bound_h = Scalar(1) / std::sqrt(static_cast<Scalar>(h));
    w1.init_uniform(bound_in, rng);
    b1.init_uniform(bound_in, rng);
    w2.init_uniform(bound_h, rng);
    b2.init_uniform(bound_h, rng);
    w3.init_uniform(bound_h, rng);
    b3.init_uniform(bound_h, rng);
    for (auto& table : features) {
      table.resize(shape.feature_dim, 2);
      table.init_normal(Scalar(1), rng);
    }
  }

  const ScorerShape& shape() const { return shape_; }

  // Full mention vector for the current encoder parameters.
  Vector<Scalar> mention_vector(const MentionInput<Scalar>& in) const {
    return mention_vector(in, encoder.encode(in.text));
  }

  Vector<Scalar> mention_vector(const MentionInput<Scalar>& in, const Vector<Scalar>& chars) const {
    const VectorLayout& l = shape_.layout;
    Vector<Scalar> span(l.span_dim());
    span << in.word, chars;
    return assemble(l, in.context, span, in.dep).full;
  }

  Vector<Scalar> pair_input(const Vector<Scalar>& vi, const Vector<Scalar>& vj,
                            PairFeatures f) const {
    check_dim(vi);
    check_dim(vj);
    const Eigen::Index n = vi.size();
    Vector<Scalar> x(shape_.input_dim());
    x.segment(0, n) = vi;
    x.segment(n, n) = vj;
    x.segment(2 * n, n) = vi.cwiseProduct(vj);
    if (shape_.use_pair_features) {
      for (std::size_t r = 0; r < kNumRoles; ++r) {
        x.segment(shape_.feature_offset() + static_cast<Eigen::Index>(r) * shape_.feature_dim,
                  shape_.feature_dim) = features[r].value.col(f[r] ? 1 : 0);
      }
    }
    return x;
  }

  Trace forward(Vector<Scalar> x) const {
    Trace t;
    t.x = std::move(x);
    t.h1 = (w1.value * t.x + b1.value.col(0)).cwiseMax(Scalar(0));
    t.h2 = (w2.value * t.h1 + b2.value.col(0)).cwiseMax(Scalar(0));
    const Scalar logit = (w3.value * t.h2)(0) + b3.value(0, 0);
    t.p = Scalar(1) / (Scalar(1) + std::exp(-logit));
    return t;
  }

  // Accumulates parameter gradients for d(loss)/dp and returns d(loss)/dx.
  Vector<Scalar> backward(const Trace& t, Scalar dp) {
    const Scalar dlogit = dp * t.p * (Scalar(1) - t.p);
    w3.grad.row(0).noalias() += dlogit * t.h2.transpose();
    b3.grad(0, 0) += dlogit;
    Vector<Scalar> dh2 = dlogit * w3.value.row(0).transpose();
    dh2 = (t.h2.array() > Scalar(0)).select(dh2, Scalar(0));
    w2.grad.noalias() += dh2 * t.h1.transpose();
    b2.grad.col(0) += dh2;
    Vector<Scalar> dh1 = w2.value.transpose() * dh2;
    dh1 = (t.h1.array() > Scalar(0)).select(dh1, Scalar(0));
    w1.grad.noalias() += dh1 * t.x.transpose();
    b1.grad.col(0) += dh1;
    return w1.value.transpose() * dh1;
  }

  Scalar score(const Vector<Scalar>& vi, const Vector<Scalar>& vj, PairFeatures f) const {
    return forward(pair_input(vi, vj, f)).p;
  }

  // Order-independent score: mean of both input orders.
  Scalar score_symmetric(const Vector<Scalar>& vi, const Vector<Scalar>& vj, PairFeatures f) const {
    return (score(vi, vj, f) + score(vj, vi, f)) / Scalar(2);
  }

  // Mean BCE of the symmetric score over `batch`; parameter gradients are
  // overwritten (not accumulated) with the gradient of that mean.
  double compute_gradients(std::span<const TrainPair> batch,
                           const std::vector<MentionInput<Scalar>>& inputs) {
    for (Param<Scalar>* p : parameters()) p->zero_grad();
    if (batch.empty()) return 0.0;

    std::unordered_map<int, typename CharEncoder<Scalar>::Trace> traces;
    std::unordered_map<int, Vector<Scalar>> vectors;
    std::unordered_map<int, Vector<Scalar>> dvectors;
    for (const TrainPair& pair : batch) {
      for (int idx : {pair.a, pair.b}) {
        if (traces.count(idx)) continue;
        auto tr = encoder.forward(inputs.at(idx).text);
        vectors[idx] = mention_vector(inputs[idx], tr.h.back());
        dvectors[idx] = Vector<Scalar>::Zero(shape_.layout.full_dim());
        traces.emplace(idx, std::move(tr));
      }
    }

    const Scalar scale = Scalar(1) / static_cast<Scalar>(batch.size());
    const Eigen::Index n = shape_.layout.full_dim();
    double loss = 0.0;
    for (const TrainPair& pair : batch) {
      const Vector<Scalar>& va = vectors[pair.a];
      const Vector<Scalar>& vb = vectors[pair.b];
      const Trace ab = forward(pair_input(va, vb, pair.features));
      const Trace ba = forward(pair_input(vb, va, pair.features));
      const double p = 0.5 * (static_cast<double>(ab.p) + static_cast<double>(ba.p));
      loss += bce(p, pair.label);
      double dp = 0.0;
      if (p > kBceClip && p < 1.0 - kBceClip) {
        dp = -pair.label / p + (1.0 - pair.label) / (1.0 - p);
      }
      const Scalar half_dp = static_cast<Scalar>(0.5 * dp) * scale;
      for (const auto& [trace, first, second] :
           {std::tuple{&ab, pair.a, pair.b}, std::tuple{&ba, pair.b, pair.a}}) {
        const Vector<Scalar> dx = backward(*trace, half_dp);
        const Vector<Scalar>& v1 = vectors[first];
        const Vector<Scalar>& v2 = vectors[second];
        dvectors[first] += dx.segment(0, n) + dx.segment(2 * n, n).cwiseProduct(v2);
        dvectors[second] += dx.segment(n, n) + dx.segment(2 * n, n).cwiseProduct(v1);
        if (shape_.use_pair_features) {
          for (std::size_t r = 0; r < kNumRoles; ++r) {
            features[r].grad.col(pair.features[r] ? 1 : 0) += dx.segment(
                shape_.feature_offset() + static_cast<Eigen::Index>(r) * shape_.feature_dim,
                shape_.feature_dim);
          }
        }
      }
    }
    const VectorLayout& l = shape_.layout;
    for (const auto& [idx, tr] : traces) {
      encoder.backward(tr, dvectors[idx].segment(l.char_offset(), l.char_hidden));
    }
    return loss / static_cast<double>(batch.size());
  }

  // One Adam step on a minibatch; returns the batch loss.
  double train_batch(std::span<const TrainPair> batch, const std::vector<MentionInput<Scalar>>& inputs,
                     Adam<Scalar>& optimizer) {
    const double loss = compute_gradients(batch, inputs);
    if (!std::isfinite(loss)) throw NumericError("non-finite training loss");
    for (const Param<Scalar>* p : parameters()) {
      if (!p->grad.allFinite()) throw NumericError("non-finite gradient in pair scorer");
    }
    optimizer.step(parameters());
    return loss;
  }

  std::vector<Param<Scalar>*> parameters() {
    std::vector<Param<Scalar>*> out = {&w1, &b1, &w2, &b2, &w3, &b3};
    if (shape_.use_pair_features) {
      for (auto& f : features) out.push_back(&f);
    }
    for (Param<Scalar>* p : encoder.parameters()) out.push_back(p);
    return out;
  }

  template <typename Other>
  PairScorer<Other> cast() const {
    PairScorer<Other> out;
    out.shape_ = shape_;
    out.encoder = encoder.template cast<Other>();
    out.w1 = w1.template cast<Other>();
    out.b1 = b1.template cast<Other>();
    out.w2 = w2.template cast<Other>();
    out.b2 = b2.template cast<Other>();
    out.w3 = w3.template cast<Other>();
    out.b3 = b3.template cast<Other>();
    for (std::size_t r = 0; r < kNumRoles; ++r) out.features[r] = features[r].template cast<Other>();
    return out;
  }

  CharEncoder<Scalar> encoder;
  Param<Scalar> w1, b1, w2, b2, w3, b3;
  std::array<Param<Scalar>, kNumRoles> features;  // feature_dim x 2; column 0 = false, 1 = true

 private:
  template <typename>
  friend class PairScorer;

  void check_dim(const Vector<Scalar>& v) const {
    if (v.size() != shape_.layout.full_dim()) {
      throw InvariantError("mention vector has dimension " + std::to_string(v.size()) +
                           ", scorer expects " + std::to_string(shape_.layout.full_dim()));
    }
  }

  ScorerShape shape_;
};

// Cross-cluster unordered pairs of `predicted`, labelled 1 iff both mentions
// share a gold cluster, shuffled with `seed`.
struct LabelledPair {
  std::string a;
  std::string b;
  double label = 0.0;
};
std::vector<LabelledPair> make_training_pairs(const Partition& predicted,
                                              const std::unordered_map<std::string, std::string>& gold,
                                              std::uint64_t seed);

// Entity and event scorers plus their optimizer state.
struct JointModel {
  PairScorer<double> entity;
  PairScorer<double> event;
  Adam<double> entity_optimizer;
  Adam<double> event_optimizer;
  std::string config_text;  // echo of the run configuration

  PairScorer<double>& side(MentionKind kind) { return kind == MentionKind::entity ? entity : event; }
  const PairScorer<double>& side(MentionKind kind) const {
    return kind == MentionKind::entity ? entity : event;
  }
  Adam<double>& optimizer(MentionKind kind) {
    return kind == MentionKind::entity ? entity_optimizer : event_optimizer;
  }
};

// Versioned binary checkpoint: "XCRFMDL1", config text, then per side the
// shape, character vocabulary, every parameter tensor with Adam moments, and
// the optimizer step count.
void save_model(const JointModel& model, const std::string& path);
JointModel load_model(const std::string& path);
void write_model(const JointModel& model, std::ostream& out);
JointModel read_model(std::istream& in);

}  // namespace xcoref
