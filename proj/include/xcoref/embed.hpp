#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "xcoref/corpus.hpp"
#include "xcoref/params.hpp"

namespace xcoref {

// Decodes UTF-8 into code points; invalid bytes map to U+FFFD.
std::u32string utf8_decode(const std::string& s);
std::string utf8_encode(char32_t c);

// Fixed word vectors keyed by lowercased word. Unknown words map to the zero
// vector.
class StaticVectorStore {
 public:
  explicit StaticVectorStore(int dim = 300) : dim_(dim), oov_(Eigen::VectorXd::Zero(dim)) {}

  int dim() const { return dim_; }
  std::size_t size() const { return table_.size(); }
  // First entry wins when two words collide after case folding.
  void insert(const std::string& word, Eigen::VectorXd vec);
  bool contains(const std::string& word) const;
  const Eigen::VectorXd& lookup(const std::string& word) const;
  const Eigen::VectorXd& oov_vector() const { return oov_; }

 private:
  int dim_;
  std::unordered_map<std::string, Eigen::VectorXd> table_;
  Eigen::VectorXd oov_;
};

// `word<TAB>f1 f2 ... fD` per line. `dim` <= 0 infers it from the first line.
StaticVectorStore load_static_vectors(const std::string& path, int dim = 0);
void save_static_vectors(const std::map<std::string, Eigen::VectorXd>& table, const std::string& path);

// Per-token contextual vectors. Either a lookup table loaded from the exporter's
// files, or a deterministic hash-seeded unit-vector generator for hermetic runs.
class ContextVectorStore {
 public:
  explicit ContextVectorStore(int dim = 1024) : dim_(dim) {}
  static ContextVectorStore hash_fallback(int dim, std::uint64_t seed);

  int dim() const { return dim_; }
  bool is_fallback() const { return fallback_seed_.has_value(); }
  std::size_t size() const { return table_.size(); }
  void insert(const TokenKey& key, Eigen::VectorXd vec);
  bool contains(const TokenKey& key) const;
  // Throws InvariantError naming the token when the key is absent.
  Eigen::VectorXd lookup(const TokenKey& key) const;
  const std::map<TokenKey, Eigen::VectorXd>& table() const { return table_; }

  // Throws unless every mention head token of `corpus` resolves.
  void validate(const Corpus& corpus) const;

 private:
  int dim_;
  std::optional<std::uint64_t> fallback_seed_;
  std::map<TokenKey, Eigen::VectorXd> table_;
};

// Binary layout (little endian): "XCTX", u32 version=1, u32 dim, u64 count,
// then per record u32 doc_id length, doc_id bytes, u32 sent_idx, u32 tok_idx,
// float32 x dim. Files not starting with the magic are read as JSON lines
// `{"doc_id", "sent_idx", "tok_idx", "vector"}`.
ContextVectorStore load_context_vectors(const std::string& path);
void save_context_vectors_binary(const ContextVectorStore& store, const std::string& path);
void save_context_vectors_jsonl(const ContextVectorStore& store, const std::string& path);

// Character vocabulary shared by encoder construction and checkpoints.
// Index 0 is the UNK character.
class CharVocab {
 public:
  CharVocab() = default;
  explicit CharVocab(const std::u32string& chars);

  int size() const { return static_cast<int>(chars_.size()) + 1; }
  int index(char32_t c) const;
  const std::u32string& chars() const { return chars_; }

 private:
  std::u32string chars_;
  std::unordered_map<char32_t, int> index_;
};

// Every distinct code point appearing in mention spans of the corpus, sorted.
CharVocab corpus_char_vocab(const Corpus& corpus);

// Single-layer forward LSTM over the characters of a span; the output is the
// final hidden state. Gate order in the stacked weights is [input, forget,
// cell, output].
template <typename Scalar>
class CharEncoder {
 public:
  struct Trace {
    std::vector<int> ids;
    std::vector<Vector<Scalar>> h, c, i, f, g, o;  // h[0], c[0] are the zero state
  };

  CharEncoder() = default;
  CharEncoder(CharVocab vocab, int char_dim, int hidden, std::uint64_t seed)
      : vocab_(std::move(vocab)), char_dim_(char_dim), hidden_(hidden) {
    embedding.resize(char_dim, vocab_.size());
    w_input.resize(4 * hidden, char_dim);
    w_hidden.resize(4 * hidden, hidden);
    bias.resize(4 * hidden, 1);
    std::mt19937_64 rng(seed);
    embedding.init_normal(Scalar(1), rng);
    const Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(hidden));
    w_input.init_uniform(bound, rng);
    w_hidden.init_uniform(bound, rng);
    bias.init_uniform(bound, rng);
  }

  const CharVocab& vocab() const { return vocab_; }
  int char_dim() const { return char_dim_; }
  int hidden() const { return hidden_; }

  // Overwrites embeddings of characters present in `table` (pre-trained init).
  void load_embeddings(const StaticVectorStore& table) {
    if (table.dim() != char_dim_) return;
    const std::u32string& chars = vocab_.chars();
    for (std::size_t k = 0; k < chars.size(); ++k) {
      const std::string key = utf8_encode(chars[k]);
      if (table.contains(key)) {
        embedding.value.col(static_cast<Eigen::Index>(k) + 1) = table.lookup(key).cast<Scalar>();
      }
    }
  }

  Vector<Scalar> encode(const std::string& text) const { return forward(text).h.back(); }

  Trace forward(const std::string& text) const {
    Trace tr;
    for (char32_t ch : utf8_decode(text)) tr.ids.push_back(vocab_.index(ch));
    tr.h.push_back(Vector<Scalar>::Zero(hidden_));
    tr.c.push_back(Vector<Scalar>::Zero(hidden_));
    const Eigen::Index H = hidden_;
    for (int id : tr.ids) {
      const Vector<Scalar> z = w_input.value * embedding.value.col(id) +
                               w_hidden.value * tr.h.back() + bias.value.col(0);
      Vector<Scalar> ig = sigmoid(z.segment(0, H));
      Vector<Scalar> fg = sigmoid(z.segment(H, H));
      Vector<Scalar> gg = z.segment(2 * H, H).array().tanh().matrix();
      Vector<Scalar> og = sigmoid(z.segment(3 * H, H));
      Vector<Scalar> c = fg.cwiseProduct(tr.c.back()) + ig.cwiseProduct(gg);
      Vector<Scalar> h = og.cwiseProduct(c.array().tanh().matrix());
      tr.i.push_back(std::move(ig));
      tr.f.push_back(std::move(fg));
      tr.g.push_back(std::move(gg));
      tr.o.push_back(std::move(og));
      tr.c.push_back(std::move(c));
      tr.h.push_back(std::move(h));
    }
    return tr;
  }

  // Accumulates parameter gradients for d(loss)/d(final hidden state) = dh.
  void backward(const Trace& tr, const Vector<Scalar>& dh_final) {
    const Eigen::Index H = hidden_;
    Vector<Scalar> dh = dh_final;
    Vector<Scalar> dc = Vector<Scalar>::Zero(H);
    Vector<Scalar> dz(4 * H);
    for (std::size_t t = tr.ids.size(); t-- > 0;) {
      const Vector<Scalar>& c = tr.c[t + 1];
      const Vector<Scalar> tanh_c = c.array().tanh().matrix();
      const auto& ig = tr.i[t];
      const auto& fg = tr.f[t];
      const auto& gg = tr.g[t];
      const auto& og = tr.o[t];
      dc += dh.cwiseProduct(og).cwiseProduct((Scalar(1) - tanh_c.array().square()).matrix());
      dz.segment(0, H) = dc.cwiseProduct(gg).cwiseProduct(sigmoid_grad(ig));
      dz.segment(H, H) = dc.cwiseProduct(tr.c[t]).cwiseProduct(sigmoid_grad(fg));
      dz.segment(2 * H, H) =
          dc.cwiseProduct(ig).cwiseProduct((Scalar(1) - gg.array().square()).matrix());
      dz.segment(3 * H, H) = dh.cwiseProduct(tanh_c).cwiseProduct(sigmoid_grad(og));
      const int id = tr.ids[t];
      w_input.grad.noalias() += dz * embedding.value.col(id).transpose();
      w_hidden.grad.noalias() += dz * tr.h[t].transpose();
      bias.grad.col(0) += dz;
      embedding.grad.col(id).noalias() += w_input.value.transpose() * dz;
      dh = w_hidden.value.transpose() * dz;
      dc = dc.cwiseProduct(fg);
    }
  }

  std::vector<Param<Scalar>*> parameters() { return {&embedding, &w_input, &w_hidden, &bias}; }
  std::vector<const Param<Scalar>*> parameters() const {
    return {&embedding, &w_input, &w_hidden, &bias};
  }

  template <typename Other>
  CharEncoder<Other> cast() const {
    CharEncoder<Other> out;
    out.vocab_ = vocab_;
    out.char_dim_ = char_dim_;
    out.hidden_ = hidden_;
    out.embedding = embedding.template cast<Other>();
    out.w_input = w_input.template cast<Other>();
    out.w_hidden = w_hidden.template cast<Other>();
    out.bias = bias.template cast<Other>();
    return out;
  }

  // Used by checkpoint loading.
  void reset_shape(CharVocab vocab, int char_dim, int hidden) {
    *this = CharEncoder(std::move(vocab), char_dim, hidden, 0);
  }

  Param<Scalar> embedding;  // char_dim x vocab, column per character
  Param<Scalar> w_input;    // 4H x char_dim
  Param<Scalar> w_hidden;   // 4H x H
  Param<Scalar> bias;       // 4H x 1

 private:
  template <typename>
  friend class CharEncoder;

  static Vector<Scalar> sigmoid(const Vector<Scalar>& z) {
    return (Scalar(1) / (Scalar(1) + (-z.array()).exp())).matrix();
  }
  static Vector<Scalar> sigmoid_grad(const Vector<Scalar>& s) {
    return s.cwiseProduct((Scalar(1) - s.array()).matrix());
  }

  CharVocab vocab_;
  int char_dim_ = 0;
  int hidden_ = 0;
};

// Word-level part of the span vector: head word for events, mean over the span
// words for entities.
Eigen::VectorXd span_word_vector(const Corpus& corpus, const Mention& m,
                                 const StaticVectorStore& store);

// Span vector s(m) = [word part; char encoding].
template <typename Scalar>
Vector<Scalar> span_vector(const Corpus& corpus, const Mention& m, const StaticVectorStore& store,
                           const CharEncoder<Scalar>& encoder) {
  const Eigen::VectorXd word = span_word_vector(corpus, m, store);
  Vector<Scalar> out(word.size() + encoder.hidden());
  out << word.cast<Scalar>(), encoder.encode(corpus.span_text(m));
  return out;
}

// Contextual vector c(m) of the mention head token.
Eigen::VectorXd context_vector(const Mention& m, const ContextVectorStore& store);

// Offsets of the sub-vectors of v(m) = [c(m); s(m); d(m)].
struct VectorLayout {
  int ctx_dim = 1024;
  int word_dim = 300;
  int char_hidden = 50;
  bool use_dep = true;

  int span_dim() const { return word_dim + char_hidden; }
  int dep_dim() const { return use_dep ? static_cast<int>(kNumRoles) * span_dim() : 0; }
  int full_dim() const { return ctx_dim + span_dim() + dep_dim(); }
  int context_offset() const { return 0; }
  int span_offset() const { return ctx_dim; }
  int char_offset() const { return ctx_dim + word_dim; }
  int dep_offset() const { return ctx_dim + span_dim(); }
};

template <typename Scalar>
struct MentionVector {
  Vector<Scalar> full;

  auto context(const VectorLayout& l) const { return full.segment(l.context_offset(), l.ctx_dim); }
  auto span(const VectorLayout& l) const { return full.segment(l.span_offset(), l.span_dim()); }
  auto dep(const VectorLayout& l) const { return full.segment(l.dep_offset(), l.dep_dim()); }
};

template <typename Scalar>
MentionVector<Scalar> assemble(const VectorLayout& layout, const Vector<Scalar>& context,
                               const Vector<Scalar>& span, const Vector<Scalar>& dep) {
  MentionVector<Scalar> v;
  v.full.resize(layout.full_dim());
  v.full.segment(layout.context_offset(), layout.ctx_dim) = context;
  v.full.segment(layout.span_offset(), layout.span_dim()) = span;
  if (layout.use_dep) v.full.segment(layout.dep_offset(), layout.dep_dim()) = dep;
  return v;
}

}  // namespace xcoref
