#include "xcoref/scorer.hpp"

#include <cstring>
#include <fstream>

namespace xcoref {

std::vector<LabelledPair> make_training_pairs(const Partition& predicted,
                                              const std::unordered_map<std::string, std::string>& gold,
                                              std::uint64_t seed) {
  Partition clusters = predicted;
  canonicalize(clusters);
  std::vector<LabelledPair> pairs;
  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    for (std::size_t cj = ci + 1; cj < clusters.size(); ++cj) {
      for (const std::string& a : clusters[ci]) {
        for (const std::string& b : clusters[cj]) {
          const auto ga = gold.find(a);
          const auto gb = gold.find(b);
          if (ga == gold.end() || gb == gold.end()) {
            throw InvariantError("mention without gold cluster in training pair ('" + a + "', '" +
                                 b + "')");
          }
          pairs.push_back({a, b, ga->second == gb->second ? 1.0 : 0.0});
        }
      }
    }
  }
  std::mt19937_64 rng(seed);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  return pairs;
}

namespace {

constexpr char kModelMagic[8] = {'X', 'C', 'R', 'F', 'M', 'D', 'L', '1'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void pod(T value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void matrix(const Matrix<double>& m) {
    pod<std::int64_t>(m.rows());
    pod<std::int64_t>(m.cols());
    out_.write(reinterpret_cast<const char*>(m.data()),
               static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  void param(const Param<double>& p) {
    matrix(p.value);
    matrix(p.m);
    matrix(p.v);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T pod() {
    T value{};
    read(&value, sizeof(T));
    return value;
  }
  std::string str() {
    std::string s(pod<std::uint64_t>(), '\0');
    read(s.data(), s.size());
    return s;
  }
  Matrix<double> matrix() {
    const auto rows = pod<std::int64_t>();
    const auto cols = pod<std::int64_t>();
    if (rows < 0 || cols < 0) throw ParseError("corrupt model checkpoint (negative shape)");
    Matrix<double> m(rows, cols);
    read(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
    return m;
  }
  void param(Param<double>& p) {
    Matrix<double> value = matrix();
    if (value.rows() != p.value.rows() || value.cols() != p.value.cols()) {
      throw ParseError("model checkpoint tensor shape mismatch");
    }
    p.value = std::move(value);
    p.m = matrix();
    p.v = matrix();
    p.grad = Matrix<double>::Zero(p.value.rows(), p.value.cols());
  }

 private:
  void read(void* dst, std::size_t n) {
    if (!in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n))) {
      throw ParseError("truncated model checkpoint");
    }
  }
  std::istream& in_;
};

void write_side(Writer& w, const PairScorer<double>& s, const Adam<double>& opt) {
  const ScorerShape& sh = s.shape();
  w.pod<std::int32_t>(sh.layout.ctx_dim);
  w.pod<std::int32_t>(sh.layout.word_dim);
  w.pod<std::int32_t>(sh.layout.char_hidden);
  w.pod<std::int32_t>(sh.layout.use_dep ? 1 : 0);
  w.pod<std::int32_t>(sh.char_dim);
  w.pod<std::int32_t>(sh.hidden);
  w.pod<std::int32_t>(sh.feature_dim);
  w.pod<std::int32_t>(sh.use_pair_features ? 1 : 0);
  const std::u32string& chars = s.encoder.vocab().chars();
  w.pod<std::uint64_t>(chars.size());
  for (char32_t c : chars) w.pod<std::uint32_t>(static_cast<std::uint32_t>(c));
  for (const auto& f : s.features) w.param(f);
  for (const Param<double>* p : {&s.w1, &s.b1, &s.w2, &s.b2, &s.w3, &s.b3}) w.param(*p);
  for (const Param<double>* p : s.encoder.parameters()) w.param(*p);
  w.pod<std::int64_t>(opt.step_count());
  w.pod<double>(opt.options().learning_rate);
}

void read_side(Reader& r, PairScorer<double>& s, Adam<double>& opt) {
  ScorerShape sh;
  sh.layout.ctx_dim = r.pod<std::int32_t>();
  sh.layout.word_dim = r.pod<std::int32_t>();
  sh.layout.char_hidden = r.pod<std::int32_t>();
  sh.layout.use_dep = r.pod<std::int32_t>() != 0;
  sh.char_dim = r.pod<std::int32_t>();
  sh.hidden = r.pod<std::int32_t>();
  sh.feature_dim = r.pod<std::int32_t>();
  sh.use_pair_features = r.pod<std::int32_t>() != 0;
  if (sh.layout.ctx_dim < 0 || sh.layout.word_dim < 0 || sh.layout.char_hidden <= 0 ||
      sh.char_dim <= 0 || sh.hidden <= 0 || sh.feature_dim <= 0) {
    throw ParseError("corrupt model checkpoint (bad dimensions)");
  }
  std::u32string chars(r.pod<std::uint64_t>(), U'\0');
  for (char32_t& c : chars) c = static_cast<char32_t>(r.pod<std::uint32_t>());
  s = PairScorer<double>(sh, CharVocab(chars), 0);
  for (auto& f : s.features) r.param(f);
  for (Param<double>* p : {&s.w1, &s.b1, &s.w2, &s.b2, &s.w3, &s.b3}) r.param(*p);
  for (Param<double>* p : s.encoder.parameters()) r.param(*p);
  const auto steps = r.pod<std::int64_t>();
  AdamOptions options;
  options.learning_rate = r.pod<double>();
  opt = Adam<double>(options);
  opt.set_step_count(steps);
}

}  // namespace

void write_model(const JointModel& model, std::ostream& out) {
  Writer w(out);
  out.write(kModelMagic, sizeof(kModelMagic));
  w.str(model.config_text);
  write_side(w, model.entity, model.entity_optimizer);
  write_side(w, model.event, model.event_optimizer);
}

JointModel read_model(std::istream& in) {
  char magic[sizeof(kModelMagic)] = {};
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
    throw ParseError("not an xcoref model checkpoint (bad magic)");
  }
  Reader r(in);
  JointModel model;
  model.config_text = r.str();
  read_side(r, model.entity, model.entity_optimizer);
  read_side(r, model.event, model.event_optimizer);
  return model;
}

void save_model(const JointModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file '" + path + "'");
  write_model(model, out);
}

JointModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file '" + path + "'");
  return read_model(in);
}

}  // namespace xcoref
