#include "xcoref/embed.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "xcoref/error.hpp"

namespace xcoref {

std::u32string utf8_decode(const std::string& s) {
  std::u32string out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b = static_cast<unsigned char>(s[i]);
    int len = 0;
    char32_t cp = 0;
    if (b < 0x80) {
      len = 1;
      cp = b;
    } else if ((b >> 5) == 0x6) {
      len = 2;
      cp = b & 0x1F;
    } else if ((b >> 4) == 0xE) {
      len = 3;
      cp = b & 0x0F;
    } else if ((b >> 3) == 0x1E) {
      len = 4;
      cp = b & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (int k = 1; ok && k < len; ++k) {
      const auto cb = static_cast<unsigned char>(s[i + k]);
      if ((cb >> 6) != 0x2) ok = false;
      cp = (cp << 6) | (cb & 0x3F);
    }
    if (!ok) {
      out.push_back(U'�');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string utf8_encode(char32_t c) {
  std::string out;
  if (c < 0x80) {
    out += static_cast<char>(c);
  } else if (c < 0x800) {
    out += static_cast<char>(0xC0 | (c >> 6));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else if (c < 0x10000) {
    out += static_cast<char>(0xE0 | (c >> 12));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (c >> 18));
    out += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  }
  return out;
}

namespace {

std::string fold_case(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string key_name(const TokenKey& key) {
  return "(" + key.doc_id + ", " + std::to_string(key.sent_idx) + ", " +
         std::to_string(key.tok_idx) + ")";
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ParseError("truncated contextual vector file '" + path + "'");
  }
  return value;
}

constexpr char kContextMagic[4] = {'X', 'C', 'T', 'X'};

}  // namespace

// ---------------------------------------------------------------------------

void StaticVectorStore::insert(const std::string& word, Eigen::VectorXd vec) {
  if (vec.size() != dim_) {
    throw InvariantError("vector for '" + word + "' has dimension " + std::to_string(vec.size()) +
                         ", expected " + std::to_string(dim_));
  }
  table_.emplace(fold_case(word), std::move(vec));
}

bool StaticVectorStore::contains(const std::string& word) const {
  return table_.count(fold_case(word)) != 0;
}

const Eigen::VectorXd& StaticVectorStore::lookup(const std::string& word) const {
  auto it = table_.find(fold_case(word));
  return it == table_.end() ? oov_ : it->second;
}

StaticVectorStore load_static_vectors(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vector file '" + path + "'");
  std::optional<StaticVectorStore> store;
  if (dim > 0) store.emplace(dim);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": missing TAB separator");
    }
    const std::string word = line.substr(0, tab);
    std::istringstream fields(line.substr(tab + 1));
    std::vector<double> values;
    double x = 0.0;
    while (fields >> x) values.push_back(x);
    if (!fields.eof()) throw ParseError(path + ":" + std::to_string(line_no) + ": bad number");
    if (!store) store.emplace(static_cast<int>(values.size()));
    if (static_cast<int>(values.size()) != store->dim()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(store->dim()) + " values");
    }
    store->insert(word, Eigen::Map<const Eigen::VectorXd>(values.data(), store->dim()));
  }
  return store ? std::move(*store) : StaticVectorStore(dim > 0 ? dim : 300);
}

void save_static_vectors(const std::map<std::string, Eigen::VectorXd>& table,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vector file '" + path + "'");
  out.precision(17);
  for (const auto& [word, vec] : table) {
    out << word << '\t';
    for (Eigen::Index i = 0; i < vec.size(); ++i) out << (i ? " " : "") << vec(i);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

ContextVectorStore ContextVectorStore::hash_fallback(int dim, std::uint64_t seed) {
  ContextVectorStore store(dim);
  store.fallback_seed_ = seed;
  return store;
}

void ContextVectorStore::insert(const TokenKey& key, Eigen::VectorXd vec) {
  if (vec.size() != dim_) throw InvariantError("contextual vector for " + key_name(key) +
                                               " has the wrong dimension");
  table_[key] = std::move(vec);
}

bool ContextVectorStore::contains(const TokenKey& key) const {
  return fallback_seed_.has_value() || table_.count(key) != 0;
}

Eigen::VectorXd ContextVectorStore::lookup(const TokenKey& key) const {
  if (auto it = table_.find(key); it != table_.end()) return it->second;
  if (!fallback_seed_) throw InvariantError("no contextual vector for token " + key_name(key));

  std::uint64_t h = fnv1a(&*fallback_seed_, sizeof(std::uint64_t), 0xCBF29CE484222325ULL);
  h = fnv1a(key.doc_id.data(), key.doc_id.size(), h);
  const std::int32_t idx[2] = {key.sent_idx, key.tok_idx};
  h = fnv1a(idx, sizeof(idx), h);
  std::mt19937_64 rng(h);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim_);
  for (int i = 0; i < dim_; ++i) v(i) = normal(rng);
  const double norm = v.norm();
  return norm > 0.0 ? Eigen::VectorXd(v / norm) : v;
}

void ContextVectorStore::validate(const Corpus& corpus) const {
  for (const Mention* m : corpus.all_mentions()) {
    if (!contains(m->head_key())) {
      throw InvariantError("contextual store lacks mention head token " + key_name(m->head_key()) +
                           " of mention '" + m->mention_id + "'");
    }
  }
}

ContextVectorStore load_context_vectors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open contextual vector file '" + path + "'");
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::memcmp(magic, kContextMagic, 4) == 0) {
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != 1) throw ParseError("unsupported contextual file version " + std::to_string(version));
    const auto dim = read_pod<std::uint32_t>(in, path);
    const auto count = read_pod<std::uint64_t>(in, path);
    ContextVectorStore store(static_cast<int>(dim));
    std::vector<float> buf(dim);
    for (std::uint64_t r = 0; r < count; ++r) {
      TokenKey key;
      key.doc_id.resize(read_pod<std::uint32_t>(in, path));
      if (!in.read(key.doc_id.data(), static_cast<std::streamsize>(key.doc_id.size()))) {
        throw ParseError("truncated contextual vector file '" + path + "'");
      }
      key.sent_idx = static_cast<int>(read_pod<std::uint32_t>(in, path));
      key.tok_idx = static_cast<int>(read_pod<std::uint32_t>(in, path));
      if (!in.read(reinterpret_cast<char*>(buf.data()),
                   static_cast<std::streamsize>(dim * sizeof(float)))) {
        throw ParseError("truncated contextual vector file '" + path + "'");
      }
      store.insert(key, Eigen::Map<Eigen::VectorXf>(buf.data(), dim).cast<double>());
    }
    return store;
  }

  in.clear();
  in.seekg(0);
  std::optional<ContextVectorStore> store;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto values = j.at("vector").get<std::vector<double>>();
      if (!store) store.emplace(static_cast<int>(values.size()));
      store->insert(TokenKey{j.at("doc_id").get<std::string>(), j.at("sent_idx").get<int>(),
                             j.at("tok_idx").get<int>()},
                    Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const InvariantError& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return store ? std::move(*store) : ContextVectorStore(0);
}

void save_context_vectors_binary(const ContextVectorStore& store, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write contextual vector file '" + path + "'");
  out.write(kContextMagic, 4);
  write_pod<std::uint32_t>(out, 1);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(store.dim()));
  write_pod<std::uint64_t>(out, store.table().size());
  for (const auto& [key, vec] : store.table()) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(key.doc_id.size()));
    out.write(key.doc_id.data(), static_cast<std::streamsize>(key.doc_id.size()));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(key.sent_idx));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(key.tok_idx));
    const Eigen::VectorXf f = vec.cast<float>();
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(f.size() * sizeof(float)));
  }
}

void save_context_vectors_jsonl(const ContextVectorStore& store, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write contextual vector file '" + path + "'");
  for (const auto& [key, vec] : store.table()) {
    nlohmann::json j = {{"doc_id", key.doc_id}, {"sent_idx", key.sent_idx}, {"tok_idx", key.tok_idx}};
    j["vector"] = std::vector<double>(vec.data(), vec.data() + vec.size());
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------

CharVocab::CharVocab(const std::u32string& chars) {
  std::set<char32_t> unique(chars.begin(), chars.end());
  chars_.assign(unique.begin(), unique.end());
  for (std::size_t k = 0; k < chars_.size(); ++k) index_[chars_[k]] = static_cast<int>(k) + 1;
}

int CharVocab::index(char32_t c) const {
  auto it = index_.find(c);
  return it == index_.end() ? 0 : it->second;
}

CharVocab corpus_char_vocab(const Corpus& corpus) {
  std::u32string chars;
  for (const Mention* m : corpus.all_mentions()) chars += utf8_decode(corpus.span_text(*m));
  return CharVocab(chars);
}

Eigen::VectorXd span_word_vector(const Corpus& corpus, const Mention& m,
                                 const StaticVectorStore& store) {
  if (m.kind == MentionKind::event) return store.lookup(corpus.token(m, m.head_idx).surface);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(store.dim());
  for (int t = m.start; t <= m.end; ++t) sum += store.lookup(corpus.token(m, t).surface);
  return sum / static_cast<double>(m.end - m.start + 1);
}

Eigen::VectorXd context_vector(const Mention& m, const ContextVectorStore& store) {
  return store.lookup(m.head_key());
}

}  // namespace xcoref
