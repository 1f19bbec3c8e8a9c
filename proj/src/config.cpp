#include "xcoref/config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>
#include <vector>

#include "xcoref/error.hpp"

namespace xcoref {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) {
    throw ParseError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::string fmt_double(double d) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define XC_INT(name)                                                                      \
  Field {                                                                                 \
    #name, [](RunConfig& c, const std::string& v) { c.name = parse_int<decltype(c.name)>(#name, v); }, \
        [](const RunConfig& c) { return std::to_string(c.name); }                         \
  }
#define XC_DOUBLE(name)                                                                   \
  Field {                                                                                 \
    #name, [](RunConfig& c, const std::string& v) { c.name = parse_double(#name, v); },   \
        [](const RunConfig& c) { return fmt_double(c.name); }                             \
  }
#define XC_BOOL(name)                                                                     \
  Field {                                                                                 \
    #name, [](RunConfig& c, const std::string& v) { c.name = parse_bool(#name, v); },     \
        [](const RunConfig& c) { return std::string(c.name ? "true" : "false"); }         \
  }
#define XC_STRING(name)                                                                   \
  Field {                                                                                 \
    #name, [](RunConfig& c, const std::string& v) { c.name = v; },                        \
        [](const RunConfig& c) { return c.name; }                                         \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      XC_INT(word_dim),
      XC_INT(char_dim),
      XC_INT(char_hidden),
      XC_INT(ctx_dim),
      XC_INT(hidden),
      XC_INT(feature_dim),
      XC_BOOL(joint),
      XC_DOUBLE(delta_train),
      XC_DOUBLE(delta_infer),
      XC_INT(max_iterations),
      Field{"k",
            [](RunConfig& c, const std::string& v) { c.k = v == "auto" ? 0 : parse_int<int>("k", v); },
            [](const RunConfig& c) { return c.k <= 0 ? std::string("auto") : std::to_string(c.k); }},
      XC_INT(seed),
      XC_DOUBLE(learning_rate),
      XC_INT(batch_size),
      XC_INT(epochs),
      XC_BOOL(reinit_scorers),
      XC_INT(workers),
      XC_BOOL(augment_links),
      Field{"entity_init",
            [](RunConfig& c, const std::string& v) {
              if (v == "wd_system") c.entity_init = EntityInit::wd_system;
              else if (v == "gold_wd") c.entity_init = EntityInit::gold_wd;
              else throw ParseError("config key 'entity_init': expected wd_system or gold_wd, got '" + v + "'");
            },
            [](const RunConfig& c) {
              return std::string(c.entity_init == EntityInit::gold_wd ? "gold_wd" : "wd_system");
            }},
      XC_STRING(static_vectors),
      XC_STRING(context_vectors),
      XC_STRING(char_vectors),
      XC_INT(context_seed),
  };
  return table;
}

#undef XC_INT
#undef XC_DOUBLE
#undef XC_BOOL
#undef XC_STRING

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(*this, value);
      return;
    }
  }
  throw ParseError("unknown config key '" + key + "'");
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const Field& f : fields()) out += std::string(f.key) + " = " + f.get(*this) + "\n";
  return out;
}

ScorerShape RunConfig::scorer_shape() const {
  ScorerShape s;
  s.layout = {ctx_dim, word_dim, char_hidden, joint};
  s.char_dim = char_dim;
  s.hidden = hidden;
  s.feature_dim = feature_dim;
  s.use_pair_features = joint;
  return s;
}

MergeParams RunConfig::merge_params() const { return {delta_train, delta_infer, max_iterations}; }

int RunConfig::resolved_workers() const {
  if (workers > 0) return workers;
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ParseError& e) {
      throw ParseError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace xcoref
