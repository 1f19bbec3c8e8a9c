#include "xcoref/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "xcoref/config.hpp"
#include "xcoref/corpus.hpp"
#include "xcoref/deps.hpp"
#include "xcoref/docclust.hpp"
#include "xcoref/embed.hpp"
#include "xcoref/engine.hpp"
#include "xcoref/error.hpp"
#include "xcoref/metrics.hpp"
#include "xcoref/synthetic.hpp"

namespace xcoref::cli {

namespace {

using nlohmann::json;

struct ConfigArgs {
  std::string file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "key = value config file");
    app->add_option("--set", sets, "override one config key (key=value), repeatable");
    app->add_option("--seed", seed, "random seed");
  }

  // Defaults < file (or `fallback_text`) < --set < dedicated flags.
  RunConfig resolve(const std::string& fallback_text = "") const {
    RunConfig cfg = !file.empty()             ? load_config(file)
                    : !fallback_text.empty() ? parse_config(fallback_text)
                                             : RunConfig{};
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ParseError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    return cfg;
  }
};

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

// Run-dependent facts live under "metadata" so the rest is reproducible.
json envelope(const std::string& command, const RunConfig& cfg) {
  return {{"metadata", {{"tool", "xcoref"}, {"command", command}, {"created_at", timestamp()}}},
          {"config", cfg.to_text()}};
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

Corpus read_corpus(const std::string& path, bool augment, std::ostream& err) {
  std::vector<std::string> warnings;
  Corpus corpus = load_corpus(path, &warnings);
  for (const std::string& w : warnings) err << "warning: " << w << '\n';
  return augment ? augment_links(corpus) : corpus;
}

StaticVectorStore word_store(const RunConfig& cfg) {
  if (cfg.static_vectors.empty()) return StaticVectorStore(cfg.word_dim);
  StaticVectorStore s = load_static_vectors(cfg.static_vectors, cfg.word_dim);
  return s;
}

ContextVectorStore context_store(const RunConfig& cfg, const Corpus& corpus) {
  if (cfg.context_vectors.empty()) return ContextVectorStore::hash_fallback(cfg.ctx_dim, cfg.context_seed);
  ContextVectorStore s = load_context_vectors(cfg.context_vectors);
  if (s.dim() != cfg.ctx_dim) {
    throw InvariantError("'" + cfg.context_vectors + "' has dimension " + std::to_string(s.dim()) +
                         ", config ctx_dim is " + std::to_string(cfg.ctx_dim));
  }
  s.validate(corpus);
  return s;
}

std::map<std::string, int> read_topic_assignment(const std::string& path) {
  const json j = read_json(path);
  if (!j.contains("topics") || !j["topics"].is_object()) {
    throw ParseError(path + ": missing \"topics\" object");
  }
  std::map<std::string, int> out;
  for (const auto& [doc, idx] : j["topics"].items()) out[doc] = idx.get<int>();
  return out;
}

// "gold", "auto" (document clustering with the config's K), or a doc-cluster output file.
std::vector<Topic> resolve_topics(const std::string& mode, const Corpus& corpus, const RunConfig& cfg) {
  if (mode == "gold") return gold_topics(corpus);
  if (mode == "auto") return topics_from_assignment(corpus, cluster_documents(corpus, cfg.k, cfg.seed));
  return topics_from_assignment(corpus, read_topic_assignment(mode));
}

json clusters_json(const std::vector<Topic>& topics, const std::vector<Configuration>& configs) {
  json clusters = json::object();
  for (std::size_t t = 0; t < topics.size(); ++t) {
    for (MentionKind kind : {MentionKind::entity, MentionKind::event}) {
      const Partition& side = configs[t].side(kind);
      for (std::size_t c = 0; c < side.size(); ++c) {
        const std::string id =
            topics[t].topic_id + "/" + std::string(to_string(kind)) + "/" + std::to_string(c);
        for (const std::string& m : side[c]) clusters[m] = {{"kind", to_string(kind)}, {"cluster", id}};
      }
    }
  }
  return clusters;
}

Partition read_predicted(const json& pred, const std::string& path, MentionKind kind) {
  if (!pred.contains("clusters") || !pred["clusters"].is_object()) {
    throw ParseError(path + ": missing \"clusters\" object");
  }
  std::map<std::string, Cluster> by_id;
  for (const auto& [mention, entry] : pred["clusters"].items()) {
    if (parse_kind(entry.at("kind").get<std::string>()) != kind) continue;
    by_id[entry.at("cluster").get<std::string>()].push_back(mention);
  }
  Partition out;
  for (auto& [id, c] : by_id) out.push_back(std::move(c));
  canonicalize(out);
  return out;
}

json prf_json(const Prf& p) { return {{"recall", p.recall}, {"precision", p.precision}, {"f1", p.f1}}; }

json report_json(const EvalReport& r) {
  return {{"muc", prf_json(r.muc)},
          {"b_cubed", prf_json(r.b_cubed)},
          {"ceaf_e", prf_json(r.ceaf_e)},
          {"conll_f1", r.conll_f1}};
}

std::vector<MentionKind> kinds_of(const std::string& kind) {
  if (kind == "both") return {MentionKind::entity, MentionKind::event};
  return {parse_kind(kind)};
}

// ---------------------------------------------------------------------------

struct DocClusterCmd {
  ConfigArgs config;
  std::string corpus, out, k;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("doc-cluster", "cluster documents into topics (TF-IDF + K-Means)");
    config.attach(sub);
    sub->add_option("--corpus", corpus, "corpus JSON lines")->required();
    sub->add_option("--k", k, "number of topics or 'auto'");
    sub->add_option("--out", out, "topics JSON output")->required();
    sub->callback([this] { run(); });
  }

  void run() {
    RunConfig cfg = config.resolve();
    if (!k.empty()) cfg.set("k", k);
    const Corpus c = read_corpus(corpus, false, std::cerr);
    const std::map<std::string, int> assignment = cluster_documents(c, cfg.k, cfg.seed);
    json j = envelope("doc-cluster", cfg);
    std::set<int> labels;
    for (const auto& [doc, t] : assignment) labels.insert(t);
    j["k"] = labels.size();
    j["topics"] = assignment;

    std::map<std::string, std::string> pred, gold;
    for (const Document& d : c.documents()) {
      if (!d.gold_topic_id) break;
      gold[d.doc_id] = *d.gold_topic_id;
      pred[d.doc_id] = std::to_string(assignment.at(d.doc_id));
    }
    if (!gold.empty() && gold.size() == c.documents().size()) {
      const ClusteringQuality q = clustering_quality(pred, gold);
      j["quality"] = {{"homogeneity", q.homogeneity},
                      {"completeness", q.completeness},
                      {"v_measure", q.v_measure},
                      {"ari", q.ari}};
    }
    write_json(j, out);
  }
};

struct TrainCmd {
  ConfigArgs config;
  std::string corpus, out, topics = "gold", log;
  bool reinit = false, disjoint = false;
  std::optional<int> epochs;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("train", "train entity and event pair scorers");
    config.attach(sub);
    sub->add_option("--corpus", corpus, "training corpus JSON lines")->required();
    sub->add_option("--out", out, "model checkpoint output")->required();
    sub->add_option("--topics", topics, "gold, auto, or a doc-cluster output file");
    sub->add_option("--epochs", epochs, "passes over the pairs of each scorer update");
    sub->add_flag("--reinit-scorers", reinit, "fresh scorer parameters at every update");
    sub->add_flag("--disjoint", disjoint, "drop argument vectors and pair features");
    sub->add_option("--log", log, "JSON-lines training log");
    sub->callback([this] { run(); });
  }

  void run() {
    RunConfig cfg = config.resolve();
    if (reinit) cfg.reinit_scorers = true;
    if (disjoint) cfg.joint = false;
    if (epochs) cfg.epochs = *epochs;
    const Corpus c = read_corpus(corpus, cfg.augment_links, std::cerr);
    const StaticVectorStore words = word_store(cfg);
    const ContextVectorStore contexts = context_store(cfg, c);
    std::optional<StaticVectorStore> chars;
    if (!cfg.char_vectors.empty()) chars = load_static_vectors(cfg.char_vectors, cfg.char_dim);

    std::ofstream log_out;
    if (!log.empty()) {
      log_out.open(log);
      if (!log_out) throw IoError("cannot write '" + log + "'");
    }
    TrainOptions opts;
    opts.merge = cfg.merge_params();
    opts.shape = cfg.scorer_shape();
    opts.learning_rate = cfg.learning_rate;
    opts.batch_size = cfg.batch_size;
    opts.epochs = cfg.epochs;
    opts.reinit_scorers = cfg.reinit_scorers;
    opts.seed = cfg.seed;
    opts.char_vectors = chars ? &*chars : nullptr;
    opts.on_update = [&](const std::string& topic, int it, MentionKind kind, double loss) {
      if (log_out) {
        log_out << json{{"topic", topic}, {"iteration", it}, {"side", to_string(kind)}, {"loss", loss}}.dump()
                << '\n';
      }
    };
    const EngineContext ctx(c, words, contexts);
    JointModel model = train(ctx, resolve_topics(topics, c, cfg), opts);
    model.config_text = cfg.to_text();
    save_model(model, out);
  }
};

struct InferCmd {
  ConfigArgs config;
  std::string corpus, model_path, out, topics = "auto", dump, precision = "f64";
  std::optional<int> workers;
  std::optional<std::string> k;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("infer", "cluster mentions with a trained model");
    config.attach(sub);
    sub->add_option("--corpus", corpus, "corpus JSON lines")->required();
    sub->add_option("--model", model_path, "model checkpoint")->required();
    sub->add_option("--out", out, "clusters JSON output")->required();
    sub->add_option("--topics", topics, "gold, auto, or a doc-cluster output file");
    sub->add_option("--k", k, "number of topics for --topics auto, or 'auto'");
    sub->add_option("--dump-vectors", dump, "JSON-lines mention vector dump");
    sub->add_option("--precision", precision, "f64 or f32")->check(CLI::IsMember({"f64", "f32"}));
    sub->add_option("--workers", workers, "pair scoring threads (0 = all cores)");
    sub->callback([this] { run(); });
  }

  void run() {
    const JointModel model = load_model(model_path);
    RunConfig cfg = config.resolve(model.config_text);
    if (k) cfg.set("k", *k);
    if (workers) cfg.workers = *workers;
    const Corpus c = read_corpus(corpus, cfg.augment_links, std::cerr);
    const StaticVectorStore words = word_store(cfg);
    const ContextVectorStore contexts = context_store(cfg, c);
    const EngineContext ctx(c, words, contexts);
    const std::vector<Topic> ts = resolve_topics(topics, c, cfg);

    InferOptions opts;
    opts.merge = cfg.merge_params();
    opts.entity_init = cfg.entity_init;
    std::vector<TopicResult> results;
    if (precision == "f32") {
      const NeuralSideScorerF32 es(model.entity), vs(model.event);
      results = infer(ctx, ts, es, vs, opts);
    } else {
      const NeuralSideScorer es(model.entity, cfg.resolved_workers());
      const NeuralSideScorer vs(model.event, cfg.resolved_workers());
      results = infer(ctx, ts, es, vs, opts);
    }
    std::vector<Configuration> configs;
    json iterations = json::object();
    for (const TopicResult& r : results) {
      configs.push_back(r.config);
      iterations[r.config.topic_id] = r.iterations;
    }
    json j = envelope("infer", cfg);
    j["iterations"] = iterations;
    j["clusters"] = clusters_json(ts, configs);
    write_json(j, out);
    if (!dump.empty()) dump_vectors(ctx, results, ts, model, dump);
  }
};

struct BaselineCmd {
  ConfigArgs config;
  std::string corpus, out, topics = "auto";
  std::optional<std::string> k;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("baseline", "same-head-lemma clustering within each topic");
    config.attach(sub);
    sub->add_option("--corpus", corpus, "corpus JSON lines")->required();
    sub->add_option("--out", out, "clusters JSON output")->required();
    sub->add_option("--topics", topics, "gold, auto, or a doc-cluster output file");
    sub->add_option("--k", k, "number of topics for --topics auto, or 'auto'");
    sub->callback([this] { run(); });
  }

  void run() {
    RunConfig cfg = config.resolve();
    if (k) cfg.set("k", *k);
    const Corpus c = read_corpus(corpus, false, std::cerr);
    const std::vector<Topic> ts = resolve_topics(topics, c, cfg);
    std::vector<Configuration> configs;
    for (const Topic& t : ts) {
      configs.push_back({t.topic_id, lemma_baseline(c, t, MentionKind::entity),
                         lemma_baseline(c, t, MentionKind::event)});
    }
    json j = envelope("baseline", cfg);
    j["clusters"] = clusters_json(ts, configs);
    write_json(j, out);
  }
};

struct ScoreCmd {
  std::string gold, pred, kind = "both", out, compare;
  int resamples = 10000;
  std::uint64_t seed = 0;
  std::ostream* stdout_ = nullptr;

  void attach(CLI::App& app, std::ostream& o) {
    stdout_ = &o;
    auto* sub = app.add_subcommand("score", "MUC, B3, CEAF-e and CoNLL F1 against gold clusters");
    sub->add_option("--gold", gold, "gold corpus JSON lines")->required();
    sub->add_option("--pred", pred, "clusters JSON")->required();
    sub->add_option("--kind", kind, "entity, event or both")
        ->check(CLI::IsMember({"entity", "event", "both"}));
    sub->add_option("--out", out, "JSON report output (default: stdout)");
    sub->add_option("--compare", compare, "second clusters JSON for significance tests");
    sub->add_option("--resamples", resamples, "bootstrap / permutation resamples");
    sub->add_option("--seed", seed, "resampling seed");
    sub->callback([this] { run(); });
  }

  void run() {
    const Corpus c = read_corpus(gold, false, std::cerr);
    const json pj = read_json(pred);
    json cj;
    if (!compare.empty()) cj = read_json(compare);
    json report = {{"gold", gold}, {"pred", pred}};
    std::string table = format_report_header();
    for (MentionKind k : kinds_of(kind)) {
      const Partition g = gold_partition(c, k);
      const Partition p = read_predicted(pj, pred, k);
      const EvalReport r = evaluate(p, g);
      json entry = report_json(r);
      table += format_report(std::string(to_string(k)), r);
      if (!compare.empty()) {
        const Partition q = read_predicted(cj, compare, k);
        std::vector<std::vector<std::string>> per_topic;
        for (const Topic& t : gold_topics(c)) per_topic.push_back(topic_mentions(c, t, k));
        const SignificanceResult s = significance(p, q, g, per_topic, resamples, seed);
        table += format_report(std::string(to_string(k)) + " (compare)", evaluate(q, g));
        entry["significance"] = {{"observed_delta", s.observed_delta},
                                 {"bootstrap_p", s.bootstrap_p},
                                 {"permutation_p", s.permutation_p}};
      }
      report[std::string(to_string(k))] = std::move(entry);
    }
    if (out.empty()) {
      *stdout_ << report.dump(2) << "\n\n";
    } else {
      write_json(report, out);
    }
    *stdout_ << table;
  }
};

struct ExportVectorsCmd {
  ConfigArgs config;
  std::string corpus, out, from, format = "binary";

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand(
        "export-vectors", "write contextual vectors for every token of mention-bearing sentences");
    config.attach(sub);
    sub->add_option("--corpus", corpus, "corpus JSON lines")->required();
    sub->add_option("--out", out, "output vector file")->required();
    sub->add_option("--from", from, "source vector file (default: hash fallback)");
    sub->add_option("--format", format, "binary or jsonl")->check(CLI::IsMember({"binary", "jsonl"}));
    sub->callback([this] { run(); });
  }

  void run() {
    RunConfig cfg = config.resolve();
    const Corpus c = read_corpus(corpus, false, std::cerr);
    const ContextVectorStore source = from.empty()
                                          ? ContextVectorStore::hash_fallback(cfg.ctx_dim, cfg.context_seed)
                                          : load_context_vectors(from);
    ContextVectorStore store(source.dim());
    for (const Document& d : c.documents()) {
      std::set<int> sentences;
      for (const Mention& m : d.mentions) sentences.insert(m.sent_idx);
      for (int s : sentences) {
        for (std::size_t t = 0; t < d.sentences[s].size(); ++t) {
          const TokenKey key{d.doc_id, s, static_cast<int>(t)};
          store.insert(key, source.lookup(key));
        }
      }
    }
    if (format == "jsonl") {
      save_context_vectors_jsonl(store, out);
    } else {
      save_context_vectors_binary(store, out);
    }
  }
};

struct SynthCmd {
  SyntheticSpec spec;
  std::string out_dir;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("synth", "write a synthetic corpus, word vectors and a small config");
    sub->add_option("--out-dir", out_dir, "output directory")->required();
    sub->add_option("--seed", spec.seed, "generator seed");
    sub->add_option("--topics", spec.topics, "number of topics");
    sub->add_option("--docs-per-topic", spec.docs_per_topic, "documents per topic");
    sub->add_option("--event-chains", spec.event_chains, "gold event chains per topic");
    sub->add_option("--word-dim", spec.word_dim, "word vector dimension");
    sub->callback([this] { run(); });
  }

  void run() {
    std::filesystem::create_directories(out_dir);
    const SyntheticData data = generate_synthetic(spec);
    const std::filesystem::path dir(out_dir);
    save_corpus(data.corpus, (dir / "corpus.jsonl").string());
    save_static_vectors(data.words, (dir / "words.txt").string());
    RunConfig cfg;
    cfg.word_dim = spec.word_dim;
    cfg.char_dim = 16;
    cfg.char_hidden = 16;
    cfg.ctx_dim = 8;
    cfg.hidden = 32;
    cfg.feature_dim = 8;
    cfg.epochs = 10;
    cfg.k = 0;
    cfg.seed = 11;
    cfg.context_seed = 3;
    cfg.static_vectors = (dir / "words.txt").string();
    std::ofstream cfg_out(dir / "config.txt");
    if (!cfg_out) throw IoError("cannot write '" + (dir / "config.txt").string() + "'");
    cfg_out << "# small dimensions for the synthetic corpus\n" << cfg.to_text();
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Joint cross-document entity and event coreference", "xcoref");
  app.require_subcommand(1);
  DocClusterCmd doc_cluster;
  TrainCmd train_cmd;
  InferCmd infer_cmd;
  BaselineCmd baseline;
  ScoreCmd score;
  ExportVectorsCmd export_vectors;
  SynthCmd synth;
  doc_cluster.attach(app);
  train_cmd.attach(app);
  infer_cmd.attach(app);
  baseline.attach(app);
  score.attach(app, out);
  export_vectors.attach(app);
  synth.attach(app);

  std::vector<std::string> argv_storage = {"xcoref"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const InvariantError& e) {
    err << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

int run(int argc, char** argv) {
  return run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}

}  // namespace xcoref::cli
