#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "support.hpp"
#include "xcoref/cli.hpp"
#include "xcoref/config.hpp"
#include "xcoref/error.hpp"
#include "xcoref/metrics.hpp"

using namespace xcoref;
using namespace xcoref::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("xcoref_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

json without_metadata(json j) {
  j.erase("metadata");
  return j;
}

// Gold clusters of a corpus in the clusters.json shape.
json gold_clusters_json(const Corpus& c) {
  json clusters = json::object();
  for (const Mention* m : c.all_mentions()) {
    clusters[m->mention_id] = {{"kind", std::string(to_string(m->kind))},
                               {"cluster", std::string(to_string(m->kind)) + "/" + *m->gold_cluster_id}};
  }
  return {{"clusters", clusters}};
}

}  // namespace

TEST_CASE("config: defaults, parsing, round trip and errors") {
  const RunConfig d;
  CHECK(d.hidden == 4261);
  CHECK(d.feature_dim == 50);
  CHECK(d.scorer_shape().layout.full_dim() == 1024 + 5 * (300 + 50));

  const RunConfig c = parse_config("# comment\nhidden = 32\n\n joint=false \nk = auto\nlearning_rate = 0.01\n");
  CHECK(c.hidden == 32);
  CHECK_FALSE(c.joint);
  CHECK_FALSE(c.scorer_shape().layout.use_dep);
  CHECK_FALSE(c.scorer_shape().use_pair_features);
  CHECK(c.k <= 0);
  CHECK(c.learning_rate == 0.01);
  CHECK(parse_config(c.to_text()).to_text() == c.to_text());

  try {
    parse_config("hidden = 3\nnot_a_key = 1\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("hidden = many"), ParseError);
  CHECK_THROWS_AS(parse_config("hidden"), ParseError);
  CHECK_THROWS_AS(load_config("/nonexistent/xcoref.cfg"), IoError);
}

TEST_CASE("usage and IO errors map to exit codes") {
  CHECK(run_cli({}).code == cli::kUsage);
  CHECK(run_cli({"train", "--bogus"}).code == cli::kUsage);
  CHECK(run_cli({"score", "--kind", "both"}).code == cli::kUsage);

  const fs::path dir = scratch_dir("errors");
  const Run missing = run_cli({"doc-cluster", "--corpus", "/nonexistent/c.jsonl", "--out", (dir / "t.json").string()});
  CHECK(missing.code == cli::kIo);
  CHECK(missing.err.find("/nonexistent/c.jsonl") != std::string::npos);

  const fs::path bad = dir / "bad.jsonl";
  std::ofstream(bad) << "{\"doc_id\": \"d\"}\n{oops\n";
  const Run parse = run_cli({"doc-cluster", "--corpus", bad.string(), "--out", (dir / "t.json").string()});
  CHECK(parse.code == cli::kParse);
  CHECK(parse.err.find("line 2") != std::string::npos);

  const Run cfg = run_cli({"doc-cluster", "--corpus", bad.string(), "--out", (dir / "t.json").string(),
                           "--config", "/nonexistent/x.cfg"});
  CHECK(cfg.code == cli::kIo);
  const Run set = run_cli({"doc-cluster", "--corpus", bad.string(), "--out", (dir / "t.json").string(),
                           "--set", "nope=1"});
  CHECK(set.code == cli::kParse);
}

TEST_CASE("scoring the gold clusters gives perfect scores") {
  const fs::path dir = scratch_dir("score");
  REQUIRE(run_cli({"synth", "--out-dir", dir.string(), "--topics", "2", "--word-dim", "8"}).code == 0);
  const Corpus c = load_corpus((dir / "corpus.jsonl").string());
  std::ofstream(dir / "gold.json") << gold_clusters_json(c).dump();
  const Run r = run_cli({"score", "--gold", (dir / "corpus.jsonl").string(), "--pred", (dir / "gold.json").string(),
                         "--out", (dir / "score.json").string()});
  REQUIRE(r.code == 0);
  const json s = read_json(dir / "score.json");
  for (const char* kind : {"entity", "event"}) {
    for (const char* metric : {"muc", "b_cubed", "ceaf_e"}) {
      CHECK(s[kind][metric]["f1"].get<double>() == doctest::Approx(1.0));
    }
    CHECK(s[kind]["conll_f1"].get<double>() == doctest::Approx(1.0));
  }
  CHECK(r.out.find("CoNLL") != std::string::npos);
}

TEST_CASE("end to end: synth, doc-cluster, train, infer, baseline, score") {
  const fs::path dir = scratch_dir("e2e");
  const auto p = [&](const char* name) { return (dir / name).string(); };
  REQUIRE(run_cli({"synth", "--out-dir", dir.string(), "--topics", "3", "--event-chains", "4"}).code == 0);
  const std::vector<std::string> small = {"--config", p("config.txt"), "--set", "epochs=3"};
  const auto with = [&](std::vector<std::string> args) {
    args.insert(args.end(), small.begin(), small.end());
    return args;
  };

  const Run dc = run_cli(with({"doc-cluster", "--corpus", p("corpus.jsonl"), "--out", p("topics.json")}));
  REQUIRE(dc.code == 0);
  const json topics = read_json(dir / "topics.json");
  CHECK(topics["quality"]["v_measure"].get<double>() == doctest::Approx(1.0));
  CHECK(topics["metadata"]["command"] == "doc-cluster");

  REQUIRE(run_cli(with({"train", "--corpus", p("corpus.jsonl"), "--out", p("model.bin"), "--topics", "gold"})).code == 0);
  const auto run_infer = [&](const char* out) {
    return run_cli({"infer", "--corpus", p("corpus.jsonl"), "--model", p("model.bin"), "--out", p(out),
                    "--topics", p("topics.json")});
  };
  REQUIRE(run_infer("clusters.json").code == 0);
  REQUIRE(run_infer("clusters2.json").code == 0);
  const json a = read_json(dir / "clusters.json"), b = read_json(dir / "clusters2.json");
  CHECK(without_metadata(a) == without_metadata(b));
  CHECK(a["config"].get<std::string>().find("epochs = 3") != std::string::npos);

  // Every mention of the corpus gets exactly one cluster.
  const Corpus c = load_corpus(p("corpus.jsonl"));
  CHECK(a["clusters"].size() == c.all_mentions().size());

  REQUIRE(run_cli(with({"baseline", "--corpus", p("corpus.jsonl"), "--out", p("lemma.json"), "--topics", "gold"})).code == 0);
  const Run s = run_cli({"score", "--gold", p("corpus.jsonl"), "--pred", p("clusters.json"), "--compare",
                         p("lemma.json"), "--resamples", "200", "--out", p("score.json")});
  REQUIRE(s.code == 0);
  const json score = read_json(dir / "score.json");

  // The same steps composed through the library give the same numbers.
  RunConfig cfg = load_config(p("config.txt"));
  cfg.epochs = 3;
  const Corpus aug = augment_links(c);
  const StaticVectorStore words = load_static_vectors(cfg.static_vectors, cfg.word_dim);
  const ContextVectorStore contexts = ContextVectorStore::hash_fallback(cfg.ctx_dim, cfg.context_seed);
  const EngineContext ctx(aug, words, contexts);
  TrainOptions o;
  o.merge = cfg.merge_params();
  o.shape = cfg.scorer_shape();
  o.epochs = cfg.epochs;
  o.seed = cfg.seed;
  const JointModel m = train(ctx, gold_topics(aug), o);
  std::map<std::string, int> assignment;
  for (const auto& [doc, idx] : topics["topics"].items()) assignment[doc] = idx.get<int>();
  const std::vector<TopicResult> res = infer(ctx, topics_from_assignment(aug, assignment),
                                             NeuralSideScorer(m.entity), NeuralSideScorer(m.event), InferOptions{});
  for (MentionKind kind : {MentionKind::entity, MentionKind::event}) {
    Partition pred;
    for (const TopicResult& r : res) pred.insert(pred.end(), r.config.side(kind).begin(), r.config.side(kind).end());
    const std::string k(to_string(kind));
    CHECK(score[k]["conll_f1"].get<double>() ==
          doctest::Approx(evaluate(pred, gold_partition(aug, kind)).conll_f1).epsilon(1e-12));
    CHECK(score[k]["significance"]["bootstrap_p"].get<double>() >= 0.0);
  }
}

TEST_CASE("export-vectors writes a loadable store covering the corpus") {
  const fs::path dir = scratch_dir("export");
  REQUIRE(run_cli({"synth", "--out-dir", dir.string(), "--topics", "1"}).code == 0);
  for (const char* format : {"binary", "jsonl"}) {
    const std::string out = (dir / (std::string("ctx.") + format)).string();
    REQUIRE(run_cli({"export-vectors", "--corpus", (dir / "corpus.jsonl").string(), "--out", out, "--format",
                     format, "--set", "ctx_dim=6"})
                .code == 0);
    const ContextVectorStore s = load_context_vectors(out);
    CHECK(s.dim() == 6);
    CHECK_NOTHROW(s.validate(load_corpus((dir / "corpus.jsonl").string())));
  }
}
