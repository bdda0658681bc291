#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evonet/cli.hpp"
#include "evonet/errors.hpp"
#include "evonet/experiment.hpp"

using namespace evonet;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "evonet");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "evonet-cli";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const fs::path& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

fs::path small_config() {
  const auto path = scratch("small.json");
  std::ofstream(path) << R"({"mode": "classification",
    "stream": {"kind": "sea", "thresholds": [8, 9], "samples_per_concept": 2000, "batch_size": 500}})";
  return path;
}

}  // namespace

TEST_SUITE("experiment.config") {
  TEST_CASE("defaults") {
    const auto cfg = parse_experiment("{}");
    CHECK(cfg.learner.mode == Mode::classification);
    CHECK(std::holds_alternative<SeaConfig>(cfg.stream));
    CHECK(cfg.learner.alpha_drift == 1e-4);
    CHECK(cfg.learner.alpha_warning == 5e-4);
    CHECK(cfg.learner.delta == 0.55);
    CHECK(std::holds_alternative<RegressionStreamConfig>(parse_experiment(R"({"mode":"regression"})").stream));
  }

  TEST_CASE("seed reaches generator and learner") {
    const auto cfg = parse_experiment(R"({"seed": 42})");
    CHECK(cfg.learner.seed == 42);
    CHECK(std::get<SeaConfig>(cfg.stream).seed == 42);
  }

  TEST_CASE("switches and overrides") {
    const auto cfg = parse_experiment(
        R"({"disable": ["node_pruning"], "alpha_drift": 0.001, "alpha_warning": 0.01, "memory_cap": 50})");
    CHECK(cfg.learner.ablation.disable_node_pruning);
    CHECK_FALSE(cfg.learner.ablation.disable_layer_growing);
    CHECK(cfg.learner.alpha_drift == 0.001);
    CHECK(cfg.learner.memory_cap == 50);
  }

  TEST_CASE("invalid configs") {
    CHECK_THROWS_AS(parse_experiment("[1]"), ParameterError);
    CHECK_THROWS_AS(parse_experiment("{"), ParameterError);
    CHECK_THROWS_AS(parse_experiment(R"({"alpa_drift": 0.1})"), ParameterError);
    CHECK_THROWS_AS(parse_experiment(R"({"alpha_drift": 0.01, "alpha_warning": 0.001})"), ParameterError);
    CHECK_THROWS_AS(parse_experiment(R"({"delta": 0})"), ParameterError);
    CHECK_THROWS_AS(parse_experiment(R"({"spc_warmup": 3})"), ParameterError);
    CHECK_THROWS_AS(parse_experiment(R"({"mode": "regression", "stream": {"kind": "sea"}})"), ParameterError);
    CHECK_THROWS_AS(parse_experiment(R"({"stream": {"kind": "mnist"}})"), ParameterError);
    CHECK_THROWS_AS(parse_experiment(R"({"seed": "seven"})"), ParameterError);
  }

  TEST_CASE("relative csv paths resolve against the config directory") {
    const auto cfg = parse_experiment(R"({"stream": {"kind": "csv", "path": "data.csv", "targets": ["y"]}})", "/tmp/x");
    CHECK(std::get<CsvStreamConfig>(cfg.stream).path == fs::path("/tmp/x/data.csv"));
  }

  TEST_CASE("feature normalisation is fitted on the first batch") {
    auto cfg = parse_experiment(R"({"stream": {"kind": "sea", "samples_per_concept": 3000, "batch_size": 1000}})");
    const auto batches = build_stream(cfg);
    CHECK(batches[0].X.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    CHECK(batches[1].X.colwise().mean().cwiseAbs().maxCoeff() > 1e-6);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("run writes one record per batch plus a summary") {
    const auto out = scratch("run.jsonl");
    const auto r = cli({"run", "--config", small_config().string(), "--out", out.string()});
    REQUIRE(r.code == 0);
    CHECK(line_count(out) == 9);
    CHECK(r.out.find("accuracy") != std::string::npos);
    std::ifstream in(out);
    std::string last;
    for (std::string line; std::getline(in, line);) last = line;
    CHECK(nlohmann::json::parse(last)["summary"] == true);
  }

  TEST_CASE("same seed twice gives identical files") {
    const auto a = scratch("a.jsonl"), b = scratch("b.jsonl");
    REQUIRE(cli({"run", "--config", small_config().string(), "--seed", "7", "--out", a.string()}).code == 0);
    REQUIRE(cli({"run", "--config", small_config().string(), "--seed", "7", "--out", b.string()}).code == 0);
    CHECK(slurp(a) == slurp(b));
    const auto c = scratch("c.jsonl");
    REQUIRE(cli({"run", "--config", small_config().string(), "--seed", "8", "--out", c.string()}).code == 0);
    CHECK(slurp(a) != slurp(c));
  }

  TEST_CASE("overrides apply") {
    const auto out = scratch("ovr.jsonl");
    const auto r = cli({"run", "--config", small_config().string(), "--disable", "layer_growing", "--alpha-drift",
                        "0.3", "--alpha-warning", "0.4", "--delta", "0.6", "--out", out.string()});
    REQUIRE(r.code == 0);
    std::ifstream in(out);
    for (std::string line; std::getline(in, line);) {
      const auto j = nlohmann::json::parse(line);
      if (!j.contains("summary")) CHECK(j["layers"] == 1);
    }
  }

  TEST_CASE("error paths") {
    CHECK(cli({"run", "--config", scratch("missing.json").string()}).code == 2);
    CHECK(cli({"run", "--config", small_config().string(), "--mode", "ranking"}).code == 2);
    CHECK(cli({"run", "--config", small_config().string(), "--disable", "dropout"}).code == 2);
    const auto bad = cli({"generate", "mnist", "--out", scratch("x.csv").string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("Usage") != std::string::npos);
    CHECK(cli({}).code == 2);
    CHECK(cli({"generate", "sea", "--out", "/nonexistent-dir/x.csv"}).code == 2);
  }

  TEST_CASE("help exits cleanly") {
    const auto r = cli({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("generate") != std::string::npos);
  }

  TEST_CASE("generate sea writes header plus every row") {
    const auto out = scratch("sea.csv");
    REQUIRE(cli({"generate", "sea", "--out", out.string()}).code == 0);
    CHECK(line_count(out) == 200001);
    CHECK(fs::exists(out.string() + ".meta.json"));
  }

  TEST_CASE("generate regression records its concept boundaries") {
    const auto out = scratch("reg.csv");
    REQUIRE(cli({"generate", "regression", "--concepts", "3", "--out", out.string()}).code == 0);
    std::ifstream in(out.string() + ".meta.json");
    const auto meta = nlohmann::json::parse(in);
    CHECK(meta["concepts"].size() == 3);
    CHECK(meta["drift_points"] == nlohmann::json::array({10000, 20000}));
    CHECK(line_count(out) == 30001);
  }

  TEST_CASE("ablate prints the full row first") {
    const auto table = scratch("ablate.txt");
    const auto r = cli({"ablate", "--config", small_config().string(), "--seeds", "1,2", "--disable",
                        "node_pruning,soft_forgetting", "--threads", "1", "--out", table.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("full") < r.out.find("without node_pruning"));
    CHECK(r.out.find("without node_pruning") < r.out.find("without soft_forgetting"));
    CHECK(slurp(table) == r.out);
  }
}
