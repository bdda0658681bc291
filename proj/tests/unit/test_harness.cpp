#include <doctest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "evonet/errors.hpp"
#include "evonet/experiment.hpp"
#include "evonet/harness.hpp"
#include "evonet/streams.hpp"

using namespace evonet;

namespace {

std::vector<StreamBatch> sea(std::vector<double> thetas, std::size_t per_concept, std::size_t batch,
                             std::uint64_t seed, double noise = 0.1) {
  auto batches = generate_sea(SeaConfig{std::move(thetas), per_concept, noise, batch, seed});
  normalize_batches(batches, Normalization::zscore);
  return batches;
}

/// Linearly separable stream whose labels are inverted from batch `flip` on.
std::vector<StreamBatch> flipped(std::size_t batches, std::size_t flip, std::uint64_t seed) {
  auto out = sea({8.0}, batches * 500, 500, seed, 0.0);
  for (std::size_t k = flip; k < out.size(); ++k) out[k].Y.rowwise().reverseInPlace();
  return out;
}

}  // namespace

TEST_SUITE("harness.learner") {
  TEST_CASE("cold start keeps a single layer") {
    Learner learner(3, 2, LearnerConfig{});
    const auto m = learner.process_batch(sea({8.0}, 1000, 1000, 1)[0]);
    CHECK(m.layers == 1);
    CHECK(m.accuracy >= 0.0);
    CHECK(m.accuracy <= 1.0);
    CHECK(learner.detector().config().min_window == 1000);
  }

  TEST_CASE("metrics are computed before training on the batch") {
    const auto stream = sea({8.0, 9.0}, 5000, 500, 3);
    Learner learner(3, 2, LearnerConfig{});
    for (const auto& batch : stream) {
      const EvolvingNetwork before = learner.network();
      const auto trace = before.forward(batch.X);
      std::size_t hits = 0;
      for (Eigen::Index r = 0; r < batch.X.rows(); ++r) {
        Eigen::Index p = 0, t = 0;
        trace.output.row(r).maxCoeff(&p);
        batch.Y.row(r).maxCoeff(&t);
        hits += p == t;
      }
      const auto m = learner.process_batch(batch);
      REQUIRE(m.accuracy == static_cast<double>(hits) / static_cast<double>(batch.rows()));
    }
  }

  TEST_CASE("reported topology matches the live network") {
    const auto stream = sea({8.0, 9.0, 7.0}, 10000, 500, 5);
    Learner learner(3, 2, LearnerConfig{});
    for (const auto& batch : stream) {
      const auto m = learner.process_batch(batch);
      REQUIRE(m.layers == learner.network().depth());
      REQUIRE(m.nodes == learner.network().widths());
      REQUIRE(m.params == learner.network().parameter_count());
    }
  }

  TEST_CASE("events replay to the reported topology") {
    const auto result = run_prequential(sea({8.0, 9.0, 7.0, 9.5}, 20000, 1000, 2), LearnerConfig{});
    std::vector<std::size_t> widths{1};
    for (const auto& m : result.batches) {
      for (const auto& e : m.events) {
        switch (e.kind) {
          case EventKind::grow: ++widths.back(); break;
          case EventKind::prune: --widths.back(); break;
          case EventKind::layer: widths.push_back(1); break;
        }
        REQUIRE(e.layer == widths.size() - 1);
      }
      REQUIRE(widths == m.nodes);
    }
  }

  TEST_CASE("stationary separable stream needs no new layer") {
    const auto stream = sea({8.0}, 50 * 500, 500, 7, 0.0);
    const auto result = run_prequential(stream, LearnerConfig{});
    for (const auto& m : result.batches) CHECK(m.layers == 1);
    // Least-squares slope of accuracy over the first ten batches.
    double sx = 0, sy = 0, sxy = 0, sxx = 0;
    for (int k = 0; k < 10; ++k) {
      const double a = result.batches[static_cast<std::size_t>(k)].accuracy;
      sx += k, sy += a, sxy += k * a, sxx += k * k;
    }
    CHECK((10 * sxy - sx * sy) / (10 * sxx - sx * sx) >= 0.0);
    CHECK(result.batches[9].accuracy >= result.batches[0].accuracy);
  }

  TEST_CASE("label flip deepens the network") {
    int reacted = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto result = run_prequential(flipped(120, 100, seed), LearnerConfig{.seed = seed});
      const std::size_t before = result.batches[99].layers;
      bool deeper = false;
      for (std::size_t k = 100; k < 120; ++k) deeper |= result.batches[k].layers > before;
      reacted += deeper;
    }
    CHECK(reacted >= 8);
  }

  TEST_CASE("disabled layer growing keeps one layer") {
    LearnerConfig cfg;
    cfg.ablation.disable_layer_growing = true;
    const auto result = run_prequential(flipped(60, 30, 4), cfg);
    for (const auto& m : result.batches) CHECK(m.layers == 1);
  }

  TEST_CASE("disabled pruning never prunes, disabled memory stores nothing") {
    LearnerConfig cfg;
    cfg.ablation.disable_node_pruning = true;
    cfg.ablation.disable_adaptive_memory = true;
    const auto result = run_prequential(sea({8.0, 9.0, 7.0}, 10000, 500, 6), cfg);
    CHECK(result.summary.prune_events == 0);
    for (const auto& m : result.batches) CHECK(m.memory_size == 0);
  }

  TEST_CASE("mismatched batch") {
    Learner learner(3, 2, LearnerConfig{});
    StreamBatch bad;
    bad.X = Matrix::Zero(4, 2);
    bad.Y = Matrix::Zero(4, 2);
    CHECK_THROWS_AS(learner.process_batch(bad), ShapeError);
  }

  TEST_CASE("bad learner config") {
    CHECK_THROWS_AS(Learner(3, 2, LearnerConfig{.alpha_drift = 0.1, .alpha_warning = 0.01}), ParameterError);
    CHECK_THROWS_AS(Learner(3, 2, LearnerConfig{.base_rate = -1.0}), ParameterError);
  }

  TEST_CASE("regression learner reports rmse and ndei") {
    RegressionStreamConfig cfg;
    cfg.samples_per_concept = 3000;
    auto stream = generate_drifting_regression(cfg);
    normalize_targets(stream, Normalization::minmax);
    const auto result = run_prequential(stream, LearnerConfig{.mode = Mode::regression});
    for (const auto& m : result.batches) {
      CHECK(m.rmse >= 0.0);
      CHECK(m.ndei >= 0.0);
    }
    CHECK(result.summary.mode == Mode::regression);
  }
}

TEST_SUITE("harness.prequential") {
  TEST_CASE("single batch summary has zero spread") {
    const auto result = run_prequential(sea({8.0}, 1000, 1000, 1), LearnerConfig{});
    CHECK(result.summary.batches == 1);
    CHECK(result.summary.accuracy_mean == result.batches[0].accuracy);
    CHECK(result.summary.accuracy_std == 0.0);
  }

  TEST_CASE("same seed, same metric file") {
    const auto stream = sea({8.0, 9.0}, 10000, 500, 9);
    std::ostringstream a, b;
    write_metrics(a, run_prequential(stream, LearnerConfig{.seed = 3}), false);
    write_metrics(b, run_prequential(stream, LearnerConfig{.seed = 3}), false);
    CHECK(a.str() == b.str());
  }

  TEST_CASE("metric lines parse and end with the summary") {
    const auto result = run_prequential(sea({8.0}, 3000, 1000, 1), LearnerConfig{});
    std::ostringstream out;
    write_metrics(out, result, true);
    std::istringstream in(out.str());
    std::string line;
    std::vector<nlohmann::json> records;
    while (std::getline(in, line)) records.push_back(nlohmann::json::parse(line));
    REQUIRE(records.size() == 4);
    CHECK(records[0].contains("wall_time"));
    CHECK(records[0]["drift_state"] == "stable");
    CHECK(records[3]["summary"] == true);
    CHECK(records[3]["batches"] == 3);
    CHECK_FALSE(nlohmann::json::parse(metrics_record(result.batches[0], false)).contains("wall_time"));
  }

  TEST_CASE("empty stream is rejected") {
    CHECK_THROWS_AS(run_prequential({}, LearnerConfig{}), ParameterError);
  }

  TEST_CASE("summary std is the population std") {
    std::vector<BatchMetrics> ms(2);
    ms[0].accuracy = 0.6;
    ms[1].accuracy = 0.8;
    const auto s = summarize(ms, 0.0);
    CHECK(s.accuracy_mean == doctest::Approx(0.7));
    CHECK(s.accuracy_std == doctest::Approx(0.1));
  }
}

TEST_SUITE("harness.ablation") {
  TEST_CASE("switch names round trip") {
    const auto all = parse_ablation("layer_growing,disable_node_pruning, adaptive_memory,soft_forgetting");
    CHECK(all.disable_layer_growing);
    CHECK(all.disable_node_pruning);
    CHECK(all.disable_adaptive_memory);
    CHECK(all.disable_soft_forgetting);
    CHECK(ablation_names(all).size() == 4);
    CHECK(single_switches(all).size() == 4);
    CHECK_THROWS_AS(parse_ablation("dropout"), ParameterError);
  }

  TEST_CASE("four switches over three seeds run fifteen learners") {
    ExperimentConfig base;
    base.stream = SeaConfig{{8.0, 9.0}, 2000, 0.1, 500, 1};
    const auto rows = run_ablation(base, single_switches(parse_ablation("layer_growing,node_pruning,adaptive_memory,soft_forgetting")),
                                   {1, 2, 3}, 2);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].name == "full");
    std::size_t runs = 0;
    for (const auto& r : rows) runs += r.runs.size();
    CHECK(runs == 15);
    CHECK(rows[1].name == "without layer_growing");
    const std::string table = format_ablation_table(rows, Mode::classification, false);
    CHECK(table.find("full") < table.find("without"));
  }

  TEST_CASE("results do not depend on the thread count") {
    ExperimentConfig base;
    base.stream = SeaConfig{{8.0, 9.0}, 2000, 0.1, 500, 1};
    const auto sw = single_switches(parse_ablation("node_pruning"));
    const auto a = run_ablation(base, sw, {4, 5}, 1);
    const auto b = run_ablation(base, sw, {4, 5}, 3);
    for (std::size_t r = 0; r < a.size(); ++r)
      for (std::size_t s = 0; s < 2; ++s) CHECK(a[r].runs[s].accuracy_mean == b[r].runs[s].accuracy_mean);
  }
}
