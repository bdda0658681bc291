#include <doctest.h>

#include <cmath>
#include <random>

#include "evonet/drift.hpp"
#include "evonet/errors.hpp"

using namespace evonet;

namespace {

DriftDetector detector(std::size_t window, Mode mode = Mode::classification) {
  return DriftDetector(mode, DriftConfig{1e-4, 5e-4, window});
}

std::vector<double> bernoulli(std::size_t n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution flip(p);
  std::vector<double> out(n);
  for (auto& v : out) v = flip(rng) ? 1.0 : 0.0;
  return out;
}

}  // namespace

TEST_SUITE("drift.bound") {
  TEST_CASE("closed form") {
    CHECK(hoeffding_bound(200, 1e-4, 1.0) == doctest::Approx(std::sqrt(std::log(1e4) / 400.0)).epsilon(1e-14));
    CHECK(hoeffding_bound(200, 1e-4, 1.0) == doctest::Approx(0.15174).epsilon(1e-4));
    CHECK(hoeffding_bound(10, 1.0 - 1e-12, 1.0) < 1e-6);
  }

  TEST_CASE("strictly decreasing in count and alpha") {
    for (double cut = 1; cut < 1e5; cut *= 2) CHECK(hoeffding_bound(2 * cut, 0.01, 1.0) < hoeffding_bound(cut, 0.01, 1.0));
    double prev = hoeffding_bound(50, 1e-6, 2.0);
    for (double a = 1e-5; a < 0.99; a *= 3) {
      const double e = hoeffding_bound(50, a, 2.0);
      CHECK(e < prev);
      prev = e;
    }
    CHECK(hoeffding_bound(50, 1e-4, 1.0) > hoeffding_bound(50, 5e-4, 1.0));
  }

  TEST_CASE("invalid arguments") {
    CHECK_THROWS_AS(hoeffding_bound(10, 0.0, 1.0), ParameterError);
    CHECK_THROWS_AS(hoeffding_bound(10, 1.0, 1.0), ParameterError);
    CHECK_THROWS_AS(hoeffding_bound(0.5, 0.1, 1.0), ParameterError);
    CHECK_THROWS_AS(DriftDetector(Mode::classification, DriftConfig{5e-4, 1e-4, 10}), ParameterError);
  }
}

TEST_SUITE("drift.record") {
  TEST_CASE("prefix and suffix means") {
    ErrorRecord r;
    for (double v : {1.0, 0.0, 1.0, 1.0}) r.append(v);
    CHECK(r.prefix_mean(2) == 0.5);
    CHECK(r.suffix_mean(2) == 1.0);
    CHECK(r.mean() == 0.75);
    CHECK(r.range() == 1.0);
  }

  TEST_CASE("regression range follows observed values") {
    ErrorRecord r(Mode::regression);
    r.append(0.5);
    CHECK(r.range() == doctest::Approx(1e-12));
    r.append(2.0);
    r.append(1.0);
    CHECK(r.range() == 1.5);
  }
}

TEST_SUITE("drift.switching") {
  TEST_CASE("all-zero record has no switching point") {
    auto d = detector(50);
    d.evaluate(std::vector<double>(400, 0.0));
    CHECK_FALSE(d.find_switching_point().has_value());
  }

  TEST_CASE("step record is cut near the step") {
    std::vector<double> v(200, 0.0);
    v.insert(v.end(), 200, 1.0);
    ErrorRecord record;
    for (double x : v) record.append(x);
    const auto cut = switching_point(record, 100, 1e-4);
    REQUIRE(cut.has_value());
    // Exhaustive oracle: the minimiser of prefix mean + radius over the scan range.
    std::size_t best = 0;
    double best_val = 1e9;
    double sum = 0.0;
    for (std::size_t c = 1; c <= 300; ++c) {
      sum += v[c - 1];
      if (c < 100) continue;
      const double val = sum / c + std::sqrt(std::log(1e4) / (2.0 * c));
      if (val <= best_val) {
        best_val = val;
        best = c;
      }
    }
    CHECK(*cut == best);
    CHECK(std::abs(static_cast<long>(*cut) - 200) <= 40);
  }

  TEST_CASE("short record is never scanned") {
    auto d = detector(100);
    std::vector<double> v(50, 0.0);
    v.insert(v.end(), 100, 1.0);
    CHECK(d.evaluate(v) == DriftState::stable);
    CHECK_FALSE(d.find_switching_point().has_value());
  }
}

TEST_SUITE("drift.evaluate") {
  TEST_CASE("abrupt rise is drift and clears the record") {
    auto d = detector(100);
    std::mt19937_64 rng(1);
    d.evaluate(bernoulli(500, 0.1, rng));
    DriftState s = DriftState::stable;
    for (int k = 0; k < 5 && s != DriftState::drift; ++k) s = d.evaluate(bernoulli(100, 0.5, rng));
    CHECK(s == DriftState::drift);
    CHECK(d.record().empty());
    CHECK(d.state() == DriftState::stable);
  }

  TEST_CASE("improvement is never drift") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto d = detector(100);
      std::mt19937_64 rng(seed);
      d.evaluate(bernoulli(500, 0.5, rng));
      for (int k = 0; k < 10; ++k) CHECK(d.evaluate(bernoulli(100, 0.1, rng)) != DriftState::drift);
    }
  }

  TEST_CASE("regression errors use the observed range") {
    auto d = detector(100, Mode::regression);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> small(0.1, 0.02), large(0.6, 0.05);
    std::vector<double> v(400);
    for (auto& x : v) x = std::abs(small(rng));
    d.evaluate(v);
    DriftState s = DriftState::stable;
    for (int k = 0; k < 5 && s != DriftState::drift; ++k) {
      std::vector<double> w(100);
      for (auto& x : w) x = std::abs(large(rng));
      s = d.evaluate(w);
    }
    CHECK(s == DriftState::drift);
  }
}

TEST_SUITE("drift.warning") {
  StreamBatch batch(std::size_t index) {
    StreamBatch b;
    b.X = Matrix::Constant(2, 1, static_cast<double>(index));
    b.Y = Matrix::Ones(2, 1);
    b.index = index;
    return b;
  }

  /// Feeds entries until the detector reports `wanted`; returns whether it did.
  bool drive_to(DriftDetector& d, DriftState wanted, double rate, std::mt19937_64& rng) {
    for (int k = 0; k < 200; ++k)
      if (d.evaluate(bernoulli(20, rate, rng)) == wanted) return true;
    return false;
  }

  TEST_CASE("buffer only accepts batches during a warning") {
    auto d = detector(20);
    CHECK_THROWS_AS(d.accumulate_warning(batch(0)), ContractError);
  }

  TEST_CASE("warning, warning, drift keeps both buffered batches") {
    // A slow ramp passes through the warning band before reaching the drift band.
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      auto d = detector(20);
      std::mt19937_64 rng(seed);
      d.evaluate(bernoulli(200, 0.1, rng));
      std::size_t run = 0;
      DriftState s = DriftState::stable;
      for (int k = 0; k < 40 && s != DriftState::drift; ++k) {
        s = d.evaluate(bernoulli(20, std::min(0.1 + 0.01 * k, 0.6), rng));
        if (s == DriftState::warning) {
          d.accumulate_warning(batch(static_cast<std::size_t>(k)));
          ++run;
        } else if (s == DriftState::stable) {
          run = 0;
        }
      }
      if (s != DriftState::drift || run < 2) continue;
      CHECK(d.warning_buffer().size() == run);
      const auto buffer = d.take_warning_buffer();
      CHECK(buffer.size() == run);
      CHECK(d.warning_buffer().empty());
      return;
    }
    FAIL("no warning-warning-drift sequence in 200 seeds");
  }

  TEST_CASE("stable after warning empties the buffer") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      auto d = detector(20);
      std::mt19937_64 rng(seed);
      d.evaluate(bernoulli(200, 0.1, rng));
      if (d.evaluate(bernoulli(20, 0.35, rng)) != DriftState::warning) continue;
      d.accumulate_warning(batch(1));
      REQUIRE(d.warning_buffer().size() == 1);
      if (!drive_to(d, DriftState::stable, 0.0, rng)) continue;
      CHECK(d.warning_buffer().empty());
      return;
    }
    FAIL("no warning state reached");
  }

  TEST_CASE("reset clears everything") {
    auto d = detector(5);
    d.evaluate(std::vector<double>(30, 1.0));
    d.reset();
    CHECK(d.record().empty());
    CHECK(d.state() == DriftState::stable);
  }
}
