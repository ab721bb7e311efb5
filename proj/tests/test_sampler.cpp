#include "bayesid/dataio.hpp"
#include "bayesid/sampler.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

using namespace bayesid;

namespace {

std::shared_ptr<const ObservedMatrix> synthetic(Index m, Index n, Index k, double noise,
                                                std::uint64_t seed) {
  SyntheticSpec spec;
  spec.m = m;
  spec.n = n;
  spec.k_star = k;
  spec.noise_sigma = noise;
  spec.seed = seed;
  return std::make_shared<const ObservedMatrix>(synth_lowrank(spec).A);
}

std::vector<TraceRecord> mse_records(std::initializer_list<double> values) {
  std::vector<TraceRecord> out;
  int it = 0;
  for (double v : values) out.push_back({++it, v, 3, 1.0});
  return out;
}

}  // namespace

TEST_CASE("RunConfig defaults and validation") {
  RunConfig c;
  CHECK(c.max_iterations == 1000);
  CHECK(c.burn_in == 100);
  CHECK(c.thinning == 5);
  CHECK(c.convergence_window == 10);
  CHECK_NOTHROW(c.validate());
  c.burn_in = 1000;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = RunConfig{};
  c.thinning = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  auto obs = synthetic(8, 6, 2, 0.0, 1);
  HyperParams h;
  RunConfig fixed;
  fixed.max_iterations = 5;
  fixed.burn_in = 0;
  CHECK_THROWS_AS(run(obs, h, fixed), std::invalid_argument);  // no K without ARD
  fixed.rank = 7;
  CHECK_THROWS_AS(run(obs, h, fixed), std::invalid_argument);
}

TEST_CASE("single iteration yields one record") {
  auto obs = synthetic(10, 8, 3, 0.0, 2);
  HyperParams h;
  RunConfig c;
  c.max_iterations = 1;
  c.burn_in = 0;
  c.thinning = 1;
  c.rank = 3;
  const auto r = run(obs, h, c);
  REQUIRE(r.trace.size() == 1);
  CHECK(r.trace[0].iteration == 1);
  CHECK(r.averaged_mse == r.trace[0].mse);
}

TEST_CASE("same seed gives identical traces") {
  auto obs = synthetic(12, 10, 4, 0.01, 3);
  for (bool ard : {false, true}) {
    for (Flavor f : {Flavor::GBT, Flavor::GBTN}) {
      HyperParams h;
      h.ard = ard;
      h.flavor = f;
      RunConfig c;
      c.max_iterations = 40;
      c.burn_in = 10;
      c.rank = ard ? 0 : 4;
      c.seed = 99;
      const auto a = run(obs, h, c);
      const auto b = run(obs, h, c);
      CHECK(a.trace == b.trace);
      CHECK(a.state.Y == b.state.Y);
      CHECK(a.chains.samples == b.chains.samples);
      c.seed = 100;
      CHECK_FALSE(run(obs, h, c).trace == a.trace);
    }
  }
}

TEST_CASE("rank behaviour with and without ARD") {
  auto obs = synthetic(20, 12, 4, 0.0, 4);
  HyperParams h;
  RunConfig c;
  c.max_iterations = 60;
  c.burn_in = 10;
  c.rank = 5;
  c.seed = 7;
  for (const auto& rec : run(obs, h, c).trace) {
    CHECK(rec.k_selected == 5);
  }
  h.ard = true;
  c.rank = 0;
  std::set<int> seen;
  for (const auto& rec : run(obs, h, c).trace) {
    CHECK(rec.k_selected >= 1);
    CHECK(rec.k_selected <= 12);
    seen.insert(rec.k_selected);
  }
  CHECK(seen.size() >= 2);
}

TEST_CASE("trace MSE matches a from-scratch recompute") {
  auto obs = synthetic(9, 7, 3, 0.05, 5);
  for (bool ard : {false, true}) {
    HyperParams h;
    h.ard = ard;
    h.flavor = Flavor::GBTN;
    RunConfig c;
    c.burn_in = 0;
    c.rank = ard ? 0 : 3;
    c.seed = 17;
    c.max_iterations = 12;
    const auto full = run(obs, h, c);
    for (int t = 1; t <= 12; ++t) {
      c.max_iterations = t;
      const auto prefix = run(obs, h, c);
      const auto& s = prefix.state;
      const Matrix X = oracle::x_from_state(obs->data(), s.r);
      const double ref = oracle::naive_mse(obs->data(), oracle::naive_product(X, s.Y));
      CHECK(oracle::close_rel(full.trace[t - 1].mse, ref, 1e-10));
      CHECK(prefix.trace.back() == full.trace[t - 1]);
    }
  }
}

TEST_CASE("sampled Y stays in the box") {
  auto obs = synthetic(15, 10, 3, 0.1, 6);
  for (bool ard : {false, true}) {
    for (Flavor f : {Flavor::GBT, Flavor::GBTN}) {
      HyperParams h;
      h.ard = ard;
      h.flavor = f;
      RunConfig c;
      c.max_iterations = 50;
      c.burn_in = 5;
      c.rank = 3;
      const auto r = run(obs, h, c);
      CHECK(r.state.Y.cwiseAbs().maxCoeff() <= 1.0);
      CHECK((r.state.tau.array() > 0.0).all());
      for (const auto& chain : r.chains.samples) {
        for (double v : chain) CHECK(std::abs(v) <= 1.0);
      }
    }
  }
}

TEST_CASE("noise-free fixed-rank run fits an in-box interpolative decomposition") {
  // Rank one with weights of magnitude one: every single-column basis
  // interpolates all other columns exactly with |w| <= 1.
  std::mt19937 g(8);
  const Matrix c0 = oracle::random_matrix(60, 1, g);
  Matrix w(1, 10);
  for (Index n = 0; n < 10; ++n) w(0, n) = (n % 3 == 0) ? -1.0 : 1.0;
  auto obs = std::make_shared<const ObservedMatrix>(Matrix(c0 * w));
  HyperParams h;
  for (std::uint64_t seed : {1, 2, 3}) {
    RunConfig c;
    c.max_iterations = 300;
    c.burn_in = 100;
    c.rank = 1;
    c.seed = seed;
    const auto r = run(obs, h, c);
    CHECK(r.averaged_mse < 1e-3);
  }
}

TEST_CASE("check_convergence") {
  RunConfig c;
  c.convergence_window = 10;
  c.convergence_tol = 1e-4;
  SUBCASE("constant sequence converges once both windows are filled") {
    std::vector<TraceRecord> t;
    for (int i = 1; i <= 25; ++i) {
      t.push_back({i, 0.5, 2, 1.0});
      CHECK(check_convergence(t, c) == (i >= 20));
    }
  }
  SUBCASE("geometric decay does not converge") {
    std::vector<TraceRecord> t;
    double v = 1.0;
    for (int i = 1; i <= 10; ++i, v *= 0.5) {
      t.push_back({i, v, 2, 1.0});
      CHECK_FALSE(check_convergence(t, c));
    }
    for (int i = 11; i <= 40; ++i, v *= 0.5) {
      t.push_back({i, v, 2, 1.0});
      CHECK_FALSE(check_convergence(t, c));
    }
  }
  SUBCASE("relative change") {
    c.convergence_window = 2;
    c.convergence_tol = 0.1;
    CHECK(check_convergence(mse_records({1.0, 1.0, 1.05, 1.05}), c));
    CHECK_FALSE(check_convergence(mse_records({1.0, 1.0, 1.2, 1.2}), c));
    CHECK(check_convergence(mse_records({0.0, 0.0, 0.0, 0.0}), c));
  }
  SUBCASE("synthetic run converges before iteration 100") {
    auto obs = synthetic(30, 20, 8, 0.0, 1);
    HyperParams h;
    h.ard = true;
    RunConfig rc;
    rc.max_iterations = 300;
    rc.burn_in = 100;
    rc.seed = 1;
    const auto r = run(obs, h, rc);
    REQUIRE(r.converged_at.has_value());
    CHECK(*r.converged_at < 100);
    rc.stop_on_convergence = true;
    const auto early = run(obs, h, rc);
    CHECK(static_cast<int>(early.trace.size()) == *r.converged_at);
  }
}

TEST_CASE("burn-in and thinning") {
  RunConfig c;
  c.burn_in = 3;
  c.thinning = 2;
  const auto t = mse_records({9, 9, 9, 1, 5, 3, 5, 5});
  const auto kept = thinned_post_burn_in(t, c);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].iteration == 4);
  CHECK(kept[1].iteration == 6);
  CHECK(kept[2].iteration == 8);
  CHECK(averaged_loss(t, c) == doctest::Approx(3.0));
  CHECK(post_burn_in(t, 3).size() == 5);
  c.burn_in = 8;
  CHECK_THROWS(averaged_loss(t, c));
}

TEST_CASE("non-finite MSE aborts with a state dump") {
  Matrix A = Matrix::Constant(3, 3, 1e160);
  A(0, 0) = -1e160;
  auto obs = std::make_shared<const ObservedMatrix>(A);
  HyperParams h;
  RunConfig c;
  c.max_iterations = 3;
  c.burn_in = 0;
  c.rank = 1;
  std::string message;
  try {
    run(obs, h, c);
  } catch (const SamplerError& e) {
    message = e.what();
  }
  CHECK(message.find("non-finite MSE at iteration 1") != std::string::npos);
  CHECK(message.find("basis=[") != std::string::npos);
}

TEST_CASE("monitored entries") {
  auto obs = synthetic(10, 12, 3, 0.0, 9);
  HyperParams h;
  RunConfig c;
  c.max_iterations = 20;
  c.burn_in = 0;
  c.rank = 3;
  const auto r = run(obs, h, c);
  CHECK(r.chains.entries.size() == 100);
  std::set<std::pair<Index, Index>> distinct(r.chains.entries.begin(), r.chains.entries.end());
  CHECK(distinct.size() == 100);
  for (const auto& s : r.chains.samples) CHECK(s.size() == 20);
  c.monitored_entries = 500;
  CHECK(run(obs, h, c).chains.entries.size() == 144);
}
