#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "gtsim/metrics.hpp"
#include "gtsim/vecmath.hpp"
#include "oracles.hpp"

using namespace gtsim;

namespace {

Dataset scalar_data(std::vector<double> values) {
  Dataset ds;
  ds.n_samples = values.size();
  ds.n_features = 1;
  ds.n_classes = 2;
  ds.features = std::move(values);
  ds.labels.assign(ds.n_samples, 0);
  return ds;
}

}  // namespace

TEST_CASE("stationarity gap: stationary point, cancellation, closed form") {
  // f_0 = (y-1)^2/2, f_1 = (y+1)^2/2; F minimized at 0.
  Dataset ds = scalar_data({1.0, -1.0});
  QuadraticModel model(ds);
  Partition part;
  part.assignments = {{0}, {1}};

  std::vector<AgentState> st(2);
  st[0].y = {0.0};
  st[1].y = {0.0};
  CHECK(stationarity_gap(st, model, part) <= 1e-12);

  // grad f_0(y0) = 2, grad f_1(y1) = -2: the average cancels.
  st[0].y = {3.0};
  st[1].y = {-3.0};
  CHECK(stationarity_gap(st, model, part) <= 1e-12);

  // closed form: ((y0 - 1) + (y1 + 1))^2 / 4
  st[0].y = {0.5};
  st[1].y = {0.25};
  double avg = ((0.5 - 1.0) + (0.25 + 1.0)) / 2.0;
  CHECK(stationarity_gap(st, model, part) == doctest::Approx(avg * avg).epsilon(1e-12));
}

TEST_CASE("consensus errors: identical states, two-point case, brute-force oracle") {
  std::vector<AgentState> st(3);
  for (auto& s : st) {
    s.y = {1.0, 2.0};
    s.v = {0.5, -0.5};
  }
  ConsensusErrors ce = consensus_errors(st);
  CHECK(ce.phi_y == 0.0);
  CHECK(ce.phi_v == 0.0);

  std::vector<AgentState> two(2);
  two[0].y = {0.0};
  two[0].v = {1.0};
  two[1].y = {2.0};
  two[1].v = {1.0};
  ce = consensus_errors(two);
  CHECK(ce.phi_y == doctest::Approx(2.0).epsilon(1e-15));  // (+1)^2 + (-1)^2
  CHECK(ce.phi_v == 0.0);

  Rng rng(4);
  std::vector<AgentState> rnd(5);
  std::vector<std::vector<double>> ys, vs;
  for (auto& s : rnd) {
    s.y.resize(7);
    s.v.resize(7);
    for (double& x : s.y) x = rng.next_gaussian();
    for (double& x : s.v) x = rng.next_gaussian();
    ys.push_back(s.y);
    vs.push_back(s.v);
  }
  ce = consensus_errors(rnd);
  CHECK(ce.phi_y == doctest::Approx(oracles::brute_force_deviation(ys)).epsilon(1e-12));
  CHECK(ce.phi_v == doctest::Approx(oracles::brute_force_deviation(vs)).epsilon(1e-12));
}

TEST_CASE("consensus errors are permutation invariant and zero iff identical") {
  Rng rng(9);
  std::vector<AgentState> st(4);
  for (auto& s : st) {
    s.y.resize(3);
    s.v.resize(3);
    for (double& x : s.y) x = rng.next_gaussian();
    for (double& x : s.v) x = rng.next_gaussian();
  }
  ConsensusErrors before = consensus_errors(st);
  std::swap(st[0], st[3]);
  std::swap(st[1], st[2]);
  ConsensusErrors after = consensus_errors(st);
  CHECK(before.phi_y == doctest::Approx(after.phi_y).epsilon(1e-15));
  CHECK(before.phi_v == doctest::Approx(after.phi_v).epsilon(1e-15));
  CHECK(before.phi_y > 1e-12);  // distinct states give a strictly positive error
}

TEST_CASE("theorem-style bound: vanishing case and hand-substituted values") {
  TheoryConstants tc;
  tc.smoothness = 1.0;
  tc.sigma2 = 0.0;
  tc.f0_minus_flb = 0.0;
  tc.phi_v0 = 0.0;
  tc.lambda_w = 0.0;
  tc.n_agents = 1;
  tc.local_updates = 1;
  tc.rounds = 10;
  tc.batch_size = 1;
  tc.gamma = 0.5;
  CHECK(theorem1_rhs(tc) == 0.0);

  // lambda=0, sigma2=0, phi_v0=T, L=1, gamma=1/2, E=1, F0-Flb=1, T=2:
  //   4*1/(0.5*2) + 0 + 16*(1/4)*(111*2/2) = 4 + 444 = 448.
  tc.f0_minus_flb = 1.0;
  tc.rounds = 2;
  tc.phi_v0 = 2.0;
  CHECK(theorem1_rhs(tc) == doctest::Approx(448.0).epsilon(1e-12));

  // Doubling the batch size halves the sigma2-driven terms exactly.
  tc.sigma2 = 3.0;
  tc.phi_v0 = 0.0;
  tc.f0_minus_flb = 0.0;
  double at1 = theorem1_rhs(tc);
  tc.batch_size = 2;
  double at2 = theorem1_rhs(tc);
  CHECK(at1 == doctest::Approx(2.0 * at2).epsilon(1e-12));

  tc.lambda_w = 1.0;
  CHECK_THROWS_AS(theorem1_rhs(tc), std::invalid_argument);
  tc.lambda_w = 0.5;
  tc.gamma = 1.0;
  CHECK_THROWS_AS(theorem1_rhs(tc), std::invalid_argument);
}

TEST_CASE("theorem-style bound monotonicity grid") {
  TheoryConstants base;
  base.smoothness = 2.0;
  base.sigma2 = 1.5;
  base.f0_minus_flb = 1.0;
  base.phi_v0 = 4.0;
  base.lambda_w = 0.3;
  base.n_agents = 8;
  base.local_updates = 4;
  base.rounds = 100;
  base.batch_size = 4;
  base.gamma = 0.01;

  // Non-increasing in the batch size.
  double prev = theorem1_rhs(base);
  for (double b : {8.0, 16.0, 32.0, 64.0}) {
    TheoryConstants tc = base;
    tc.batch_size = b;
    double v = theorem1_rhs(tc);
    CHECK(v <= prev + 1e-15);
    prev = v;
  }
  // Non-decreasing in lambda_w.
  prev = -1.0;
  for (double lw : {0.0, 0.2, 0.4, 0.6, 0.8, 0.95}) {
    TheoryConstants tc = base;
    tc.lambda_w = lw;
    double v = theorem1_rhs(tc);
    CHECK(v >= prev);
    prev = v;
  }
  // Non-decreasing in sigma2 and in L.
  prev = -1.0;
  for (double s2 : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    TheoryConstants tc = base;
    tc.sigma2 = s2;
    double v = theorem1_rhs(tc);
    CHECK(v >= prev);
    prev = v;
  }
  prev = -1.0;
  for (double l : {0.5, 1.0, 2.0, 4.0}) {
    TheoryConstants tc = base;
    tc.smoothness = l;
    double v = theorem1_rhs(tc);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("prescribed-stepsize bound: surviving term, hand value, scaling, flag") {
  TheoryConstants tc;
  tc.smoothness = 1.0;
  tc.sigma2 = 0.0;
  tc.f0_minus_flb = 3.0;
  tc.phi_v0 = 0.0;
  tc.lambda_w = 0.4;
  tc.n_agents = 2;
  tc.local_updates = 1;
  tc.rounds = 512;
  tc.batch_size = 4;
  BoundWithFlag b = corollary1_rhs(tc);
  CHECK(b.value == doctest::Approx(4.0 * 3.0 / std::sqrt(2.0 * 512.0)).epsilon(1e-12));
  CHECK(b.e_condition_ok);  // E=1 always admissible

  // Unit-constant hand evaluation at N=1, E=1, T=4:
  //   sqrt(NET) = 2; 4/2 + 40/2 + (16/2)*(2577 + 111/4) = 20860.
  TheoryConstants unit;
  unit.smoothness = 1.0;
  unit.sigma2 = 1.0;
  unit.f0_minus_flb = 1.0;
  unit.phi_v0 = 1.0;
  unit.lambda_w = 0.0;
  unit.n_agents = 1;
  unit.local_updates = 1;
  unit.rounds = 4;
  unit.batch_size = 1;
  CHECK(corollary1_rhs(unit).value == doctest::Approx(20860.0).epsilon(1e-12));

  // Quadrupling E*T halves the bound when only the first term survives.
  TheoryConstants s = tc;
  double v1 = corollary1_rhs(s).value;
  s.rounds = 2048;
  double v2 = corollary1_rhs(s).value;
  CHECK(v1 == doctest::Approx(2.0 * v2).epsilon(1e-12));

  // Flag trips when E exceeds (T/N^5)^(1/3).
  TheoryConstants f = tc;
  f.n_agents = 4;
  f.local_updates = 8;
  f.rounds = 100;  // (100/1024)^(1/3) < 1 < 8
  CHECK_FALSE(corollary1_rhs(f).e_condition_ok);
}

TEST_CASE("coupled-problem bound: vanishing case, unit hand value, monotonicity") {
  MustTheoryConstants tc;
  tc.smoothness = 1.0;
  tc.sigma2 = 0.0;
  tc.f0_minus_flb = 0.0;
  tc.phi_z0 = 0.0;
  tc.phi_u0 = 0.0;
  tc.lambda_w = 0.0;
  tc.b_max = 1.0;
  tc.n_agents = 1;
  tc.local_updates = 1;
  tc.rounds = 8;
  tc.batch_size = 1;
  tc.n_samples = 4;
  CHECK(theorem2_rhs(tc).value == 0.0);

  // All-ones instance: sqrt(NET) = 1 and every factor collapses:
  //   1000 + 14 + 222 + 2*(990 + 59) = 3334.
  MustTheoryConstants unit = tc;
  unit.sigma2 = 1.0;
  unit.f0_minus_flb = 1.0;
  unit.phi_z0 = 1.0;
  unit.phi_u0 = 1.0;
  unit.rounds = 1;
  unit.n_samples = 1;
  CHECK(theorem2_rhs(unit).value == doctest::Approx(3334.0).epsilon(1e-12));
  CHECK(theorem2_rhs(unit).e_condition_ok);

  // Monotone increasing in the coupling norm bound.
  MustTheoryConstants g = unit;
  double prev = -1.0;
  for (double bm : {0.5, 1.0, 2.0, 4.0}) {
    g.b_max = bm;
    double v = theorem2_rhs(g).value;
    CHECK(v > prev);
    prev = v;
  }

  // Flag: E > T^(1/3)/N^3.
  MustTheoryConstants f = unit;
  f.n_agents = 2;
  f.local_updates = 2;
  f.rounds = 27;
  CHECK_FALSE(theorem2_rhs(f).e_condition_ok);
}

TEST_CASE("bound evaluators are pure") {
  TheoryConstants tc;
  tc.smoothness = 1.7;
  tc.sigma2 = 0.3;
  tc.f0_minus_flb = 2.2;
  tc.phi_v0 = 0.9;
  tc.lambda_w = 0.6;
  tc.n_agents = 12;
  tc.local_updates = 3;
  tc.rounds = 400;
  tc.batch_size = 8;
  tc.gamma = 0.004;
  double a = theorem1_rhs(tc);
  double b = theorem1_rhs(tc);
  CHECK(a == b);  // bit identical
  CHECK(corollary1_rhs(tc).value == corollary1_rhs(tc).value);
}

TEST_CASE("constant estimation: quadratic smoothness, zero variance, enumeration") {
  Dataset ds = scalar_data({1.0, 2.0, 3.0});
  QuadraticModel model(ds);
  Partition part;
  part.assignments = {{0, 1, 2}};

  // Quadratic residual: gradient differences are exactly the point
  // differences, so the ratio estimator returns 1 for any probes.
  EstimatedConstants est = estimate_constants(model, part, 4, 1, 5);
  CHECK(est.smoothness == doctest::Approx(1.0).epsilon(1e-12));

  // Full-batch probes: batch gradient equals the full gradient.
  EstimatedConstants full = estimate_constants(model, part, 3, 3, 5);
  CHECK(full.sigma2 <= 1e-24);

  // Batch 1 on {1,2,3}: enumerated deviation equals the population
  // variance of per-sample gradients, Var{1,2,3} = 2/3.
  CHECK(est.sigma2 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  CHECK_THROWS_AS(estimate_constants(model, part, 1, 1, 5), std::invalid_argument);
}

TEST_CASE("stationarity gap survives a checkpoint round trip exactly") {
  Dataset ds = make_blobs(30, 3, 2, 1.0, 44);
  NonconvexLogisticModel model(ds, 0.1);
  Partition part = partition_iid(ds, 3, 9);
  BoundProblem prob{&model, &part};
  std::vector<AgentState> st = lsgt_init(prob, 3, 12, 4);

  MixingMatrix w = max_degree_mixing(gen_graph(GraphKind::complete, 3, 0));
  AlgorithmConfig cfg;
  cfg.gamma = 0.01;
  cfg.local_updates = 2;
  cfg.batch_size = 4;
  for (int r = 0; r < 5; ++r) lsgt_round(st, w, cfg, prob, 12, r);

  double gap = stationarity_gap(st, model, part);
  std::string path =
      (std::filesystem::temp_directory_path() / "gtsim_metrics_ck.ck").string();
  save_checkpoint(path, "lsgt", 5, st);
  Checkpoint ck = load_checkpoint(path);
  CHECK(stationarity_gap(ck.states, model, part) == gap);  // bit exact
  std::remove(path.c_str());
}
