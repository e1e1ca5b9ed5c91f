#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "refgov/bounds.hpp"
#include "refgov/error.hpp"
#include "refgov/harness.hpp"
#include "refgov/model.hpp"
#include "refgov/sim.hpp"
#include "support.hpp"

namespace refgov {
namespace {

constexpr double kPi = std::numbers::pi;
const double kRs = std::sin(kPi / 4);

class Still final : public PlantModel {
 public:
  std::string name() const override { return "still"; }
  std::size_t state_dim() const override { return 2; }
  std::size_t command_dim() const override { return 1; }
  Vector f(const Vector&, const Vector&) const override { return Vector(2); }
  Matrix f_x(const Vector&, const Vector&) const override { return Matrix(2, 2); }
  Matrix f_v(const Vector&, const Vector&) const override { return Matrix(2, 1); }
  Vector steady_state(const Vector&) const override { return Vector(2); }
  const Polytope& state_set() const override { return box_; }
  const Polytope& command_set() const override { return cmd_; }
  std::vector<std::size_t> disturbance_channels() const override { return {0, 1}; }

 private:
  Polytope box_ = Polytope::box({-1, -1}, {1, 1});
  Polytope cmd_ = Polytope::box({-1}, {1});
};

PlantPtr scalar_decay() {
  return linear_plant(Matrix{{-1}}, Matrix{{1}}, Polytope::box({-2}, {2}),
                      Polytope::box({-1}, {1}));
}

const Signal zero1 = [](double) { return Vector{0}; };

TEST(Integrate, ConstantWhenFieldVanishes) {
  const Still m;
  const auto tr = integrate(m, Vector{0.3, -0.2}, zero1, {}, 0.0, 1.0, 0.01);
  ASSERT_EQ(tr.size(), 101u);
  for (const auto& x : tr.states) EXPECT_EQ(x, (Vector{0.3, -0.2}));
}

TEST(Integrate, ScalarDecay) {
  const auto tr = integrate(*scalar_decay(), Vector{1}, zero1, {}, 0.0, 1.0, 1e-3);
  EXPECT_NEAR(tr.times.back(), 1.0, 1e-12);
  EXPECT_NEAR(tr.states.back()[0], std::exp(-1.0), 1e-8);
}

TEST(Integrate, LinearSystemMatchesMatExp) {
  const Matrix a{{-0.2, 1.0}, {-1.0, -0.3}};
  const Matrix b{{0.5}, {1.0}};
  const auto m = linear_plant(a, b, Polytope::box({-5, -5}, {5, 5}), Polytope::box({-1}, {1}));
  const Vector x0{1.0, -0.5};
  const Signal v = [](double) { return Vector{0.4}; };
  const auto tr = integrate(*m, x0, v, {}, 0.0, 10.0, 1e-3);
  const Vector oracle = test::taylor_exp(a, 10.0) * x0 +
                        convolution_gain_quadrature(a, b, 10.0, 4000) * Vector{0.4};
  EXPECT_LT(test::max_abs_diff(tr.states.back(), oracle), 1e-7);
}

TEST(Integrate, NonFiniteThrows) {
  const auto m = linear_plant(Matrix{{50}}, Matrix{{1}}, Polytope::box({-1}, {1}),
                              Polytope::box({-1}, {1}));
  try {
    integrate(*m, Vector{1}, zero1, {}, 0.0, 100.0, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
}

TEST(Disturbance, ZeroBound) {
  DisturbanceSpec d;
  for (const auto& w : sample_disturbance(d, *example1(), NormSpec::l2(), 100, 3))
    EXPECT_EQ(w.norm_inf(), 0.0);
}

TEST(Disturbance, NeverExceedsBound) {
  const auto sc = spacecraft();
  const NormSpec p = NormSpec::weighted(sc->riccati());
  for (DisturbanceShape shape : {DisturbanceShape::kBall, DisturbanceShape::kBox}) {
    DisturbanceSpec d;
    d.w_max = 1e-2;
    d.shape = shape;
    const auto ws = sample_disturbance(d, *example1(), NormSpec::l2(), 100000, 7);
    double top = 0.0;
    for (const auto& w : ws) {
      top = std::max(top, vec_norm(w, NormSpec::l2()));
      EXPECT_EQ(w[1], 0.0);
    }
    EXPECT_LE(top, 1e-2);
    EXPECT_GT(top, 0.0);
    for (const auto& w : sample_disturbance(d, *sc, p, 10000, 8)) {
      EXPECT_LE(vec_norm(w, p), 1e-2 * (1 + 1e-12));
      EXPECT_EQ(w[0], 0.0);
    }
  }
}

TEST(Disturbance, ConstantHitsBoundary) {
  DisturbanceSpec d;
  d.w_max = 0.02;
  d.shape = DisturbanceShape::kConstant;
  d.direction = Vector{-1};
  const auto ws = sample_disturbance(d, *example1(), NormSpec::l2(), 5, 1);
  for (const auto& w : ws) EXPECT_EQ(w, (Vector{-0.02, 0}));
}

TEST(Disturbance, SeedDeterminism) {
  DisturbanceSpec d;
  d.w_max = 1e-2;
  const auto a = sample_disturbance(d, *example1(), NormSpec::l2(), 1000, 42);
  const auto b = sample_disturbance(d, *example1(), NormSpec::l2(), 1000, 42);
  const auto c = sample_disturbance(d, *example1(), NormSpec::l2(), 1000, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

Trajectory synthetic(const std::vector<Vector>& states, double h) {
  Trajectory t;
  for (std::size_t i = 0; i < states.size(); ++i) {
    t.times.push_back(i * h);
    t.states.push_back(states[i]);
  }
  return t;
}

TEST(Audit, InsideBox) {
  const Polytope box = Polytope::box({-1, -1}, {1, 1});
  const auto rep = audit(synthetic({{0, 0}, {0.5, -0.5}, {0.9, 0.9}}, 0.1), box);
  EXPECT_EQ(rep.total_violations(), 0u);
  EXPECT_LT(rep.max_violation(), 0.0);
}

TEST(Audit, FaceIsNotAViolation) {
  const Polytope box = Polytope::box({-1, -1}, {1, 1});
  const auto rep = audit(synthetic(std::vector<Vector>(10, Vector{1, 0}), 0.1), box);
  EXPECT_EQ(rep.total_violations(), 0u);
  EXPECT_EQ(rep.rows[0].max_violation, 0.0);
  EXPECT_FALSE(rep.rows[0].first_violation_time);
}

TEST(Audit, RampCrossingTime) {
  const Polytope box = Polytope::box({-1}, {1});
  const double h = 0.03;
  std::vector<Vector> states;
  for (int i = 0; i * h <= 2.0; ++i) states.push_back(Vector{0.5 + 0.5 * i * h});
  const auto rep = audit(synthetic(states, h), box);
  ASSERT_TRUE(rep.rows[0].first_violation_time);
  EXPECT_NEAR(*rep.rows[0].first_violation_time, 1.0, h);
  EXPECT_NEAR(*rep.rows[0].first_violation_time, 1.0, 1e-12);
  EXPECT_EQ(rep.rows[1].violation_count, 0u);
  EXPECT_GT(rep.rows[0].violation_count, 0u);
  const auto j = to_json(rep);
  EXPECT_EQ(j["total_violations"], rep.total_violations());
}

TEST(Reference, PiecewiseConstant) {
  ReferenceSchedule r;
  r.segments = {{0.0, Vector{0.1}}, {5.0, Vector{0.3}}};
  EXPECT_EQ(r.at(0.0), (Vector{0.1}));
  EXPECT_EQ(r.at(4.99), (Vector{0.1}));
  EXPECT_EQ(r.at(5.0), (Vector{0.3}));
}

Scenario example1_scenario(double w_max = 0.0) {
  Scenario sc;
  sc.name = "example1";
  sc.model = example1();
  sc.governor.scalar_mode = true;
  sc.governor.w_max = w_max;
  sc.disturbance.w_max = w_max;
  sc.reference.segments = {{0.0, Vector{kRs}}};
  sc.v0 = Vector{0};
  sc.duration = 60.0;
  sc.h = 0.001;
  return sc;
}

const std::vector<Certificate>& example1_certs() {
  static const auto certs = [] {
    const auto m = example1();
    CertifyOptions o;
    o.grid_density = 21;
    return certify(*m, NormSpec::l2(), {m->command_set()}, o);
  }();
  return certs;
}

TEST(Scenario, Validation) {
  Scenario sc = example1_scenario();
  EXPECT_NO_THROW(sc.validate());
  EXPECT_EQ(sc.steps_per_sample(), 50u);
  sc.h = 0.0035;  // not a divisor of dt_sample
  EXPECT_THROW(sc.validate(), Error);
  sc.h = 0.005;
  EXPECT_NO_THROW(sc.validate());
  sc.h = 0.01;  // coarser than dt_sample / 10
  EXPECT_THROW(sc.validate(), Error);
  sc = example1_scenario();
  sc.disturbance.w_max = 0.01;
  EXPECT_THROW(sc.validate(), Error);
}

TEST(ClosedLoop, Example1Contrast) {
  const Scenario sc = example1_scenario();
  const auto none = run_closed_loop(sc, GovernorKind::kNone, {});
  const auto rgl = run_closed_loop(sc, GovernorKind::kRgL, {});
  const auto rgnl = run_closed_loop(sc, GovernorKind::kRgNl, example1_certs());
  EXPECT_GT(none.audit.total_violations(), 0u);
  // Rows are +x₁, −x₁, +x₂, −x₂.
  EXPECT_GT(rgl.audit.rows[2].violation_count, 0u);
  EXPECT_EQ(rgnl.audit.total_violations(), 0u);
  EXPECT_LE(std::abs(rgnl.final_command[0] - kRs), 1e-3);
  for (const auto& d : rgnl.steps) EXPECT_NE(d.outcome, StepOutcome::kPassThrough);
}

TEST(ClosedLoop, CommandsChangeOnlyAtSamples) {
  const Scenario sc = example1_scenario();
  const auto res = run_closed_loop(sc, GovernorKind::kRgNl, example1_certs());
  const auto& tr = res.trajectory;
  const std::size_t per = sc.steps_per_sample();
  for (std::size_t i = 1; i < tr.size(); ++i) {
    if (i % per != 0) EXPECT_EQ(tr.commands[i], tr.commands[i - 1]) << i;
  }
  EXPECT_EQ(tr.states[0], sc.model->steady_state(sc.v0));
}

TEST(ClosedLoop, DisturbedExample1StaysAdmissible) {
  const Scenario sc = example1_scenario(1e-2);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 12; ++s) seeds.push_back(s);
  const auto runs = run_monte_carlo(sc, GovernorKind::kRgNl, example1_certs(), seeds);
  ASSERT_EQ(runs.size(), seeds.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    EXPECT_EQ(runs[i].seed, seeds[i]);
    EXPECT_EQ(runs[i].audit.total_violations(), 0u) << "seed " << seeds[i];
    EXPECT_LT(runs[i].final_command[0], kRs - 1e-3);
    EXPECT_EQ(runs[i].trajectory.size(), 0u);
  }
}

TEST(ClosedLoop, SpacecraftDenseGrid) {
  const ScenarioConfig cfg = load_config(test::scenario_path("spacecraft.json"));
  Scenario sc = build_scenario(cfg);
  sc.h = sc.governor.dt_sample / 50;
  const auto certs = certify_scenario(cfg, sc);
  const auto res = run_closed_loop(sc, GovernorKind::kRgNl, certs);
  EXPECT_EQ(res.audit.total_violations(), 0u);
  EXPECT_LE((res.final_command - sc.reference.at(sc.duration)).norm2(), 1e-3);
}

TEST(ClosedLoop, DeterministicCsv) {
  const Scenario sc = example1_scenario(1e-2);
  std::ostringstream a, b;
  write_csv(a, run_seed(sc, GovernorKind::kRgNl, example1_certs(), 5).trajectory);
  write_csv(b, run_seed(sc, GovernorKind::kRgNl, example1_certs(), 5).trajectory);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "t,x1,x2,v1,w1,w2,qp_status,zeta");
}

TEST(ClosedLoop, ThreadCountDoesNotChangeResults) {
  const Scenario sc = example1_scenario(1e-2);
  const std::vector<std::uint64_t> seeds{3, 4, 5, 6};
  const auto a = run_monte_carlo(sc, GovernorKind::kRgNl, example1_certs(), seeds, 1);
  const auto b = run_monte_carlo(sc, GovernorKind::kRgNl, example1_certs(), seeds, 4);
  for (std::size_t i = 0; i < seeds.size(); ++i) EXPECT_EQ(a[i].final_command, b[i].final_command);
}

}  // namespace
}  // namespace refgov
