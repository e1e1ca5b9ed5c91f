#include "refgov/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <random>
#include <string>

#include "refgov/error.hpp"
#include "refgov/parallel.hpp"

namespace refgov {

namespace {

Vector rk4_step(const PlantModel& model, const Vector& x, const Vector& v, const Vector& w,
                double h) {
  auto rhs = [&](const Vector& z) { return model.f(z, v) + w; };
  const Vector k1 = rhs(x);
  const Vector k2 = rhs(x + (0.5 * h) * k1);
  const Vector k3 = rhs(x + (0.5 * h) * k2);
  const Vector k4 = rhs(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_state(const PlantModel& model, const Vector& x, double t) {
  if (!x.all_finite()) {
    throw Error(ErrorCode::kNonFinite, "state became non-finite at t = " + std::to_string(t));
  }
  model.check_state(x);
}

std::size_t grid_count(double t0, double t1, double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "step must be positive");
  if (!(t1 >= t0)) throw Error(ErrorCode::kInvalidArgument, "empty time span");
  return static_cast<std::size_t>(std::llround((t1 - t0) / h));
}

// |N(0, σ²)| rejected until ≤ bound.
double truncated_magnitude(std::mt19937_64& rng, double sigma, double bound) {
  if (bound == 0.0) return 0.0;
  std::normal_distribution<double> normal(0.0, sigma);
  while (true) {
    const double m = std::abs(normal(rng));
    if (m <= bound) return m;
  }
}

}  // namespace

Trajectory integrate(const PlantModel& model, const Vector& x0, const Signal& v, const Signal& w,
                     double t0, double t1, double h) {
  const std::size_t steps = grid_count(t0, t1, h);
  if (x0.size() != model.state_dim()) throw Error(ErrorCode::kDimensionMismatch, "x0 dimension");
  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  Vector x = x0;
  check_state(model, x, t0);
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = t0 + static_cast<double>(i) * h;
    const Vector vi = v(t);
    const Vector wi = w ? w(t) : Vector(model.state_dim());
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.commands.push_back(vi);
    traj.disturbances.push_back(wi);
    traj.outcomes.push_back(StepOutcome::kPassThrough);
    traj.zeta.push_back(0.0);
    if (i == steps) break;
    x = rk4_step(model, x, vi, wi, h);
    check_state(model, x, t + h);
  }
  return traj;
}

std::vector<Vector> sample_disturbance(const DisturbanceSpec& dist, const PlantModel& model,
                                       const NormSpec& spec, std::size_t count,
                                       std::uint64_t seed) {
  const std::size_t n = model.state_dim();
  std::vector<Vector> out(count, Vector(n));
  if (!(dist.w_max >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "w_max must be >= 0");
  if (dist.w_max == 0.0 || count == 0) return out;
  const auto channels = model.disturbance_channels();
  if (channels.empty()) return out;

  auto embed = [&](const std::vector<double>& c) {
    Vector w(n);
    for (std::size_t k = 0; k < channels.size(); ++k) w[channels[k]] = c[k];
    return w;
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sigma = dist.sigma_ratio * dist.w_max;

  switch (dist.shape) {
    case DisturbanceShape::kBall:
      for (auto& w : out) {
        std::vector<double> dir(channels.size());
        Vector u;
        double len = 0.0;
        do {
          for (double& d : dir) d = normal(rng);
          u = embed(dir);
          len = vec_norm(u, spec);
        } while (len == 0.0);
        const double mag = truncated_magnitude(rng, sigma, dist.w_max);
        w = (mag / len) * u;
      }
      break;
    case DisturbanceShape::kBox: {
      // Componentwise bound c chosen so that every corner has norm w_max.
      const double corner = vec_norm(embed(std::vector<double>(channels.size(), 1.0)), spec);
      const double c = dist.w_max / corner;
      for (auto& w : out) {
        std::vector<double> comp(channels.size());
        for (double& d : comp) {
          double s = 0.0;
          do {
            s = normal(rng) * dist.sigma_ratio * c;
          } while (std::abs(s) > c);
          d = s;
        }
        w = embed(comp);
      }
      break;
    }
    case DisturbanceShape::kConstant: {
      if (dist.direction.size() != channels.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "constant disturbance direction");
      }
      const Vector u = embed(dist.direction.values());
      const double len = vec_norm(u, spec);
      if (len == 0.0) throw Error(ErrorCode::kInvalidArgument, "zero disturbance direction");
      const Vector w = (dist.w_max / len) * u;
      std::fill(out.begin(), out.end(), w);
      break;
    }
  }
  return out;
}

Vector ReferenceSchedule::at(double t) const {
  if (segments.empty()) throw Error(ErrorCode::kConfig, "empty reference schedule");
  const Vector* r = &segments.front().second;
  for (const auto& [start, value] : segments) {
    if (start <= t + 1e-12) r = &value;
  }
  return *r;
}

void Scenario::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, what); };
  if (!model) fail("scenario has no model");
  const std::size_t n = model->state_dim();
  const std::size_t nv = model->command_dim();
  governor.validate(nv);
  if (v0.size() != nv) fail("v0 has the wrong dimension");
  if (x0 && x0->size() != n) fail("x0 has the wrong dimension");
  if (reference.segments.empty()) fail("reference schedule is empty");
  for (std::size_t i = 0; i < reference.segments.size(); ++i) {
    if (reference.segments[i].second.size() != nv) fail("reference has the wrong dimension");
    if (i > 0 && reference.segments[i].first < reference.segments[i - 1].first) {
      fail("reference segments must be sorted by time");
    }
  }
  if (!(duration > 0.0)) fail("duration must be positive");
  if (!(h > 0.0)) fail("integration step must be positive");
  if (h > governor.dt_sample / 10.0 * (1.0 + 1e-9)) fail("h must be <= dt_sample / 10");
  const double ratio = governor.dt_sample / h;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) fail("dt_sample must be a multiple of h");
  if (!(disturbance.w_max >= 0.0)) fail("w_max must be >= 0");
  if (std::abs(disturbance.w_max - governor.w_max) > 1e-15 * (1.0 + disturbance.w_max)) {
    fail("disturbance w_max and governor w_max differ");
  }
}

std::size_t Scenario::steps_per_sample() const {
  return static_cast<std::size_t>(std::llround(governor.dt_sample / h));
}

std::size_t AuditReport::total_violations() const {
  std::size_t s = 0;
  for (const auto& r : rows) s += r.violation_count;
  return s;
}

double AuditReport::max_violation() const {
  double m = -INFINITY;
  for (const auto& r : rows) m = std::max(m, r.max_violation);
  return m;
}

AuditReport audit(const Trajectory& traj, const Polytope& x_set, double tol) {
  AuditReport rep;
  rep.tolerance = tol;
  rep.rows.assign(x_set.num_rows(), RowAudit{-INFINITY, std::nullopt, 0});
  std::vector<double> prev(x_set.num_rows(), -INFINITY);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Vector g = x_set.M * traj.states[k] - x_set.m;
    for (std::size_t i = 0; i < g.size(); ++i) {
      RowAudit& row = rep.rows[i];
      row.max_violation = std::max(row.max_violation, g[i]);
      if (g[i] > tol) {
        ++row.violation_count;
        if (!row.first_violation_time) {
          if (k == 0 || !(prev[i] < g[i])) {
            row.first_violation_time = traj.times[k];
          } else {
            const double t0 = traj.times[k - 1];
            const double frac = std::clamp((0.0 - prev[i]) / (g[i] - prev[i]), 0.0, 1.0);
            row.first_violation_time = t0 + frac * (traj.times[k] - t0);
          }
        }
      }
      prev[i] = g[i];
    }
  }
  return rep;
}

nlohmann::json to_json(const AuditReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"max_violation", r.max_violation},
                    {"first_violation_time",
                     r.first_violation_time ? nlohmann::json(*r.first_violation_time)
                                            : nlohmann::json(nullptr)},
                    {"violation_count", r.violation_count}});
  }
  return {{"tolerance", report.tolerance},
          {"total_violations", report.total_violations()},
          {"max_violation", report.max_violation()},
          {"rows", rows}};
}

ClosedLoopResult run_seed(const Scenario& sc, GovernorKind kind,
                          const std::vector<Certificate>& certs, std::uint64_t seed) {
  sc.validate();
  const PlantModel& model = *sc.model;
  const std::size_t steps = grid_count(0.0, sc.duration, sc.h);
  const std::size_t per_sample = sc.steps_per_sample();
  const auto w = sample_disturbance(sc.disturbance, model, sc.norm, steps + 1, seed);

  Governor gov(sc.model, sc.norm, certs, sc.governor, kind, sc.v0);
  ClosedLoopResult res;
  res.kind = kind;
  res.seed = seed;
  Trajectory& traj = res.trajectory;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.commands.reserve(steps + 1);
  traj.disturbances.reserve(steps + 1);

  Vector x = sc.x0 ? *sc.x0 : model.steady_state(sc.v0);
  check_state(model, x, 0.0);
  Vector v = sc.v0;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) * sc.h;
    if (i % per_sample == 0) {
      v = gov.step(x, sc.reference.at(t), t);
      res.steps.push_back(gov.last());
    }
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.commands.push_back(v);
    traj.disturbances.push_back(w[i]);
    traj.outcomes.push_back(gov.last().outcome);
    traj.zeta.push_back(gov.last().zeta);
    if (i == steps) break;
    x = rk4_step(model, x, v, w[i], sc.h);
    check_state(model, x, t + sc.h);
  }
  res.final_command = v;
  res.audit = audit(traj, model.state_set());
  return res;
}

ClosedLoopResult run_closed_loop(const Scenario& sc, GovernorKind kind,
                                 const std::vector<Certificate>& certs) {
  return run_seed(sc, kind, certs, sc.seed);
}

std::vector<ClosedLoopResult> run_monte_carlo(
    const Scenario& sc, GovernorKind kind, const std::vector<Certificate>& certs,
    const std::vector<std::uint64_t>& seeds, unsigned threads,
    const std::function<void(const ClosedLoopResult&)>& sink, bool keep_trajectories) {
  std::vector<ClosedLoopResult> results(seeds.size());
  std::mutex collector;
  parallel_for(seeds.size(), threads, [&](std::size_t i) {
    ClosedLoopResult r = run_seed(sc, kind, certs, seeds[i]);
    if (sink) {
      std::lock_guard<std::mutex> lock(collector);
      sink(r);
    }
    if (!keep_trajectories) r.trajectory = Trajectory{};
    results[i] = std::move(r);
  });
  return results;
}

void write_csv(std::ostream& os, const Trajectory& traj) {
  if (traj.size() == 0) return;
  const std::size_t n = traj.states[0].size();
  const std::size_t nv = traj.commands[0].size();
  os << 't';
  for (std::size_t i = 1; i <= n; ++i) os << ",x" << i;
  for (std::size_t i = 1; i <= nv; ++i) os << ",v" << i;
  for (std::size_t i = 1; i <= n; ++i) os << ",w" << i;
  os << ",qp_status,zeta\n";
  char buf[32];
  auto put = [&](double value) {
    std::snprintf(buf, sizeof buf, "%.12g", value);
    os << buf;
  };
  for (std::size_t k = 0; k < traj.size(); ++k) {
    put(traj.times[k]);
    for (double x : traj.states[k]) os << ',', put(x);
    for (double v : traj.commands[k]) os << ',', put(v);
    for (double w : traj.disturbances[k]) os << ',', put(w);
    os << ',' << to_string(traj.outcomes[k]) << ',';
    put(traj.zeta[k]);
    os << '\n';
  }
}

}  // namespace refgov
