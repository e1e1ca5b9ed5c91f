#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refgov/bounds.hpp"
#include "refgov/governor.hpp"
#include "refgov/linalg.hpp"
#include "refgov/model.hpp"
#include "refgov/norms.hpp"

namespace refgov {

/// Uniform-grid trajectory. commands[i] and disturbances[i] are the values
/// held over [times[i], times[i+1]).
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> commands;
  std::vector<Vector> disturbances;
  /// Last governor outcome and ζ* in force at each grid point.
  std::vector<StepOutcome> outcomes;
  std::vector<double> zeta;

  std::size_t size() const noexcept { return times.size(); }
};

using Signal = std::function<Vector(double t)>;

/// Classical RK4 with fixed step h over [t0, t1]. v and w are sampled at the
/// start of each step and held over it. Throws NonFinite when the state
/// stops being finite or leaves the model's domain.
Trajectory integrate(const PlantModel& model, const Vector& x0, const Signal& v, const Signal& w,
                     double t0, double t1, double h);

/// One full-state disturbance vector per grid point (`count` of them), zero
/// outside the model's disturbance channels, with vec_norm(w, spec) ≤ w_max.
std::vector<Vector> sample_disturbance(const DisturbanceSpec& dist, const PlantModel& model,
                                       const NormSpec& spec, std::size_t count,
                                       std::uint64_t seed);

/// Piecewise-constant r(t): the entry with the largest start time ≤ t.
struct ReferenceSchedule {
  std::vector<std::pair<double, Vector>> segments;
  Vector at(double t) const;
};

struct Scenario {
  std::string name;
  PlantPtr model;
  NormSpec norm = NormSpec::l2();
  GovernorConfig governor;
  DisturbanceSpec disturbance;
  std::uint64_t seed = 0;
  ReferenceSchedule reference;
  Vector v0;
  std::optional<Vector> x0;  // default x_v(v0)
  double duration = 60.0;
  double h = 0.005;

  /// Throws Config when inconsistent (e.g. dt_sample not a multiple of h).
  void validate() const;
  std::size_t steps_per_sample() const;
};

struct RowAudit {
  double max_violation = 0.0;
  std::optional<double> first_violation_time;
  std::size_t violation_count = 0;
};

struct AuditReport {
  std::vector<RowAudit> rows;
  double tolerance = 1e-9;

  std::size_t total_violations() const;
  double max_violation() const;
};

/// Checks every grid point (not only governor samples) against {Mx ≤ m}.
/// The first violation time is the linearly interpolated zero crossing.
AuditReport audit(const Trajectory& traj, const Polytope& x_set, double tol = 1e-9);

nlohmann::json to_json(const AuditReport& report);

struct ClosedLoopResult {
  GovernorKind kind = GovernorKind::kNone;
  std::uint64_t seed = 0;
  Trajectory trajectory;
  std::vector<StepDiagnostics> steps;
  AuditReport audit;
  Vector final_command;
};

/// Runs the plant with the selected governor updated every dt_sample from
/// t = 0. `certs` is required for RG_NL only.
ClosedLoopResult run_closed_loop(const Scenario& sc, GovernorKind kind,
                                 const std::vector<Certificate>& certs);

/// run_closed_loop with the disturbance seed overridden.
ClosedLoopResult run_seed(const Scenario& sc, GovernorKind kind,
                          const std::vector<Certificate>& certs, std::uint64_t seed);

/// Seed sweep over worker threads. Each finished run is handed to `sink`
/// under a lock (one call at a time, in completion order); the returned
/// vector holds the runs in seed order with trajectories dropped unless
/// `keep_trajectories` is set.
std::vector<ClosedLoopResult> run_monte_carlo(
    const Scenario& sc, GovernorKind kind, const std::vector<Certificate>& certs,
    const std::vector<std::uint64_t>& seeds, unsigned threads = 0,
    const std::function<void(const ClosedLoopResult&)>& sink = {},
    bool keep_trajectories = false);

/// Header t,x1..xn,v1..vnv,w1..wn,qp_status,zeta; one row per grid point.
void write_csv(std::ostream& os, const Trajectory& traj);

}  // namespace refgov
