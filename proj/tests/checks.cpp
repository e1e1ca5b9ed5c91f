#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "refgov/model.hpp"
#include "refgov/norms.hpp"
#include "refgov/sim.hpp"
#include "support.hpp"

namespace refgov::test {

namespace {

template <class Rhs>
Vector rk4(const Rhs& rhs, const Vector& x, double h) {
  const Vector k1 = rhs(x);
  const Vector k2 = rhs(x + (0.5 * h) * k1);
  const Vector k3 = rhs(x + (0.5 * h) * k2);
  const Vector k4 = rhs(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

NormSpec family(std::size_t k, std::mt19937_64& rng, std::size_t n) {
  switch (k % 4) {
    case 0: return NormSpec::l1();
    case 1: return NormSpec::l2();
    case 2: return NormSpec::linf();
    default: return NormSpec::weighted(random_spd(rng, n) + Matrix::identity(n));
  }
}

Vector random_direction(std::mt19937_64& rng, std::size_t n, const NormSpec& spec) {
  Vector d;
  double len = 0.0;
  do {
    d = random_vector(rng, n);
    len = vec_norm(d, spec);
  } while (len < 1e-3);
  return (1.0 / len) * d;
}

}  // namespace

CheckStats invariant_ball(std::size_t systems, std::uint64_t seed, double slack) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  CheckStats st;
  const double h = 1e-3;
  const std::size_t steps = 10000;
  const std::size_t hold = 100;
  for (std::size_t s = 0; s < systems; ++s) {
    const std::size_t n = 2 + s % 4;
    const NormSpec spec = family(s, rng, n);
    Matrix f = random_matrix(rng, n, n);
    const double margin = 0.2 + 1.8 * u01(rng);
    f -= (log_norm(f, spec) + margin) * Matrix::identity(n);
    const double mu = log_norm(f, spec);
    const double gamma_max = 0.05 + u01(rng);
    const double radius = -gamma_max / mu;

    // A quarter of the runs start exactly on the boundary of Θ.
    const double r0 = s % 4 == 0 ? radius : radius * std::sqrt(u01(rng));
    Vector theta = r0 * random_direction(rng, n, spec);
    Vector gamma(n);
    double worst = -radius;
    for (std::size_t k = 0; k < steps; ++k) {
      if (k % hold == 0) {
        // Alternate between pushing radially outward at full strength and a
        // random bounded input.
        const double len = vec_norm(theta, spec);
        if ((k / hold) % 2 == 0 && len > 0.0) {
          gamma = (gamma_max / len) * theta;
        } else {
          gamma = (gamma_max * u01(rng)) * random_direction(rng, n, spec);
        }
      }
      theta = rk4([&](const Vector& z) { return f * z + gamma; }, theta, h);
      worst = std::max(worst, vec_norm(theta, spec) - radius);
    }
    ++st.trials;
    st.worst = std::max(st.worst, worst);
    if (worst > slack) {
      ++st.failures;
      if (st.detail.empty()) {
        std::ostringstream os;
        os << "system " << s << " (" << to_string(spec.kind()) << ") exceeds the ball by "
           << worst;
        st.detail = os.str();
      }
    }
  }
  return st;
}

CheckStats error_containment(const std::vector<Certificate>& certs, std::size_t runs,
                             std::uint64_t seed, double w_max, double slack) {
  const PlantPtr model = example1();
  const NormSpec spec = NormSpec::l2();
  const Polytope& x_set = model->state_set();
  const auto [v_lo, v_hi] = model->command_set().box_bounds();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> v_dist(v_lo[0], v_hi[0]);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double h = 1e-3;
  const std::size_t steps = 30000;

  CheckStats st;
  std::uint64_t draw = 0;
  while (st.trials < runs) {
    ++draw;
    const double v_bar = v_dist(rng);
    const double dv = v_dist(rng) - v_bar;
    const Certificate& cert = find_certificate(certs, Vector{v_bar});
    const ErrorGains g = error_gains(*model, cert, Vector{v_bar}, spec);
    const double lambda_radius = g.lambda_v * std::abs(dv) + g.lambda_w * w_max;
    const Vector xv = model->steady_state(Vector{v_bar});
    const Vector dx0 = (lambda_radius * std::sqrt(u01(rng))) * random_direction(rng, 2, spec);
    const Vector x0 = xv + dx0;
    if (!x_set.contains(x0)) {
      ++st.resampled;
      continue;
    }

    DisturbanceSpec dist;
    dist.w_max = w_max;
    if (draw % 2 == 0) {
      dist.shape = DisturbanceShape::kConstant;
      dist.direction = Vector{u01(rng) < 0.5 ? -1.0 : 1.0};
    }
    const auto w = sample_disturbance(dist, *model, spec, steps, seed * 1000003 + draw);

    const Linearization lin = linearize(*model, Vector{v_bar});
    const Vector v{v_bar + dv};
    const Vector bdv = lin.B * Vector{dv};
    const double bound = g.gamma_v * std::abs(dv) + g.gamma_w * w_max;

    Vector x = x0;
    Vector dx = dx0;
    double worst = -bound;
    bool left = false;
    for (std::size_t k = 0; k < steps && !left; ++k) {
      x = rk4([&](const Vector& z) { return model->f(z, v) + w[k]; }, x, h);
      dx = rk4([&](const Vector& z) { return lin.A * z + bdv + w[k]; }, dx, h);
      if (x_set.max_violation(x) > 0.0) left = true;
      worst = std::max(worst, vec_norm(x - xv - dx, spec) - bound);
    }
    if (left) {
      ++st.resampled;
      continue;
    }
    ++st.trials;
    st.worst = std::max(st.worst, worst);
    if (worst > slack) {
      ++st.failures;
      if (st.detail.empty()) {
        std::ostringstream os;
        os << "v_bar = " << v_bar << ", dv = " << dv << ": error exceeds bound by " << worst;
        st.detail = os.str();
      }
    }
  }
  return st;
}

QpProblem random_qp(std::mt19937_64& rng, bool feasible) {
  const std::size_t n = 1 + rng() % 5;
  const std::size_t m = rng() % 11;
  std::normal_distribution<double> normal(0.0, 1.0);
  QpProblem p;
  const Matrix l = random_matrix(rng, n, n);
  p.H = (l * l.transpose() + 1e-3 * Matrix::identity(n)).symmetric_part();
  p.g = random_vector(rng, n);
  p.A = random_matrix(rng, m, n);
  p.b = Vector(m);
  if (feasible) {
    const Vector z0 = random_vector(rng, n);
    const Vector az = p.A * z0;
    for (std::size_t i = 0; i < m; ++i) p.b[i] = az[i] + std::abs(normal(rng));
  } else {
    for (std::size_t i = 0; i < m; ++i) p.b[i] = normal(rng) - 0.5;
    // Sometimes plant an explicitly contradictory pair.
    if (m >= 2 && rng() % 3 == 0) {
      for (std::size_t j = 0; j < n; ++j) p.A(1, j) = -p.A(0, j);
      p.b[1] = -p.b[0] - 0.1 - std::abs(normal(rng));
    }
  }
  return p;
}

QpComparison compare_with_oracle(std::size_t count, bool feasible, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  QpComparison c;
  for (std::size_t k = 0; k < count; ++k) {
    const QpProblem p = random_qp(rng, feasible);
    const QpResult a = solve_qp(p);
    const QpResult o = oracle_qp(p);
    ++c.problems;
    if (a.status != o.status) {
      ++c.verdict_mismatches;
      continue;
    }
    if (a.status != QpStatus::kOptimal) continue;
    const double dz = (a.z - o.z).norm_inf();
    const double dobj = std::abs(a.objective - o.objective);
    c.worst_z = std::max(c.worst_z, dz);
    c.worst_objective = std::max(c.worst_objective, dobj);
    if (dz > 1e-6) ++c.z_mismatches;
    if (dobj > 1e-8) ++c.objective_mismatches;
  }
  return c;
}

}  // namespace refgov::test
