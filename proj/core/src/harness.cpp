#include "refgov/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "refgov/error.hpp"

namespace refgov {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::kConfig, what); }

const json& require(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) config_error(ctx + ": missing '" + key + "'");
  return j.at(key);
}

Vector vector_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array()) config_error(ctx + ": expected an array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) config_error(ctx + ": expected numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

Matrix matrix_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty()) config_error(ctx + ": expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) config_error(ctx + ": rows must be non-empty arrays");
  Matrix m(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector row = vector_from_json(j[i], ctx);
    if (row.size() != cols) config_error(ctx + ": ragged matrix");
    m.set_row(i, row);
  }
  return m;
}

json to_json_vec(const Vector& v) { return json(v.values()); }

json to_json_mat(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(m.row(i).values());
  return rows;
}

NormKind parse_norm_kind(const std::string& s) {
  if (s == "L1") return NormKind::kL1;
  if (s == "L2") return NormKind::kL2;
  if (s == "Linf") return NormKind::kLinf;
  if (s == "WeightedP") return NormKind::kWeightedP;
  config_error("unknown norm kind '" + s + "'");
}

DisturbanceShape parse_shape(const std::string& s) {
  if (s == "ball") return DisturbanceShape::kBall;
  if (s == "box") return DisturbanceShape::kBox;
  if (s == "constant") return DisturbanceShape::kConstant;
  config_error("unknown disturbance shape '" + s + "'");
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

ModelConfig parse_model(const json& j) {
  ModelConfig m;
  m.name = require(j, "name", "model").get<std::string>();
  if (m.name == "example1") return m;
  if (m.name == "spacecraft") {
    SpacecraftParams& p = m.spacecraft;
    if (j.contains("inertia")) p.inertia = vector_from_json(j["inertia"], "model.inertia");
    if (j.contains("Q")) p.Q = matrix_from_json(j["Q"], "model.Q");
    if (j.contains("R")) p.R = matrix_from_json(j["R"], "model.R");
    p.angle_limit = value_or(j, "angle_limit", p.angle_limit);
    p.rate_limit = value_or(j, "rate_limit", p.rate_limit);
    p.command_margin = value_or(j, "command_margin", p.command_margin);
    return m;
  }
  if (m.name == "linear") {
    m.A = matrix_from_json(require(j, "A", "model"), "model.A");
    m.B = matrix_from_json(require(j, "B", "model"), "model.B");
    m.x_lower = vector_from_json(require(j, "x_lower", "model"), "model.x_lower");
    m.x_upper = vector_from_json(require(j, "x_upper", "model"), "model.x_upper");
    m.v_lower = vector_from_json(require(j, "v_lower", "model"), "model.v_lower");
    m.v_upper = vector_from_json(require(j, "v_upper", "model"), "model.v_upper");
    return m;
  }
  config_error("unknown model '" + m.name + "'");
}

json model_to_json(const ModelConfig& m) {
  json j{{"name", m.name}};
  if (m.name == "spacecraft") {
    const SpacecraftParams& p = m.spacecraft;
    j["inertia"] = to_json_vec(p.inertia);
    j["Q"] = to_json_mat(p.Q);
    j["R"] = to_json_mat(p.R);
    j["angle_limit"] = p.angle_limit;
    j["rate_limit"] = p.rate_limit;
    j["command_margin"] = p.command_margin;
  } else if (m.name == "linear") {
    j["A"] = to_json_mat(m.A);
    j["B"] = to_json_mat(m.B);
    j["x_lower"] = to_json_vec(m.x_lower);
    j["x_upper"] = to_json_vec(m.x_upper);
    j["v_lower"] = to_json_vec(m.v_lower);
    j["v_upper"] = to_json_vec(m.v_upper);
  }
  return j;
}

GovernorConfig parse_governor(const json& j) {
  GovernorConfig g;
  if (j.contains("S")) g.S = matrix_from_json(j["S"], "governor.S");
  g.dt_sample = value_or(j, "dt_sample", g.dt_sample);
  g.dt_check = value_or(j, "dt_check", g.dt_sample);
  g.tol_T = value_or(j, "tol_T", g.tol_T);
  g.delta = value_or(j, "delta", g.delta);
  g.zeta_reg_scale = value_or(j, "zeta_reg_scale", g.zeta_reg_scale);
  g.epsilon = value_or(j, "epsilon", g.epsilon);
  g.kappa = value_or(j, "kappa", g.kappa);
  g.convergence_augmentation = value_or(j, "convergence_augmentation", g.convergence_augmentation);
  g.scalar_mode = value_or(j, "scalar_mode", g.scalar_mode);
  return g;
}

json governor_to_json(const GovernorConfig& g, const std::vector<GovernorKind>& kinds) {
  json j{{"dt_sample", g.dt_sample},
         {"dt_check", g.dt_check},
         {"tol_T", g.tol_T},
         {"delta", g.delta},
         {"zeta_reg_scale", g.zeta_reg_scale},
         {"epsilon", g.epsilon},
         {"kappa", g.kappa},
         {"convergence_augmentation", g.convergence_augmentation},
         {"scalar_mode", g.scalar_mode}};
  if (!g.S.empty()) j["S"] = to_json_mat(g.S);
  json k = json::array();
  for (auto kind : kinds) k.push_back(to_string(kind));
  j["kinds"] = k;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::kConfig, "cannot write " + path.string());
  os << text;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) config_error("cannot create output directory " + dir.string());
}

std::string csv_name(const std::string& scenario, GovernorKind kind, std::uint64_t seed) {
  return scenario + "_" + to_string(kind) + "_seed" + std::to_string(seed) + ".csv";
}

template <typename Body>
int guarded(std::ostream& log, Body&& body) {
  try {
    return body();
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::kCertificationFailed: return kExitCertificationFailed;
      case ErrorCode::kConfig: return kExitConfigError;
      default: return kExitRuntimeFault;
    }
  } catch (const json::exception& e) {
    log << "error: config: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitRuntimeFault;
  }
}

struct Prepared {
  ScenarioConfig cfg;
  Scenario sc;
  std::vector<Certificate> certs;
};

Prepared prepare(const RunOptions& opts, bool need_certs, std::ostream& log) {
  Prepared p;
  p.cfg = load_config(opts.config);
  if (opts.grid_density) p.cfg.certification.grid_density = *opts.grid_density;
  if (p.cfg.certification.grid_density < 2) config_error("grid density must be at least 2");
  p.sc = build_scenario(p.cfg);
  if (!need_certs) return p;
  if (opts.certificate) {
    std::ifstream is(*opts.certificate);
    if (!is) config_error("cannot read certificate " + opts.certificate->string());
    p.certs = certificates_from_json(json::parse(is), p.cfg.model.name);
  } else {
    p.certs = certify_scenario(p.cfg, p.sc, opts.threads);
    log << "certified " << p.certs.size() << " cell(s), mu_e = " << p.certs[0].mu_e << '\n';
  }
  return p;
}

json run_summary(const ClosedLoopResult& r, const ReferenceSchedule& ref) {
  double mean = 0.0;
  double worst = 0.0;
  for (const auto& s : r.steps) {
    mean += s.solve_seconds;
    worst = std::max(worst, s.solve_seconds);
  }
  if (!r.steps.empty()) mean /= static_cast<double>(r.steps.size());
  const auto conv = convergence_time(r, ref);
  return {{"kind", to_string(r.kind)},
          {"seed", r.seed},
          {"violations", r.audit.total_violations()},
          {"max_violation", r.audit.max_violation()},
          {"final_command", to_json_vec(r.final_command)},
          {"convergence_time", conv ? json(*conv) : json(nullptr)},
          {"audit", to_json(r.audit)},
          {"step_seconds_mean", mean},
          {"step_seconds_max", worst}};
}

}  // namespace

// ------------------------------------------------------------------ config

ScenarioConfig parse_config(const json& j) {
  try {
    ScenarioConfig c;
    c.schema_version = require(j, "schema_version", "scenario").get<int>();
    if (c.schema_version != kSchemaVersion) {
      config_error("unsupported schema_version " + std::to_string(c.schema_version));
    }
    c.name = value_or<std::string>(j, "name", "scenario");
    c.model = parse_model(require(j, "model", "scenario"));

    const json& norm = require(j, "norm", "scenario");
    c.norm.kind = parse_norm_kind(require(norm, "kind", "norm").get<std::string>());
    if (c.norm.kind == NormKind::kWeightedP) {
      const json& w = require(norm, "weight", "norm");
      if (w.is_string()) {
        if (w.get<std::string>() != "riccati") config_error("norm.weight must be 'riccati' or a matrix");
        c.norm.riccati_weight = true;
      } else {
        c.norm.weight = matrix_from_json(w, "norm.weight");
      }
    }

    if (j.contains("certification")) {
      const json& cj = j["certification"];
      c.certification.grid_density = value_or<std::size_t>(cj, "grid_density", c.certification.grid_density);
      c.certification.safety_inflation = value_or(cj, "safety_inflation", c.certification.safety_inflation);
      c.certification.cells_per_dim = value_or<std::size_t>(cj, "cells_per_dim", c.certification.cells_per_dim);
    }
    if (c.certification.grid_density < 2) config_error("certification.grid_density must be >= 2");
    if (!(c.certification.safety_inflation >= 1.0)) config_error("safety_inflation must be >= 1");
    if (c.certification.cells_per_dim < 1) config_error("cells_per_dim must be >= 1");

    const json& gj = require(j, "governor", "scenario");
    c.governor = parse_governor(gj);
    if (gj.contains("kinds")) {
      c.kinds.clear();
      for (const auto& k : gj["kinds"]) c.kinds.push_back(parse_governor_kind(k.get<std::string>()));
      if (c.kinds.empty()) config_error("governor.kinds is empty");
    }

    if (j.contains("disturbance")) {
      const json& dj = j["disturbance"];
      c.disturbance.w_max = value_or(dj, "w_max", 0.0);
      c.disturbance.shape = parse_shape(value_or<std::string>(dj, "shape", "ball"));
      c.disturbance.sigma_ratio = value_or(dj, "sigma_ratio", c.disturbance.sigma_ratio);
      if (dj.contains("direction")) c.disturbance.direction = vector_from_json(dj["direction"], "disturbance.direction");
      c.seed = value_or<std::uint64_t>(dj, "seed", c.seed);
    }
    if (!(c.disturbance.w_max >= 0.0)) config_error("disturbance.w_max must be >= 0");
    if (!(c.disturbance.sigma_ratio > 0.0)) config_error("disturbance.sigma_ratio must be > 0");
    c.governor.w_max = c.disturbance.w_max;

    const json& ref = require(j, "reference", "scenario");
    if (!ref.is_array() || ref.empty()) config_error("reference must be a non-empty array");
    for (const auto& seg : ref) {
      c.reference.segments.emplace_back(require(seg, "t", "reference").get<double>(),
                                        vector_from_json(require(seg, "r", "reference"), "reference.r"));
    }
    c.v0 = vector_from_json(require(j, "v0", "scenario"), "v0");
    if (j.contains("x0") && !j["x0"].is_null()) c.x0 = vector_from_json(j["x0"], "x0");
    c.duration = require(j, "duration", "scenario").get<double>();
    c.h = require(j, "h", "scenario").get<double>();
    return c;
  } catch (const json::exception& e) {
    config_error(std::string("scenario: ") + e.what());
  }
}

json to_json(const ScenarioConfig& c) {
  json norm{{"kind", to_string(c.norm.kind)}};
  if (c.norm.kind == NormKind::kWeightedP) {
    norm["weight"] = c.norm.riccati_weight ? json("riccati") : to_json_mat(c.norm.weight);
  }
  json dist{{"w_max", c.disturbance.w_max},
            {"shape", to_string(c.disturbance.shape)},
            {"sigma_ratio", c.disturbance.sigma_ratio},
            {"seed", c.seed}};
  if (!c.disturbance.direction.empty()) dist["direction"] = to_json_vec(c.disturbance.direction);
  json ref = json::array();
  for (const auto& [t, r] : c.reference.segments) ref.push_back({{"t", t}, {"r", to_json_vec(r)}});
  return {{"schema_version", c.schema_version},
          {"name", c.name},
          {"model", model_to_json(c.model)},
          {"norm", norm},
          {"certification",
           {{"grid_density", c.certification.grid_density},
            {"safety_inflation", c.certification.safety_inflation},
            {"cells_per_dim", c.certification.cells_per_dim}}},
          {"governor", governor_to_json(c.governor, c.kinds)},
          {"disturbance", dist},
          {"reference", ref},
          {"v0", to_json_vec(c.v0)},
          {"x0", c.x0 ? to_json_vec(*c.x0) : json(nullptr)},
          {"duration", c.duration},
          {"h", c.h}};
}

ScenarioConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) config_error("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    config_error(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

PlantPtr build_model(const ModelConfig& cfg) {
  if (cfg.name == "example1") return example1();
  if (cfg.name == "spacecraft") return spacecraft(cfg.spacecraft);
  if (cfg.name == "linear") {
    return linear_plant(cfg.A, cfg.B, Polytope::box(cfg.x_lower, cfg.x_upper),
                        Polytope::box(cfg.v_lower, cfg.v_upper));
  }
  config_error("unknown model '" + cfg.name + "'");
}

NormSpec build_norm(const NormConfig& cfg, const PlantModel& model) {
  switch (cfg.kind) {
    case NormKind::kL1: return NormSpec::l1();
    case NormKind::kL2: return NormSpec::l2();
    case NormKind::kLinf: return NormSpec::linf();
    case NormKind::kWeightedP: {
      if (cfg.riccati_weight) {
        const auto* sc = dynamic_cast<const SpacecraftModel*>(&model);
        if (!sc) config_error("the 'riccati' weight needs the spacecraft model");
        return NormSpec::weighted(sc->riccati());
      }
      if (cfg.weight.rows() != model.state_dim()) config_error("norm weight dimension");
      try {
        return NormSpec::weighted(cfg.weight);
      } catch (const Error& e) {
        config_error(std::string("norm weight: ") + e.what());
      }
    }
  }
  config_error("bad norm");
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  Scenario sc;
  sc.name = cfg.name;
  sc.model = build_model(cfg.model);
  sc.norm = build_norm(cfg.norm, *sc.model);
  sc.governor = cfg.governor;
  sc.governor.w_max = cfg.disturbance.w_max;
  sc.disturbance = cfg.disturbance;
  sc.seed = cfg.seed;
  sc.reference = cfg.reference;
  sc.v0 = cfg.v0;
  sc.x0 = cfg.x0;
  sc.duration = cfg.duration;
  sc.h = cfg.h;
  sc.validate();
  return sc;
}

std::vector<Certificate> certify_scenario(const ScenarioConfig& cfg, const Scenario& sc,
                                          unsigned threads) {
  CertifyOptions opt;
  opt.grid_density = cfg.certification.grid_density;
  opt.safety_inflation = cfg.certification.safety_inflation;
  opt.threads = threads;
  return certify(*sc.model, sc.norm,
                 uniform_partition(sc.model->command_set(), cfg.certification.cells_per_dim), opt);
}

// ------------------------------------------------------------ certificates

json certificates_to_json(const std::vector<Certificate>& certs, const std::string& model,
                          const NormSpec& spec) {
  json cells = json::array();
  for (const auto& c : certs) {
    const auto [lo, hi] = c.region.box_bounds();
    cells.push_back({{"lower", to_json_vec(lo)},
                     {"upper", to_json_vec(hi)},
                     {"mu_e", c.mu_e},
                     {"eta_x", c.eta_x},
                     {"eta_v", c.eta_v},
                     {"mu_e_raw", c.mu_e_raw},
                     {"eta_x_raw", c.eta_x_raw},
                     {"eta_v_raw", c.eta_v_raw},
                     {"grid_density", c.grid_density},
                     {"safety_inflation", c.safety_inflation}});
  }
  return {{"schema_version", kSchemaVersion},
          {"model", model},
          {"norm", to_string(spec.kind())},
          {"cells", cells}};
}

std::vector<Certificate> certificates_from_json(const json& j, const std::string& model) {
  try {
    if (require(j, "model", "certificate").get<std::string>() != model) {
      config_error("certificate belongs to model '" + j["model"].get<std::string>() + "'");
    }
    std::vector<Certificate> out;
    for (const auto& cj : require(j, "cells", "certificate")) {
      Certificate c;
      c.region = Polytope::box(vector_from_json(require(cj, "lower", "cell"), "cell.lower"),
                               vector_from_json(require(cj, "upper", "cell"), "cell.upper"));
      c.mu_e = require(cj, "mu_e", "cell").get<double>();
      c.eta_x = require(cj, "eta_x", "cell").get<double>();
      c.eta_v = require(cj, "eta_v", "cell").get<double>();
      c.mu_e_raw = value_or(cj, "mu_e_raw", c.mu_e);
      c.eta_x_raw = value_or(cj, "eta_x_raw", c.eta_x);
      c.eta_v_raw = value_or(cj, "eta_v_raw", c.eta_v);
      c.grid_density = value_or<std::size_t>(cj, "grid_density", 0);
      c.safety_inflation = value_or(cj, "safety_inflation", 1.0);
      if (!(c.mu_e < 0.0) || !(c.eta_x >= 0.0) || !(c.eta_v >= 0.0)) {
        config_error("certificate cell has invalid bounds");
      }
      out.push_back(std::move(c));
    }
    if (out.empty()) config_error("certificate has no cells");
    return out;
  } catch (const json::exception& e) {
    config_error(std::string("certificate: ") + e.what());
  }
}

// -------------------------------------------------------------------- traces

Trajectory read_csv_states(std::istream& is, std::size_t state_dim) {
  Trajectory traj;
  std::string line;
  if (!std::getline(is, line) || line.rfind("t,", 0) != 0) config_error("trace has no header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (values.size() < state_dim + 1 && std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        config_error("trace has a malformed number: " + cell);
      }
    }
    if (values.size() != state_dim + 1) config_error("trace row is too short");
    traj.times.push_back(values[0]);
    traj.states.emplace_back(std::vector<double>(values.begin() + 1, values.end()));
  }
  return traj;
}

std::optional<double> convergence_time(const ClosedLoopResult& run, const ReferenceSchedule& ref,
                                       double tol) {
  std::optional<double> since;
  for (const auto& s : run.steps) {
    const bool close = (s.command - ref.at(s.t)).norm2() <= tol;
    if (close && !since) since = s.t;
    if (!close) since.reset();
  }
  return since;
}

// ------------------------------------------------------------------ commands

int cmd_certify(const RunOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    Prepared p = prepare(opts, false, log);
    ensure_dir(opts.out);
    const auto start = std::chrono::steady_clock::now();
    const auto certs = certify_scenario(p.cfg, p.sc, opts.threads);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json j = certificates_to_json(certs, p.cfg.model.name, p.sc.norm);
    j["seconds"] = secs;
    const fs::path path = opts.out / (p.cfg.name + "_certificate.json");
    write_text(path, j.dump(2) + "\n");
    for (std::size_t i = 0; i < certs.size(); ++i) {
      log << "cell " << i << ": mu_e = " << certs[i].mu_e << " (grid max " << certs[i].mu_e_raw
          << "), eta_x = " << certs[i].eta_x << ", eta_v = " << certs[i].eta_v << '\n';
    }
    log << "wrote " << path.string() << '\n';
    return kExitOk;
  });
}

int cmd_run(const RunOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    Prepared p = prepare(opts, true, log);
    ensure_dir(opts.out);
    const auto kinds = opts.kinds.empty() ? p.cfg.kinds : opts.kinds;
    const auto seeds = opts.seeds.empty() ? std::vector<std::uint64_t>{p.cfg.seed} : opts.seeds;
    json runs = json::array();
    std::size_t total_violations = 0;
    for (GovernorKind kind : kinds) {
      auto sink = [&](const ClosedLoopResult& r) {
        std::ofstream os(opts.out / csv_name(p.cfg.name, kind, r.seed));
        write_csv(os, r.trajectory);
      };
      const auto results = run_monte_carlo(p.sc, kind, p.certs, seeds, opts.threads, sink, true);
      for (const auto& r : results) {
        json s = run_summary(r, p.sc.reference);
        total_violations += r.audit.total_violations();
        log << to_string(kind) << " seed " << r.seed << ": violations "
            << r.audit.total_violations() << ", final command "
            << s["final_command"].dump() << '\n';
        runs.push_back(std::move(s));
      }
    }
    const json summary{{"scenario", p.cfg.name}, {"runs", runs}, {"total_violations", total_violations}};
    write_text(opts.out / (p.cfg.name + "_audit.json"), summary.dump(2) + "\n");
    return kExitOk;
  });
}

json compare_table(const ScenarioConfig& cfg, const std::vector<Certificate>& certs,
                   std::uint64_t seed, json* timing) {
  const Scenario sc = build_scenario(cfg);
  json rows = json::array();
  for (GovernorKind kind : {GovernorKind::kRgNl, GovernorKind::kRgL, GovernorKind::kNone}) {
    const ClosedLoopResult r = run_seed(sc, kind, certs, seed);
    const json s = run_summary(r, sc.reference);
    rows.push_back({{"kind", s["kind"]},
                    {"violations", s["violations"]},
                    {"max_violation", s["max_violation"]},
                    {"convergence_time", s["convergence_time"]},
                    {"final_command", s["final_command"]}});
    if (timing) (*timing)[to_string(kind)] = s["step_seconds_mean"];
  }
  return {{"scenario", cfg.name}, {"seed", seed}, {"rows", rows}};
}

int cmd_compare(const RunOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    Prepared p = prepare(opts, true, log);
    ensure_dir(opts.out);
    const std::uint64_t seed = opts.seeds.empty() ? p.cfg.seed : opts.seeds.front();
    json timing = json::object();
    json table = compare_table(p.cfg, p.certs, seed, &timing);

    std::ostringstream txt;
    txt << std::left << std::setw(8) << "kind" << std::right << std::setw(12) << "violations"
        << std::setw(16) << "max_violation" << std::setw(14) << "converged_at" << std::setw(16)
        << "mean_step_ms" << '\n';
    for (const auto& row : table["rows"]) {
      char buf[160];
      const auto& conv = row["convergence_time"];
      const std::string conv_s = conv.is_null() ? "never" : std::to_string(conv.get<double>());
      std::snprintf(buf, sizeof buf, "%-8s%12zu%16.3e%14s%16.4f\n",
                    row["kind"].get<std::string>().c_str(), row["violations"].get<std::size_t>(),
                    row["max_violation"].get<double>(), conv_s.c_str(),
                    1e3 * timing[row["kind"].get<std::string>()].get<double>());
      txt << buf;
    }
    log << txt.str();
    json out = table;
    out["step_seconds_mean"] = timing;
    write_text(opts.out / (p.cfg.name + "_compare.json"), out.dump(2) + "\n");
    write_text(opts.out / (p.cfg.name + "_compare.txt"), txt.str());
    return kExitOk;
  });
}

int cmd_audit(const RunOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    Prepared p = prepare(opts, false, log);
    std::vector<fs::path> traces;
    if (opts.trace) {
      traces.push_back(*opts.trace);
    } else {
      if (!fs::is_directory(opts.out)) config_error("no trace given and " + opts.out.string() + " is not a directory");
      for (const auto& e : fs::directory_iterator(opts.out)) {
        const std::string fname = e.path().filename().string();
        if (e.path().extension() == ".csv" && fname.rfind(p.cfg.name + "_", 0) == 0) {
          traces.push_back(e.path());
        }
      }
      std::sort(traces.begin(), traces.end());
    }
    if (traces.empty()) config_error("no traces to audit");
    json reports = json::array();
    std::size_t total = 0;
    for (const auto& path : traces) {
      std::ifstream is(path);
      if (!is) config_error("cannot read trace " + path.string());
      const Trajectory traj = read_csv_states(is, p.sc.model->state_dim());
      const AuditReport rep = audit(traj, p.sc.model->state_set());
      total += rep.total_violations();
      log << path.filename().string() << ": violations " << rep.total_violations() << '\n';
      json r = to_json(rep);
      r["trace"] = path.filename().string();
      reports.push_back(std::move(r));
    }
    ensure_dir(opts.out);
    write_text(opts.out / (p.cfg.name + "_trace_audit.json"),
               json{{"scenario", p.cfg.name}, {"total_violations", total}, {"traces", reports}}.dump(2) + "\n");
    return kExitOk;
  });
}

}  // namespace refgov
