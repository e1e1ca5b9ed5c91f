#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refgov/bounds.hpp"
#include "refgov/governor.hpp"
#include "refgov/model.hpp"
#include "refgov/norms.hpp"
#include "refgov/sim.hpp"

namespace refgov {

inline constexpr int kSchemaVersion = 1;

/// Process exit codes of the CLI.
enum ExitCode : int {
  kExitOk = 0,
  kExitCertificationFailed = 2,
  kExitConfigError = 3,
  kExitRuntimeFault = 4,
};

struct ModelConfig {
  std::string name;  // "example1", "spacecraft" or "linear"
  SpacecraftParams spacecraft;
  // "linear" only
  Matrix A;
  Matrix B;
  Vector x_lower, x_upper, v_lower, v_upper;
};

struct NormConfig {
  NormKind kind = NormKind::kL2;
  /// WeightedP: use the spacecraft Riccati solution instead of `weight`.
  bool riccati_weight = false;
  Matrix weight;
};

struct CertificationConfig {
  std::size_t grid_density = 5;
  double safety_inflation = 1.05;
  std::size_t cells_per_dim = 1;
};

/// Everything a scenario file describes. Disturbance bound w_max lives in
/// `disturbance` and is copied into the governor config when building.
struct ScenarioConfig {
  int schema_version = kSchemaVersion;
  std::string name;
  ModelConfig model;
  NormConfig norm;
  CertificationConfig certification;
  GovernorConfig governor;
  std::vector<GovernorKind> kinds{GovernorKind::kRgNl};
  DisturbanceSpec disturbance;
  std::uint64_t seed = 1;
  ReferenceSchedule reference;
  Vector v0;
  std::optional<Vector> x0;
  double duration = 60.0;
  double h = 0.005;
};

/// Throws Config on missing fields, wrong types or values out of range.
ScenarioConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& cfg);
ScenarioConfig load_config(const std::filesystem::path& path);

PlantPtr build_model(const ModelConfig& cfg);
NormSpec build_norm(const NormConfig& cfg, const PlantModel& model);
Scenario build_scenario(const ScenarioConfig& cfg);

std::vector<Certificate> certify_scenario(const ScenarioConfig& cfg, const Scenario& sc,
                                          unsigned threads = 0);

nlohmann::json certificates_to_json(const std::vector<Certificate>& certs,
                                    const std::string& model, const NormSpec& spec);
/// Throws Config when the table is malformed or belongs to another model.
std::vector<Certificate> certificates_from_json(const nlohmann::json& j,
                                                const std::string& model);

/// Reads a trace written by write_csv. Only times and states are restored.
Trajectory read_csv_states(std::istream& is, std::size_t state_dim);

/// First governor sample time from which ‖v_{k+1} − r(t_k)‖₂ ≤ tol holds
/// for the rest of the run, or nullopt.
std::optional<double> convergence_time(const ClosedLoopResult& run, const ReferenceSchedule& ref,
                                       double tol = 1e-3);

struct RunOptions {
  std::filesystem::path config;
  std::filesystem::path out = ".";
  std::vector<std::uint64_t> seeds;  // empty = scenario seed
  std::vector<GovernorKind> kinds;   // empty = scenario kinds
  std::optional<std::filesystem::path> certificate;
  std::optional<std::filesystem::path> trace;
  std::optional<std::size_t> grid_density;
  unsigned threads = 0;
};

/// Subcommands. Each returns an ExitCode and never throws; progress goes
/// to `log`.
int cmd_certify(const RunOptions& opts, std::ostream& log);
int cmd_run(const RunOptions& opts, std::ostream& log);
int cmd_compare(const RunOptions& opts, std::ostream& log);
int cmd_audit(const RunOptions& opts, std::ostream& log);

/// Deterministic part of a comparison table (no timing), for tests.
nlohmann::json compare_table(const ScenarioConfig& cfg, const std::vector<Certificate>& certs,
                             std::uint64_t seed, nlohmann::json* timing = nullptr);

}  // namespace refgov
