#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gradflow/measures.hpp"
#include "gradflow/particle_solver.hpp"
#include "gradflow/potentials.hpp"
#include "gradflow/quantile_solver.hpp"

namespace gradflow {

inline constexpr const char* kToolVersion = "0.1.0";

struct ParticleListSpec {
  std::vector<ParticleSpecies> species;
};

struct QuantileGridSpec {
  std::vector<std::vector<double>> u;
};

/// Named initial profile for d = 1: "two_diracs", "uniform" or "gauss_pair".
struct PresetSpec {
  std::string name;
  nlohmann::json args = nlohmann::json::object();
};

using InitialSpec = std::variant<ParticleListSpec, QuantileGridSpec, PresetSpec>;

struct ExperimentConfig {
  SystemParams params;  // E is taken from the primary initial datum
  PotentialMatrix potential;
  InitialSpec initial;
  std::optional<InitialSpec> initial_alt;
  SolverConfig solver;
  bool dt_from_stability_bound = false;
  std::size_t M = 256;
  std::uint64_t seed = 0;
  std::string config_hash;  // FNV-1a of the canonical JSON text
};

/// Command-line values that take precedence over the file.
struct ConfigOverrides {
  std::optional<double> dt;
  std::optional<double> t_end;
  std::optional<std::uint64_t> seed;
};

/// Throws IoError when the file cannot be read and ConfigError listing every
/// schema or consistency problem found.
ExperimentConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});
ExperimentConfig parse_config_json(const nlohmann::json& doc, const ConfigOverrides& overrides = {});

/// Kernel and matrix fragments (also used by parse_config_json).
ScalarPotential parse_potential_entry(const nlohmann::json& j);
PotentialMatrix parse_potential_matrix(const nlohmann::json& j);

/// Initial data on the quantile grid (d = 1 only).
QuantileState initial_quantiles(const ExperimentConfig& cfg, const InitialSpec& spec);
QuantileState initial_quantiles(const ExperimentConfig& cfg);
/// Initial data as particles; grids and presets give M equal-mass particles.
ParticleState initial_particles(const ExperimentConfig& cfg, const InitialSpec& spec);
ParticleState initial_particles(const ExperimentConfig& cfg);

/// Second datum for contraction checks: `initial_alt` when given, otherwise a
/// stretched and shifted copy of the primary datum. Either way it is moved
/// rigidly so that its weighted center of mass equals the primary one.
QuantileState alternate_quantiles(const ExperimentConfig& cfg);

/// Reproducibility record for an output file.
nlohmann::json manifest(const ExperimentConfig& cfg, const std::string& command, double dt_used);

/// Convexity report plus potential validation, as printed by `analyze`.
nlohmann::json analysis_json(const ExperimentConfig& cfg);

}  // namespace gradflow
