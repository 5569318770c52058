#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "macrostate/evolution.hpp"
#include "macrostate/semigroup.hpp"

namespace macrostate {

/// Malformed or incomplete scenario configuration; the message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum ExitCode : int { kExitOk = 0, kExitConfigError = 2, kExitNumericalFailure = 3 };

struct RunOptions {
  std::optional<std::string> output_dir;
  std::vector<std::string> overrides;  ///< "dot.path=value", value parsed as JSON when possible
  bool quiet = false;
};

enum class InitialKind { gibbs, prepared, quench };

struct ScenarioConfig {
  ModelSpec model;
  int mode_cutoff = 0;  ///< 0 keeps the site densities themselves
  ModeFamily mode_basis = ModeFamily::fourier;

  InitialKind initial = InitialKind::gibbs;
  std::optional<RealVector> zeta;   ///< gibbs / quench multipliers, relevant-set order
  bool random_zeta = false;
  double random_scale = 0.5;
  std::optional<PreparationSchedule> schedule;
  ModelSpec pre_model;              ///< quench: couplings of the pre-quench Hamiltonian
  double strength = 1.0;            ///< quench: H_pre = H + strength (H(pre_couplings) - H)

  std::vector<std::string> pipelines;
  std::optional<MemorySettings> mem;
  InversionSettings inversion;
  std::optional<double> semigroup_tau;
  double semigroup_dt = 0.0;
  double dt = 0.01;
  double t_end = 1.0;
  std::string output_dir;
  std::uint64_t seed = 0;
  double tau_t_max = 20.0;
  double tau_dt = 0.05;
  double recurrence_threshold = 0.9;

  nlohmann::json resolved;                  ///< config with every default filled in
  std::vector<std::string> defaults_applied;  ///< dot paths of the defaults
};

/// Sets a dot-path entry ("mem.tau=0.5", array elements by index).
void apply_override(nlohmann::json& cfg, const std::string& assignment);
/// Reads a JSON file and applies overrides; throws ConfigError with line/column on parse errors.
nlohmann::json load_config(const std::string& path, const std::vector<std::string>& overrides = {});
ScenarioConfig parse_config(const nlohmann::json& cfg);

/// Subcommands. Each returns an ExitCode and never throws.
int run_command(const std::string& config_path, const RunOptions& opts, std::ostream& out, std::ostream& err);
int diagnose_tau_command(const std::string& config_path, const RunOptions& opts, std::ostream& out, std::ostream& err);
int compare_command(const std::string& series_a, const std::string& series_b, const RunOptions& opts,
                    std::ostream& out, std::ostream& err);

}  // namespace macrostate
