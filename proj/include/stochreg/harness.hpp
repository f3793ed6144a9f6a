#ifndef STOCHREG_HARNESS_HPP
#define STOCHREG_HARNESS_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stochreg/control.hpp"
#include "stochreg/model.hpp"
#include "stochreg/sim.hpp"

namespace stochreg {

struct ControllerSpec {
  std::string type = "approx_fi";  // ideal_fi | approx_fi | ideal_of | hybrid_of | internal_model
  std::optional<RowVec> K;
  std::optional<GainSchedule> L;
  std::optional<Mat> H_im;
  std::optional<Vec> L_im;
  std::optional<Vec> G2_im;
  bool oracle = false;  // must be set for ideal_of
  std::optional<double> tau_rel;
};

struct ExperimentConfig {
  std::string scenario = "circuit";  // circuit | scalar | custom
  std::string model_file;            // custom only
  double d = 1.0;                    // circuit amplitude
  double c = 0.5;                    // scalar output weight
  ControllerSpec controller;
  SimConfig sim;
  std::string sweep_parameter;  // epsilon | d | c, empty for a single run
  std::vector<double> sweep_values;
  std::vector<std::uint64_t> seeds{1};
  std::string output = "out";
  bool write_trajectories = true;
  std::size_t trajectory_rows = 4000;
  unsigned workers = 0;
  std::vector<std::string> defaults_used;  // calibration defaults, reported in summary.json

  bool has_sweep() const { return !sweep_parameter.empty(); }
};

// Throws ConfigError with "source:line:" prefixes where a line is known.
ExperimentConfig parse_experiment(const std::string& text, const std::string& source = "config");
ExperimentConfig load_experiment(const std::string& path);

struct MetricsRow {
  std::string scenario;
  std::string controller;
  std::string parameter;
  double value = 0.0;
  std::uint64_t seed = 0;
  double rms_e = 0.0;
  double rms_zx = 0.0;  // NaN without an observer
  double skip_rate = 0.0;
  bool diverged = false;
};

struct ExperimentResult {
  std::vector<MetricsRow> rows;
  std::vector<HybridTrajectory> trajectories;  // same order as rows, when kept
};

// Model, exosystem and gains for one sweep point.
struct Scenario {
  PlantModel model;
  Exosystem exo;
  GainSet gains;
};

Scenario build_scenario(const ExperimentConfig& cfg, double value);

std::unique_ptr<ControllerPolicy> make_policy(const ExperimentConfig& cfg, const Scenario& s,
                                              const SimConfig& sim);

// Runs every (value, seed) pair; keep_trajectories retains the decimated trajectories.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool keep_trajectories = false);

// RMS of e over recorded rows with t >= t_ss.
double steady_state_rms(const HybridTrajectory& traj, double t_ss);

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows);
std::string summary_json(const ExperimentConfig& cfg, const std::vector<MetricsRow>& rows);

// CLI entry points; return process exit codes (0 ok, 1 config error, 2 divergence).
int run_command(const std::string& config_path);
int reproduce_command(const std::string& figure, const std::string& out_dir, bool fast);
int check_stability_command(const std::string& model_path);

// Preset experiment behind `reproduce`, fig3 | fig4 | fig5 | fig6.
ExperimentConfig figure_config(const std::string& figure, bool fast);

}  // namespace stochreg

#endif  // STOCHREG_HARNESS_HPP
