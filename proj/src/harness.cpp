#include "stochreg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "parallel.hpp"
#include "stochreg/io.hpp"
#include "stochreg/recon.hpp"
#include "stochreg/regeq.hpp"
#include "stochreg/stability.hpp"

namespace stochreg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Threshold used by the output-feedback reconstruction unless configured.
// v^z = Cb (F z + G u + R w) crosses zero periodically on the circuit, so the
// output scheme skips those samples rather than amplifying noise.
constexpr double kOutputTauRel = 1e-3;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

class ConfigReader {
 public:
  ConfigReader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const std::size_t line = line_of_key(text_, key);
    throw ConfigError(source_ + (line ? ":" + std::to_string(line) : std::string()) + ": " + msg);
  }

  double number(const json& j, const std::string& key) const {
    if (!j.is_number()) fail(key, "\"" + key + "\" must be a number");
    return j.get<double>();
  }

  double period(const json& j, const std::string& key) const {
    if (j.is_string()) {
      if (j.get<std::string>() == "inf") return kInfinitePeriod;
      fail(key, "\"" + key + "\" must be a number or \"inf\"");
    }
    return number(j, key);
  }

  Mat matrix(const json& j, const std::string& key) const {
    try {
      return matrix_from_json(j, key.c_str());
    } catch (const ConfigError& err) {
      fail(key, err.what());
    }
  }

  Vec vector(const json& j, const std::string& key) const {
    try {
      return vector_from_json(j, key.c_str());
    } catch (const ConfigError& err) {
      fail(key, err.what());
    }
  }

 private:
  const std::string& text_;
  std::string source_;
};

void check_keys(const ConfigReader& r, const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) r.fail(it.key(), "unknown key \"" + it.key() + "\" in " + where);
}

}  // namespace

ExperimentConfig parse_experiment(const std::string& text, const std::string& source) {
  const json j = parse_json_text(text, source);
  ConfigReader r(text, source);
  if (!j.is_object()) throw ConfigError(source + ":1: configuration must be a JSON object");
  check_keys(r, j,
             {"scenario", "model", "d", "c", "controller", "sim", "sweep", "seeds", "output",
              "write_trajectories", "trajectory_rows", "workers"},
             "configuration");

  ExperimentConfig cfg;
  if (j.contains("scenario")) {
    if (!j["scenario"].is_string()) r.fail("scenario", "\"scenario\" must be a string");
    cfg.scenario = j["scenario"].get<std::string>();
  } else {
    cfg.defaults_used.push_back("scenario");
  }
  if (cfg.scenario != "circuit" && cfg.scenario != "scalar" && cfg.scenario != "custom")
    r.fail("scenario", "scenario must be circuit, scalar or custom");
  if (cfg.scenario == "custom") {
    if (!j.contains("model") || !j["model"].is_string())
      r.fail("scenario", "custom scenario needs a \"model\" file path");
    cfg.model_file = j["model"].get<std::string>();
    const fs::path base = fs::path(source).parent_path();
    if (fs::path(cfg.model_file).is_relative() && !base.empty())
      cfg.model_file = (base / cfg.model_file).string();
  }
  if (j.contains("d")) cfg.d = r.number(j["d"], "d");
  if (j.contains("c")) cfg.c = r.number(j["c"], "c");

  const bool scalar = cfg.scenario == "scalar";
  cfg.sim.dt = scalar ? 1e-3 : 5e-7;
  cfg.sim.horizon = scalar ? 20.0 : 2.0;
  if (j.contains("sim")) {
    const json& s = j["sim"];
    if (!s.is_object()) r.fail("sim", "\"sim\" must be an object");
    check_keys(r, s, {"dt", "epsilon", "horizon", "steady_start", "record_every", "blowup"}, "sim");
    if (s.contains("dt")) cfg.sim.dt = r.number(s["dt"], "dt");
    if (s.contains("epsilon")) cfg.sim.epsilon = r.period(s["epsilon"], "epsilon");
    if (s.contains("horizon"))
      cfg.sim.horizon = r.number(s["horizon"], "horizon");
    else
      cfg.defaults_used.push_back("horizon");
    if (s.contains("steady_start"))
      cfg.sim.steady_start = r.number(s["steady_start"], "steady_start");
    else {
      cfg.sim.steady_start = cfg.sim.horizon / 2;
      cfg.defaults_used.push_back("steady_start");
    }
    if (s.contains("record_every")) cfg.sim.record_every = static_cast<std::size_t>(r.number(s["record_every"], "record_every"));
    if (s.contains("blowup")) cfg.sim.blowup = r.number(s["blowup"], "blowup");
  } else {
    cfg.sim.steady_start = cfg.sim.horizon / 2;
    cfg.defaults_used.insert(cfg.defaults_used.end(), {"horizon", "steady_start"});
  }

  if (j.contains("controller")) {
    const json& c = j["controller"];
    if (!c.is_object()) r.fail("controller", "\"controller\" must be an object");
    check_keys(r, c, {"type", "K", "L_schedule", "L", "H_im", "L_im", "G2_im", "oracle", "tau_rel"},
               "controller");
    ControllerSpec& spec = cfg.controller;
    if (c.contains("type")) {
      if (!c["type"].is_string()) r.fail("type", "controller \"type\" must be a string");
      spec.type = c["type"].get<std::string>();
    }
    static const std::set<std::string> types{"ideal_fi", "approx_fi", "ideal_of", "hybrid_of",
                                             "internal_model"};
    if (!types.count(spec.type)) r.fail("type", "unknown controller type \"" + spec.type + "\"");
    if (c.contains("K")) spec.K = RowVec(r.vector(c["K"], "K").transpose());
    if (c.contains("L")) spec.L = GainSchedule(r.vector(c["L"], "L"));
    if (c.contains("L_schedule")) {
      const json& ls = c["L_schedule"];
      if (!ls.is_array() || ls.empty()) r.fail("L_schedule", "\"L_schedule\" must be a nonempty array");
      std::vector<std::pair<double, Vec>> pieces;
      for (const json& piece : ls) {
        if (!piece.is_object() || !piece.contains("t") || !piece.contains("L"))
          r.fail("L_schedule", "each L_schedule entry needs \"t\" and \"L\"");
        pieces.emplace_back(r.number(piece["t"], "L_schedule"), r.vector(piece["L"], "L_schedule"));
      }
      spec.L = GainSchedule(std::move(pieces));
    }
    if (c.contains("H_im")) spec.H_im = r.matrix(c["H_im"], "H_im");
    if (c.contains("L_im")) spec.L_im = r.vector(c["L_im"], "L_im");
    if (c.contains("G2_im")) spec.G2_im = r.vector(c["G2_im"], "G2_im");
    if (c.contains("oracle")) {
      if (!c["oracle"].is_boolean()) r.fail("oracle", "\"oracle\" must be true or false");
      spec.oracle = c["oracle"].get<bool>();
    }
    if (c.contains("tau_rel")) spec.tau_rel = r.number(c["tau_rel"], "tau_rel");
    if (spec.type == "ideal_of" && !spec.oracle)
      r.fail("type", "ideal_of uses the true noise path and must be enabled with \"oracle\": true");
  } else {
    cfg.defaults_used.push_back("controller");
  }

  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    if (!s.is_object() || !s.contains("parameter") || !s.contains("values"))
      r.fail("sweep", "\"sweep\" needs \"parameter\" and \"values\"");
    check_keys(r, s, {"parameter", "values"}, "sweep");
    cfg.sweep_parameter = s["parameter"].get<std::string>();
    if (cfg.sweep_parameter != "epsilon" && cfg.sweep_parameter != "d" && cfg.sweep_parameter != "c")
      r.fail("parameter", "sweep parameter must be epsilon, d or c");
    if (cfg.sweep_parameter == "d" && cfg.scenario != "circuit")
      r.fail("parameter", "sweeping d needs the circuit scenario");
    if (cfg.sweep_parameter == "c" && cfg.scenario != "scalar")
      r.fail("parameter", "sweeping c needs the scalar scenario");
    if (!s["values"].is_array() || s["values"].empty())
      r.fail("values", "sweep \"values\" must be a nonempty array");
    for (const json& v : s["values"])
      cfg.sweep_values.push_back(cfg.sweep_parameter == "epsilon" ? r.period(v, "values")
                                                                  : r.number(v, "values"));
  }

  if (j.contains("seeds")) {
    const json& s = j["seeds"];
    if (!s.is_array() || s.empty()) r.fail("seeds", "\"seeds\" must be a nonempty array");
    cfg.seeds.clear();
    for (const json& v : s) {
      if (!v.is_number_unsigned()) r.fail("seeds", "seeds must be nonnegative integers");
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
    std::set<std::uint64_t> distinct(cfg.seeds.begin(), cfg.seeds.end());
    if (distinct.size() != cfg.seeds.size()) r.fail("seeds", "seeds must be distinct");
  } else {
    cfg.seeds.clear();
    for (std::uint64_t s = 1; s <= 10; ++s) cfg.seeds.push_back(s);
    cfg.defaults_used.push_back("seeds");
  }
  if (j.contains("output")) cfg.output = j["output"].get<std::string>();
  if (j.contains("write_trajectories")) cfg.write_trajectories = j["write_trajectories"].get<bool>();
  if (j.contains("trajectory_rows"))
    cfg.trajectory_rows = static_cast<std::size_t>(r.number(j["trajectory_rows"], "trajectory_rows"));
  if (j.contains("workers")) cfg.workers = static_cast<unsigned>(r.number(j["workers"], "workers"));

  try {
    SimConfig probe = cfg.sim;
    for (double v : cfg.sweep_values)
      if (cfg.sweep_parameter == "epsilon") {
        probe.epsilon = v;
        probe.validate();
      }
    if (cfg.sweep_parameter != "epsilon") probe.validate();
  } catch (const ConfigError& err) {
    r.fail(cfg.sweep_parameter == "epsilon" ? "values" : "sim", err.what());
  }
  return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
  return parse_experiment(read_text_file(path), path);
}

Scenario build_scenario(const ExperimentConfig& cfg, double value) {
  Scenario s;
  const bool sweep_d = cfg.sweep_parameter == "d";
  const bool sweep_c = cfg.sweep_parameter == "c";
  if (cfg.scenario == "circuit") {
    CircuitPreset p = preset_circuit(sweep_d ? value : cfg.d);
    s.model = std::move(p.model);
    s.exo = std::move(p.exo);
    s.gains = std::move(p.gains);
  } else if (cfg.scenario == "scalar") {
    ScalarPreset p = preset_scalar(sweep_c ? value : cfg.c);
    s.model = std::move(p.model);
    s.exo = std::move(p.exo);
    s.gains.K = RowVec::Constant(1, -2.0);
  } else {
    ModelFile f = read_model_file(cfg.model_file);
    s.model = std::move(f.model);
    s.exo = std::move(f.exo);
    if (f.gains) s.gains = *f.gains;
  }
  if (cfg.controller.K) s.gains.K = *cfg.controller.K;
  if (cfg.controller.L) s.gains.L = *cfg.controller.L;
  if (s.gains.K.size() != s.model.n()) throw ConfigError("controller gain K is missing or has the wrong length");
  return s;
}

std::unique_ptr<ControllerPolicy> make_policy(const ExperimentConfig& cfg, const Scenario& s,
                                              const SimConfig& sim) {
  const RelativeDegreeInfo rd = stochastic_relative_degree(s.model, s.exo);
  const ControllerSpec& c = cfg.controller;
  ReconConfig recon;
  recon.eps = sim.epsilon;
  if (c.type == "ideal_fi") return std::make_unique<IdealFiPolicy>(s.model, s.exo, rd, s.gains.K);
  if (c.type == "approx_fi") {
    if (c.tau_rel) recon.tau_rel = *c.tau_rel;
    return std::make_unique<ApproxFiPolicy>(s.model, s.exo, rd, s.gains.K, recon);
  }
  if (c.type == "ideal_of") {
    if (!c.oracle) throw ConfigError("ideal_of requires the oracle flag");
    return std::make_unique<IdealOfPolicy>(s.model, s.exo, rd, s.gains);
  }
  if (c.type == "hybrid_of") {
    recon.tau_rel = c.tau_rel.value_or(kOutputTauRel);
    return std::make_unique<HybridOfPolicy>(s.model, s.exo, rd, s.gains, sim.epsilon, recon);
  }
  if (c.type == "internal_model") {
    if (c.tau_rel) recon.tau_rel = *c.tau_rel;
    InternalModelParams im = default_internal_model(s.exo);
    if (c.H_im) im.H = *c.H_im;
    if (c.L_im) im.L = *c.L_im;
    if (c.G2_im) im.G2 = *c.G2_im;
    return std::make_unique<InternalModelPolicy>(s.model, s.exo, rd, s.gains.K, im, recon);
  }
  throw ConfigError("unknown controller type " + c.type);
}

double steady_state_rms(const HybridTrajectory& traj, double t_ss) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.t[i] < t_ss) continue;
    sum += traj.e[i] * traj.e[i];
    ++count;
  }
  if (count == 0) throw ConfigError("steady-state window is empty");
  return std::sqrt(sum / count);
}

namespace {

std::string run_label(const ExperimentConfig& cfg, double value, std::uint64_t seed) {
  std::string label = "traj";
  if (cfg.has_sweep()) label += "_" + cfg.sweep_parameter + "=" + short_fmt(value);
  return label + "_seed" + std::to_string(seed);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool keep_trajectories) {
  const std::vector<double> values = cfg.has_sweep() ? cfg.sweep_values : std::vector<double>{kNaN};
  std::vector<std::uint64_t> seeds = cfg.seeds;
  std::sort(seeds.begin(), seeds.end());
  const std::size_t nseeds = seeds.size();
  const std::size_t jobs = values.size() * nseeds;

  ExperimentResult out;
  out.rows.resize(jobs);
  if (keep_trajectories) out.trajectories.resize(jobs);
  if (cfg.write_trajectories) fs::create_directories(cfg.output);

  detail::parallel_for(
      jobs,
      [&](std::size_t idx) {
        const double value = values[idx / nseeds];
        const std::uint64_t seed = seeds[idx % nseeds];
        const Scenario s = build_scenario(cfg, value);
        SimConfig sim = cfg.sim;
        if (cfg.sweep_parameter == "epsilon") sim.epsilon = value;
        sim.seed = seed;
        if (sim.record_every == 0)
          sim.record_every = std::max<std::size_t>(1, sim.steps() / std::max<std::size_t>(1, cfg.trajectory_rows));
        const auto per = sim.steps_per_sample();
        sim.record_jumps = per && sim.steps() / *per <= cfg.trajectory_rows / 4;

        auto policy = make_policy(cfg, s, sim);
        const BrownianPath path = BrownianPath::generate(seed, sim.dt, sim.horizon);
        HybridTrajectory traj = simulate_closed_loop(s.model, s.exo, *policy, path, sim);

        MetricsRow& row = out.rows[idx];
        row.scenario = cfg.scenario;
        row.controller = cfg.controller.type;
        row.parameter = cfg.has_sweep() ? cfg.sweep_parameter : "none";
        row.value = cfg.has_sweep() ? value : 0.0;
        row.seed = seed;
        row.diverged = traj.diverged;
        row.rms_e = traj.diverged ? kNaN : traj.steady.rms_e();
        row.rms_zx = (traj.diverged || !policy->estimate()) ? kNaN : traj.steady.rms_zx();
        row.skip_rate = traj.skip_rate();

        if (cfg.write_trajectories) {
          std::ofstream os(fs::path(cfg.output) / (run_label(cfg, value, seed) + ".csv"));
          write_trajectory_csv(os, traj);
        }
        if (keep_trajectories) out.trajectories[idx] = std::move(traj);
      },
      cfg.workers);
  return out;
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << "scenario,controller,parameter,value,seed,rms_e,rms_zx,skip_rate,diverged\n";
  for (const auto& r : rows) {
    os << r.scenario << ',' << r.controller << ',' << r.parameter << ',' << fmt(r.value) << ','
       << r.seed << ',' << fmt(r.rms_e) << ',' << fmt(r.rms_zx) << ',' << fmt(r.skip_rate) << ','
       << (r.diverged ? 1 : 0) << '\n';
  }
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string summary_json(const ExperimentConfig& cfg, const std::vector<MetricsRow>& rows) {
  json j;
  j["scenario"] = cfg.scenario;
  j["controller"] = cfg.controller.type;
  j["parameter"] = cfg.has_sweep() ? cfg.sweep_parameter : "none";
  j["sim"] = {{"dt", cfg.sim.dt},
              {"epsilon", std::isinf(cfg.sim.epsilon) ? json("inf") : json(cfg.sim.epsilon)},
              {"horizon", cfg.sim.horizon},
              {"steady_start", cfg.sim.steady_start}};
  j["seeds"] = cfg.seeds;
  j["calibration_defaults"] = cfg.defaults_used;

  // Points in sweep order; means over seeds of the per-seed rows.
  std::vector<double> order;
  for (const auto& r : rows)
    if (std::find(order.begin(), order.end(), r.value) == order.end()) order.push_back(r.value);
  json points = json::array();
  for (double v : order) {
    double se = 0.0, sz = 0.0, sk = 0.0;
    std::size_t n = 0, diverged = 0;
    for (const auto& r : rows) {
      if (r.value != v) continue;
      ++n;
      if (r.diverged) ++diverged;
      se += r.rms_e;
      sz += r.rms_zx;
      sk += r.skip_rate;
    }
    json p;
    p["value"] = std::isinf(v) ? json("inf") : json(v);
    p["runs"] = n;
    p["diverged_runs"] = diverged;
    p["mean_rms_e"] = finite_or_null(se / n);
    p["mean_rms_zx"] = finite_or_null(sz / n);
    p["mean_skip_rate"] = sk / n;
    if (cfg.scenario == "scalar") {
      const double c = cfg.sweep_parameter == "c" ? v : cfg.c;
      const ScalarPreset sp = preset_scalar(c);
      const RegulatorEquations eqs(sp.model, sp.exo, stochastic_relative_degree(sp.model, sp.exo));
      const double a = eqs.a_pi()(0, 0), f = eqs.f_pi()(0, 0);
      p["A_pi"] = a;
      p["F_pi"] = f;
      p["almost_sure"] = to_string(scalar_as_check(a, f).verdict);
      p["mean_square"] = to_string(scalar_ms_check(a, f).verdict);
    }
    points.push_back(p);
  }
  j["points"] = points;
  return j.dump(2) + "\n";
}

namespace {

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& res) {
  fs::create_directories(cfg.output);
  std::ofstream m(fs::path(cfg.output) / "metrics.csv");
  write_metrics_csv(m, res.rows);
  std::ofstream s(fs::path(cfg.output) / "summary.json");
  s << summary_json(cfg, res.rows);
}

void print_summary(const ExperimentConfig& cfg, const std::vector<MetricsRow>& rows) {
  std::map<double, std::pair<double, int>> acc;
  std::vector<double> order;
  for (const auto& r : rows) {
    if (!acc.count(r.value)) order.push_back(r.value);
    acc[r.value].first += r.rms_e;
    acc[r.value].second += 1;
  }
  for (double v : order)
    std::cout << cfg.sweep_parameter << (cfg.has_sweep() ? "=" + short_fmt(v) : std::string("run"))
              << "  mean rms(e) = " << acc[v].first / acc[v].second << "\n";
}

// Plot-ready e(t) of the first seed for every sweep value.
void write_error_histories(const ExperimentConfig& cfg, const ExperimentResult& res,
                           const std::string& name) {
  const std::size_t nseeds = cfg.seeds.size();
  std::vector<const HybridTrajectory*> first;
  for (std::size_t i = 0; i < res.trajectories.size(); i += nseeds) first.push_back(&res.trajectories[i]);
  if (first.empty()) return;
  for (const auto* t : first)
    if (t->size() != first.front()->size()) return;
  std::ofstream os(fs::path(cfg.output) / name);
  os << "t";
  for (double v : cfg.sweep_values) os << ",e_" << cfg.sweep_parameter << "=" << short_fmt(v);
  os << "\n";
  for (std::size_t r = 0; r < first.front()->size(); ++r) {
    os << fmt(first.front()->t[r]);
    for (const auto* t : first) os << ',' << fmt(t->e[r]);
    os << "\n";
  }
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 1;
  } catch (const ModelError& err) {
    std::cerr << "model error: " << err.what() << "\n";
    return 1;
  } catch (const DivergenceError& err) {
    std::cerr << "divergence: " << err.what() << "\n";
    return 2;
  } catch (const ResonanceError& err) {
    std::cerr << "resonance: " << err.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 1;
  }
}

int reproduce_fig1(const std::string& out_dir, bool fast) {
  fs::create_directories(out_dir);
  const std::vector<double> cs{-0.5, -5.0, 0.5};
  const std::size_t nseeds = fast ? 10 : 20;
  const double dt = 1e-3, horizon = 100.0;
  struct Cell {
    bool bounded = false;
    double diverged_at = kNaN, sup_late = 0.0;
  };
  std::vector<Cell> cells(cs.size() * nseeds);
  std::vector<RegulatorSolution> traces(cs.size());
  detail::parallel_for(cells.size(), [&](std::size_t idx) {
    const double c = cs[idx / nseeds];
    const std::uint64_t seed = idx % nseeds + 1;
    const ScalarPreset p = preset_scalar(c);
    RegeqConfig rc;
    rc.dt = dt;
    rc.horizon = horizon;
    rc.record_every = 100;
    const BrownianPath path = BrownianPath::generate(seed, dt, horizon);
    RegulatorSolution sol =
        integrate_ideal_regeq(p.model, p.exo, stochastic_relative_degree(p.model, p.exo), path, rc);
    Cell& cell = cells[idx];
    cell.bounded = sol.bounded;
    cell.diverged_at = sol.diverged_at;
    for (std::size_t i = 0; i < sol.size(); ++i)
      if (sol.t[i] >= horizon / 2) cell.sup_late = std::max(cell.sup_late, sol.Pi[i].norm());
    if (seed == 1) traces[idx / nseeds] = std::move(sol);
  });
  std::ofstream m(fs::path(out_dir) / "regulator_metrics.csv");
  m << "c,seed,bounded,diverged_at,sup_pi_late\n";
  for (std::size_t idx = 0; idx < cells.size(); ++idx)
    m << fmt(cs[idx / nseeds]) << ',' << idx % nseeds + 1 << ',' << (cells[idx].bounded ? 1 : 0) << ','
      << fmt(cells[idx].diverged_at) << ',' << fmt(cells[idx].sup_late) << '\n';
  for (std::size_t i = 0; i < cs.size(); ++i) {
    std::ofstream os(fs::path(out_dir) / ("fig1_pi_c=" + short_fmt(cs[i]) + ".csv"));
    write_regulator_csv(os, traces[i]);
    std::size_t bounded = 0;
    for (std::size_t s = 0; s < nseeds; ++s) bounded += cells[i * nseeds + s].bounded;
    std::cout << "c=" << short_fmt(cs[i]) << "  bounded on " << bounded << "/" << nseeds << " seeds\n";
  }
  return 0;
}

}  // namespace

int run_command(const std::string& config_path) {
  return guarded([&] {
    const ExperimentConfig cfg = load_experiment(config_path);
    const ExperimentResult res = run_experiment(cfg);
    write_outputs(cfg, res);
    print_summary(cfg, res.rows);
    const bool diverged = std::any_of(res.rows.begin(), res.rows.end(), [](const MetricsRow& r) { return r.diverged; });
    if (diverged && !cfg.has_sweep()) {
      std::cerr << "divergence: closed loop exceeded the blowup guard\n";
      return 2;
    }
    return 0;
  });
}

ExperimentConfig figure_config(const std::string& figure, bool fast) {
  ExperimentConfig cfg;
  cfg.scenario = "circuit";
  cfg.sim.dt = fast ? 5e-6 : 5e-7;
  cfg.sim.horizon = fast ? 0.5 : 2.0;
  cfg.sim.steady_start = cfg.sim.horizon / 2;
  cfg.seeds.clear();
  for (std::uint64_t s = 1; s <= 10; ++s) cfg.seeds.push_back(s);
  cfg.defaults_used = {"horizon", "steady_start", "seeds"};
  if (figure == "fig3" || figure == "fig4") {
    cfg.controller.type = figure == "fig3" ? "approx_fi" : "hybrid_of";
    cfg.sim.epsilon = fast ? 5e-4 : 5e-5;
    cfg.sweep_parameter = "d";
    cfg.sweep_values = {10.0, 1.0, 0.1};
  } else if (figure == "fig5" || figure == "fig6") {
    cfg.controller.type = figure == "fig5" ? "approx_fi" : "hybrid_of";
    cfg.d = 2.0;
    cfg.sweep_parameter = "epsilon";
    cfg.sweep_values = {kInfinitePeriod, 5e-4, 5e-5};
    if (!fast) cfg.sweep_values.push_back(5e-6);
  } else {
    throw ConfigError("unknown figure " + figure + " (expected fig1, fig3, fig4, fig5 or fig6)");
  }
  return cfg;
}

int reproduce_command(const std::string& figure, const std::string& out_dir, bool fast) {
  return guarded([&] {
    const std::string dir = out_dir.empty() ? "repro/" + figure : out_dir;
    if (figure == "fig1") return reproduce_fig1(dir, fast);
    ExperimentConfig cfg = figure_config(figure, fast);
    cfg.output = dir;
    cfg.write_trajectories = false;
    const ExperimentResult res = run_experiment(cfg, true);
    write_outputs(cfg, res);
    write_error_histories(cfg, res, figure + "_e.csv");
    print_summary(cfg, res.rows);
    return 0;
  });
}

int check_stability_command(const std::string& model_path) {
  return guarded([&] {
    const ModelFile f = read_model_file(model_path);
    const RelativeDegreeInfo rd = stochastic_relative_degree(f.model, f.exo);
    const NonResonanceReport nr = non_resonance_check(f.model, f.exo, rd);
    json j;
    j["relative_degree"] = rd.r;
    j["non_resonance"] = json::parse(nr.to_json());
    if (f.gains) {
      const Mat Acl = f.model.A + f.model.B * f.gains->K;
      const Mat Fcl = f.model.F + f.model.G * f.gains->K;
      j["closed_loop"] = json::parse(mean_square_check(Acl, Fcl).to_json());
    }
    std::cout << j.dump(2) << "\n";
    return 0;
  });
}

}  // namespace stochreg
