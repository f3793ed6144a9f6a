// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "stochreg/control.hpp"
#include "stochreg/harness.hpp"
#include "stochreg/stability.hpp"

#ifndef STOCHREG_CLI_PATH
#define STOCHREG_CLI_PATH "stochreg"
#endif

using namespace stochreg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o{false, ""};
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs <= budget_s;
  const bool ok = o.pass && in_time;
  if (!ok) ++failures;
  std::printf("%s %d  %.1fs  %s%s\n", ok ? "PASS" : "FAIL", id, secs, o.detail.c_str(),
              in_time ? "" : "  (over time budget)");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

PlantModel noise_free(PlantModel m) {
  m.F.setZero();
  m.G.setZero();
  m.R.setZero();
  return m;
}

double bisect(const std::function<double(double)>& g, double lo, double hi) {
  double glo = g(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm < 0) == (glo < 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Seed-averaged rms columns per sweep value, in sweep order.
struct SweepMeans {
  std::vector<double> e, zx;
  std::size_t diverged = 0;
};

SweepMeans run_means(const ExperimentConfig& cfg) {
  const ExperimentResult res = run_experiment(cfg);
  SweepMeans out;
  for (double v : cfg.sweep_values) {
    double se = 0, sz = 0;
    int n = 0;
    for (const MetricsRow& r : res.rows) {
      if (!(r.value == v || (std::isinf(v) && std::isinf(r.value)))) continue;
      se += r.rms_e;
      sz += r.rms_zx;
      out.diverged += r.diverged;
      ++n;
    }
    out.e.push_back(se / n);
    out.zx.push_back(sz / n);
  }
  return out;
}

ExperimentConfig fast_figure(const std::string& fig) {
  ExperimentConfig cfg = figure_config(fig, true);
  cfg.write_trajectories = false;
  return cfg;
}

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt("%.4g", v[i]);
  return s + "]";
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  // 1. Noise-free circuit against the constant Francis solution.
  criterion(1, 10.0, [] {
    const CircuitPreset c = preset_circuit(1.0);
    const PlantModel m = noise_free(c.model);
    const RelativeDegreeInfo rd = stochastic_relative_degree(m, c.exo);
    const FrancisSolution fr = solve_francis(m.A, m.B, m.C, m.D, m.P, m.Q, c.exo.S);

    RegeqConfig rc;
    rc.dt = 1e-5;
    rc.horizon = 5.0;
    rc.record_every = 100;
    const std::vector<double> zeros(static_cast<std::size_t>(rc.horizon / rc.dt + 0.5), 0.0);
    const RegulatorSolution sol = integrate_ideal_regeq(m, c.exo, rd, zeros, rc);
    double dev = 0;
    for (std::size_t i = 0; i < sol.size(); ++i)
      if (sol.t[i] >= rc.horizon / 2) dev = std::max(dev, (sol.Pi[i] - fr.Pi).norm() / fr.Pi.norm());

    // Closed loop started on the regulated manifold, x0 = Pi w0.
    SimConfig sc;
    sc.dt = 5e-7;
    sc.horizon = 1.0;
    sc.steady_start = 0.5;
    sc.x0 = sol.Pi.back() * c.exo.omega0;
    IdealFiPolicy pol(m, c.exo, rd, c.gains.K, sol.Pi.back());
    const HybridTrajectory tr =
        simulate_closed_loop(m, c.exo, pol, BrownianPath::generate(1, sc.dt, sc.horizon), sc);
    const double rms = tr.steady.rms_e();
    const double bound = 1e-6 * c.exo.omega0.norm();
    return Outcome{dev <= 1e-6 && !tr.diverged && rms <= bound,
                   fmt("Pi deviation %.2e (<= 1e-6), rms(e) %.2e (<= %.2e)", dev, rms, bound)};
  });

  // 2. Scalar example trichotomy over 20 seeds.
  criterion(2, 30.0, [] {
    RegeqConfig rc;
    rc.dt = 1e-3;
    rc.horizon = 100.0;
    rc.record_every = 1000;
    std::vector<int> bounded;
    for (double c : {-0.5, -5.0, 0.5}) {
      const ScalarPreset p = preset_scalar(c);
      const RelativeDegreeInfo rd = stochastic_relative_degree(p.model, p.exo);
      int b = 0;
      for (std::uint64_t s = 1; s <= 20; ++s)
        b += integrate_ideal_regeq(p.model, p.exo, rd, BrownianPath::generate(s, rc.dt, rc.horizon), rc)
                 .bounded;
      bounded.push_back(b);
    }
    const bool ok = 20 - bounded[0] >= 18 && bounded[1] >= 18 && bounded[2] >= 18;
    return Outcome{ok, fmt("diverged c=-0.5: %g/20, bounded c=-5: %g/20, c=0.5: %g/20",
                           20 - bounded[0], bounded[1], bounded[2])};
  });

  // 3. Boundary roots of the almost-sure and mean-square margins.
  criterion(3, 5.0, [] {
    auto margin = [](double c, bool ms) {
      const ScalarPreset p = preset_scalar(c);
      const RelativeDegreeInfo rd = stochastic_relative_degree(p.model, p.exo);
      const RegulatorEquations eqs(p.model, p.exo, rd);
      const double a = eqs.a_pi()(0, 0), f = eqs.f_pi()(0, 0);
      return ms ? scalar_ms_check(a, f).margin : scalar_as_check(a, f).margin;
    };
    const double as1 = bisect([&](double c) { return margin(c, false); }, -3.0, -1.0);
    const double as2 = bisect([&](double c) { return margin(c, false); }, 0.0, 0.2);
    const double ms1 = bisect([&](double c) { return margin(c, true); }, 0.0, 0.2);
    const double ms2 = bisect([&](double c) { return margin(c, true); }, 2.0, 3.0);
    const bool ok = std::abs(as1 + 2.23) <= 0.01 && std::abs(as2 - 0.034) <= 0.01 &&
                    std::abs(ms1 - 0.044) <= 0.01 && std::abs(ms2 - 2.75) <= 0.01;
    return Outcome{ok, fmt("a.s. roots %.4f, %.4f; m.s. roots %.4f, %.4f", as1, as2, ms1, ms2)};
  });

  // 4. Reconstructed increments converge to the true ones as eps shrinks.
  criterion(4, 60.0, [] {
    const CircuitPreset c = preset_circuit(1.0);
    const RelativeDegreeInfo rd = stochastic_relative_degree(c.model, c.exo);
    const std::vector<double> eps{1e-2, 1e-3, 1e-4};
    std::vector<double> pooled(eps.size(), 0.0);
    std::vector<std::size_t> counts(eps.size(), 0);
    bool every_seed = true;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      std::vector<double> per;
      for (std::size_t i = 0; i < eps.size(); ++i) {
        SimConfig sc;
        sc.epsilon = eps[i];
        sc.dt = eps[i] / 100;
        sc.horizon = 0.5;
        sc.steady_start = 0.0;
        sc.record_every = 1000000;
        sc.record_jumps = false;
        ApproxFiPolicy pol(c.model, c.exo, rd, c.gains.K, ReconConfig{eps[i]});
        const HybridTrajectory tr =
            simulate_closed_loop(c.model, c.exo, pol, BrownianPath::generate(seed, sc.dt, sc.horizon), sc);
        if (tr.diverged) return Outcome{false, "diverged run"};
        double sq = 0;
        for (const ReconAudit& a : tr.audit) sq += (a.dw_est - a.dw_true) * (a.dw_est - a.dw_true);
        per.push_back(std::sqrt(sq / tr.audit.size()));
        pooled[i] += sq;
        counts[i] += tr.audit.size();
      }
      every_seed = every_seed && strictly_decreasing(per);
    }
    for (std::size_t i = 0; i < eps.size(); ++i) pooled[i] = std::sqrt(pooled[i] / counts[i]);
    const double slope = std::log10(pooled.front() / pooled.back()) / std::log10(eps.front() / eps.back());
    return Outcome{every_seed && slope >= 0.5,
                   "pooled rms " + list(pooled) + fmt(", slope %.3f, decreasing on every seed: ", slope) +
                       (every_seed ? "yes" : "no")};
  });

  // 5. Exact inversion on synthetic one-step data.
  criterion(5, 5.0, [] {
    CircuitPreset c = preset_circuit(1.0);
    PlantModel& m = c.model;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> N(0.0, 1.0);
    const double eps = 5e-5;
    const ReconConfig cfg{eps};
    double worst = 0;
    int used = 0;
    for (int draw = 0; draw < 1000; ++draw) {
      Vec x(3), w(5);
      for (int i = 0; i < 3; ++i) x(i) = 10 * N(rng);
      for (int i = 0; i < 5; ++i) w(i) = 60 * N(rng);
      const double u = N(rng), inj = N(rng) * std::sqrt(eps);
      const Vec v = diffusion_vector(m, x, u, w);
      const Vec xk = x + (m.A * x + m.B * u + m.P * w) * eps + v * inj;
      const ReconResult full = delta_w_full_info(xk, x, u, w, m, eps, cfg);
      const ReconResult out = delta_w_output(m.Cb.dot(xk), m.Cb.dot(x), x, u, w, m, eps, cfg);
      if (full.skipped || out.skipped) continue;
      ++used;
      // Scale: |w|, or the smallest increment the rounded samples resolve.
      const double s_full = std::max(std::abs(inj), xk.norm() / v.norm());
      const double s_out = std::max(std::abs(inj), std::abs(m.Cb.dot(xk)) / std::abs(m.Cb.dot(v)));
      worst = std::max({worst, std::abs(full.dw - inj) / s_full, std::abs(out.dw - inj) / s_out});
    }
    return Outcome{worst <= 1e-12 && used >= 990,
                   fmt("max relative error %.2e over %g draws with |v| above threshold", worst, used)};
  });

  // 6 and 7 share fast-mode circuit sweeps; 8 reuses the output-feedback eps sweep.
  SweepMeans fig5, fig6;
  criterion(6, 300.0, [] {
    const SweepMeans fi = run_means(fast_figure("fig3"));
    const SweepMeans of = run_means(fast_figure("fig4"));
    const bool ok = strictly_decreasing(fi.e) && strictly_decreasing(of.e) && !fi.diverged && !of.diverged;
    return Outcome{ok, "d = [10, 1, 0.1]: full info " + list(fi.e) + ", output feedback " + list(of.e)};
  });
  criterion(7, 300.0, [&] {
    fig5 = run_means(fast_figure("fig5"));
    fig6 = run_means(fast_figure("fig6"));
    const bool ok =
        strictly_decreasing(fig5.e) && strictly_decreasing(fig6.e) && !fig5.diverged && !fig6.diverged;
    return Outcome{ok, "eps = [inf, 5e-4, 5e-5]: full info " + list(fig5.e) + ", output feedback " +
                           list(fig6.e)};
  });
  criterion(8, 1.0, [&] {
    return Outcome{fig6.zx.size() == 3 && strictly_decreasing(fig6.zx),
                   "rms|z - x| at eps = [inf, 5e-4, 5e-5]: " + list(fig6.zx)};
  });

  // 9. Annihilation identity on a hybrid output-feedback trajectory.
  criterion(9, 30.0, [] {
    const CircuitPreset c = preset_circuit(1.0);
    const RelativeDegreeInfo rd = stochastic_relative_degree(c.model, c.exo);
    const ExperimentConfig fc = figure_config("fig6", true);
    SimConfig sc = fc.sim;
    sc.epsilon = 5e-5;
    sc.record_jumps = true;
    HybridOfPolicy pol(c.model, c.exo, rd, c.gains, sc.epsilon,
                       ReconConfig{sc.epsilon, *fc.controller.tau_rel});
    const HybridTrajectory tr =
        simulate_closed_loop(c.model, c.exo, pol, BrownianPath::generate(1, sc.dt, sc.horizon), sc);
    const EstimationErrorReport rep = estimation_error_diag(c.model, c.gains.K, c.gains.L, tr);
    return Outcome{!tr.diverged && rep.samples == tr.jumps && rep.annihilation_max <= 1e-10,
                   fmt("max |Cb (I - Psi) w| = %.2e over %g samples", rep.annihilation_max, rep.samples)};
  });

  // 10. Internal model: scalar hand case and circuit comparison on identical paths.
  criterion(10, 120.0, [] {
    PlantModel s;
    s.A = Mat::Constant(1, 1, -1.0);
    s.B = Vec::Ones(1);
    s.F = Mat::Zero(1, 1);
    s.G = Vec::Zero(1);
    s.P = Mat::Zero(1, 1);
    s.R = Mat::Zero(1, 1);
    s.C = RowVec::Ones(1);
    s.Q = RowVec::Constant(1, -1.0);
    const Exosystem se{Mat::Zero(1, 1), Vec::Ones(1)};
    const RelativeDegreeInfo srd = stochastic_relative_degree(s, se);
    InternalModelPolicy hand(s, se, srd, RowVec::Zero(1),
                             InternalModelParams{Mat::Constant(1, 1, -1.0), Vec::Ones(1), {}, 1e-8, true});
    SimConfig hc;
    hc.dt = 1e-3;
    hc.horizon = 40.0;
    hc.steady_start = 30.0;
    const HybridTrajectory ht = simulate_closed_loop(s, se, hand, BrownianPath::generate(1, hc.dt, hc.horizon), hc);
    const double hand_e = std::abs(ht.e.back());

    const CircuitPreset c = preset_circuit(1.0);
    const RelativeDegreeInfo rd = stochastic_relative_degree(c.model, c.exo);
    SimConfig sc;
    sc.dt = 5e-6;
    sc.epsilon = 5e-5;
    sc.horizon = 2.0;
    sc.steady_start = 1.0;
    sc.record_jumps = false;
    const BrownianPath path = BrownianPath::generate(1, sc.dt, sc.horizon);
    ApproxFiPolicy fi(c.model, c.exo, rd, c.gains.K, ReconConfig{sc.epsilon});
    InternalModelPolicy im(c.model, c.exo, rd, c.gains.K, default_internal_model(c.exo),
                           ReconConfig{sc.epsilon});
    const HybridTrajectory a = simulate_closed_loop(c.model, c.exo, fi, path, sc);
    const HybridTrajectory b = simulate_closed_loop(c.model, c.exo, im, path, sc);
    const double ratio = b.steady.rms_e() / a.steady.rms_e();
    const bool ok = !ht.diverged && hand_e <= 1e-6 && !a.diverged && !b.diverged && ratio <= 2.0;
    return Outcome{ok, fmt("scalar |e| %.2e; circuit rms(e) internal model %.3e vs full info %.3e (ratio %.2f)",
                           hand_e, b.steady.rms_e(), a.steady.rms_e(), ratio)};
  });

  // 11. Two CLI runs of the same figure give identical metrics.
  criterion(11, 300.0, [] {
    const fs::path root = fs::temp_directory_path() / "stochreg_acceptance";
    fs::remove_all(root);
    for (const char* run : {"a", "b"}) {
      const std::string cmd = std::string("\"") + STOCHREG_CLI_PATH + "\" reproduce fig3 --fast --out \"" +
                              (root / run).string() + "\" > /dev/null";
      if (std::system(cmd.c_str()) != 0) return Outcome{false, "cli failed: " + cmd};
    }
    const std::string a = read_file(root / "a" / "metrics.csv");
    const std::string b = read_file(root / "b" / "metrics.csv");
    const bool ok = !a.empty() && a == b;
    fs::remove_all(root);
    return Outcome{ok, fmt("metrics.csv %g bytes, identical: ", static_cast<double>(a.size())) + (ok ? "yes" : "no")};
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
