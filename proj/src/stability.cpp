#include "stochreg/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "parallel.hpp"
#include "stochreg/noise.hpp"
#include "stochreg/regeq.hpp"

namespace stochreg {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::stable:
      return "stable";
    case Verdict::unstable:
      return "unstable";
    default:
      return "inconclusive";
  }
}

namespace {

nlohmann::json report_json(const StabilityReport& r) {
  nlohmann::json j;
  j["method"] = r.method;
  j["verdict"] = to_string(r.verdict);
  j["margin"] = r.margin;
  j["per_seed"] = r.per_seed;
  if (!r.per_seed.empty()) {
    j["seeds"] = r.seeds;
    j["std_error"] = r.std_error;
  }
  return j;
}

StabilityReport sign_report(std::string method, double margin) {
  StabilityReport r;
  r.method = std::move(method);
  r.margin = margin;
  r.verdict = margin < 0.0 ? Verdict::stable : Verdict::unstable;
  return r;
}

}  // namespace

std::string StabilityReport::to_json() const { return report_json(*this).dump(2); }

StabilityReport scalar_as_check(double a, double f) { return sign_report("scalar-as", 2 * a - f * f); }

StabilityReport scalar_ms_check(double a, double f) { return sign_report("scalar-ms", 2 * a + f * f); }

StabilityReport mean_square_check(const Mat& A_cl, const Mat& F_cl) {
  if (A_cl.rows() != A_cl.cols() || F_cl.rows() != F_cl.cols() || A_cl.rows() != F_cl.rows())
    throw ConfigError("mean_square_check needs square matrices of equal size");
  const Mat I = Mat::Identity(A_cl.rows(), A_cl.rows());
  const Mat M = kron(I, A_cl) + kron(A_cl, I) + kron(F_cl, F_cl);
  return sign_report("mean-square", spectral_abscissa(M));
}

StabilityReport lyapunov_mc(const Mat& A_h, const Mat& F_h, const std::vector<std::uint64_t>& seeds,
                            const LyapunovOptions& opt) {
  if (seeds.size() < 8) throw ConfigError("lyapunov_mc needs at least 8 seeds");
  if (A_h.rows() != A_h.cols() || F_h.rows() != F_h.cols() || A_h.rows() != F_h.rows())
    throw ConfigError("lyapunov_mc needs square matrices of equal size");

  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t steps = static_cast<std::size_t>(std::ceil(opt.horizon / opt.dt - 1e-9));
  const std::size_t renorm = std::max<std::size_t>(1, opt.renorm_every);
  const Eigen::Index n = A_h.rows();

  std::vector<double> exps(sorted.size());
  std::vector<char> early(sorted.size(), 0);
  detail::parallel_for(
      sorted.size(),
      [&](std::size_t s) {
        const BrownianPath path = BrownianPath::generate(sorted[s], opt.dt, opt.horizon);
        Mat phi = Mat::Identity(n, n), next(n, n);
        double log_growth = 0.0;
        for (std::size_t j = 0; j < steps; ++j) {
          next = phi;
          next.noalias() += (A_h * opt.dt + F_h * path.increment(j)) * phi;
          phi.swap(next);
          if ((j + 1) % renorm == 0 || j + 1 == steps) {
            const double nrm = phi.norm();
            if (!std::isfinite(nrm) || nrm == 0.0) {
              const double t = static_cast<double>(j + 1) * opt.dt;
              if (t < opt.horizon / 4) early[s] = 1;
              exps[s] = std::isfinite(nrm) ? -std::numeric_limits<double>::infinity()
                                           : std::numeric_limits<double>::infinity();
              return;
            }
            log_growth += std::log(nrm);
            phi /= nrm;
          }
        }
        exps[s] = log_growth / opt.horizon;
      },
      opt.workers);

  StabilityReport r;
  r.method = "monte-carlo";
  r.seeds = sorted;
  r.per_seed = exps;
  const double mean = std::accumulate(exps.begin(), exps.end(), 0.0) / exps.size();
  double var = 0.0;
  for (double v : exps) var += (v - mean) * (v - mean);
  r.std_error = exps.size() > 1 ? std::sqrt(var / (exps.size() - 1) / exps.size()) : 0.0;
  r.margin = *std::max_element(exps.begin(), exps.end());
  const bool diverged_early = std::any_of(early.begin(), early.end(), [](char c) { return c; });
  // Unstable needs every seed above the margin; mixed signs stay inconclusive.
  const double lowest = *std::min_element(exps.begin(), exps.end());
  if (diverged_early || lowest > opt.tau_margin)
    r.verdict = Verdict::unstable;
  else if (r.margin < -opt.tau_margin)
    r.verdict = Verdict::stable;
  else
    r.verdict = Verdict::inconclusive;
  return r;
}

std::string NonResonanceReport::to_json() const {
  nlohmann::json j;
  j["method"] = "non-resonance";
  j["verdict"] = stochreg::to_string(verdict);
  auto mat = [](const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::vector<double> row(m.cols());
      for (Eigen::Index k = 0; k < m.cols(); ++k) row[k] = m(i, k);
      rows.push_back(row);
    }
    return rows;
  };
  j["A_pi"] = mat(A_pi);
  j["F_pi"] = mat(F_pi);
  nlohmann::json checks = nlohmann::json::array();
  for (const StabilityReport* r : {&deterministic, &mean_square, &monte_carlo})
    if (!r->method.empty()) checks.push_back(report_json(*r));
  j["checks"] = checks;
  return j.dump(2);
}

NonResonanceReport non_resonance_check(const PlantModel& m, const Exosystem& e,
                                       const RelativeDegreeInfo& rd, NonResonanceMethod method,
                                       const std::vector<std::uint64_t>& seeds,
                                       const LyapunovOptions& opt) {
  const RegulatorEquations eqs(m, e, rd);
  NonResonanceReport out;
  out.A_pi = eqs.a_pi();
  out.F_pi = eqs.f_pi();

  const bool noiseless = out.F_pi.cwiseAbs().maxCoeff() == 0.0;
  if (noiseless) {
    const Mat In = Mat::Identity(out.A_pi.rows(), out.A_pi.rows());
    const Mat Inu = Mat::Identity(e.S.rows(), e.S.rows());
    out.deterministic = sign_report(
        "deterministic", spectral_abscissa(Mat(kron(Inu, out.A_pi) - kron(Mat(e.S.transpose()), In))));
    out.verdict = out.deterministic.verdict;
    return out;
  }

  // e^{-S^T t} is bounded for a marginally stable exosystem, so decay of the
  // homogeneous fundamental matrix of (A_pi, F_pi) decides.
  if (method != NonResonanceMethod::monte_carlo) out.mean_square = mean_square_check(out.A_pi, out.F_pi);
  if (method != NonResonanceMethod::mean_square) out.monte_carlo = lyapunov_mc(out.A_pi, out.F_pi, seeds, opt);

  if (!out.mean_square.method.empty() && out.mean_square.stable())
    out.verdict = Verdict::stable;  // sufficient certificate
  else if (!out.monte_carlo.method.empty())
    out.verdict = out.monte_carlo.verdict;
  else
    out.verdict = Verdict::inconclusive;
  return out;
}

}  // namespace stochreg
