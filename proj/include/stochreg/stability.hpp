#ifndef STOCHREG_STABILITY_HPP
#define STOCHREG_STABILITY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "stochreg/model.hpp"

namespace stochreg {

enum class Verdict { stable, unstable, inconclusive };

const char* to_string(Verdict v);

struct StabilityReport {
  std::string method;  // scalar-as | scalar-ms | mean-square | monte-carlo | deterministic
  Verdict verdict = Verdict::inconclusive;
  double margin = 0.0;  // abscissa or exponent estimate; negative is stable
  std::vector<double> per_seed;
  std::vector<std::uint64_t> seeds;
  double std_error = 0.0;

  bool stable() const { return verdict == Verdict::stable; }
  // {method, verdict, margin, per_seed:[...]}
  std::string to_json() const;
};

// Almost-sure exponential stability of dx = a x dt + f x dW: 2a - f^2 < 0.
StabilityReport scalar_as_check(double a, double f);
// Mean-square stability: 2a + f^2 < 0.
StabilityReport scalar_ms_check(double a, double f);

// Spectral abscissa of I (x) A + A (x) I + F (x) F.
StabilityReport mean_square_check(const Mat& A_cl, const Mat& F_cl);

struct LyapunovOptions {
  double horizon = 50.0;
  double dt = 1e-3;
  double tau_margin = 0.01;
  std::size_t renorm_every = 100;
  unsigned workers = 0;  // 0 uses the hardware concurrency
};

// Top Lyapunov exponent of dPhi = A Phi dt + F Phi dW, one estimate per seed.
StabilityReport lyapunov_mc(const Mat& A_h, const Mat& F_h, const std::vector<std::uint64_t>& seeds,
                            const LyapunovOptions& opt = {});

struct NonResonanceReport {
  Mat A_pi, F_pi;
  StabilityReport mean_square;
  StabilityReport monte_carlo;     // empty method when not run
  StabilityReport deterministic;   // I (x) A_pi - S^T (x) I, only without noise
  Verdict verdict = Verdict::inconclusive;

  std::string to_json() const;
};

enum class NonResonanceMethod { mean_square, monte_carlo, both };

NonResonanceReport non_resonance_check(const PlantModel& m, const Exosystem& e,
                                       const RelativeDegreeInfo& rd,
                                       NonResonanceMethod method = NonResonanceMethod::both,
                                       const std::vector<std::uint64_t>& seeds = {1, 2, 3, 4, 5, 6, 7, 8},
                                       const LyapunovOptions& opt = {});

}  // namespace stochreg

#endif  // STOCHREG_STABILITY_HPP
