#ifndef STOCHREG_REGEQ_HPP
#define STOCHREG_REGEQ_HPP

#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "stochreg/model.hpp"
#include "stochreg/noise.hpp"

namespace stochreg {

// Constant solution of A Pi - Pi S + P + B Lam = 0, C Pi + Q + D Lam = 0.
struct FrancisSolution {
  Mat Pi;
  RowVec Lam;
  double residual = 0.0;
};

FrancisSolution solve_francis(const Mat& A, const Vec& B, const RowVec& C, double D, const Mat& P,
                              const RowVec& Q, const Mat& S);

// Coefficient maps of the stochastic regulator equations once Lam has been
// eliminated. Lam dt = LamA dt + LamB dW, with LamB = 0 when r = 0.
class RegulatorEquations {
 public:
  // Requires r = 0, or r >= 1 with G = 0.
  RegulatorEquations(const PlantModel& m, const Exosystem& e, const RelativeDegreeInfo& rd);

  int relative_degree() const { return r_; }
  Eigen::Index rows() const { return A_.rows(); }
  Eigen::Index cols() const { return S_.rows(); }

  RowVec lambda_a(const Mat& Pi) const;
  RowVec lambda_b(const Mat& Pi) const;
  Mat drift(const Mat& Pi) const;      // A Pi - Pi S + P + B LamA
  Mat diffusion(const Mat& Pi) const;  // F Pi + R + G LamA + B LamB
  // Allocation-free variants for inner loops; out must not alias Pi.
  void drift(const Mat& Pi, Mat& out) const;
  void diffusion(const Mat& Pi, Mat& out) const;
  // Zero for r = 0; min-norm solution of C A^i Pi = -Q_i, i < r, otherwise.
  Mat initial_condition() const;

  // Closed-loop pair (A_pi, F_pi) of the homogeneous part.
  const Mat& a_pi() const { return A_pi_; }
  const Mat& f_pi() const { return F_pi_; }

 private:
  int r_;
  Mat A_, P_, F_, R_, S_;
  Vec B_, G_;
  RowVec C_, Q_;
  double D_;
  RowVec lam_a_row_, lam_b_row_;  // CA^r / b and CA^{r-1} F / b
  RowVec q_r_, r_row_;            // Q_r / b and CA^{r-1} R / b
  Mat A_pi_, F_pi_;
  std::vector<RowVec> zeta_, q_chain_;
};

struct RegulatorSolution {
  std::vector<double> t;
  std::vector<Mat> Pi;
  std::vector<RowVec> lam_a;
  std::vector<RowVec> lam_b;
  bool bounded = true;
  double diverged_at = std::numeric_limits<double>::quiet_NaN();

  std::size_t size() const { return t.size(); }
};

struct RegeqConfig {
  double dt = 5e-7;
  double horizon = 2.0;
  double eps = std::numeric_limits<double>::infinity();  // hybrid sampling period
  std::size_t record_every = 1;
  double guard = 1e12;
  Mat Pi0;  // empty picks RegulatorEquations::initial_condition()
};

// Euler-Maruyama on the given increments (one per step of cfg.dt).
RegulatorSolution integrate_ideal_regeq(const PlantModel& m, const Exosystem& e,
                                        const RelativeDegreeInfo& rd, std::span<const double> dw,
                                        const RegeqConfig& cfg);
RegulatorSolution integrate_ideal_regeq(const PlantModel& m, const Exosystem& e,
                                        const RelativeDegreeInfo& rd, const BrownianPath& path,
                                        const RegeqConfig& cfg);

// Drift-only flow with jumps at multiples of cfg.eps, the k-th jump consuming
// dw_stream[k-1]. The jump diffusion is evaluated at the previous post-jump value.
RegulatorSolution integrate_hybrid_regeq(const PlantModel& m, const Exosystem& e,
                                         const RelativeDegreeInfo& rd,
                                         std::span<const double> dw_stream, const RegeqConfig& cfg);

// Stateful hybrid integrator shared by the controller policies.
class HybridRegulator {
 public:
  HybridRegulator(const RegulatorEquations& eqs, Mat Pi0);

  void flow(double dt);
  void jump(double dw_hat);

  const Mat& Pi() const { return Pi_; }
  const RowVec& lam_a() const { return lam_a_; }
  // Diffusion latched at the last post-jump instant.
  const Mat& held_diffusion() const { return held_; }

 private:
  const RegulatorEquations* eqs_;
  Mat Pi_, held_, scratch_;
  RowVec lam_a_;
};

struct FeedforwardSplit {
  std::vector<RowVec> gamma_a;
  std::vector<RowVec> gamma_b;
};

FeedforwardSplit gamma_from(const RegulatorSolution& sol, const RowVec& K);

// Relative change of the windowed mean of |Pi| between the last two windows.
double steady_state_drift(const RegulatorSolution& sol, std::size_t windows = 4);

// CSV header t,Pi_11..Pi_nnu,LamA_1..LamA_nu,LamB_1..LamB_nu (Pi row-major).
void write_regulator_csv(std::ostream& os, const RegulatorSolution& sol);

}  // namespace stochreg

#endif  // STOCHREG_REGEQ_HPP
