#include "stochreg/regeq.hpp"

#include <cstdio>
#include <ostream>

namespace stochreg {

FrancisSolution solve_francis(const Mat& A, const Vec& B, const RowVec& C, double D, const Mat& P,
                              const RowVec& Q, const Mat& S) {
  const Eigen::Index n = A.rows(), nu = S.rows();
  if (A.cols() != n || B.size() != n || C.size() != n || P.rows() != n || P.cols() != nu ||
      Q.size() != nu || S.cols() != nu)
    throw ModelError("solve_francis: inconsistent dimensions");

  // Unknowns [vec(Pi); Lam^T].
  const Eigen::Index N = n * nu + nu;
  const Mat In = Mat::Identity(n, n), Inu = Mat::Identity(nu, nu);
  Mat M = Mat::Zero(N, N);
  Vec rhs(N);
  M.topLeftCorner(n * nu, n * nu) = kron(Inu, A) - kron(Mat(S.transpose()), In);
  M.topRightCorner(n * nu, nu) = kron(Inu, Mat(B));
  M.bottomLeftCorner(nu, n * nu) = kron(Inu, Mat(C));
  M.bottomRightCorner(nu, nu) = D * Inu;
  rhs << -vec(P), -Q.transpose();

  Eigen::FullPivLU<Mat> lu(M);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw ResonanceError("regulator equations are singular (resonance)");
  const Vec sol = lu.solve(rhs);

  FrancisSolution out;
  out.Pi = unvec(Vec(sol.head(n * nu)), n, nu);
  out.Lam = sol.tail(nu).transpose();
  const double scale = 1.0 + M.norm() * sol.norm() + rhs.norm();
  out.residual = (M * sol - rhs).norm();
  if (!(out.residual <= 1e-10 * scale))
    throw ResonanceError("regulator equations are ill-conditioned (near resonance)");
  return out;
}

RegulatorEquations::RegulatorEquations(const PlantModel& m, const Exosystem& e,
                                       const RelativeDegreeInfo& rd)
    : r_(rd.r), A_(m.A), P_(m.P), F_(m.F), R_(m.R), S_(e.S), B_(m.B), G_(m.G), C_(m.C), Q_(m.Q),
      D_(m.D), zeta_(rd.zeta_maps), q_chain_(rd.q_chain) {
  const Eigen::Index n = m.n(), nu = m.nu();
  if (S_.rows() != nu) throw ModelError("exosystem dimension does not match the plant");
  if (r_ == 0) {
    if (D_ == 0.0) throw ModelError("relative degree 0 requires D != 0");
    lam_a_row_ = C_ / D_;
    q_r_ = Q_ / D_;
    lam_b_row_ = RowVec::Zero(n);
    r_row_ = RowVec::Zero(nu);
    A_pi_ = A_ - B_ * lam_a_row_;
    F_pi_ = F_ - G_ * lam_a_row_;
    return;
  }
  if (G_.size() && G_.cwiseAbs().maxCoeff() > 0.0)
    throw ModelError("unsupported configuration: relative degree >= 1 with G != 0");
  if (static_cast<int>(zeta_.size()) < r_ || static_cast<int>(q_chain_.size()) < r_ + 1)
    throw ModelError("relative degree info is incomplete");
  const double b = rd.b;
  const RowVec& top = zeta_[r_ - 1];  // C A^{r-1}
  lam_a_row_ = (top * A_) / b;
  q_r_ = q_chain_[r_] / b;
  lam_b_row_ = (top * F_) / b;
  r_row_ = (top * R_) / b;
  A_pi_ = A_ - B_ * lam_a_row_;
  F_pi_ = F_ - B_ * lam_b_row_;
}

RowVec RegulatorEquations::lambda_a(const Mat& Pi) const { return -(lam_a_row_ * Pi + q_r_); }

RowVec RegulatorEquations::lambda_b(const Mat& Pi) const {
  if (r_ == 0) return RowVec::Zero(S_.rows());
  return -(lam_b_row_ * Pi + r_row_);
}

void RegulatorEquations::drift(const Mat& Pi, Mat& out) const {
  out.noalias() = A_pi_ * Pi;
  out.noalias() -= Pi * S_;
  out += P_;
  out.noalias() -= B_ * q_r_;
}

void RegulatorEquations::diffusion(const Mat& Pi, Mat& out) const {
  out.noalias() = F_pi_ * Pi;
  out += R_;
  if (r_ == 0)
    out.noalias() -= G_ * q_r_;
  else
    out.noalias() -= B_ * r_row_;
}

Mat RegulatorEquations::drift(const Mat& Pi) const {
  Mat out(Pi.rows(), Pi.cols());
  drift(Pi, out);
  return out;
}

Mat RegulatorEquations::diffusion(const Mat& Pi) const {
  Mat out(Pi.rows(), Pi.cols());
  diffusion(Pi, out);
  return out;
}

Mat RegulatorEquations::initial_condition() const {
  const Eigen::Index n = A_.rows(), nu = S_.rows();
  if (r_ == 0) return Mat::Zero(n, nu);
  Mat stacked(r_, n), rhs(r_, nu);
  for (int i = 0; i < r_; ++i) {
    stacked.row(i) = zeta_[i];
    rhs.row(i) = -q_chain_[i];
  }
  return stacked.completeOrthogonalDecomposition().solve(rhs);
}

namespace {

void record(RegulatorSolution& sol, const RegulatorEquations& eqs, double t, const Mat& Pi) {
  sol.t.push_back(t);
  sol.Pi.push_back(Pi);
  sol.lam_a.push_back(eqs.lambda_a(Pi));
  sol.lam_b.push_back(eqs.lambda_b(Pi));
}

Mat start_value(const RegulatorEquations& eqs, const RegeqConfig& cfg) {
  if (cfg.Pi0.size() == 0) return eqs.initial_condition();
  if (cfg.Pi0.rows() != eqs.rows() || cfg.Pi0.cols() != eqs.cols())
    throw ConfigError("initial Pi has the wrong shape");
  return cfg.Pi0;
}

std::size_t step_count(double horizon, double dt) {
  if (!(dt > 0.0) || !(horizon > 0.0)) throw ConfigError("regulator integration needs dt, T > 0");
  return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
}

}  // namespace

namespace {

template <typename Increment>
RegulatorSolution integrate_ideal(const PlantModel& m, const Exosystem& e,
                                  const RelativeDegreeInfo& rd, std::size_t available,
                                  Increment dw, const RegeqConfig& cfg) {
  const RegulatorEquations eqs(m, e, rd);
  const std::size_t steps = step_count(cfg.horizon, cfg.dt);
  if (available < steps) throw ConfigError("not enough increments for the horizon");
  const std::size_t every = std::max<std::size_t>(1, cfg.record_every);

  RegulatorSolution sol;
  Mat Pi = start_value(eqs, cfg);
  Mat f(Pi.rows(), Pi.cols()), g(Pi.rows(), Pi.cols());
  record(sol, eqs, 0.0, Pi);
  for (std::size_t j = 0; j < steps; ++j) {
    eqs.drift(Pi, f);
    eqs.diffusion(Pi, g);
    Pi += f * cfg.dt + g * dw(j);
    const double t = static_cast<double>(j + 1) * cfg.dt;
    if (!Pi.allFinite() || Pi.norm() > cfg.guard) {
      sol.bounded = false;
      sol.diverged_at = t;
      record(sol, eqs, t, Pi);
      break;
    }
    if ((j + 1) % every == 0 || j + 1 == steps) record(sol, eqs, t, Pi);
  }
  return sol;
}

}  // namespace

RegulatorSolution integrate_ideal_regeq(const PlantModel& m, const Exosystem& e,
                                        const RelativeDegreeInfo& rd, std::span<const double> dw,
                                        const RegeqConfig& cfg) {
  return integrate_ideal(m, e, rd, dw.size(), [&](std::size_t j) { return dw[j]; }, cfg);
}

RegulatorSolution integrate_ideal_regeq(const PlantModel& m, const Exosystem& e,
                                        const RelativeDegreeInfo& rd, const BrownianPath& path,
                                        const RegeqConfig& cfg) {
  if (std::abs(path.step() - cfg.dt) > 1e-12 * cfg.dt)
    throw ConfigError("Brownian path step does not match the regulator grid");
  return integrate_ideal(m, e, rd, path.size(), [&](std::size_t j) { return path.increment(j); },
                         cfg);
}

HybridRegulator::HybridRegulator(const RegulatorEquations& eqs, Mat Pi0)
    : eqs_(&eqs), Pi_(std::move(Pi0)) {
  held_ = eqs.diffusion(Pi_);
  scratch_.resize(Pi_.rows(), Pi_.cols());
  lam_a_ = eqs.lambda_a(Pi_);
}

void HybridRegulator::flow(double dt) {
  eqs_->drift(Pi_, scratch_);
  Pi_.noalias() += scratch_ * dt;
  lam_a_ = eqs_->lambda_a(Pi_);
}

void HybridRegulator::jump(double dw_hat) {
  Pi_.noalias() += held_ * dw_hat;
  eqs_->diffusion(Pi_, held_);
  lam_a_ = eqs_->lambda_a(Pi_);
}

RegulatorSolution integrate_hybrid_regeq(const PlantModel& m, const Exosystem& e,
                                         const RelativeDegreeInfo& rd,
                                         std::span<const double> dw_stream, const RegeqConfig& cfg) {
  const RegulatorEquations eqs(m, e, rd);
  const std::size_t steps = step_count(cfg.horizon, cfg.dt);
  std::size_t per_sample = 0;
  if (!std::isinf(cfg.eps)) {
    const double q = cfg.eps / cfg.dt;
    per_sample = static_cast<std::size_t>(std::round(q));
    if (per_sample == 0 || std::abs(q - std::round(q)) > 1e-7 * q)
      throw ConfigError("sampling period must be an integer multiple of dt");
  }
  const std::size_t every = std::max<std::size_t>(1, cfg.record_every);

  RegulatorSolution sol;
  HybridRegulator reg(eqs, start_value(eqs, cfg));
  record(sol, eqs, 0.0, reg.Pi());
  for (std::size_t j = 0; j < steps; ++j) {
    reg.flow(cfg.dt);
    const double t = static_cast<double>(j + 1) * cfg.dt;
    bool jumped = false;
    if (per_sample && (j + 1) % per_sample == 0) {
      const std::size_t k = (j + 1) / per_sample;
      if (k > dw_stream.size()) throw ConfigError("increment stream exhausted at sample " + std::to_string(k));
      reg.jump(dw_stream[k - 1]);
      jumped = true;
    }
    if (!reg.Pi().allFinite() || reg.Pi().norm() > cfg.guard) {
      sol.bounded = false;
      sol.diverged_at = t;
      record(sol, eqs, t, reg.Pi());
      break;
    }
    if (jumped || (j + 1) % every == 0 || j + 1 == steps) record(sol, eqs, t, reg.Pi());
  }
  return sol;
}

FeedforwardSplit gamma_from(const RegulatorSolution& sol, const RowVec& K) {
  FeedforwardSplit out;
  out.gamma_a.reserve(sol.size());
  out.gamma_b.reserve(sol.size());
  for (std::size_t i = 0; i < sol.size(); ++i) {
    if (K.size() != sol.Pi[i].rows()) throw ConfigError("gain K does not match Pi");
    out.gamma_a.push_back(sol.lam_a[i] - K * sol.Pi[i]);
    out.gamma_b.push_back(sol.lam_b[i]);
  }
  return out;
}

double steady_state_drift(const RegulatorSolution& sol, std::size_t windows) {
  if (windows < 2 || sol.size() < 2 * windows) return std::numeric_limits<double>::infinity();
  const std::size_t w = sol.size() / windows;
  auto mean = [&](std::size_t first) {
    double s = 0.0;
    for (std::size_t i = first; i < first + w; ++i) s += sol.Pi[i].norm();
    return s / static_cast<double>(w);
  };
  const double last = mean(sol.size() - w), prev = mean(sol.size() - 2 * w);
  return std::abs(last - prev) / std::max(std::abs(last), 1e-300);
}

void write_regulator_csv(std::ostream& os, const RegulatorSolution& sol) {
  if (sol.size() == 0) return;
  const Eigen::Index n = sol.Pi.front().rows(), nu = sol.Pi.front().cols();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < nu; ++j) os << ",Pi_" << i + 1 << j + 1;
  for (Eigen::Index j = 0; j < nu; ++j) os << ",LamA_" << j + 1;
  for (Eigen::Index j = 0; j < nu; ++j) os << ",LamB_" << j + 1;
  os << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t r = 0; r < sol.size(); ++r) {
    put(sol.t[r]);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < nu; ++j) {
        os << ',';
        put(sol.Pi[r](i, j));
      }
    for (Eigen::Index j = 0; j < nu; ++j) {
      os << ',';
      put(sol.lam_a[r](j));
    }
    for (Eigen::Index j = 0; j < nu; ++j) {
      os << ',';
      put(sol.lam_b[r](j));
    }
    os << '\n';
  }
}

}  // namespace stochreg
