#include "stochreg/control.hpp"

#include <cmath>

namespace stochreg {

namespace {

Mat pick_start(const RegulatorEquations& eqs, const Mat& Pi0) {
  if (Pi0.size() == 0) return eqs.initial_condition();
  if (Pi0.rows() != eqs.rows() || Pi0.cols() != eqs.cols())
    throw ConfigError("initial Pi has the wrong shape");
  return Pi0;
}

void check_gain(const RowVec& K, Eigen::Index n) {
  if (K.size() != n) throw ConfigError("gain K has the wrong length");
}

// Gamma_b realisation: dW/dt taken as the current fine increment over dt.
double white_noise_term(const RegulatorEquations& eqs, const Mat& Pi, const StepContext& ctx) {
  if (eqs.relative_degree() == 0 || !std::isfinite(ctx.dw)) return 0.0;
  return eqs.lambda_b(Pi).dot(ctx.omega) * ctx.dw / ctx.dt;
}

}  // namespace

// ---- ideal full information ----

IdealFiPolicy::IdealFiPolicy(const PlantModel& m, const Exosystem& e, const RelativeDegreeInfo& rd,
                             RowVec K, Mat Pi0)
    : eqs_(std::make_unique<RegulatorEquations>(m, e, rd)), K_(std::move(K)) {
  check_gain(K_, m.n());
  Pi_ = pick_start(*eqs_, Pi0);
  f_.resize(Pi_.rows(), Pi_.cols());
  g_.resize(Pi_.rows(), Pi_.cols());
}

double IdealFiPolicy::control(const StepContext& ctx) const {
  const RowVec gamma = eqs_->lambda_a(Pi_) - K_ * Pi_;
  return K_.dot(ctx.x) + gamma.dot(ctx.omega) + white_noise_term(*eqs_, Pi_, ctx);
}

void IdealFiPolicy::flow(const StepContext& ctx, double, double dt) {
  eqs_->drift(Pi_, f_);
  eqs_->diffusion(Pi_, g_);
  Pi_ += f_ * dt + g_ * ctx.dw;
}

RegsolFiPolicy::RegsolFiPolicy(RowVec K, const RegulatorSolution& sol)
    : K_(std::move(K)), gamma_(gamma_from(sol, K_)), t_(sol.t) {}

double RegsolFiPolicy::control(const StepContext& ctx) const {
  const std::size_t i = ctx.step;
  if (i >= t_.size() || std::abs(t_[i] - ctx.t) > 1e-9 * std::max(1.0, ctx.t))
    throw ConfigError("regulator solution grid does not match the simulation grid");
  double u = K_.dot(ctx.x) + gamma_.gamma_a[i].dot(ctx.omega);
  if (std::isfinite(ctx.dw)) u += gamma_.gamma_b[i].dot(ctx.omega) * ctx.dw / ctx.dt;
  return u;
}

// ---- approximate full information ----

ApproxFiPolicy::ApproxFiPolicy(const PlantModel& m, const Exosystem& e, const RelativeDegreeInfo& rd,
                               RowVec K, ReconConfig recon, Mat Pi0)
    : m_(m),
      eqs_(std::make_unique<RegulatorEquations>(m, e, rd)),
      reg_(*eqs_, pick_start(*eqs_, Pi0)),
      K_(std::move(K)),
      recon_(recon) {
  check_gain(K_, m.n());
}

double ApproxFiPolicy::control(const StepContext& ctx) const {
  return K_.dot(ctx.x) + (reg_.lam_a() - K_ * reg_.Pi()).dot(ctx.omega);
}

void ApproxFiPolicy::flow(const StepContext&, double, double dt) { reg_.flow(dt); }

JumpReport ApproxFiPolicy::jump(const SampleRecord& rec) {
  const ReconResult r =
      delta_w_full_info(rec.x, rec.x_prev, rec.u_prev, rec.omega_prev, m_, rec.eps, recon_);
  reg_.jump(r.dw);
  return {true, r.dw, r.v_norm, r.skipped};
}

// ---- ideal output feedback ----

IdealOfPolicy::IdealOfPolicy(const PlantModel& m, const Exosystem& e, const RelativeDegreeInfo& rd,
                             GainSet gains, Vec z0, Mat Pi0)
    : m_(m), eqs_(std::make_unique<RegulatorEquations>(m, e, rd)), gains_(std::move(gains)) {
  check_gain(gains_.K, m.n());
  if (m.Ca.size() != m.n()) throw ConfigError("output feedback needs the measurement row Ca");
  if (gains_.L.empty()) throw ConfigError("output feedback needs an observer gain schedule");
  Pi_ = pick_start(*eqs_, Pi0);
  f_.resize(Pi_.rows(), Pi_.cols());
  g_.resize(Pi_.rows(), Pi_.cols());
  z_ = z0.size() ? z0 : Vec::Zero(m.n());
  dz_.resize(m.n());
}

double IdealOfPolicy::control(const StepContext& ctx) const {
  return gains_.K.dot(z_) + (eqs_->lambda_a(Pi_) - gains_.K * Pi_).dot(ctx.omega);
}

void IdealOfPolicy::flow(const StepContext& ctx, double u, double dt) {
  const Vec& L = gains_.L.at(ctx.t);
  // The observer copies the plant with x replaced by z, plus injection on y^a.
  dz_.noalias() = m_.A * z_;
  dz_.noalias() += m_.B * u;
  dz_.noalias() += m_.P * ctx.omega;
  dz_ += L * (m_.Ca.dot(z_) - ctx.ya);
  Vec diff = m_.F * z_ + m_.G * u + m_.R * ctx.omega;
  z_ += dz_ * dt + diff * ctx.dw;

  eqs_->drift(Pi_, f_);
  eqs_->diffusion(Pi_, g_);
  Pi_ += f_ * dt + g_ * ctx.dw;
}

// ---- hybrid output feedback ----

HybridOfPolicy::HybridOfPolicy(const PlantModel& m, const Exosystem& e, const RelativeDegreeInfo& rd,
                               GainSet gains, double eps, ReconConfig recon, Vec z0, Mat Pi0)
    : m_(m),
      eqs_(std::make_unique<RegulatorEquations>(m, e, rd)),
      reg_(*eqs_, pick_start(*eqs_, Pi0)),
      gains_(std::move(gains)),
      recon_(recon) {
  check_gain(gains_.K, m.n());
  if (m.Ca.size() != m.n() || m.Cb.size() != m.n())
    throw ConfigError("output feedback needs both measurement rows Ca and Cb");
  if (gains_.L.empty()) throw ConfigError("output feedback needs an observer gain schedule");
  back_ = std::isinf(eps) ? Mat::Identity(e.S.rows(), e.S.rows()) : ExoPropagator(e.S, eps).backward();
  AK_ = m.A + m.B * gains_.K;
  FK_ = m.F + m.G * gains_.K;
  z_ = z0.size() ? z0 : Vec::Zero(m.n());
  if (z_.size() != m.n()) throw ConfigError("z0 has the wrong dimension");
  z_latch_ = z_;
  dz_.resize(m.n());
  gamma_latch_ = reg_.lam_a() - gains_.K * reg_.Pi();
}

double HybridOfPolicy::control(const StepContext& ctx) const {
  return gains_.K.dot(z_) + (reg_.lam_a() - gains_.K * reg_.Pi()).dot(ctx.omega);
}

void HybridOfPolicy::flow(const StepContext& ctx, double, double dt) {
  const Vec& L = gains_.L.at(ctx.t);
  const RowVec gamma = reg_.lam_a() - gains_.K * reg_.Pi();
  dz_.noalias() = AK_ * z_;
  dz_ += L * (m_.Ca.dot(z_) - ctx.ya);
  dz_.noalias() += m_.P * ctx.omega;
  dz_ += m_.B * gamma.dot(ctx.omega);
  z_.noalias() += dz_ * dt;
  reg_.flow(dt);
}

JumpReport HybridOfPolicy::jump(const SampleRecord& rec) {
  // Reconstruction and jump both use the estimate latched just after the
  // previous jump, consistent with the control applied over the interval.
  const ReconResult r =
      delta_w_output(rec.yb, rec.yb_prev, z_latch_, rec.u_prev, rec.omega_prev, m_, rec.eps, recon_);
  const Vec omega_back = back_ * rec.omega;
  Vec w = FK_ * z_latch_;
  w.noalias() += m_.R * omega_back;
  w += m_.G * gamma_latch_.dot(omega_back);
  z_.noalias() += w * r.dw;
  reg_.jump(r.dw);
  z_latch_ = z_;
  gamma_latch_ = reg_.lam_a() - gains_.K * reg_.Pi();
  return {true, r.dw, r.v_norm, r.skipped};
}

// ---- internal model ----

InternalModelParams default_internal_model(const Exosystem& e, double shift) {
  const Eigen::Index nu = e.S.rows();
  InternalModelParams p;
  p.H = e.S - shift * Mat::Identity(nu, nu);
  p.L = Vec::Ones(nu);
  return p;
}

namespace {

void check_internal_model(const Mat& H, const Vec& L, const Mat& S, double tau_eig) {
  const Eigen::Index nu = S.rows();
  if (H.rows() != nu || H.cols() != nu || L.size() != nu)
    throw ConfigError("internal model (H_im, L_im) does not match the exosystem dimension");
  // PBH test: rank [H - lambda I, L] = nu at every eigenvalue of H. Better
  // conditioned than the Krylov matrix when the spectrum spans decades.
  Eigen::EigenSolver<Mat> eh(H, false);
  using CMat = Eigen::MatrixXcd;
  for (Eigen::Index i = 0; i < nu; ++i) {
    CMat pbh(nu, nu + 1);
    pbh.leftCols(nu) = H.cast<std::complex<double>>() - eh.eigenvalues()(i) * CMat::Identity(nu, nu);
    pbh.col(nu) = L.cast<std::complex<double>>();
    Eigen::FullPivLU<CMat> lu(pbh);
    lu.setThreshold(1e-10);
    if (lu.rank() < nu) throw ConfigError("(H_im, L_im) is not controllable");
  }
  Eigen::EigenSolver<Mat> es(S, false);
  for (Eigen::Index i = 0; i < nu; ++i)
    for (Eigen::Index j = 0; j < nu; ++j)
      if (std::abs(eh.eigenvalues()(i) - es.eigenvalues()(j)) <= tau_eig)
        throw ConfigError("spectrum of H_im intersects the spectrum of S");
}

// Solves H X - X S = -C by vectorisation.
Mat sylvester(const Mat& H, const Mat& S, const Mat& C) {
  const Eigen::Index nu = H.rows(), ns = S.rows();
  const Mat M = kron(Mat::Identity(ns, ns), H) - kron(Mat(S.transpose()), Mat::Identity(nu, nu));
  const Vec x = M.fullPivLu().solve(Vec(-vec(C)));
  return unvec(x, nu, ns);
}

double min_singular(const Mat& X) {
  Eigen::JacobiSVD<Mat> svd(X);
  return svd.singularValues().minCoeff();
}

}  // namespace

namespace {

// Fixed point of the drift-only regulator flow, i.e. the noise-free solution.
// Starting there keeps Pi^z well conditioned from t = 0.
Mat drift_fixed_point(const PlantModel& m, const Exosystem& e, const RegulatorEquations& eqs) {
  try {
    return solve_francis(m.A, m.B, m.C, m.D, m.P, m.Q, e.S).Pi;
  } catch (const ResonanceError&) {
    return eqs.initial_condition();
  }
}

}  // namespace

InternalModelPolicy::InternalModelPolicy(const PlantModel& m, const Exosystem& e,
                                         const RelativeDegreeInfo& rd, RowVec K,
                                         InternalModelParams im, ReconConfig recon, Mat Pi0)
    : m_(m),
      S_(e.S),
      eqs_(std::make_unique<RegulatorEquations>(m, e, rd)),
      reg_(*eqs_, Pi0.size() ? pick_start(*eqs_, Pi0) : drift_fixed_point(m, e, *eqs_)),
      K_(std::move(K)),
      im_(std::move(im)),
      recon_(recon) {
  check_gain(K_, m.n());
  check_internal_model(im_.H, im_.L, S_, 1e-6);
  const Eigen::Index nu = S_.rows();
  if (im_.G2.size() == 0) im_.G2 = -im_.L;
  if (im_.G2.size() != nu) throw ConfigError("G2_im has the wrong length");
  const RowVec gamma = reg_.lam_a() - K_ * reg_.Pi();
  Pi_z_ = im_.sylvester_start ? sylvester(im_.H, S_, im_.L * gamma) : Mat::Zero(nu, nu);
  dPi_z_.resize(nu, nu);
  K_z_ = RowVec::Zero(nu);
  z_ = Vec::Zero(nu);
  dz_.resize(nu);
  update_gain();
  // Start the controller state on the manifold z = Pi^z w.
  z_ = Pi_z_ * e.omega0;
}

void InternalModelPolicy::update_gain() {
  ++steps_;
  const double nrm = Pi_z_.norm();
  if (nrm == 0.0 || min_singular(Pi_z_) <= im_.tau_inv * nrm) {
    ++held_;
    return;
  }
  const RowVec gamma = reg_.lam_a() - K_ * reg_.Pi();
  K_z_ = Pi_z_.transpose().partialPivLu().solve(gamma.transpose()).transpose();
}

double InternalModelPolicy::control(const StepContext& ctx) const {
  return K_.dot(ctx.x) + K_z_.dot(z_);
}

void InternalModelPolicy::flow(const StepContext& ctx, double u, double dt) {
  const double err = m_.C.dot(ctx.x) + m_.D * u + m_.Q.dot(ctx.omega);
  dz_.noalias() = im_.H * z_;
  dz_ += im_.L * K_z_.dot(z_);
  dz_ += im_.G2 * err;
  z_.noalias() += dz_ * dt;

  const RowVec gamma = reg_.lam_a() - K_ * reg_.Pi();
  dPi_z_.noalias() = im_.H * Pi_z_;
  dPi_z_.noalias() -= Pi_z_ * S_;
  dPi_z_.noalias() += im_.L * gamma;
  Pi_z_.noalias() += dPi_z_ * dt;

  reg_.flow(dt);
  update_gain();
}

JumpReport InternalModelPolicy::jump(const SampleRecord& rec) {
  const ReconResult r =
      delta_w_full_info(rec.x, rec.x_prev, rec.u_prev, rec.omega_prev, m_, rec.eps, recon_);
  reg_.jump(r.dw);
  return {true, r.dw, r.v_norm, r.skipped};
}

InternalModelDesign internal_model_design(const Mat& H, const Vec& L, const RowVec& K,
                                          const RegulatorSolution& sol, const Exosystem& e,
                                          const Vec& G2, double tau_inv, double tau_eig) {
  check_internal_model(H, L, e.S, tau_eig);
  if (sol.size() < 2) throw ConfigError("regulator solution is too short");
  const Eigen::Index nu = e.S.rows();
  InternalModelDesign d;
  d.H = H;
  d.L_im = L;
  d.G2 = G2.size() ? Mat(G2) : Mat(-L);
  const FeedforwardSplit ff = gamma_from(sol, K);

  Mat Pi_z = Mat::Zero(nu, nu);
  RowVec K_z = RowVec::Zero(nu);
  for (std::size_t i = 0; i < sol.size(); ++i) {
    if (i > 0) {
      const double dt = sol.t[i] - sol.t[i - 1];
      Pi_z += (H * Pi_z - Pi_z * e.S + L * ff.gamma_a[i - 1]) * dt;
    }
    const double margin = Pi_z.norm() > 0.0 ? min_singular(Pi_z) : 0.0;
    if (Pi_z.norm() > 0.0 && margin > tau_inv * Pi_z.norm())
      K_z = Pi_z.transpose().partialPivLu().solve(ff.gamma_a[i].transpose()).transpose();
    else
      ++d.held;
    d.t.push_back(sol.t[i]);
    d.Pi_z.push_back(Pi_z);
    d.K_z.push_back(K_z);
    d.margin.push_back(margin);
  }
  if (d.held * 10 > sol.size())
    throw Error("internal model design failed: Pi^z is singular on more than 10% of the grid");
  return d;
}

// ---- estimation error diagnostics ----

EstimationErrorReport estimation_error_diag(const PlantModel& m, const RowVec& K,
                                            const GainSchedule& L, const HybridTrajectory& traj) {
  if (traj.z.size() != traj.size()) throw ConfigError("trajectory has no estimator channel");
  (void)K;  // enters through the recorded u = K z + Gamma w
  EstimationErrorReport rep;
  const Eigen::Index n = m.n();
  const Mat I = Mat::Identity(n, n);
  double res2 = 0.0, eta2 = 0.0;
  std::size_t pairs = 0;
  std::ptrdiff_t prev = -1;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (!traj.jump[i]) continue;
    // (F + G K) z + (R + G Gamma) w = F z + G u + R w since u = K z + Gamma w.
    const Vec w = diffusion_vector(m, traj.z[i], traj.u[i], traj.omega[i]);
    const double vz = m.Cb.dot(w);
    ++rep.samples;
    if (vz != 0.0) {
      const Mat Psi = w * m.Cb / vz;
      rep.annihilation_max = std::max(rep.annihilation_max, std::abs(m.Cb * ((I - Psi) * w)));
    }
    const Vec eta = traj.x[i] - traj.z[i];
    eta2 += eta.squaredNorm();
    if (prev >= 0) {
      const std::size_t p = static_cast<std::size_t>(prev);
      const double eps = traj.t[i] - traj.t[p];
      const Vec wp = diffusion_vector(m, traj.z[p], traj.u[p], traj.omega[p]);
      const double vp = m.Cb.dot(wp);
      const Vec eta_p = traj.x[p] - traj.z[p];
      Mat step = L.at(traj.t[p]) * m.Ca;
      step += vp != 0.0 ? Mat((I - wp * m.Cb / vp) * m.A) : m.A;
      const Vec predicted = eta_p + step * eta_p * eps;
      res2 += (eta - predicted).squaredNorm();
      ++pairs;
    }
    prev = static_cast<std::ptrdiff_t>(i);
  }
  if (rep.samples) rep.eta_rms = std::sqrt(eta2 / rep.samples);
  if (pairs) rep.eta_residual_rms = std::sqrt(res2 / pairs);
  return rep;
}

}  // namespace stochreg
