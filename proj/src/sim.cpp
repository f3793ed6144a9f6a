#include "stochreg/sim.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace stochreg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void put_number(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive");
  if (!(steady_start >= 0.0 && steady_start < horizon))
    throw ConfigError("steady-state window start must satisfy 0 <= T_ss < T");
  if (!(blowup > 0.0)) throw ConfigError("blowup guard must be positive");
  (void)steps_per_sample();
}

std::size_t SimConfig::steps() const {
  return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
}

std::optional<std::size_t> SimConfig::steps_per_sample() const {
  if (std::isinf(epsilon) && epsilon > 0) return std::nullopt;
  if (!(epsilon > 0.0)) throw ConfigError("sampling period must be positive or inf");
  const double q = epsilon / dt;
  const double m = std::round(q);
  if (m < 1.0 || std::abs(q - m) > 1e-7 * q)
    throw ConfigError("sampling period must be an integer multiple of dt");
  return static_cast<std::size_t>(m);
}

std::size_t SimConfig::effective_record_every() const {
  if (record_every > 0) return record_every;
  if (auto m = steps_per_sample()) return std::max<std::size_t>(1, *m / 10);
  return std::max<std::size_t>(1, steps() / 1000);
}

double SteadyStats::rms_e() const { return count ? std::sqrt(sum_e2 / count) : kNaN; }
double SteadyStats::rms_zx() const { return count ? std::sqrt(sum_zx2 / count) : kNaN; }

Vec em_step_checked(const Vec& x, const Vec& drift, const Vec& diffusion, double dt, double dw,
                    double t) {
  Vec out = em_step(x, drift, diffusion, dt, dw);
  if (!out.allFinite()) throw DivergenceError("integration blowup at t = " + std::to_string(t), t);
  return out;
}

ExoPropagator::ExoPropagator(const Mat& S, double dt)
    : dt_(dt), forward_(expm(S * dt)), backward_(expm(-S * dt)) {}

Mat exo_propagator(const Mat& S, double dt) { return ExoPropagator(S, dt).forward(); }

HybridTrajectory simulate_closed_loop(const PlantModel& m, const Exosystem& e, ControllerPolicy& c,
                                      const BrownianPath& path, const SimConfig& cfg) {
  cfg.validate();
  if (std::abs(path.step() - cfg.dt) > 1e-12 * cfg.dt)
    throw ConfigError("Brownian path step does not match the simulation step");
  const std::size_t steps = cfg.steps();
  if (path.size() < steps) throw ConfigError("Brownian path is shorter than the horizon");

  const Eigen::Index n = m.n();
  const auto per_sample = cfg.steps_per_sample();
  const std::size_t record_every = cfg.effective_record_every();
  const Mat exo_step = exo_propagator(e.S, cfg.dt);
  const bool has_ya = m.Ca.size() == n;
  const bool has_yb = m.Cb.size() == n;
  const bool oracle = c.oracle();

  HybridTrajectory traj;
  Vec x = cfg.x0.size() ? cfg.x0 : Vec::Zero(n);
  if (x.size() != n) throw ConfigError("x0 has the wrong dimension");
  Vec omega = e.omega0;
  Vec drift(n), diffusion(n), x_next(n), omega_next(omega.size());

  Vec x_prev = x, omega_prev = omega;
  double u_prev = 0.0, yb_prev = has_yb ? m.Cb.dot(x) : 0.0;
  double dw_interval = 0.0;

  auto row = [&](double t, std::size_t j, char flag) {
    const StepContext ctx{t, j, cfg.dt, x, has_ya ? m.Ca.dot(x) : 0.0, omega, kNaN};
    const double u = c.control(ctx);
    traj.t.push_back(t);
    traj.jump.push_back(flag);
    traj.x.push_back(x);
    if (const Vec* z = c.estimate()) traj.z.push_back(*z);
    traj.omega.push_back(omega);
    traj.u.push_back(u);
    traj.e.push_back(m.C.dot(x) + m.D * u + m.Q.dot(omega));
  };

  bool recorded_here = false;
  try {
    for (std::size_t j = 0; j < steps; ++j) {
      const double t = static_cast<double>(j) * cfg.dt;
      const double dw = path.increment(j);
      const StepContext ctx{t, j, cfg.dt, x, has_ya ? m.Ca.dot(x) : 0.0, omega, oracle ? dw : kNaN};
      const double u = c.control(ctx);
      if (!std::isfinite(u)) throw DivergenceError("non-finite control", t);

      if (!recorded_here && j % record_every == 0) row(t, j, 0);
      recorded_here = false;

      if (t >= cfg.steady_start) {
        const double err = m.C.dot(x) + m.D * u + m.Q.dot(omega);
        traj.steady.sum_e2 += err * err;
        if (const Vec* z = c.estimate()) traj.steady.sum_zx2 += (*z - x).squaredNorm();
        ++traj.steady.count;
      }
      if (per_sample && j % *per_sample == 0) {
        x_prev = x;
        omega_prev = omega;
        u_prev = u;
        yb_prev = has_yb ? m.Cb.dot(x) : 0.0;
        dw_interval = 0.0;
      }

      drift.noalias() = m.A * x;
      drift.noalias() += m.B * u;
      drift.noalias() += m.P * omega;
      diffusion.noalias() = m.F * x;
      diffusion.noalias() += m.G * u;
      diffusion.noalias() += m.R * omega;
      em_step(x, drift, diffusion, cfg.dt, dw, x_next);
      c.flow(ctx, u, cfg.dt);
      x.swap(x_next);
      omega_next.noalias() = exo_step * omega;
      omega.swap(omega_next);
      dw_interval += dw;

      const double t_next = static_cast<double>(j + 1) * cfg.dt;
      if (!x.allFinite() || x.norm() >= cfg.blowup)
        throw DivergenceError("state exceeded the blowup guard", t_next);

      if (per_sample && (j + 1) % *per_sample == 0) {
        const std::size_t k = (j + 1) / *per_sample;
        if (!c.wants_jump_at(k)) continue;
        if (cfg.record_jumps) row(t_next, j + 1, 0);
        const SampleRecord rec{k,      t_next, cfg.epsilon, x,           x_prev,
                               has_yb ? m.Cb.dot(x) : 0.0, yb_prev, u_prev, omega, omega_prev};
        const JumpReport report = c.jump(rec);
        ++traj.jumps;
        if (report.skipped) ++traj.skipped;
        if (report.reconstructed)
          traj.audit.push_back({k, t_next, dw_interval, report.dw_est, report.v_norm, report.skipped});
        if (cfg.record_jumps) {
          row(t_next, j + 1, 1);
          recorded_here = true;
        }
      }
    }
    if (!recorded_here) row(static_cast<double>(steps) * cfg.dt, steps, 0);
  } catch (const DivergenceError& err) {
    traj.diverged = true;
    traj.diverged_at = err.time;
  }
  return traj;
}

FundamentalTrace fundamental_matrix(const Mat& A_h, const Mat& F_h, const BrownianPath& path,
                                    double dt, double horizon, std::size_t record_every,
                                    double blowup) {
  if (A_h.rows() != A_h.cols() || F_h.rows() != F_h.cols() || A_h.rows() != F_h.rows())
    throw ConfigError("fundamental matrix needs square matrices of equal size");
  if (std::abs(path.step() - dt) > 1e-12 * dt) throw ConfigError("path step does not match dt");
  if (record_every == 0) record_every = 1;
  const std::size_t steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  if (path.size() < steps) throw ConfigError("Brownian path is shorter than the horizon");

  FundamentalTrace out;
  const Eigen::Index n = A_h.rows();
  Mat phi = Mat::Identity(n, n), next(n, n);
  out.t.push_back(0.0);
  out.phi.push_back(phi);
  for (std::size_t j = 0; j < steps; ++j) {
    const double dw = path.increment(j);
    next = phi;
    next.noalias() += (A_h * dt + F_h * dw) * phi;
    phi.swap(next);
    if (!phi.allFinite() || phi.norm() >= blowup) {
      out.diverged = true;
      out.t.push_back(static_cast<double>(j + 1) * dt);
      out.phi.push_back(phi);
      break;
    }
    if ((j + 1) % record_every == 0 || j + 1 == steps) {
      out.t.push_back(static_cast<double>(j + 1) * dt);
      out.phi.push_back(phi);
    }
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const HybridTrajectory& traj) {
  const Eigen::Index n = traj.x.empty() ? 0 : traj.x.front().size();
  const Eigen::Index nz = traj.z.empty() ? 0 : traj.z.front().size();
  const Eigen::Index nu = traj.omega.empty() ? 0 : traj.omega.front().size();
  os << "t,jump,e,u";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i + 1;
  for (Eigen::Index i = 0; i < nz; ++i) os << ",z" << i + 1;
  for (Eigen::Index i = 0; i < nu; ++i) os << ",w" << i + 1;
  os << '\n';
  for (std::size_t r = 0; r < traj.size(); ++r) {
    put_number(os, traj.t[r]);
    os << ',' << static_cast<int>(traj.jump[r]) << ',';
    put_number(os, traj.e[r]);
    os << ',';
    put_number(os, traj.u[r]);
    for (Eigen::Index i = 0; i < n; ++i) {
      os << ',';
      put_number(os, traj.x[r](i));
    }
    if (nz) {
      for (Eigen::Index i = 0; i < nz; ++i) {
        os << ',';
        put_number(os, traj.z[r](i));
      }
    }
    for (Eigen::Index i = 0; i < nu; ++i) {
      os << ',';
      put_number(os, traj.omega[r](i));
    }
    os << '\n';
  }
}

}  // namespace stochreg
