#include "stochreg/recon.hpp"

#include <cstdio>
#include <ostream>

namespace stochreg {

Vec diffusion_vector(const PlantModel& m, const Vec& x, double u, const Vec& omega) {
  Vec v = m.F * x;
  v.noalias() += m.G * u;
  v.noalias() += m.R * omega;
  return v;
}

double ReconConfig::threshold(const PlantModel& m, const Vec& x, double u, const Vec& omega) const {
  const double gain = 1.0 + m.F.norm() + m.G.norm() + m.R.norm();
  const double scale = x.norm() + std::abs(u) + omega.norm();
  return std::max(tau_floor, tau_rel * gain * scale);
}

ReconResult delta_w_full_info(const Vec& x_k, const Vec& x_prev, double u_prev,
                              const Vec& omega_prev, const PlantModel& m, double eps,
                              const ReconConfig& cfg) {
  ReconResult out;
  const Vec v = diffusion_vector(m, x_prev, u_prev, omega_prev);
  out.v_norm = v.norm();
  if (out.v_norm <= cfg.threshold(m, x_prev, u_prev, omega_prev)) {
    out.skipped = true;
    return out;
  }
  Vec residual = x_k - x_prev;
  residual.noalias() -= (m.A * x_prev) * eps;
  residual.noalias() -= m.B * (u_prev * eps);
  residual.noalias() -= (m.P * omega_prev) * eps;
  out.dw = v.dot(residual) / v.squaredNorm();
  return out;
}

ReconResult delta_w_output(double yb_k, double yb_prev, const Vec& z_prev, double u_prev,
                           const Vec& omega_prev, const PlantModel& m, double eps,
                           const ReconConfig& cfg) {
  ReconResult out;
  const Vec v = diffusion_vector(m, z_prev, u_prev, omega_prev);
  const double vz = m.Cb.dot(v);
  out.v_norm = std::abs(vz);
  // Cb v is compared against the same relative threshold, weighted by |Cb|.
  if (out.v_norm <= m.Cb.norm() * cfg.threshold(m, z_prev, u_prev, omega_prev)) {
    out.skipped = true;
    return out;
  }
  const double drift = m.Cb.dot(m.A * z_prev + m.B * u_prev + m.P * omega_prev);
  out.dw = (yb_k - yb_prev - drift * eps) / vz;
  return out;
}

void write_audit_csv(std::ostream& os, const std::vector<ReconAudit>& audit) {
  os << "k,t_k,dW_true,dW_est,v_norm,skipped\n";
  char buf[160];
  for (const auto& a : audit) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%d\n", a.k, a.t, a.dw_true,
                  a.dw_est, a.v_norm, a.skipped ? 1 : 0);
    os << buf;
  }
}

}  // namespace stochreg
