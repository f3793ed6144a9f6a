#ifndef STOCHREG_RECON_HPP
#define STOCHREG_RECON_HPP

#include <iosfwd>
#include <vector>

#include "stochreg/model.hpp"
#include "stochreg/sim.hpp"

namespace stochreg {

// v = F x + G u + R w
Vec diffusion_vector(const PlantModel& m, const Vec& x, double u, const Vec& omega);

struct ReconConfig {
  double eps = 5e-5;
  // The threshold is tau_rel * (1 + |F| + |G| + |R|) * (|x| + |u| + |w|),
  // so it scales with the signal and reconstruction stays scale invariant.
  double tau_rel = 1e-6;
  double tau_floor = 1e-300;

  double threshold(const PlantModel& m, const Vec& x, double u, const Vec& omega) const;
};

struct ReconResult {
  double dw = 0.0;
  double v_norm = 0.0;
  bool skipped = false;
};

// Least-squares increment from two consecutive full-state samples.
ReconResult delta_w_full_info(const Vec& x_k, const Vec& x_prev, double u_prev,
                              const Vec& omega_prev, const PlantModel& m, double eps,
                              const ReconConfig& cfg);

// Increment from two samples of y^b = Cb x with the estimate z standing in for x.
ReconResult delta_w_output(double yb_k, double yb_prev, const Vec& z_prev, double u_prev,
                           const Vec& omega_prev, const PlantModel& m, double eps,
                           const ReconConfig& cfg);

// CSV header k,t_k,dW_true,dW_est,v_norm,skipped.
void write_audit_csv(std::ostream& os, const std::vector<ReconAudit>& audit);

}  // namespace stochreg

#endif  // STOCHREG_RECON_HPP
