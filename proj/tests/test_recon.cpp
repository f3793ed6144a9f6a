#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "stochreg/recon.hpp"

using namespace stochreg;

TEST_CASE("diffusion vector") {
  const CircuitPreset c = preset_circuit(1.0);
  const Vec x = Vec::Zero(3);
  const Vec v = diffusion_vector(c.model, x, 0.0, c.exo.omega0);
  CHECK((v - 0.01 * c.model.P * c.exo.omega0).norm() < 1e-14);

  PlantModel quiet = c.model;
  quiet.F.setZero();
  quiet.G.setZero();
  quiet.R.setZero();
  CHECK(diffusion_vector(quiet, Vec::Ones(3), 2.0, c.exo.omega0).norm() == 0.0);

  const Vec x2 = Vec::LinSpaced(3, 1, 3);
  const Vec sum = diffusion_vector(c.model, x + x2, 1.5, 2 * c.exo.omega0);
  const Vec parts = diffusion_vector(c.model, x, 0.5, c.exo.omega0) +
                    diffusion_vector(c.model, x2, 1.0, c.exo.omega0);
  CHECK((sum - parts).norm() < 1e-12 * sum.norm());
}

TEST_CASE("one-step data with an injected increment is inverted exactly") {
  CircuitPreset c = preset_circuit(1.0);
  PlantModel& m = c.model;
  m.Cb = RowVec::Zero(3);
  m.Cb(2) = 1.0;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> N(0.0, 1.0);
  const double eps = 5e-5;
  ReconConfig cfg;
  cfg.eps = eps;
  int tested = 0;
  for (int draw = 0; draw < 1000; ++draw) {
    Vec x(3), w(5);
    for (int i = 0; i < 3; ++i) x(i) = 10 * N(rng);
    for (int i = 0; i < 5; ++i) w(i) = 60 * N(rng);
    const double u = N(rng), inj = N(rng) * std::sqrt(eps);
    const Vec v = diffusion_vector(m, x, u, w);
    const Vec drift = m.A * x + m.B * u + m.P * w;
    const Vec xk = x + drift * eps + v * inj;

    const ReconResult full = delta_w_full_info(xk, x, u, w, m, eps, cfg);
    const ReconResult out = delta_w_output(m.Cb.dot(xk), m.Cb.dot(x), x, u, w, m, eps, cfg);
    if (full.skipped || out.skipped) continue;
    ++tested;
    // Relative to the larger of |w| and the increment that rounding in the
    // samples can resolve, |x_k| / |v|.
    const double s_full = std::max(std::abs(inj), xk.norm() / v.norm());
    const double s_out = std::max(std::abs(inj), std::abs(m.Cb.dot(xk)) / std::abs(m.Cb.dot(v)));
    CHECK(std::abs(full.dw - inj) <= 1e-12 * s_full);
    CHECK(std::abs(out.dw - inj) <= 1e-12 * s_out);
  }
  CHECK(tested > 990);
}

TEST_CASE("pure drift steps reconstruct to zero and small v is skipped") {
  const CircuitPreset c = preset_circuit(1.0);
  PlantModel m = c.model;
  m.Cb = RowVec::Zero(3);
  m.Cb(0) = 1.0;
  const Vec x = Vec::LinSpaced(3, -1, 1);
  const Vec w = c.exo.omega0;
  const double eps = 1e-3;
  ReconConfig cfg;
  const Vec xk = x + (m.A * x + m.B * 0.2 + m.P * w) * eps;
  CHECK(std::abs(delta_w_full_info(xk, x, 0.2, w, m, eps, cfg).dw) < 1e-10);
  CHECK(std::abs(delta_w_output(m.Cb.dot(xk), m.Cb.dot(x), x, 0.2, w, m, eps, cfg).dw) < 1e-10);

  PlantModel quiet = m;
  quiet.F.setZero();
  quiet.G.setZero();
  quiet.R.setZero();
  const ReconResult r = delta_w_full_info(xk, x, 0.2, w, quiet, eps, cfg);
  CHECK(r.skipped);
  CHECK(r.dw == 0.0);
}

TEST_CASE("threshold scales with the signal") {
  const CircuitPreset c = preset_circuit(1.0);
  ReconConfig cfg;
  const Vec x = Vec::Ones(3);
  const double t1 = cfg.threshold(c.model, x, 1.0, c.exo.omega0);
  const double t2 = cfg.threshold(c.model, 3 * x, 3.0, 3 * c.exo.omega0);
  CHECK(t2 == doctest::Approx(3 * t1));
}

TEST_CASE("audit csv") {
  std::vector<ReconAudit> audit{{1, 0.5, 0.1, 0.09, 2.0, false}, {2, 1.0, -0.2, 0.0, 0.0, true}};
  std::ostringstream os;
  write_audit_csv(os, audit);
  const std::string s = os.str();
  CHECK(s.rfind("k,t_k,dW_true,dW_est,v_norm,skipped\n", 0) == 0);
  CHECK(s.find("\n2,1,-0.2") != std::string::npos);
}
