#ifndef STOCHREG_CONTROL_HPP
#define STOCHREG_CONTROL_HPP

#include <memory>
#include <vector>

#include "stochreg/model.hpp"
#include "stochreg/recon.hpp"
#include "stochreg/regeq.hpp"
#include "stochreg/sim.hpp"

namespace stochreg {

// u = K x + Gamma_a w (+ Gamma_b w dW/dt when r >= 1), with Pi integrated
// alongside the plant from the true increments.
class IdealFiPolicy : public ControllerPolicy {
 public:
  IdealFiPolicy(const PlantModel& m, const Exosystem& e, const RelativeDegreeInfo& rd, RowVec K,
                Mat Pi0 = {});

  double control(const StepContext& ctx) const override;
  void flow(const StepContext& ctx, double u, double dt) override;
  bool oracle() const override { return true; }

  const Mat& Pi() const { return Pi_; }

 private:
  std::unique_ptr<RegulatorEquations> eqs_;
  RowVec K_;
  Mat Pi_, f_, g_;
};

// Same law, reading (Pi, Lam) from a precomputed solution recorded at every
// step of the simulation grid.
class RegsolFiPolicy : public ControllerPolicy {
 public:
  RegsolFiPolicy(RowVec K, const RegulatorSolution& sol);

  double control(const StepContext& ctx) const override;
  void flow(const StepContext&, double, double) override {}
  bool oracle() const override { return true; }

 private:
  RowVec K_;
  FeedforwardSplit gamma_;
  std::vector<double> t_;
};

// Hybrid regulator with increments reconstructed from the sampled state.
class ApproxFiPolicy : public ControllerPolicy {
 public:
  ApproxFiPolicy(const PlantModel& m, const Exosystem& e, const RelativeDegreeInfo& rd, RowVec K,
                 ReconConfig recon = {}, Mat Pi0 = {});

  double control(const StepContext& ctx) const override;
  void flow(const StepContext& ctx, double u, double dt) override;
  JumpReport jump(const SampleRecord& rec) override;

  const HybridRegulator& regulator() const { return reg_; }

 private:
  PlantModel m_;
  std::unique_ptr<RegulatorEquations> eqs_;
  HybridRegulator reg_;
  RowVec K_;
  ReconConfig recon_;
};

// Observer driven by the true noise path. Non-causal; diagnostic only.
class IdealOfPolicy : public ControllerPolicy {
 public:
  IdealOfPolicy(const PlantModel& m, const Exosystem& e, const RelativeDegreeInfo& rd, GainSet gains,
                Vec z0 = {}, Mat Pi0 = {});

  double control(const StepContext& ctx) const override;
  void flow(const StepContext& ctx, double u, double dt) override;
  bool oracle() const override { return true; }
  const Vec* estimate() const override { return &z_; }

 private:
  PlantModel m_;
  std::unique_ptr<RegulatorEquations> eqs_;
  GainSet gains_;
  Mat Pi_, f_, g_;
  Vec z_, dz_;
};

// Luenberger flow on y^a between samples, jump on reconstructed increments
// from y^b at sampling instants.
class HybridOfPolicy : public ControllerPolicy {
 public:
  HybridOfPolicy(const PlantModel& m, const Exosystem& e, const RelativeDegreeInfo& rd,
                 GainSet gains, double eps, ReconConfig recon = {}, Vec z0 = {}, Mat Pi0 = {});

  double control(const StepContext& ctx) const override;
  void flow(const StepContext& ctx, double u, double dt) override;
  JumpReport jump(const SampleRecord& rec) override;
  const Vec* estimate() const override { return &z_; }

  const Vec& latch() const { return z_latch_; }
  const HybridRegulator& regulator() const { return reg_; }

 private:
  PlantModel m_;
  std::unique_ptr<RegulatorEquations> eqs_;
  HybridRegulator reg_;
  GainSet gains_;
  ReconConfig recon_;
  Mat back_;  // e^{-S eps}
  Mat AK_;    // A + B K
  Mat FK_;    // F + G K
  Vec z_, z_latch_, dz_;
  RowVec gamma_latch_;
};

struct InternalModelParams {
  Mat H;
  Vec L;
  Vec G2;           // injection gain of e; empty means -L
  double tau_inv = 1e-8;
  bool sylvester_start = true;  // start Pi^z at the frozen-coefficient solution
};

// Default (H_im, L_im) for an exosystem: H = S - a I, L exciting every mode.
InternalModelParams default_internal_model(const Exosystem& e, double shift = 20.0);

// u = K x + K^z z,  dz = (H + L K^z) z dt + G2 e dt, with Pi, Lam from the
// inline hybrid regulator and Pi^z integrated online.
class InternalModelPolicy : public ControllerPolicy {
 public:
  InternalModelPolicy(const PlantModel& m, const Exosystem& e, const RelativeDegreeInfo& rd,
                      RowVec K, InternalModelParams im, ReconConfig recon = {}, Mat Pi0 = {});

  double control(const StepContext& ctx) const override;
  void flow(const StepContext& ctx, double u, double dt) override;
  JumpReport jump(const SampleRecord& rec) override;

  const Mat& Pi_z() const { return Pi_z_; }
  const RowVec& K_z() const { return K_z_; }
  const Vec& state() const { return z_; }
  const HybridRegulator& regulator() const { return reg_; }
  std::size_t held_steps() const { return held_; }
  std::size_t steps() const { return steps_; }

 private:
  void update_gain();

  PlantModel m_;
  Mat S_;
  std::unique_ptr<RegulatorEquations> eqs_;
  HybridRegulator reg_;
  RowVec K_;
  InternalModelParams im_;
  ReconConfig recon_;
  Mat Pi_z_, dPi_z_;
  RowVec K_z_;
  Vec z_, dz_;
  std::size_t held_ = 0, steps_ = 0;
};

struct InternalModelDesign {
  Mat H, L_im, G2;
  std::vector<double> t;
  std::vector<Mat> Pi_z;
  std::vector<RowVec> K_z;
  std::vector<double> margin;  // min singular value of Pi^z
  std::size_t held = 0;

  Mat g1(std::size_t i) const { return H + L_im * K_z[i]; }
};

// Offline integration of Pi^z along a regulator solution.
InternalModelDesign internal_model_design(const Mat& H, const Vec& L, const RowVec& K,
                                          const RegulatorSolution& sol, const Exosystem& e,
                                          const Vec& G2 = {}, double tau_inv = 1e-8,
                                          double tau_eig = 1e-6);

struct EstimationErrorReport {
  std::size_t samples = 0;
  double annihilation_max = 0.0;  // max |Cb (I - Psi) w| over sampling instants
  double eta_residual_rms = 0.0;  // one-step predicted vs observed eta
  double eta_rms = 0.0;
};

// Uses post-jump rows of traj (z required).
EstimationErrorReport estimation_error_diag(const PlantModel& m, const RowVec& K,
                                            const GainSchedule& L, const HybridTrajectory& traj);

}  // namespace stochreg

#endif  // STOCHREG_CONTROL_HPP
