#ifndef STOCHREG_SIM_HPP
#define STOCHREG_SIM_HPP

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "stochreg/linalg.hpp"
#include "stochreg/model.hpp"
#include "stochreg/noise.hpp"

namespace stochreg {

inline constexpr double kInfinitePeriod = std::numeric_limits<double>::infinity();

struct SimConfig {
  double dt = 5e-7;
  double epsilon = kInfinitePeriod;  // sampling period; +inf disables jumps
  double horizon = 2.0;
  double steady_start = 1.0;
  std::uint64_t seed = 1;
  std::size_t record_every = 0;  // fine steps between rows; 0 picks a default
  bool record_jumps = true;      // pre/post rows at every jump
  double blowup = 1e12;
  Vec x0;  // empty means zero

  void validate() const;
  std::size_t steps() const;
  // Fine steps per sampling period, nullopt when epsilon is infinite.
  std::optional<std::size_t> steps_per_sample() const;
  std::size_t effective_record_every() const;
};

// Data visible to a policy during one fine step starting at time t.
struct StepContext {
  double t;
  std::size_t step;
  double dt;
  const Vec& x;      // full state; output-feedback policies only read ya
  double ya;         // Ca x (0 when the model has no measurement rows)
  const Vec& omega;
  double dw;         // increment of this step for oracle policies, NaN otherwise
};

// Sampled data handed to the jump map at t_k. Only instants t_k and t_{k-1}
// appear here.
struct SampleRecord {
  std::size_t k;
  double t;
  double eps;
  const Vec& x;
  const Vec& x_prev;
  double yb;
  double yb_prev;
  double u_prev;  // control applied on [t_{k-1}, t_{k-1} + dt)
  const Vec& omega;
  const Vec& omega_prev;
};

struct JumpReport {
  bool reconstructed = false;
  double dw_est = 0.0;
  double v_norm = 0.0;
  bool skipped = false;
};

class ControllerPolicy {
 public:
  virtual ~ControllerPolicy() = default;

  virtual double control(const StepContext& ctx) const = 0;
  // Advances the internal state over [t, t + dt). Non-oracle policies see
  // ctx.dw = NaN, so their flow is drift-only.
  virtual void flow(const StepContext& ctx, double u, double dt) = 0;
  virtual JumpReport jump(const SampleRecord&) { return {}; }
  virtual bool wants_jump_at(std::size_t /*k*/) const { return true; }
  virtual bool oracle() const { return false; }
  // State estimate recorded as z, nullptr when the policy has none.
  virtual const Vec* estimate() const { return nullptr; }
};

struct ReconAudit {
  std::size_t k;
  double t;
  double dw_true;
  double dw_est;
  double v_norm;
  bool skipped;
};

struct SteadyStats {
  double sum_e2 = 0.0;
  double sum_zx2 = 0.0;
  std::size_t count = 0;
  double rms_e() const;
  double rms_zx() const;
};

struct HybridTrajectory {
  std::vector<double> t;
  std::vector<char> jump;  // 1 on the post-jump row
  std::vector<Vec> x;
  std::vector<Vec> z;  // empty when the policy has no estimator
  std::vector<Vec> omega;
  std::vector<double> u;
  std::vector<double> e;
  std::vector<ReconAudit> audit;
  SteadyStats steady;  // accumulated at every fine step with t >= steady_start
  std::size_t jumps = 0;
  std::size_t skipped = 0;
  bool diverged = false;
  double diverged_at = std::numeric_limits<double>::quiet_NaN();

  std::size_t size() const { return t.size(); }
  double skip_rate() const { return jumps ? static_cast<double>(skipped) / jumps : 0.0; }
};

// Checked Euler-Maruyama step; throws DivergenceError stamped with t when the
// result is not finite.
Vec em_step_checked(const Vec& x, const Vec& drift, const Vec& diffusion, double dt, double dw,
                    double t);

// e^{S dt} with its inverse, computed once.
class ExoPropagator {
 public:
  ExoPropagator(const Mat& S, double dt);
  const Mat& forward() const { return forward_; }
  const Mat& backward() const { return backward_; }
  double step() const { return dt_; }

 private:
  double dt_;
  Mat forward_;
  Mat backward_;
};

Mat exo_propagator(const Mat& S, double dt);

HybridTrajectory simulate_closed_loop(const PlantModel& m, const Exosystem& e, ControllerPolicy& c,
                                      const BrownianPath& path, const SimConfig& cfg);

struct FundamentalTrace {
  std::vector<double> t;
  std::vector<Mat> phi;
  bool diverged = false;
};

FundamentalTrace fundamental_matrix(const Mat& A_h, const Mat& F_h, const BrownianPath& path,
                                    double dt, double horizon, std::size_t record_every = 1,
                                    double blowup = 1e12);

// CSV header t,jump,e,u,x1..xn[,z1..zn],w1..wnu.
void write_trajectory_csv(std::ostream& os, const HybridTrajectory& traj);

}  // namespace stochreg

#endif  // STOCHREG_SIM_HPP
