#include <doctest.h>

#include <cmath>
#include <sstream>

#include "stochreg/sim.hpp"

using namespace stochreg;

namespace {

PlantModel scalar_plant(double a, double b, double f, double g) {
  PlantModel m;
  m.A = Mat::Constant(1, 1, a);
  m.B = Vec::Constant(1, b);
  m.F = Mat::Constant(1, 1, f);
  m.G = Vec::Constant(1, g);
  m.P = Mat::Constant(1, 1, 1.0);
  m.R = Mat::Constant(1, 1, 0.5);
  m.C = RowVec::Constant(1, 1.0);
  m.Q = RowVec::Constant(1, -1.0);
  return m;
}

struct Gain : ControllerPolicy {
  double k;
  std::size_t jumps = 0;
  explicit Gain(double k_) : k(k_) {}
  double control(const StepContext& ctx) const override { return k * ctx.x(0); }
  void flow(const StepContext&, double, double) override {}
  JumpReport jump(const SampleRecord& rec) override {
    ++jumps;
    CHECK(rec.t == doctest::Approx(rec.k * rec.eps));
    return {};
  }
};

}  // namespace

TEST_CASE("engine reproduces an independent Euler-Maruyama recursion") {
  const PlantModel m = scalar_plant(-1.0, 1.0, 0.3, 0.2);
  const Exosystem e{Mat::Zero(1, 1), Vec::Constant(1, 2.0)};
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 1.0;
  cfg.steady_start = 0.5;
  cfg.record_every = 1;
  cfg.x0 = Vec::Constant(1, 0.7);
  const BrownianPath path = BrownianPath::generate(4, cfg.dt, cfg.horizon);
  Gain pol(-0.5);
  const HybridTrajectory tr = simulate_closed_loop(m, e, pol, path, cfg);

  // Oracle: scalar recursion written out by hand.
  double x = 0.7, sum = 0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < 1000; ++j) {
    const double u = -0.5 * x;
    const double err = x - 2.0;
    if (j * 1e-3 >= 0.5) {
      sum += err * err;
      ++count;
    }
    CHECK(tr.x[j](0) == doctest::Approx(x).epsilon(1e-13));
    x += (-x + u + 2.0) * 1e-3 + (0.3 * x + 0.2 * u + 1.0) * path.increment(j);
  }
  CHECK(tr.x.back()(0) == doctest::Approx(x).epsilon(1e-13));
  CHECK(tr.steady.rms_e() == doctest::Approx(std::sqrt(sum / count)).epsilon(1e-12));
  CHECK_FALSE(tr.diverged);
}

TEST_CASE("jumps happen at every multiple of epsilon with pre and post rows") {
  const PlantModel m = scalar_plant(-1.0, 1.0, 0.0, 0.0);
  const Exosystem e{Mat::Zero(1, 1), Vec::Ones(1)};
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.epsilon = 1e-2;
  cfg.horizon = 0.5;
  cfg.steady_start = 0.0;
  const BrownianPath path = BrownianPath::generate(1, cfg.dt, cfg.horizon);
  Gain pol(0.0);
  const HybridTrajectory tr = simulate_closed_loop(m, e, pol, path, cfg);
  CHECK(pol.jumps == 50);
  CHECK(tr.jumps == 50);
  std::size_t post = 0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (!tr.jump[i]) continue;
    ++post;
    REQUIRE(i > 0);
    CHECK(tr.t[i - 1] == tr.t[i]);
    CHECK_FALSE(tr.jump[i - 1]);
  }
  CHECK(post == 50);

  SimConfig bad = cfg;
  bad.epsilon = 1.5e-3;
  CHECK_THROWS_AS(simulate_closed_loop(m, e, pol, path, bad), ConfigError);
  SimConfig inf = cfg;
  inf.epsilon = kInfinitePeriod;
  Gain quiet(0.0);
  CHECK(simulate_closed_loop(m, e, quiet, path, inf).jumps == 0);
}

TEST_CASE("audit carries the true increment of each interval") {
  struct Recon : Gain {
    Recon() : Gain(0.0) {}
    JumpReport jump(const SampleRecord&) override { return {true, 0.0, 1.0, false}; }
  } pol;
  const PlantModel m = scalar_plant(-1.0, 1.0, 0.1, 0.0);
  const Exosystem e{Mat::Zero(1, 1), Vec::Ones(1)};
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.epsilon = 5e-3;
  cfg.horizon = 0.1;
  cfg.steady_start = 0.0;
  const BrownianPath path = BrownianPath::generate(9, cfg.dt, cfg.horizon);
  const HybridTrajectory tr = simulate_closed_loop(m, e, pol, path, cfg);
  REQUIRE(tr.audit.size() == 20);
  for (const auto& a : tr.audit)
    CHECK(a.dw_true == doctest::Approx(path.increment_between((a.k - 1) * 5, a.k * 5)).epsilon(1e-14));
}

TEST_CASE("divergence is flagged and the run truncated") {
  const PlantModel m = scalar_plant(5.0, 0.0, 0.0, 0.0);
  const Exosystem e{Mat::Zero(1, 1), Vec::Ones(1)};
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 20.0;
  cfg.steady_start = 1.0;
  cfg.blowup = 1e6;
  const BrownianPath path = BrownianPath::generate(1, cfg.dt, cfg.horizon);
  Gain pol(0.0);
  const HybridTrajectory tr = simulate_closed_loop(m, e, pol, path, cfg);
  CHECK(tr.diverged);
  CHECK(tr.diverged_at < 5.0);
  CHECK(tr.t.back() < 5.0);
}

TEST_CASE("exosystem propagator is exact for rotations") {
  Mat S(2, 2);
  S << 0, 3, -3, 0;
  const ExoPropagator prop(S, 0.1);
  CHECK(prop.forward()(0, 0) == doctest::Approx(std::cos(0.3)).epsilon(1e-14));
  CHECK(prop.forward()(0, 1) == doctest::Approx(std::sin(0.3)).epsilon(1e-14));
  CHECK((prop.forward() * prop.backward() - Mat::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("fundamental matrix matches the scalar product formula") {
  const double a = -0.4, f = 0.6, dt = 1e-3;
  const BrownianPath path = BrownianPath::generate(2, dt, 1.0);
  const FundamentalTrace tr =
      fundamental_matrix(Mat::Constant(1, 1, a), Mat::Constant(1, 1, f), path, dt, 1.0, 100);
  double phi = 1.0;
  for (std::size_t j = 0; j < 1000; ++j) phi *= 1 + a * dt + f * path.increment(j);
  CHECK(tr.phi.back()(0, 0) == doctest::Approx(phi).epsilon(1e-12));
  CHECK(tr.t.size() == 11);
}

TEST_CASE("trajectory csv layout") {
  const PlantModel m = scalar_plant(-1.0, 1.0, 0.0, 0.0);
  const Exosystem e{Mat::Zero(1, 1), Vec::Ones(1)};
  SimConfig cfg;
  cfg.dt = 0.1;
  cfg.horizon = 0.3;
  cfg.steady_start = 0.0;
  cfg.record_every = 1;
  Gain pol(0.0);
  const HybridTrajectory tr =
      simulate_closed_loop(m, e, pol, BrownianPath::generate(1, 0.1, 0.3), cfg);
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  const std::string s = os.str();
  CHECK(s.rfind("t,jump,e,u,x1,w1\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 1 + static_cast<long>(tr.size()));
}
