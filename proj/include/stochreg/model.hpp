#ifndef STOCHREG_MODEL_HPP
#define STOCHREG_MODEL_HPP

#include <string>
#include <utility>
#include <vector>

#include "stochreg/linalg.hpp"

namespace stochreg {

// SISO linear stochastic plant
//   dx = (A x + B u + P w) dt + (F x + G u + R w) dW
//   e  = C x + D u + Q w
// with measurement rows y^a = Ca x, y^b = Cb x.
struct PlantModel {
  Mat A, P, F, R;
  Vec B, G;
  RowVec C;
  double D = 0.0;
  RowVec Q;
  RowVec Ca, Cb;  // empty when no output feedback is used

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index nu() const { return P.cols(); }
  bool has_measurements() const { return Ca.size() > 0 || Cb.size() > 0; }
};

// Autonomous signal generator dw/dt = S w, w(0) = omega0.
struct Exosystem {
  Mat S;
  Vec omega0;
};

struct ValidationReport {
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

// Piecewise-constant observer gain: L(t) = gain of the last piece with start <= t.
class GainSchedule {
 public:
  GainSchedule() = default;
  explicit GainSchedule(Vec constant) { pieces_.emplace_back(0.0, std::move(constant)); }
  explicit GainSchedule(std::vector<std::pair<double, Vec>> pieces);

  const Vec& at(double t) const;
  bool empty() const { return pieces_.empty(); }
  const std::vector<std::pair<double, Vec>>& pieces() const { return pieces_; }

 private:
  std::vector<std::pair<double, Vec>> pieces_;
};

struct GainSet {
  RowVec K;
  GainSchedule L;
};

struct RelativeDegreeInfo {
  int r = 0;
  double b = 0.0;  // C A^{r-1} B, zero when r = 0
  double g = 0.0;  // C A^{r-1} G, zero when r = 0
  std::vector<RowVec> q_chain;    // Q_0 .. Q_r
  std::vector<RowVec> zeta_maps;  // C A^i, i = 0 .. r-1
};

ValidationReport validate_plant(const PlantModel& m);

// tau is relative to max(1, ||S||).
ValidationReport validate_exosystem(const Exosystem& e, double tau = 1e-9);

// Throws ModelError("undefined relative degree") when no r <= n fits.
RelativeDegreeInfo stochastic_relative_degree(const PlantModel& m, const Exosystem& e);

struct CircuitPreset {
  PlantModel model;
  Exosystem exo;
  GainSet gains;
};

CircuitPreset preset_circuit(double d);

struct ScalarPreset {
  PlantModel model;
  Exosystem exo;
};

ScalarPreset preset_scalar(double c, double P = 1.0, double R = 1.0, double Q = 1.0);

}  // namespace stochreg

#endif  // STOCHREG_MODEL_HPP
