#include "stochreg/model.hpp"

#include <algorithm>
#include <complex>
#include <sstream>

namespace stochreg {

GainSchedule::GainSchedule(std::vector<std::pair<double, Vec>> pieces) : pieces_(std::move(pieces)) {
  std::stable_sort(pieces_.begin(), pieces_.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [t, gain] : pieces_) {
    if (!std::isfinite(t) || !gain.allFinite()) throw ConfigError("gain schedule has non-finite entries");
  }
}

const Vec& GainSchedule::at(double t) const {
  if (pieces_.empty()) throw ConfigError("empty gain schedule");
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                             [](double value, const auto& piece) { return value < piece.first; });
  if (it == pieces_.begin()) return pieces_.front().second;
  return std::prev(it)->second;
}

namespace {

void expect_shape(ValidationReport& report, const char* name, Eigen::Index rows, Eigen::Index cols,
                  Eigen::Index want_rows, Eigen::Index want_cols) {
  if (rows != want_rows || cols != want_cols) {
    std::ostringstream os;
    os << name << " is " << rows << "x" << cols << ", expected " << want_rows << "x" << want_cols;
    report.failures.push_back(os.str());
  }
}

bool is_zero(double value, double scale) { return std::abs(value) <= 1e-12 * (1.0 + scale); }

bool row_is_zero(const RowVec& row, double scale) {
  return row.size() == 0 || row.cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + scale);
}

}  // namespace

ValidationReport validate_plant(const PlantModel& m) {
  ValidationReport report;
  const Eigen::Index n = m.A.rows();
  const Eigen::Index nu = m.P.cols();
  if (n == 0) report.failures.push_back("state dimension n must be positive");
  if (nu == 0) report.failures.push_back("exogenous dimension nu must be positive");
  expect_shape(report, "A", m.A.rows(), m.A.cols(), n, n);
  expect_shape(report, "B", m.B.rows(), 1, n, 1);
  expect_shape(report, "P", m.P.rows(), m.P.cols(), n, nu);
  expect_shape(report, "F", m.F.rows(), m.F.cols(), n, n);
  expect_shape(report, "G", m.G.rows(), 1, n, 1);
  expect_shape(report, "R", m.R.rows(), m.R.cols(), n, nu);
  expect_shape(report, "C", 1, m.C.cols(), 1, n);
  expect_shape(report, "Q", 1, m.Q.cols(), 1, nu);
  if (m.has_measurements()) {
    expect_shape(report, "Ca", 1, m.Ca.cols(), 1, n);
    expect_shape(report, "Cb", 1, m.Cb.cols(), 1, n);
    if (m.Ca.cols() == n && m.Cb.cols() == n) {
      Mat stacked(2, n);
      stacked << m.Ca, m.Cb;
      Eigen::FullPivLU<Mat> lu(stacked);
      lu.setThreshold(1e-10);
      if (lu.rank() < 2) report.failures.push_back("Ca and Cb are linearly dependent");
    }
  }
  if (!std::isfinite(m.D)) report.failures.push_back("D is not finite");
  auto finite = [&](const char* name, bool ok) {
    if (!ok) report.failures.push_back(std::string(name) + " has non-finite entries");
  };
  finite("A", m.A.allFinite());
  finite("B", m.B.allFinite());
  finite("P", m.P.allFinite());
  finite("F", m.F.allFinite());
  finite("G", m.G.allFinite());
  finite("R", m.R.allFinite());
  finite("C", m.C.allFinite());
  finite("Q", m.Q.allFinite());
  return report;
}

ValidationReport validate_exosystem(const Exosystem& e, double tau) {
  ValidationReport report;
  const Eigen::Index nu = e.S.rows();
  if (nu == 0 || e.S.cols() != nu) {
    report.failures.push_back("S must be square and nonempty");
    return report;
  }
  if (e.omega0.size() != nu) report.failures.push_back("omega0 length does not match S");
  if (!e.S.allFinite()) {
    report.failures.push_back("S has non-finite entries");
    return report;
  }

  const double scale = std::max(1.0, e.S.norm());
  const double tol = tau * scale;
  Eigen::EigenSolver<Mat> es(e.S, false);
  if (es.info() != Eigen::Success) {
    report.failures.push_back("eigensolver failed on S");
    return report;
  }
  const Eigen::VectorXcd lambda = es.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (std::abs(lambda(i).real()) > tol) {
      std::ostringstream os;
      os << "eigenvalue " << lambda(i) << " is off the imaginary axis";
      report.failures.push_back(os.str());
    }
  }

  // Cluster eigenvalues and compare algebraic vs geometric multiplicity.
  std::vector<bool> used(lambda.size(), false);
  const Eigen::MatrixXcd Sc = e.S.cast<std::complex<double>>();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (used[i]) continue;
    Eigen::Index algebraic = 0;
    for (Eigen::Index j = i; j < lambda.size(); ++j) {
      if (!used[j] && std::abs(lambda(j) - lambda(i)) <= tol) {
        used[j] = true;
        ++algebraic;
      }
    }
    if (algebraic == 1) continue;
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(Sc - lambda(i) * Eigen::MatrixXcd::Identity(nu, nu));
    lu.setThreshold(1e-8);
    const Eigen::Index geometric = nu - lu.rank();
    if (geometric != algebraic) {
      std::ostringstream os;
      os << "eigenvalue " << lambda(i) << " has algebraic multiplicity " << algebraic
         << " but geometric multiplicity " << geometric;
      report.failures.push_back(os.str());
    }
  }
  return report;
}

RelativeDegreeInfo stochastic_relative_degree(const PlantModel& m, const Exosystem& e) {
  RelativeDegreeInfo info;
  info.q_chain.push_back(m.Q);
  if (m.D != 0.0) {
    info.r = 0;
    return info;
  }

  const Eigen::Index n = m.n();
  RowVec row = m.C;  // C A^k
  for (Eigen::Index k = 0; k < n; ++k) {
    info.zeta_maps.push_back(row);
    const double rn = row.norm();
    const double cb = row.dot(m.B);
    const double cg = row.dot(m.G);
    // Q_{k+1} = C A^k P + Q_k S
    info.q_chain.push_back(row * m.P + info.q_chain.back() * e.S);
    if (!is_zero(cb, rn * m.B.norm()) || !is_zero(cg, rn * m.G.norm())) {
      info.r = static_cast<int>(k) + 1;
      info.b = cb;
      info.g = cg;
      return info;
    }
    const RowVec cf = row * m.F;
    const RowVec cr = row * m.R;
    if (!row_is_zero(cf, rn * m.F.norm()) || !row_is_zero(cr, rn * m.R.norm())) break;
    row = row * m.A;
  }
  throw ModelError("undefined relative degree");
}

CircuitPreset preset_circuit(double d) {
  if (!(d > 0.0)) throw ModelError("circuit preset requires d > 0");
  const double R1 = 1.0, R2 = 4.0, RL = 20.0, C1 = 0.01, C2 = 0.02, L1 = 0.2;

  CircuitPreset out;
  PlantModel& m = out.model;
  m.A.resize(3, 3);
  // clang-format off
  m.A << -RL / L1,         1.0 / L1, -1.0 / L1,
         -1.0 / C1, -1.0 / (R1 * C1),       0.0,
          1.0 / C2,               0.0, -1.0 / (R2 * C2);
  // clang-format on
  m.B.resize(3);
  m.B << -RL / L1, -1.0 / C1, 0.0;
  RowVec ps(5);
  ps << 1, 1, 0, 1, 0;
  Vec p_col(3);
  p_col << 0.0, 1.0 / (R1 * C1), 0.0;
  m.P = p_col * ps;
  m.F = 0.01 * m.A;
  m.G = 0.01 * m.B;
  m.R = 0.01 * m.P;
  m.C.resize(3);
  m.C << RL, 0.0, 0.0;
  m.D = RL;
  m.Q.resize(5);
  m.Q << -1, -1, 0, 0, 0;
  m.Ca.resize(3);
  m.Ca << 1, 0, 0;
  m.Cb.resize(3);
  m.Cb << 0, 1, 0;

  Mat s0(2, 2);
  s0 << 0, 1, -1, 0;
  out.exo.S = Mat::Zero(5, 5);
  out.exo.S.block(1, 1, 2, 2) = 10.0 * s0;
  out.exo.S.block(3, 3, 2, 2) = 50.0 * s0;
  out.exo.S *= 2.0 * M_PI;
  out.exo.omega0.resize(5);
  out.exo.omega0 << 60, 5, 0, 1, 0;
  out.exo.omega0 *= d;

  out.gains.K.resize(3);
  out.gains.K << -0.07, 0.04, 0.06;
  Vec L(3);
  L << -50.0, 0.0, 0.0;
  out.gains.L = GainSchedule(L);
  return out;
}

ScalarPreset preset_scalar(double c, double P, double R, double Q) {
  ScalarPreset out;
  PlantModel& m = out.model;
  m.A = Mat::Constant(1, 1, 0.2);
  m.B = Vec::Constant(1, 0.5);
  m.F = Mat::Constant(1, 1, 0.3);
  m.G = Vec::Constant(1, 0.2);
  m.C = RowVec::Constant(1, c);
  m.D = 0.1;
  m.P = Mat::Constant(1, 1, P);
  m.R = Mat::Constant(1, 1, R);
  m.Q = RowVec::Constant(1, Q);
  out.exo.S = Mat::Zero(1, 1);
  out.exo.omega0 = Vec::Ones(1);
  return out;
}

}  // namespace stochreg
