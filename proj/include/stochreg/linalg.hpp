#ifndef STOCHREG_LINALG_HPP
#define STOCHREG_LINALG_HPP

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace stochreg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

// Error hierarchy. Everything thrown by the library derives from Error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ModelError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct ResonanceError : Error {
  using Error::Error;
};
struct DivergenceError : Error {
  DivergenceError(const std::string& what, double at) : Error(what), time(at) {}
  double time;
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

template <typename A, typename B>
auto kron(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  using Scalar = typename A::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      Eigen::kroneckerProduct(a.derived(), b.derived());
  return out;
}

// Column-stacking vectorisation.
template <typename Derived>
auto vec(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(m.size());
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) out(k++) = m(i, j);
  return out;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> unvec(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v, Eigen::Index rows, Eigen::Index cols) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = v(k++);
  return out;
}

// Largest real part over the spectrum.
template <typename Derived>
typename Derived::Scalar spectral_abscissa(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() == 0) return -std::numeric_limits<Scalar>::infinity();
  Eigen::EigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> es(m.derived(), false);
  if (es.info() != Eigen::Success) throw Error("eigensolver failed");
  return es.eigenvalues().real().maxCoeff();
}

// Matrix exponential (Pade scaling-and-squaring from Eigen's MatrixFunctions).
template <typename Derived>
auto expm(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a = m.derived();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out = a.exp();
  return out;
}

// One Euler-Maruyama step: x + drift*dt + diffusion*dw, written into out.
template <typename X, typename Dr, typename Di, typename Out>
void em_step(const Eigen::MatrixBase<X>& x, const Eigen::MatrixBase<Dr>& drift,
             const Eigen::MatrixBase<Di>& diffusion, typename X::Scalar dt,
             typename X::Scalar dw, Eigen::MatrixBase<Out>& out) {
  out.derived().noalias() = x + drift * dt + diffusion * dw;
}

template <typename X, typename Dr, typename Di>
auto em_step(const Eigen::MatrixBase<X>& x, const Eigen::MatrixBase<Dr>& drift,
             const Eigen::MatrixBase<Di>& diffusion, typename X::Scalar dt,
             typename X::Scalar dw) {
  typename X::PlainObject out(x.rows(), x.cols());
  em_step(x, drift, diffusion, dt, dw, out);
  return out;
}

}  // namespace stochreg

#endif  // STOCHREG_LINALG_HPP
