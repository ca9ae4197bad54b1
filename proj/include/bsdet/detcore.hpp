#pragma once

// Finite-dimensional determinant core: Fredholm and regularized
// determinants, logarithmic derivatives, winding numbers of analytic
// functions, and Riesz spectral projections with their Jordan data.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

#include "core.hpp"

namespace bsdet {

// Distance from the nearest integer beyond which winding numbers and
// projection traces refuse to round.
inline constexpr double kIntegerRoundTol = 0.2;

// det(I + M) by partial-pivot LU.
inline Complex det_fredholm(const ComplexMatrix& M) {
  if (M.rows() != M.cols())
    throw DimensionError("det_fredholm: matrix must be square");
  ComplexMatrix A = ComplexMatrix::Identity(M.rows(), M.cols()) + M;
  return Eigen::PartialPivLU<ComplexMatrix>(A).determinant();
}

// Regularized determinant det_p(I + M).  p = 1 is the plain Fredholm
// determinant; p = 2 multiplies by exp(-tr M), the convention under which
// det_2(I + M) = prod_k (1 + mu_k) exp(-mu_k) over the eigenvalues of M.
inline Complex det_regularized(const ComplexMatrix& M, int p) {
  if (M.rows() != M.cols())
    throw DimensionError("det_regularized: matrix must be square");
  if (p == 1) return det_fredholm(M);
  if (p == 2) return det_fredholm(M) * std::exp(-M.trace());
  throw DomainError("det_regularized: order must be 1 or 2");
}

// d/dz log det(I - L(z)) = -tr((I - L)^{-1} L'), from the matrix values at
// z.  Refuses when I - L is numerically singular.
inline Complex log_derivative_det_values(const ComplexMatrix& L,
                                         const ComplexMatrix& Lp) {
  if (L.rows() != L.cols() || Lp.rows() != Lp.cols() || L.rows() != Lp.rows())
    throw DimensionError("log_derivative_det: matrices must be square and equal size");
  ComplexMatrix A = ComplexMatrix::Identity(L.rows(), L.cols()) - L;
  Eigen::PartialPivLU<ComplexMatrix> lu(A);
  if (lu.rcond() < 1e-13)
    throw SingularPointError(
        "log_derivative_det: I - L is numerically singular (z at a spectral point?)");
  return -lu.solve(Lp).trace();
}

using MatrixFamily = std::function<ComplexMatrix(Complex)>;

// Same, with the family L and its z-derivative supplied as callables.
inline Complex log_derivative_det(const MatrixFamily& L, const MatrixFamily& Lprime,
                                  Complex z) {
  return log_derivative_det_values(L(z), Lprime(z));
}

// Circular contour with equispaced parameterization.
struct ContourSpec {
  Complex center{0.0, 0.0};
  double radius = 1.0;
  int nodes = 128;

  Complex point(int j) const {
    double theta = 2.0 * std::numbers::pi * j / nodes;
    return center + radius * Complex(std::cos(theta), std::sin(theta));
  }
};

inline void validate(const ContourSpec& c) {
  require(c.radius > 0.0, "contour: radius must be positive");
  require(c.nodes >= 16, "contour: need at least 16 nodes");
}

// Winding number (1/2 pi i) \oint f'/f dz on the contour, which counts
// zeros minus poles inside.  f is sampled at the equispaced nodes; f' in
// the angle parameter comes from 4th-order centered differences, and the
// integral is the (spectrally accurate) trapezoid sum.  The result must
// land within kIntegerRoundTol of an integer.
inline int winding_multiplicity(const std::function<Complex(Complex)>& f,
                                const ContourSpec& contour) {
  validate(contour);
  const int N = contour.nodes;
  std::vector<Complex> w(N);
  double scale = 0.0;
  for (int j = 0; j < N; ++j) {
    w[j] = f(contour.point(j));
    if (!std::isfinite(w[j].real()) || !std::isfinite(w[j].imag()))
      throw ContourError("winding_multiplicity: f not finite on the contour");
    scale = std::max(scale, std::abs(w[j]));
  }
  for (int j = 0; j < N; ++j)
    if (std::abs(w[j]) < 1e-13 * scale)
      throw ContourError(
          "winding_multiplicity: f vanishes on the contour (zero on the path?)");
  const double h = 2.0 * std::numbers::pi / N;
  Complex sum = 0.0;
  for (int j = 0; j < N; ++j) {
    const Complex& wp1 = w[(j + 1) % N];
    const Complex& wm1 = w[(j - 1 + N) % N];
    const Complex& wp2 = w[(j + 2) % N];
    const Complex& wm2 = w[(j - 2 + N) % N];
    Complex dfdtheta = (8.0 * (wp1 - wm1) - (wp2 - wm2)) / (12.0 * h);
    sum += dfdtheta / w[j];
  }
  Complex val = sum * h / Complex(0.0, 2.0 * std::numbers::pi);
  double rounded = std::round(val.real());
  if (std::abs(val - Complex(rounded, 0.0)) > kIntegerRoundTol)
    throw ContourError("winding_multiplicity: value " + std::to_string(val.real()) +
                       (val.imag() < 0 ? "" : "+") + std::to_string(val.imag()) +
                       "i too far from an integer; refine the contour");
  return static_cast<int>(rounded);
}

// Total algebraic multiplicity of the spectrum of T enclosed by the
// contour, via the trace of the Riesz projection alone.  Unlike
// riesz_projection below this makes no single-point assumption: any number
// of eigenvalues may sit inside, as long as none touches the path.
inline int enclosed_multiplicity(const ComplexMatrix& T,
                                 const ContourSpec& contour) {
  if (T.rows() != T.cols())
    throw DimensionError("enclosed_multiplicity: matrix must be square");
  validate(contour);
  const int n = static_cast<int>(T.rows());
  const int N = contour.nodes;
  Complex trace = 0.0;
  for (int j = 0; j < N; ++j) {
    Complex zeta = contour.point(j);
    ComplexMatrix A = T - zeta * ComplexMatrix::Identity(n, n);
    Eigen::PartialPivLU<ComplexMatrix> lu(A);
    if (lu.rcond() < 1e-13)
      throw ContourError(
          "enclosed_multiplicity: resolvent singular on the contour (spectrum on the path?)");
    Complex phase(std::cos(2.0 * std::numbers::pi * j / N),
                  std::sin(2.0 * std::numbers::pi * j / N));
    trace += phase * lu.solve(ComplexMatrix::Identity(n, n)).trace();
  }
  trace *= -contour.radius / static_cast<double>(N);
  double rounded = std::round(trace.real());
  if (std::abs(trace - Complex(rounded, 0.0)) > 0.1)
    throw ContourError(
        "enclosed_multiplicity: trace " + std::to_string(trace.real()) +
        " too far from an integer; contour may graze the spectrum");
  return static_cast<int>(rounded);
}

// Riesz projection data at an isolated spectral point lambda0 of T (the
// contour center): P the spectral projection, D the nilpotent part
// (T - lambda0) P, m = algebraic multiplicity = tr P, mu = ascent (smallest
// k with D^{k+1} = 0; mu = 0 means semisimple).
struct LaurentData {
  Complex lambda0;
  ComplexMatrix P;
  ComplexMatrix D;
  int m = 0;
  int mu = 0;
};

// Traces of projections must land essentially on an integer; anything past
// this is a resolution failure, not a rounding choice.
inline constexpr double kProjectionTraceTol = 0.1;

// P = -(1/2 pi i) \oint (T - zeta)^{-1} d zeta over the contour, by the
// equispaced trapezoid rule.  The contour must enclose exactly one spectral
// point of T, at its center, and cross no spectrum; nearby eigenvalues on
// the contour show up as an ill-conditioned resolvent and raise.
inline LaurentData riesz_projection(const ComplexMatrix& T, const ContourSpec& contour) {
  if (T.rows() != T.cols())
    throw DimensionError("riesz_projection: matrix must be square");
  validate(contour);
  const Complex lambda0 = contour.center;
  const int n = static_cast<int>(T.rows());
  const int N = contour.nodes;
  ComplexMatrix P = ComplexMatrix::Zero(n, n);
  for (int j = 0; j < N; ++j) {
    Complex zeta = contour.point(j);
    ComplexMatrix A = T - zeta * ComplexMatrix::Identity(n, n);
    Eigen::PartialPivLU<ComplexMatrix> lu(A);
    if (lu.rcond() < 1e-13)
      throw ContourError(
          "riesz_projection: resolvent singular on the contour (spectrum on the path?)");
    double theta = 2.0 * std::numbers::pi * j / N;
    P += Complex(std::cos(theta), std::sin(theta)) *
         lu.solve(ComplexMatrix::Identity(n, n));
  }
  P *= -contour.radius / static_cast<double>(N);

  LaurentData out;
  out.lambda0 = lambda0;
  out.P = P;
  out.D = (T - lambda0 * ComplexMatrix::Identity(n, n)) * P;
  Complex trace = P.trace();
  double rounded = std::round(trace.real());
  if (std::abs(trace - Complex(rounded, 0.0)) > kProjectionTraceTol)
    throw ContourError(
        "riesz_projection: trace " + std::to_string(trace.real()) +
        " too far from an integer; contour may graze the spectrum");
  out.m = static_cast<int>(rounded);

  double tol = 1e-10 * std::max(T.norm(), 1e-300);
  ComplexMatrix Dk = out.D;
  out.mu = 0;
  while (Dk.norm() >= tol && out.mu <= n) {
    Dk = Dk * out.D;
    ++out.mu;
  }
  if (out.mu > n)
    throw ContourError("riesz_projection: nilpotent part fails to vanish");
  return out;
}

}  // namespace bsdet
