#pragma once

// Special-function support: the upper-half-plane square root that fixes the
// spectral branch everywhere in this library, real-argument Bessel/Hankel
// evaluation (delegated to Boost.Math), and small-argument complex Bessel
// series for integer order, needed off the real spectral axis.

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/bessel_prime.hpp>
#include <cmath>
#include <complex>
#include <numbers>

#include "core.hpp"

namespace bsdet {

// Branch of sqrt with Im >= 0, continuous off [0, infinity); on the
// positive real axis it returns the positive root, i.e. the limit from
// above.  This pins e^{i sqrt(z) x} as the decaying/outgoing exponential.
inline Complex sqrt_up(Complex z) {
  Complex w = std::sqrt(z);
  if (w.imag() < 0.0) w = -w;
  return w;
}

// A spectral parameter together with its square root on the chosen side of
// the essential spectrum.  For z off [0, infinity) the side is irrelevant;
// boundary values lambda +- i0 on the positive half-axis differ by the
// sign of k (outgoing vs ingoing kernels).
struct SpectralPoint {
  Complex z;
  Complex k;  // k^2 = z, the branch in use

  static SpectralPoint at(Complex z) { return {z, sqrt_up(z)}; }
  static SpectralPoint above(double lambda) {
    Complex k = sqrt_up(Complex(lambda, 0.0));
    return {Complex(lambda, 0.0), k};
  }
  static SpectralPoint below(double lambda) {
    Complex k = sqrt_up(Complex(lambda, 0.0));
    if (lambda > 0.0) k = -k;
    return {Complex(lambda, 0.0), k};
  }
};

// ---------------------------------------------------------------------------
// Real-argument cylinder functions (vetted library routines).

struct BesselJY {
  double J, Y, Jp, Yp;
};

// J_m, Y_m and first derivatives at real x > 0, integer order 0 <= m <= 60.
inline BesselJY bessel_jy(int m, double x) {
  require(m >= 0 && m <= 60, "bessel_jy: order must lie in [0, 60]");
  require(x > 0.0, "bessel_jy: argument must be positive");
  BesselJY r{};
  try {
    r.J = boost::math::cyl_bessel_j(m, x);
    r.Y = boost::math::cyl_neumann(m, x);
    r.Jp = boost::math::cyl_bessel_j_prime(m, x);
    r.Yp = boost::math::cyl_neumann_prime(m, x);
  } catch (const std::exception& e) {
    throw DomainError(std::string("bessel_jy: evaluation failed: ") + e.what());
  }
  if (!std::isfinite(r.Y) || !std::isfinite(r.Yp))
    throw DomainError("bessel_jy: value overflows double range; scaled evaluation needed");
  return r;
}

// H_0^{(1)}(x) = J_0(x) + i Y_0(x) for real x in (0, 200].
inline Complex hankel0_first(double x) {
  require(x > 0.0 && x <= 200.0, "hankel0_first: argument must lie in (0, 200]");
  BesselJY r = bessel_jy(0, x);
  return Complex(r.J, r.Y);
}

struct BesselIK {
  double I, K, Ip, Kp;
};

// Modified Bessel I_m, K_m and first derivatives at real x > 0.  These carry
// the whole negative-z axis: the cylinder kernels at z = -kappa^2 reduce to
// I/K combinations with real arguments.
inline BesselIK bessel_ik(int m, double x) {
  require(m >= 0 && m <= 60, "bessel_ik: order must lie in [0, 60]");
  require(x > 0.0, "bessel_ik: argument must be positive");
  BesselIK r{};
  try {
    r.I = boost::math::cyl_bessel_i(m, x);
    r.K = boost::math::cyl_bessel_k(m, x);
    r.Ip = boost::math::cyl_bessel_i_prime(m, x);
    r.Kp = boost::math::cyl_bessel_k_prime(m, x);
  } catch (const std::exception& e) {
    throw DomainError(std::string("bessel_ik: evaluation failed: ") + e.what());
  }
  if (!std::isfinite(r.I) || !std::isfinite(r.Ip) || !std::isfinite(r.K) || !std::isfinite(r.Kp))
    throw DomainError("bessel_ik: value overflows double range; scaled evaluation needed");
  return r;
}

// ---------------------------------------------------------------------------
// Complex-argument integer-order Bessel functions by ascending series.
// Valid for |w| <= 20 (series cancellation stays under ~7 digits there),
// which covers every off-axis evaluation in this library.

inline Complex besselj_complex(int m, Complex w) {
  require(m >= 0, "besselj_complex: order must be nonnegative");
  require(std::abs(w) <= 20.0, "besselj_complex: series domain is |w| <= 20");
  if (w == Complex(0.0, 0.0)) return m == 0 ? Complex(1.0) : Complex(0.0);
  Complex half = 0.5 * w;
  Complex q = half * half;
  // leading term (w/2)^m / m!
  Complex term = 1.0;
  for (int i = 1; i <= m; ++i) term *= half / static_cast<double>(i);
  Complex sum = term;
  for (int k = 1; k <= 200; ++k) {
    term *= -q / static_cast<double>(k * (m + k));
    sum += term;
    if (std::abs(term) < 1e-18 * (std::abs(sum) + 1e-300)) break;
  }
  return sum;
}

// Y_m(w) for integer m from the standard logarithmic series (principal
// branch of log; cut along the negative real axis, matching sqrt_up limits
// taken from above).
inline Complex bessely_complex(int m, Complex w) {
  require(m >= 0, "bessely_complex: order must be nonnegative");
  require(w != Complex(0.0, 0.0), "bessely_complex: argument must be nonzero");
  require(std::abs(w) <= 20.0, "bessely_complex: series domain is |w| <= 20");
  const double inv_pi = 1.0 / std::numbers::pi;
  Complex half = 0.5 * w;
  Complex q = half * half;

  // finite sum: -(1/pi) sum_{k=0}^{m-1} (m-k-1)!/k! (w/2)^{2k-m}
  Complex finite = 0.0;
  if (m > 0) {
    // term_k = (m-k-1)!/k! * (w/2)^{2k-m}, built by recurrence from k = 0
    Complex term = std::pow(half, -m);
    for (int i = 1; i <= m - 1; ++i) term *= static_cast<double>(i);  // (m-1)!
    for (int k = 0; k <= m - 1; ++k) {
      finite += term;
      if (k < m - 1) term *= q / (static_cast<double>(k + 1) * static_cast<double>(m - 1 - k));
    }
    if (!std::isfinite(finite.real()) || !std::isfinite(finite.imag()))
      throw DomainError("bessely_complex: value overflows double range; scaled evaluation needed");
  }

  // psi-weighted series: -(1/pi) sum_k (-1)^k [psi(k+1)+psi(m+k+1)] /
  // (k! (m+k)!) (w/2)^{2k+m}
  const double euler = 0.57721566490153286060651209008240243;
  double psi_k = -euler;        // psi(1)
  double psi_mk = -euler;       // psi(m+1) accumulates below
  for (int i = 1; i <= m; ++i) psi_mk += 1.0 / static_cast<double>(i);
  Complex coeff = 1.0;          // (w/2)^m / (0! m!)
  for (int i = 1; i <= m; ++i) coeff *= half / static_cast<double>(i);
  Complex series = coeff * (psi_k + psi_mk);
  Complex coeff_k = coeff;
  for (int k = 1; k <= 200; ++k) {
    coeff_k *= -q / static_cast<double>(k * (m + k));
    psi_k += 1.0 / static_cast<double>(k);
    psi_mk += 1.0 / static_cast<double>(m + k);
    Complex term = coeff_k * (psi_k + psi_mk);
    series += term;
    if (std::abs(term) < 1e-18 * (std::abs(series) + 1e-300)) break;
  }

  Complex J = besselj_complex(m, w);
  return 2.0 * inv_pi * std::log(half) * J - inv_pi * finite - inv_pi * series;
}

inline Complex hankel1_complex(int m, Complex w) {
  return besselj_complex(m, w) + Complex(0.0, 1.0) * bessely_complex(m, w);
}

// First derivatives via the standard recurrence, valid for J, Y, H alike.
inline Complex besselj_complex_prime(int m, Complex w) {
  if (m == 0) return -besselj_complex(1, w);
  return besselj_complex(m - 1, w) - static_cast<double>(m) / w * besselj_complex(m, w);
}

inline Complex bessely_complex_prime(int m, Complex w) {
  if (m == 0) return -bessely_complex(1, w);
  return bessely_complex(m - 1, w) - static_cast<double>(m) / w * bessely_complex(m, w);
}

// ---------------------------------------------------------------------------
// Branch-aware cylinder-function dispatch.  Spectral arguments w = k r fall
// into three exactly representable families: k > 0 (boundary value from
// above), k < 0 (boundary value from below), and k on the positive imaginary
// axis (z < 0).  All three reduce to real-argument J/Y/I/K evaluations via
// the standard continuation identities; only genuinely complex z falls back
// to the ascending series (small arguments by construction).

namespace detail {

inline Complex ipow(int e) {
  switch (((e % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

enum class ArgKind { PositiveReal, NegativeReal, PositiveImag, General };

inline ArgKind classify_arg(Complex w) {
  double re = w.real(), im = w.imag();
  if (std::abs(im) <= 1e-12 * std::abs(re))
    return re > 0.0 ? ArgKind::PositiveReal : ArgKind::NegativeReal;
  if (std::abs(re) <= 1e-12 * std::abs(im) && im > 0.0) return ArgKind::PositiveImag;
  return ArgKind::General;
}

}  // namespace detail

inline Complex besselj_flex(int m, Complex w) {
  using detail::ArgKind;
  switch (detail::classify_arg(w)) {
    case ArgKind::PositiveReal: return Complex(bessel_jy(m, w.real()).J, 0.0);
    case ArgKind::NegativeReal: {
      double s = (m % 2 == 0) ? 1.0 : -1.0;  // J_m(e^{i pi} x) = (-1)^m J_m(x)
      return Complex(s * bessel_jy(m, -w.real()).J, 0.0);
    }
    case ArgKind::PositiveImag:  // J_m(i x) = i^m I_m(x)
      return detail::ipow(m) * bessel_ik(m, w.imag()).I;
    default: return besselj_complex(m, w);
  }
}

inline Complex bessely_flex(int m, Complex w) {
  using detail::ArgKind;
  const double two_over_pi = 2.0 / std::numbers::pi;
  switch (detail::classify_arg(w)) {
    case ArgKind::PositiveReal: return Complex(bessel_jy(m, w.real()).Y, 0.0);
    case ArgKind::NegativeReal: {
      // Y_m(e^{i pi} x) = (-1)^m [Y_m(x) + 2i J_m(x)]
      BesselJY b = bessel_jy(m, -w.real());
      double s = (m % 2 == 0) ? 1.0 : -1.0;
      return s * Complex(b.Y, 2.0 * b.J);
    }
    case ArgKind::PositiveImag: {
      // Y_m(i x) = i^{m+1} I_m(x) - (2/pi) i^{-m} K_m(x)
      BesselIK b = bessel_ik(m, w.imag());
      return detail::ipow(m + 1) * b.I - two_over_pi * detail::ipow(-m) * b.K;
    }
    default: return bessely_complex(m, w);
  }
}

inline Complex hankel1_flex(int m, Complex w) {
  using detail::ArgKind;
  const double two_over_pi = 2.0 / std::numbers::pi;
  switch (detail::classify_arg(w)) {
    case ArgKind::PositiveReal: {
      BesselJY b = bessel_jy(m, w.real());
      return Complex(b.J, b.Y);
    }
    case ArgKind::NegativeReal: {
      // H^{(1)}_m(e^{i pi} x) = -(-1)^m H^{(2)}_m(x)
      BesselJY b = bessel_jy(m, -w.real());
      double s = (m % 2 == 0) ? -1.0 : 1.0;
      return s * Complex(b.J, -b.Y);
    }
    case ArgKind::PositiveImag:  // H^{(1)}_m(i x) = (2/pi) i^{-m-1} K_m(x)
      return two_over_pi * detail::ipow(-m - 1) * bessel_ik(m, w.imag()).K;
    default: return besselj_complex(m, w) + Complex(0.0, 1.0) * bessely_complex(m, w);
  }
}

inline Complex besselj_flex_prime(int m, Complex w) {
  using detail::ArgKind;
  switch (detail::classify_arg(w)) {
    case ArgKind::PositiveReal: return Complex(bessel_jy(m, w.real()).Jp, 0.0);
    case ArgKind::NegativeReal: {
      double s = (m % 2 == 0) ? -1.0 : 1.0;  // d/dw picks up one more sign
      return Complex(s * bessel_jy(m, -w.real()).Jp, 0.0);
    }
    case ArgKind::PositiveImag:  // d/dw J_m at w = ix: i^{m-1} I'_m(x)
      return detail::ipow(m - 1) * bessel_ik(m, w.imag()).Ip;
    default:
      if (m == 0) return -besselj_complex(1, w);
      return besselj_complex(m - 1, w) - static_cast<double>(m) / w * besselj_complex(m, w);
  }
}

inline Complex bessely_flex_prime(int m, Complex w) {
  using detail::ArgKind;
  const double two_over_pi = 2.0 / std::numbers::pi;
  switch (detail::classify_arg(w)) {
    case ArgKind::PositiveReal: return Complex(bessel_jy(m, w.real()).Yp, 0.0);
    case ArgKind::NegativeReal: {
      BesselJY b = bessel_jy(m, -w.real());
      double s = (m % 2 == 0) ? -1.0 : 1.0;
      return s * Complex(b.Yp, 2.0 * b.Jp);
    }
    case ArgKind::PositiveImag: {
      BesselIK b = bessel_ik(m, w.imag());
      return detail::ipow(m) * b.Ip - two_over_pi * detail::ipow(-m - 1) * b.Kp;
    }
    default:
      if (m == 0) return -bessely_complex(1, w);
      return bessely_complex(m - 1, w) - static_cast<double>(m) / w * bessely_complex(m, w);
  }
}

inline Complex hankel1_flex_prime(int m, Complex w) {
  return besselj_flex_prime(m, w) + Complex(0.0, 1.0) * bessely_flex_prime(m, w);
}

// ---------------------------------------------------------------------------
// Riccati-Bessel functions for the spherical channels: S_l(w) = w j_l(w)
// (regular) and E_l(w) = i w h_l^{(1)}(w) (outgoing, E_0 = e^{iw}).  Both
// are elementary: S_l by ascending series, E_l by its closed finite sum.

inline Complex riccati_s(int l, Complex w) {
  require(l >= 0, "riccati_s: order must be nonnegative");
  if (w == Complex(0.0, 0.0)) return 0.0;
  // w^{l+1} / (2l+1)!! * sum_k (-w^2/2)^k / (k! prod(2l+3..2l+2k+1))
  Complex lead = w;
  double dfact = 1.0;
  for (int i = 1; i <= l; ++i) {
    lead *= w;
    dfact *= 2.0 * i + 1.0;
  }
  Complex q = 0.5 * w * w;
  Complex term = 1.0, sum = 1.0;
  for (int k = 1; k <= 200; ++k) {
    term *= -q / (static_cast<double>(k) * (2.0 * (l + k) + 1.0));
    sum += term;
    if (std::abs(term) < 1e-18 * (std::abs(sum) + 1e-300)) break;
  }
  return lead / dfact * sum;
}

inline Complex riccati_e(int l, Complex w) {
  require(l >= 0, "riccati_e: order must be nonnegative");
  require(w != Complex(0.0, 0.0), "riccati_e: argument must be nonzero");
  // E_l(w) = (-i)^l e^{iw} sum_{s=0}^{l} i^s (l+s)! / (s! (l-s)! (2w)^s)
  Complex i_unit(0.0, 1.0);
  Complex sum = 0.0;
  double fact = 1.0;  // (l+s)! / (s! (l-s)!) at s = 0 is 1
  Complex pw = 1.0;
  for (int s = 0; s <= l; ++s) {
    sum += fact * (s % 4 == 0   ? Complex(1, 0)
                   : s % 4 == 1 ? i_unit
                   : s % 4 == 2 ? Complex(-1, 0)
                                : -i_unit) *
           pw;
    pw /= 2.0 * w;
    fact *= static_cast<double>((l + s + 1) * (l - s)) / static_cast<double>(s + 1);
  }
  Complex phase = 1.0;
  for (int i = 0; i < l % 4; ++i) phase *= -i_unit;
  return phase * std::exp(i_unit * w) * sum;
}

// Derivatives from the shared downward identity F'_l(w) = F_{l-1}(w)
// - l F_l(w) / w; the l = 0 cases are the elementary seeds cos(w) and
// i e^{iw}.
inline Complex riccati_s_prime(int l, Complex w) {
  Complex lower = l == 0 ? std::cos(w) : riccati_s(l - 1, w);
  if (l == 0) return lower;
  return lower - static_cast<double>(l) / w * riccati_s(l, w);
}

inline Complex riccati_e_prime(int l, Complex w) {
  Complex i_unit(0.0, 1.0);
  Complex lower = l == 0 ? i_unit * std::exp(i_unit * w) : riccati_e(l - 1, w);
  if (l == 0) return lower;
  return lower - static_cast<double>(l) / w * riccati_e(l, w);
}

}  // namespace bsdet
