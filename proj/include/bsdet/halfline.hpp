#pragma once

// Half-line Schrodinger problem -u'' + V u = z u on (0, infinity) with a
// compactly supported potential.  Provides the Jost solution (backward
// integral-equation marching with an optional Picard fixed-point mode), the
// regular solutions, Weyl m-functions, Dirichlet/Neumann boundary
// determinants via kink-corrected Nystrom assembly, the boundary-integral
// form of their ratio, the rank-one resolvent difference identity, and
// bound-state counting.

#include <cmath>
#include <vector>

#include "core.hpp"
#include "detcore.hpp"
#include "potentials.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"

namespace bsdet {

// Entire-in-z basis pair s(x) = sin(sqrt(z) x)/sqrt(z), c(x) = cos(sqrt(z) x).
// Both are branch-free; a short series handles |sqrt(z) x| ~ 0.
struct PhasePair {
  Complex s;
  Complex c;
};

inline PhasePair phase_basis(Complex z, double x) {
  Complex k = sqrt_up(z);
  Complex w = k * x;
  PhasePair p;
  if (std::abs(w) < 1e-6) {
    Complex w2 = w * w;
    p.s = x * (1.0 - w2 / 6.0 + w2 * w2 / 120.0);
    p.c = 1.0 - w2 / 2.0 + w2 * w2 / 24.0;
  } else {
    p.s = std::sin(w) / k;
    p.c = std::cos(w);
  }
  return p;
}

enum class JostMethod { Marching, Picard };

// f(z, x): solution of -f'' + V f = z f equal to e^{i sqrt(z) x} beyond the
// support of V.  Stored on a uniform grid over [0, support] together with
// its derivative; cubic Hermite interpolation between nodes.
struct JostSolution {
  Complex z;
  Complex k;  // sqrt_up(z)
  double b = 1.0;
  double h = 0.0;
  std::vector<Complex> f;
  std::vector<Complex> fp;

  Complex f0() const { return f.front(); }
  Complex fprime0() const { return fp.front(); }

  Complex value(double x) const {
    if (x >= b) return std::exp(Complex(0, 1) * k * x);
    require(x >= 0.0, "JostSolution::value: x must be nonnegative");
    int j = std::min(static_cast<int>(x / h), static_cast<int>(f.size()) - 2);
    double t = (x - j * h) / h;
    Complex p0 = f[j], p1 = f[j + 1];
    Complex m0 = fp[j] * h, m1 = fp[j + 1] * h;
    double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0 +
           (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * m1;
  }

  Complex derivative(double x) const {
    if (x >= b) return Complex(0, 1) * k * std::exp(Complex(0, 1) * k * x);
    require(x >= 0.0, "JostSolution::derivative: x must be nonnegative");
    int j = std::min(static_cast<int>(x / h), static_cast<int>(f.size()) - 2);
    double t = (x - j * h) / h;
    Complex p0 = fp[j], p1 = fp[j + 1];
    // f'' = (V - z) f is available, but linear interpolation of f' already
    // carries the same order as the marching scheme.
    return (1.0 - t) * p0 + t * p1;
  }
};

namespace detail {

// Shared assembly of the marching grid data.
struct MarchGrid {
  int n;
  double h;
  std::vector<double> v;           // V at nodes
  std::vector<PhasePair> sc;       // s, c at nodes
  std::vector<Complex> e;          // e^{i k x} at nodes
};

inline MarchGrid march_grid(const RadialPotential& pot, Complex z, int n) {
  require(n >= 16, "half-line marching: need at least 16 steps");
  require(pot.support > 0.0, "half-line marching: potential support must be positive");
  MarchGrid g;
  g.n = n;
  g.h = pot.support / n;
  g.v.resize(n + 1);
  g.sc.resize(n + 1);
  g.e.resize(n + 1);
  Complex k = sqrt_up(z);
  for (int j = 0; j <= n; ++j) {
    double x = j * g.h;
    g.v[j] = pot(x);
    g.sc[j] = phase_basis(z, x);
    g.e[j] = g.sc[j].c + Complex(0, 1) * k * g.sc[j].s;
  }
  return g;
}

}  // namespace detail

// Backward marching for the Jost solution.  The Volterra representation
//   f(x) = e^{ikx} - int_x^b [s(x)c(x') - c(x)s(x')] V(x') f(x') dx'
// has a separable kernel, so composite trapezoid marching from x = b costs
// O(n); the kernel vanishes on the diagonal, making the discrete system
// strictly triangular.  Picard mode iterates the same discretized operator
// to its fixed point instead and must agree with marching to roundoff.
inline JostSolution jost_solution(const RadialPotential& pot, Complex z,
                                  int n = 32768,
                                  JostMethod method = JostMethod::Marching) {
  detail::MarchGrid g = detail::march_grid(pot, z, n);
  const double h = g.h;
  Complex k = sqrt_up(z);

  JostSolution out;
  out.z = z;
  out.k = k;
  out.b = pot.support;
  out.h = h;
  out.f.assign(n + 1, Complex(0));
  out.fp.assign(n + 1, Complex(0));

  if (method == JostMethod::Marching) {
    out.f[n] = g.e[n];
    Complex acc_c = 0.5 * h * g.sc[n].c * g.v[n] * out.f[n];
    Complex acc_s = 0.5 * h * g.sc[n].s * g.v[n] * out.f[n];
    for (int j = n - 1; j >= 0; --j) {
      out.f[j] = g.e[j] - (g.sc[j].s * acc_c - g.sc[j].c * acc_s);
      acc_c += h * g.sc[j].c * g.v[j] * out.f[j];
      acc_s += h * g.sc[j].s * g.v[j] * out.f[j];
    }
  } else {
    // Picard fixed-point iteration of the same trapezoid discretization.
    std::vector<Complex> cur = g.e, next(n + 1);
    for (int it = 0; it < 4 * n + 64; ++it) {
      Complex acc_c = 0.5 * h * g.sc[n].c * g.v[n] * cur[n];
      Complex acc_s = 0.5 * h * g.sc[n].s * g.v[n] * cur[n];
      next[n] = g.e[n];
      double delta = 0.0;
      for (int j = n - 1; j >= 0; --j) {
        next[j] = g.e[j] - (g.sc[j].s * acc_c - g.sc[j].c * acc_s);
        acc_c += h * g.sc[j].c * g.v[j] * cur[j];
        acc_s += h * g.sc[j].s * g.v[j] * cur[j];
        delta = std::max(delta, std::abs(next[j] - cur[j]));
      }
      cur.swap(next);
      if (delta < 1e-15) break;
      if (it == 4 * n + 63)
        throw ConvergenceError("jost_solution: Picard iteration did not settle");
    }
    out.f = cur;
  }

  // Derivative from the differentiated representation,
  //   f'(x) = ik e^{ikx} - int_x^b [c(x)c(x') + z s(x)s(x')] V f dx',
  // whose integrand does NOT vanish on the diagonal (it equals V f there).
  {
    Complex acc_c = 0.5 * h * g.sc[n].c * g.v[n] * out.f[n];
    Complex acc_s = 0.5 * h * g.sc[n].s * g.v[n] * out.f[n];
    out.fp[n] = Complex(0, 1) * k * g.e[n];
    for (int j = n - 1; j >= 0; --j) {
      out.fp[j] = Complex(0, 1) * k * g.e[j] -
                  (g.sc[j].c * acc_c + z * g.sc[j].s * acc_s) -
                  0.5 * h * g.v[j] * out.f[j];
      acc_c += h * g.sc[j].c * g.v[j] * out.f[j];
      acc_s += h * g.sc[j].s * g.v[j] * out.f[j];
    }
  }
  return out;
}

// Regular solutions phi (phi(0)=0, phi'(0)=1) and theta (theta(0)=1,
// theta'(0)=0) by the forward version of the same marching.  Their
// Wronskian theta phi' - theta' phi is identically 1.
struct RegularSolutions {
  Complex z;
  double b = 1.0;
  double h = 0.0;
  std::vector<Complex> phi, phip, theta, thetap;
};

inline RegularSolutions regular_solutions(const RadialPotential& pot, Complex z,
                                          int n = 32768) {
  detail::MarchGrid g = detail::march_grid(pot, z, n);
  const double h = g.h;

  RegularSolutions out;
  out.z = z;
  out.b = pot.support;
  out.h = h;
  out.phi.assign(n + 1, Complex(0));
  out.phip.assign(n + 1, Complex(0));
  out.theta.assign(n + 1, Complex(0));
  out.thetap.assign(n + 1, Complex(0));

  // phi(x) = s(x) + int_0^x [s(x)c(x') - c(x)s(x')] V phi dx'
  // theta(x) = c(x) + same kernel acting on theta.
  out.phi[0] = 0.0;
  out.phip[0] = 1.0;
  out.theta[0] = 1.0;
  out.thetap[0] = 0.0;

  Complex pc = 0.5 * h * g.sc[0].c * g.v[0] * out.phi[0];   // = 0
  Complex ps = 0.5 * h * g.sc[0].s * g.v[0] * out.phi[0];   // = 0
  Complex tc = 0.5 * h * g.sc[0].c * g.v[0] * out.theta[0];
  Complex ts = 0.5 * h * g.sc[0].s * g.v[0] * out.theta[0];
  for (int j = 1; j <= n; ++j) {
    out.phi[j] = g.sc[j].s + (g.sc[j].s * pc - g.sc[j].c * ps);
    out.theta[j] = g.sc[j].c + (g.sc[j].s * tc - g.sc[j].c * ts);
    // derivative kernel c(x)c(x') + z s(x)s(x'), diagonal value V u
    out.phip[j] = g.sc[j].c + (g.sc[j].c * pc + z * g.sc[j].s * ps) +
                  0.5 * h * g.v[j] * out.phi[j];
    out.thetap[j] = -z * g.sc[j].s + (g.sc[j].c * tc + z * g.sc[j].s * ts) +
                    0.5 * h * g.v[j] * out.theta[j];
    // Node j becomes an interior node (weight h) of every later integral;
    // the right-endpoint half weight is handled explicitly above.
    pc += h * g.sc[j].c * g.v[j] * out.phi[j];
    ps += h * g.sc[j].s * g.v[j] * out.phi[j];
    tc += h * g.sc[j].c * g.v[j] * out.theta[j];
    ts += h * g.sc[j].s * g.v[j] * out.theta[j];
  }
  return out;
}

// Weyl m-functions at z: perturbed and free, Dirichlet and Neumann.
struct WeylMData {
  Complex m_dirichlet;
  Complex m_neumann;
  Complex m0_dirichlet;  // i sqrt(z)
  Complex m0_neumann;    // i / sqrt(z)
};

inline WeylMData mfunctions(const RadialPotential& pot, Complex z,
                            int n = 32768) {
  JostSolution f = jost_solution(pot, z, n);
  Complex f0 = f.f0(), fp0 = f.fprime0();
  if (std::abs(f0) < 1e-12 * (1.0 + std::abs(fp0)))
    throw SingularPointError("mfunctions: z is numerically a Dirichlet eigenvalue");
  if (std::abs(fp0) < 1e-12 * (1.0 + std::abs(f0)))
    throw SingularPointError("mfunctions: z is numerically a Neumann eigenvalue");
  WeylMData w;
  w.m_dirichlet = fp0 / f0;
  w.m_neumann = -f0 / fp0;
  Complex k = sqrt_up(z);
  if (std::abs(k) < 1e-14)
    throw SingularPointError("mfunctions: z = 0 is the free threshold");
  w.m0_dirichlet = Complex(0, 1) * k;
  w.m0_neumann = Complex(0, 1) / k;
  return w;
}

// Free half-line Green's functions (z = k^2, Im k >= 0):
//   Dirichlet: sin(k x_<) e^{i k x_>} / k
//   Neumann:   cos(k x_<) e^{i k x_>} / (-ik)
inline Complex green_dirichlet(Complex z, double x, double y) {
  double lo = std::min(x, y), hi = std::max(x, y);
  Complex k = sqrt_up(z);
  PhasePair p = phase_basis(z, lo);
  return p.s * std::exp(Complex(0, 1) * k * hi);
}

inline Complex green_neumann(Complex z, double x, double y) {
  double lo = std::min(x, y), hi = std::max(x, y);
  Complex k = sqrt_up(z);
  if (std::abs(k) < 1e-14)
    throw SingularPointError("green_neumann: z = 0 is singular for the Neumann kernel");
  PhasePair p = phase_basis(z, lo);
  return Complex(0, 1) * p.c * std::exp(Complex(0, 1) * k * hi) / k;
}

// Rank-one difference of the free boundary Green's functions:
//   G_D(z,x,y) - G_N(z,x,y) = -i z^{-1/2} e^{i sqrt(z)(x+y)}.
struct ResolventDifference {
  Complex lhs;
  Complex rhs;
};

inline ResolventDifference krein_1d_check(Complex z, double x, double y) {
  ResolventDifference out;
  out.lhs = green_dirichlet(z, x, y) - green_neumann(z, x, y);
  Complex k = sqrt_up(z);
  if (std::abs(k) < 1e-14)
    throw SingularPointError("krein_1d_check: z = 0 is singular");
  out.rhs = -Complex(0, 1) / k * std::exp(Complex(0, 1) * k * (x + y));
  return out;
}

enum class BoundaryCondition { Dirichlet, Neumann };

// Kink-corrected Nystrom discretization of -K_bc(z), the sign-split
// Birman-Schwinger operator for the chosen boundary condition; kernel
// u(x) G_bc(z,x,y) v(y), diagonal kink coefficient -u v / 2 (the Green's
// functions are unit-Wronskian normalized).
inline CorrectedBSOperator halfline_bs_operator(const RadialPotential& pot,
                                                Complex z,
                                                const QuadratureRule& rule,
                                                BoundaryCondition bc,
                                                int p = 1) {
  FactoredPotential f = factor_split(pot);
  KernelFn kernel = [f, z, bc](double x, double y) {
    Complex g = bc == BoundaryCondition::Dirichlet ? green_dirichlet(z, x, y)
                                                   : green_neumann(z, x, y);
    return f.u(x) * g * f.v(y);
  };
  auto kink = [f](double x) { return Complex(-0.5 * f.u(x) * f.v(x)); };
  return assemble_bs_corrected(kernel, kink, rule, p);
}

inline CorrectedBSOperator halfline_bs_operator(const RadialPotential& pot,
                                                Complex z, int n,
                                                BoundaryCondition bc,
                                                int p = 1) {
  return halfline_bs_operator(pot, z, gauss_legendre(n, 0.0, pot.support), bc,
                              p);
}

// det(I - K_bc(z)) (p = 1) or det_2(I - K_bc(z)) (p = 2).  For p = 1 the
// trace restoration exp(trace_adjust) applies; for p = 2 the adjustment
// cancels and the regularized determinant of the corrected matrix is used
// directly.
inline Complex boundary_determinant(const RadialPotential& pot, Complex z,
                                    const QuadratureRule& rule,
                                    BoundaryCondition bc, int p = 1) {
  CorrectedBSOperator op = halfline_bs_operator(pot, z, rule, bc, p);
  if (p == 1)
    return det_fredholm(op.op.matrix) * std::exp(op.trace_adjust);
  return det_regularized(op.op.matrix, 2);
}

inline Complex boundary_determinant(const RadialPotential& pot, Complex z,
                                    int n, BoundaryCondition bc, int p = 1) {
  return boundary_determinant(pot, z, gauss_legendre(n, 0.0, pot.support), bc,
                              p);
}

inline Complex det_dirichlet(const RadialPotential& pot, Complex z,
                             const QuadratureRule& rule, int p = 1) {
  return boundary_determinant(pot, z, rule, BoundaryCondition::Dirichlet, p);
}

inline Complex det_dirichlet(const RadialPotential& pot, Complex z, int n = 256,
                             int p = 1) {
  return boundary_determinant(pot, z, n, BoundaryCondition::Dirichlet, p);
}

inline Complex det_neumann(const RadialPotential& pot, Complex z,
                           const QuadratureRule& rule, int p = 1) {
  return boundary_determinant(pot, z, rule, BoundaryCondition::Neumann, p);
}

inline Complex det_neumann(const RadialPotential& pot, Complex z, int n = 256,
                           int p = 1) {
  return boundary_determinant(pot, z, n, BoundaryCondition::Neumann, p);
}

// Quadrature trace of the discretized -K_bc (matrix trace plus the part
// moved into the exponential restoration).  Equals  +int u G_bc v dx  in the
// continuum.
inline Complex boundary_kernel_trace(const RadialPotential& pot, Complex z,
                                     const QuadratureRule& rule,
                                     BoundaryCondition bc) {
  CorrectedBSOperator op = halfline_bs_operator(pot, z, rule, bc, 1);
  return op.op.matrix.trace() + op.trace_adjust;
}

inline Complex boundary_kernel_trace(const RadialPotential& pot, Complex z,
                                     int n, BoundaryCondition bc) {
  return boundary_kernel_trace(pot, z, gauss_legendre(n, 0.0, pot.support), bc);
}

/// Boundary-integral form of det_N/det_D:
//   1 + i z^{-1/2} int_0^b e^{i sqrt(z) x} V(x) psi(x) dx,  psi = f / f(0).
// Throws when z is numerically a Dirichlet eigenvalue (f(0) ~ 0).
inline Complex boundary_det_ratio(const RadialPotential& pot, Complex z,
                                  int jost_n = 32768, int quad_n = 256) {
  JostSolution f = jost_solution(pot, z, jost_n);
  Complex f0 = f.f0();
  if (std::abs(f0) < 1e-8 * (1.0 + std::abs(f.fprime0())))
    throw SingularPointError(
        "boundary_det_ratio: f(z,0) vanishes; ratio undefined at a Dirichlet eigenvalue");
  Complex k = sqrt_up(z);
  if (std::abs(k) < 1e-14)
    throw SingularPointError("boundary_det_ratio: z = 0 is the free threshold");
  QuadratureRule rule = gauss_legendre(quad_n, 0.0, pot.support);
  Complex acc = 0.0;
  for (int j = 0; j < rule.size(); ++j) {
    double x = rule.nodes[j];
    acc += rule.weights[j] * std::exp(Complex(0, 1) * k * x) * pot(x) *
           f.value(x);
  }
  return 1.0 + Complex(0, 1) / k * acc / f0;
}

// Number of negative Dirichlet eigenvalues, by two independent routes:
// sign changes of the (real) Jost function along the negative axis, and the
// oscillation count of the zero-energy regular solution.
struct BoundStateCount {
  int via_jost = 0;
  int via_nodes = 0;
};

inline BoundStateCount bound_state_count(const RadialPotential& pot,
                                         int scan_points = 400,
                                         int march_n = 16384) {
  require(scan_points >= 16, "bound_state_count: need at least 16 scan points");
  // Depth of the attractive part bounds the negative spectrum.
  double vmin = 0.0;
  for (int j = 0; j <= 4096; ++j) {
    double x = pot.support * j / 4096.0;
    vmin = std::min(vmin, pot(x));
  }
  BoundStateCount out;
  if (vmin >= 0.0) return out;  // nonnegative potential: no bound states

  double kappa_max = std::sqrt(-vmin) + 0.1;
  double kappa_min = 1e-3;
  double prev = 0.0;
  for (int j = 0; j < scan_points; ++j) {
    double kappa =
        kappa_max + (kappa_min - kappa_max) * j / (scan_points - 1.0);
    Complex z(-kappa * kappa, 0.0);
    Complex f0 = jost_solution(pot, z, march_n).f0();
    if (std::abs(f0.imag()) > 1e-8 * std::abs(f0))
      throw DomainError("bound_state_count: Jost function not real on the negative axis");
    double cur = f0.real();
    if (j > 0 && prev * cur < 0.0) ++out.via_jost;
    prev = cur;
  }

  RegularSolutions reg = regular_solutions(pot, Complex(0.0, 0.0), march_n);
  double p = 0.0;
  for (size_t j = 1; j < reg.phi.size(); ++j) {
    double c = reg.phi[j].real();
    if (p != 0.0 && p * c < 0.0) ++out.via_nodes;
    if (c != 0.0) p = c;
  }
  // One more zero beyond the support iff phi and phi' disagree in sign there.
  if (reg.phi.back().real() * reg.phip.back().real() < 0.0) ++out.via_nodes;
  return out;
}

}  // namespace bsdet
