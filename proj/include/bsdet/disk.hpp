#pragma once

// Unit-disk domain: Dirichlet vs Neumann Laplacian plus a radial potential.
// Per angular mode m the two free Green's functions differ by a rank-one
// boundary term, which turns the ratio of the regularized
// Birman-Schwinger determinants into a product of boundary factors
// (1 - beta_m) e^{beta_m + tau_m}.  The cylinder evaluations dispatch on the
// spectral branch (real I/K combinations on the negative axis, J/Y on the
// positive one, series off-axis), so z may sit anywhere off the two spectra.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "core.hpp"
#include "detcore.hpp"
#include "potentials.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"

namespace bsdet {

enum class DiskBC { Dirichlet, Neumann };

namespace detail {

// J_m, Y_m and derivatives at the boundary argument k = sqrt(z), plus
// eigenvalue guards for the requested boundary condition.
struct DiskBoundaryData {
  Complex k;
  Complex J, Y, Jp, Yp;  // J_m(k), Y_m(k) and derivatives
};

inline DiskBoundaryData disk_boundary_data(int m, Complex z) {
  require(m >= 0, "disk mode index must be nonnegative");
  DiskBoundaryData d;
  d.k = sqrt_up(z);
  if (std::abs(d.k) < 1e-12)
    throw SingularPointError("disk mode: z = 0 is a Neumann eigenvalue");
  d.J = besselj_flex(m, d.k);
  d.Y = bessely_flex(m, d.k);
  d.Jp = besselj_flex_prime(m, d.k);
  d.Yp = bessely_flex_prime(m, d.k);
  return d;
}

// Mode eigenvalues are positive reals (squared Bessel zeros), so the
// guards only watch z near the positive half-line, i.e. k near the
// positive reals.  Away from it J_m(k) cannot vanish, and its generic
// smallness at high m is harmless: the 1/J_m(k) prefactor cancels against
// the boundary values it multiplies.
inline bool near_positive_axis(Complex k) {
  return std::abs(k.imag()) <= 1e-9 * std::abs(k.real());
}

inline void guard_dirichlet(const DiskBoundaryData& d) {
  if (near_positive_axis(d.k) && std::abs(d.J) < 1e-10)
    throw SingularPointError("disk mode: z is numerically a Dirichlet eigenvalue");
}

inline void guard_neumann(const DiskBoundaryData& d) {
  if (near_positive_axis(d.k) && std::abs(d.Jp) < 1e-10)
    throw SingularPointError("disk mode: z is numerically a Neumann eigenvalue");
}

}  // namespace detail

// Green's function of the mode-m radial operator on the unit disk at
// spectral parameter z, on L^2((0,1), r dr):
//   Dirichlet: (pi/(2 J_m(k))) J_m(k r_<) [J_m(k r_>) Y_m(k) - Y_m(k r_>) J_m(k)]
//   Neumann:   (pi/(2 J'_m(k))) J_m(k r_<) [J_m(k r_>) Y'_m(k) - Y_m(k r_>) J'_m(k)]
inline Complex disk_mode_green(int m, Complex z, double r, double rp,
                               DiskBC bc) {
  detail::DiskBoundaryData d = detail::disk_boundary_data(m, z);
  double lo = std::min(r, rp), hi = std::max(r, rp);
  Complex jlo = besselj_flex(m, d.k * lo);
  Complex jhi = besselj_flex(m, d.k * hi);
  Complex yhi = bessely_flex(m, d.k * hi);
  if (bc == DiskBC::Dirichlet) {
    detail::guard_dirichlet(d);
    return 0.5 * M_PI / d.J * jlo * (jhi * d.Y - yhi * d.J);
  }
  detail::guard_neumann(d);
  return 0.5 * M_PI / d.Jp * jlo * (jhi * d.Yp - yhi * d.Jp);
}

// Boundary data of the mode Green's functions:
//   d(r) = (d/dn) g^D(z, 1, r) = -J_m(k r) / J_m(k)      (outward normal)
//   w(r) = g^N(z, 1, r)        =  J_m(k r) / (k J'_m(k))
inline Complex disk_boundary_d(int m, Complex z, double r) {
  detail::DiskBoundaryData d = detail::disk_boundary_data(m, z);
  detail::guard_dirichlet(d);
  return -besselj_flex(m, d.k * r) / d.J;
}

inline Complex disk_boundary_w(int m, Complex z, double r) {
  detail::DiskBoundaryData d = detail::disk_boundary_data(m, z);
  detail::guard_neumann(d);
  return besselj_flex(m, d.k * r) / (d.k * d.Jp);
}

// Rank-one identity between the two Green's functions:
//   g^D(z,r,r') - g^N(z,r,r') = w(r) d(r') = -J_m(kr) J_m(kr') / (k J_m(k) J'_m(k)).
struct DiskResolventDifference {
  Complex lhs;
  Complex rhs;
};

inline DiskResolventDifference krein_disk_check(int m, Complex z, double r,
                                                double rp) {
  DiskResolventDifference out;
  out.lhs = disk_mode_green(m, z, r, rp, DiskBC::Dirichlet) -
            disk_mode_green(m, z, r, rp, DiskBC::Neumann);
  out.rhs = disk_boundary_w(m, z, r) * disk_boundary_d(m, z, rp);
  return out;
}

inline int disk_mode_degeneracy(int m) { return m == 0 ? 1 : 2; }

namespace detail {

// Shared per-mode discretization: node arrays of the Bessel basis, the
// kink-corrected measure-absorbed Green matrices for both boundary
// conditions (the raw one for Dirichlet as well), and the boundary vectors.
struct DiskModeDiscretization {
  QuadratureRule rule;
  DiskBoundaryData bd;
  ComplexMatrix green_d;   // kink-corrected symmetrized sqrt(r) g^D sqrt(r')
  ComplexMatrix green_n;   // same for g^N
  ComplexVector wvec;      // w(r_i) boundary vector
  ComplexVector dvec;      // d(r_i) boundary vector
};

inline DiskModeDiscretization disk_mode_discretization(int m, Complex z,
                                                       double support,
                                                       int n) {
  require(support > 0.0 && support <= 1.0,
          "disk potential must be supported inside the unit disk");
  DiskModeDiscretization out;
  out.rule = gauss_legendre(n, 0.0, support);
  out.bd = disk_boundary_data(m, z);
  guard_dirichlet(out.bd);
  guard_neumann(out.bd);
  const DiskBoundaryData& bd = out.bd;

  ComplexVector jv(n), pv(n), qv(n);
  out.wvec.resize(n);
  out.dvec.resize(n);
  for (int i = 0; i < n; ++i) {
    Complex ji = besselj_flex(m, bd.k * out.rule.nodes[i]);
    Complex yi = bessely_flex(m, bd.k * out.rule.nodes[i]);
    jv(i) = ji;
    pv(i) = ji * bd.Y - yi * bd.J;    // Dirichlet outer solution
    qv(i) = ji * bd.Yp - yi * bd.Jp;  // Neumann outer solution
    out.wvec(i) = ji / (bd.k * bd.Jp);
    out.dvec(i) = -ji / bd.J;
  }

  std::vector<double> eps = kink_quadrature_errors(out.rule);
  Complex cd = 0.5 * M_PI / bd.J;
  Complex cn = 0.5 * M_PI / bd.Jp;
  out.green_d.resize(n, n);
  out.green_n.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      int lo = i <= j ? i : j, hi = i <= j ? j : i;
      double meas = std::sqrt(out.rule.nodes[i] * out.rule.nodes[j] *
                              out.rule.weights[i] * out.rule.weights[j]);
      out.green_d(i, j) = cd * jv(lo) * pv(hi) * meas;
      out.green_n(i, j) = cn * jv(lo) * qv(hi) * meas;
    }
    // Unit-Wronskian diagonal kink correction, coefficient -1/2.
    out.green_d(i, i) += -0.5 * eps[i];
    out.green_n(i, i) += -0.5 * eps[i];
  }
  return out;
}

}  // namespace detail

// det_2(I - K_bc) for one mode, where -K_bc has kernel u sqrt(r) g^bc
// sqrt(r') v.  The corrected matrix is D_u G D_v; its kink-restored trace
// cancels inside det_2 as usual.
inline Complex disk_mode_det2(const FactoredPotential& f, int m, Complex z,
                              int n, DiskBC bc) {
  detail::DiskModeDiscretization dd =
      detail::disk_mode_discretization(m, z, f.support, n);
  const ComplexMatrix& G = bc == DiskBC::Dirichlet ? dd.green_d : dd.green_n;
  int nn = dd.rule.size();
  ComplexMatrix M(nn, nn);
  for (int i = 0; i < nn; ++i)
    for (int j = 0; j < nn; ++j)
      M(i, j) = f.u(dd.rule.nodes[i]) * G(i, j) * f.v(dd.rule.nodes[j]);
  return det_regularized(M, 2);
}

// Boundary factor data for one mode:
//   beta = <d v, (I - K_D)^{-1} u w>   (rank-one det ratio: 1 - beta)
//   tau  = <d V, G^V_D V w>            (perturbed Dirichlet Green's function)
// with all pairings in L^2(r dr).
struct DiskBoundaryFactor {
  Complex beta;
  Complex tau;
};

inline DiskBoundaryFactor disk_mode_boundary_factor(const FactoredPotential& f,
                                                    int m, Complex z, int n) {
  detail::DiskModeDiscretization dd =
      detail::disk_mode_discretization(m, z, f.support, n);
  int nn = dd.rule.size();

  ComplexVector du(nn), dv(nn);  // diag(u), diag(v) entries
  for (int i = 0; i < nn; ++i) {
    du(i) = f.u(dd.rule.nodes[i]);
    dv(i) = f.v(dd.rule.nodes[i]);
  }
  ComplexMatrix M = du.asDiagonal() * dd.green_d * dv.asDiagonal();
  Eigen::PartialPivLU<ComplexMatrix> lu(ComplexMatrix::Identity(nn, nn) + M);
  if (lu.rcond() < 1e-13)
    throw SingularPointError(
        "disk_mode_boundary_factor: z is numerically an eigenvalue of the perturbed Dirichlet operator");

  // Symmetrized boundary vectors sqrt(w_i) a(r_i), a = u sqrt(r) w etc.
  ComplexVector avec(nn), bvec(nn), pvec(nn), qvec(nn);
  for (int i = 0; i < nn; ++i) {
    double sw = std::sqrt(dd.rule.weights[i] * dd.rule.nodes[i]);
    avec(i) = sw * du(i) * dd.wvec(i);
    bvec(i) = sw * dv(i) * dd.dvec(i);
    Complex V = du(i) * dv(i);
    pvec(i) = sw * V * dd.dvec(i);
    qvec(i) = sw * V * dd.wvec(i);
  }

  DiskBoundaryFactor out;
  // Bilinear pairing (no conjugation): b^T (I + M)^{-1} a.
  out.beta = bvec.transpose() * lu.solve(avec);
  ComplexMatrix GV =
      dd.green_d -
      dd.green_d * dv.asDiagonal() * lu.solve(du.asDiagonal() * dd.green_d);
  out.tau = pvec.transpose() * GV * qvec;
  return out;
}

// Left side of the boundary-condition identity: the determinant ratio
//   prod_m [ det_2(I - K_N,m) / det_2(I - K_D,m) ]^{deg(m)},  m = 0..m_max.
inline Complex bc_det_ratio(const RadialPotential& pot, Complex z, int m_max,
                            int n = 128) {
  require(m_max >= 0, "bc_det_ratio: m_max must be nonnegative");
  FactoredPotential f = factor_split(pot);
  Complex out = 1.0;
  for (int m = 0; m <= m_max; ++m) {
    Complex dn = disk_mode_det2(f, m, z, n, DiskBC::Neumann);
    Complex dd = disk_mode_det2(f, m, z, n, DiskBC::Dirichlet);
    if (std::abs(dd) < 1e-300)
      throw SingularPointError("bc_det_ratio: Dirichlet determinant vanished");
    Complex ratio = dn / dd;
    for (int c = 0; c < disk_mode_degeneracy(m); ++c) out *= ratio;
  }
  return out;
}

// Right side of the same identity, built from boundary data alone:
//   prod_m [ (1 - beta_m) e^{beta_m} ]^{deg(m)} * exp(sum_m deg(m) tau_m).
inline Complex boundary_factorization(const RadialPotential& pot, Complex z,
                                      int m_max, int n = 128) {
  require(m_max >= 0, "boundary_factorization: m_max must be nonnegative");
  FactoredPotential f = factor_split(pot);
  Complex out = 1.0;
  Complex tau_sum = 0.0;
  for (int m = 0; m <= m_max; ++m) {
    DiskBoundaryFactor bf = disk_mode_boundary_factor(f, m, z, n);
    Complex factor = (1.0 - bf.beta) * std::exp(bf.beta);
    for (int c = 0; c < disk_mode_degeneracy(m); ++c) out *= factor;
    tau_sum += static_cast<double>(disk_mode_degeneracy(m)) * bf.tau;
  }
  return out * std::exp(tau_sum);
}

}  // namespace bsdet
