#pragma once

// Quadrature rules and Nystrom assembly of integral-operator matrices.
//
// The discretization convention throughout is the symmetrized one:
//   M_ij = sqrt(w_i) * k(x_i, x_j) * sqrt(w_j),
// so that operator composition is plain matrix multiplication and the
// nonzero spectrum matches the unsymmetrized discretization exactly.

#include <cmath>
#include <functional>
#include <vector>

#include "core.hpp"

namespace bsdet {

struct QuadratureRule {
  std::vector<double> nodes;    // strictly increasing, interior to [lo, hi]
  std::vector<double> weights;  // positive
  double lo = 0.0;
  double hi = 0.0;

  int size() const { return static_cast<int>(nodes.size()); }
};

// Gauss-Legendre rule on [a, b] by Golub-Welsch (symmetric tridiagonal
// eigenproblem of the Legendre recurrence).
inline QuadratureRule gauss_legendre(int n, double a, double b) {
  require(n >= 1, "gauss_legendre: need at least one node");
  require(b > a, "gauss_legendre: empty interval");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double off = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = off;
    J(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success)
    throw QuadratureError("gauss_legendre: eigensolver failed");
  QuadratureRule rule;
  rule.lo = a;
  rule.hi = b;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double xi = es.eigenvalues()(i);
    double v0 = es.eigenvectors()(0, i);
    rule.nodes[i] = 0.5 * (b - a) * xi + 0.5 * (a + b);
    rule.weights[i] = (b - a) * v0 * v0;
  }
  return rule;
}

// Composite rule for half-line integrals truncated at R: `panels` panels,
// geometrically graded toward the origin (each panel half the size of the
// next), n nodes of Gauss-Legendre per panel.  panels = 1 reduces to a
// single rule on [0, R].
inline QuadratureRule halfline_rule(int n_per_panel, int panels, double R) {
  require(n_per_panel >= 1, "halfline_rule: need at least one node per panel");
  require(panels >= 1, "halfline_rule: need at least one panel");
  require(R > 0.0, "halfline_rule: cutoff must be positive");
  QuadratureRule rule;
  rule.lo = 0.0;
  rule.hi = R;
  double left = 0.0;
  for (int p = 0; p < panels; ++p) {
    double right = R * std::ldexp(1.0, -(panels - 1 - p));
    QuadratureRule panel = gauss_legendre(n_per_panel, left, right);
    rule.nodes.insert(rule.nodes.end(), panel.nodes.begin(), panel.nodes.end());
    rule.weights.insert(rule.weights.end(), panel.weights.begin(),
                        panel.weights.end());
    left = right;
  }
  return rule;
}

using KernelFn = std::function<Complex(double, double)>;

// A Nystrom-discretized Birman-Schwinger operator: the symmetrized matrix,
// the rule it was built on, and which regularization order its determinant
// is meant for.
struct DiscretizedBSOperator {
  ComplexMatrix matrix;
  QuadratureRule rule;
  int reg_order = 1;
};

inline DiscretizedBSOperator assemble_bs(const KernelFn& kernel,
                                         const QuadratureRule& rule, int p) {
  require(p == 1 || p == 2, "assemble_bs: regularization order must be 1 or 2");
  const int n = rule.size();
  require(n > 0, "assemble_bs: empty rule");
  DiscretizedBSOperator op;
  op.rule = rule;
  op.reg_order = p;
  op.matrix.resize(n, n);
  std::vector<double> sw(n);
  for (int i = 0; i < n; ++i) sw[i] = std::sqrt(rule.weights[i]);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Complex k = kernel(rule.nodes[i], rule.nodes[j]);
      if (!std::isfinite(k.real()) || !std::isfinite(k.imag()))
        throw QuadratureError("assemble_bs: kernel not finite at (x_" +
                              std::to_string(i) + ", x_" + std::to_string(j) +
                              ") = (" + std::to_string(rule.nodes[i]) + ", " +
                              std::to_string(rule.nodes[j]) + ")");
      op.matrix(i, j) = sw[i] * k * sw[j];
    }
  }
  return op;
}

// Per-node quadrature error of the rule on y -> |y - x_i| over [lo, hi].
// Green-function kernels of one-dimensional Schrodinger operators are
// analytic except for a |x - y| kink across the diagonal, which caps plain
// Gauss-Legendre Nystrom determinants at O(n^-2).  Subtracting the kink's
// local quadrature error through the diagonal restores fast convergence;
// these eps_i are the exact rule errors the subtraction needs.
inline std::vector<double> kink_quadrature_errors(const QuadratureRule& rule) {
  const int n = rule.size();
  std::vector<double> eps(n);
  for (int i = 0; i < n; ++i) {
    double c = rule.nodes[i];
    double dl = c - rule.lo, dr = rule.hi - c;
    double exact = 0.5 * (dl * dl + dr * dr);
    double quad = 0.0;
    for (int j = 0; j < n; ++j)
      quad += rule.weights[j] * std::abs(rule.nodes[j] - c);
    eps[i] = exact - quad;
  }
  return eps;
}

// Assembly for kinked Green-function kernels.  `kernel` is the true kernel
// (diagonal = its continuous limit), `kink_coeff(x)` the coefficient of
// |x - y| in its local expansion (u(x)v(x) * (-1/2) for every unit-Wronskian
// Green kernel in this library).  The returned matrix carries the corrected
// diagonal; `trace_adjust` restores the plain-assembly trace, so
//   det(I + K)  ~ det(I + M) * exp(trace_adjust),
// while det2 of the corrected matrix needs no adjustment at all (the trace
// shift cancels against the regularizing exponential).
struct CorrectedBSOperator {
  DiscretizedBSOperator op;
  Complex trace_adjust{0.0, 0.0};
};

inline CorrectedBSOperator assemble_bs_corrected(
    const KernelFn& kernel, const std::function<Complex(double)>& kink_coeff,
    const QuadratureRule& rule, int p) {
  CorrectedBSOperator out;
  out.op = assemble_bs(kernel, rule, p);
  std::vector<double> eps = kink_quadrature_errors(rule);
  for (int i = 0; i < rule.size(); ++i) {
    Complex shift = kink_coeff(rule.nodes[i]) * eps[i] / rule.weights[i];
    out.op.matrix(i, i) += rule.weights[i] * shift;  // sqrt(w)*shift*sqrt(w)
    out.trace_adjust -= rule.weights[i] * shift;
  }
  return out;
}

}  // namespace bsdet
