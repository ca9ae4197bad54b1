#pragma once

// Finite-dimensional Birman-Schwinger machinery for factored perturbations
// H = H0 + B* A.  Everything here is exact linear algebra at matrix scale:
// the kernel K(z) = -A (H0 - z)^{-1} B*, the perturbed resolvent built from
// it, the eigenvalue/fixed-point correspondence, multiplicity bookkeeping
// via determinants and contours, and resolvent-trace identities.

#include <random>
#include <vector>

#include "core.hpp"
#include "detcore.hpp"

namespace bsdet {

struct FactoredPerturbation {
  ComplexMatrix H0;  // n x n
  ComplexMatrix A;   // k x n
  ComplexMatrix B;   // k x n; the perturbation is V = B^* A

  int dim() const { return static_cast<int>(H0.rows()); }
  int rank() const { return static_cast<int>(A.rows()); }

  ComplexMatrix V() const { return B.adjoint() * A; }
  ComplexMatrix H() const { return H0 + B.adjoint() * A; }
};

inline void validate(const FactoredPerturbation& fp) {
  if (fp.H0.rows() != fp.H0.cols())
    throw DimensionError("FactoredPerturbation: H0 must be square");
  if (fp.A.cols() != fp.H0.rows() || fp.B.cols() != fp.H0.rows() ||
      fp.A.rows() != fp.B.rows())
    throw DimensionError("FactoredPerturbation: A and B must be k x n");
}

// (H0 - z)^{-1}, raising when z sits on the spectrum of H0.
inline ComplexMatrix free_resolvent(const FactoredPerturbation& fp, Complex z) {
  const int n = fp.dim();
  ComplexMatrix A = fp.H0 - z * ComplexMatrix::Identity(n, n);
  Eigen::PartialPivLU<ComplexMatrix> lu(A);
  if (lu.rcond() < 1e-13)
    throw SingularPointError("free_resolvent: z is numerically on the spectrum of H0");
  return lu.solve(ComplexMatrix::Identity(n, n));
}

// K(z) = -A (H0 - z)^{-1} B*, the k x k Birman-Schwinger kernel.
inline ComplexMatrix bs_kernel(const FactoredPerturbation& fp, Complex z) {
  validate(fp);
  return -fp.A * free_resolvent(fp, z) * fp.B.adjoint();
}

// R(z) = R0(z) - R0(z) B* (I - K(z))^{-1} A R0(z).  Agrees with the direct
// inverse of H - z whenever both exist; built this way so tests can compare
// the two routes.
inline ComplexMatrix perturbed_resolvent(const FactoredPerturbation& fp,
                                         Complex z) {
  validate(fp);
  const int k = fp.rank();
  ComplexMatrix R0 = free_resolvent(fp, z);
  ComplexMatrix K = -fp.A * R0 * fp.B.adjoint();
  ComplexMatrix IK = ComplexMatrix::Identity(k, k) - K;
  Eigen::PartialPivLU<ComplexMatrix> lu(IK);
  if (lu.rcond() < 1e-13)
    throw SingularPointError(
        "perturbed_resolvent: I - K(z) is numerically singular (z an eigenvalue of H?)");
  return R0 - R0 * fp.B.adjoint() * lu.solve(fp.A * R0);
}

// Null vectors are flagged relative to max(sigma_max, 1): the matrices
// handled here (H - lambda, I - K) act on unit-scaled spaces, and for a
// rank-one kernel I - K shrinks to a near-zero scalar at an eigenvalue,
// where a threshold relative to sigma_max alone would see full rank.
inline int nullspace_dim(const ComplexMatrix& M, double rel_tol = 1e-10) {
  Eigen::JacobiSVD<ComplexMatrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  double scale = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  int dim = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) <= rel_tol * std::max(scale, 1.0)) ++dim;
  return dim;
}

inline std::vector<ComplexVector> nullspace_basis(const ComplexMatrix& M,
                                                  double rel_tol = 1e-10) {
  Eigen::JacobiSVD<ComplexMatrix> svd(M, Eigen::ComputeFullV);
  double scale = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  std::vector<ComplexVector> basis;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) <= rel_tol * std::max(scale, 1.0))
      basis.push_back(svd.matrixV().col(i));
  return basis;
}

struct CorrespondenceResult {
  int dim_ker_h = 0;        // dim ker(H - lambda0)
  int dim_ker_k = 0;        // dim ker(I - K(lambda0))
  double forward_residual = 0.0;   // max over ker(H-lambda0): |K g - g|/|g|
  double backward_residual = 0.0;  // max over ker(I-K): |H f - lambda0 f|/|f|
};

// Eigenvalue <-> fixed-point correspondence at lambda0 (an eigenvalue of H
// off the spectrum of H0): geometric multiplicities match, eigenvectors map
// both ways.  z0 is an auxiliary reference point off both spectra; the
// forward map is g = (lambda0 - z0)^{-1} A f and the backward map is
// f = -R0(lambda0) B* g.  The (lambda0 - z0)^{-1} normalization cancels in
// the relative residuals but is kept so the mapped vectors themselves match
// the fixed-point normalization convention.
inline CorrespondenceResult bs_eigen_correspondence(const FactoredPerturbation& fp,
                                                    Complex lambda0, Complex z0) {
  validate(fp);
  require(std::abs(lambda0 - z0) > 1e-12,
          "bs_eigen_correspondence: z0 must differ from lambda0");
  free_resolvent(fp, z0);  // raises if z0 sits on the spectrum of H0
  const int n = fp.dim(), k = fp.rank();
  ComplexMatrix H = fp.H();
  ComplexMatrix K = bs_kernel(fp, lambda0);
  ComplexMatrix R0 = free_resolvent(fp, lambda0);

  CorrespondenceResult out;
  ComplexMatrix Hm = H - lambda0 * ComplexMatrix::Identity(n, n);
  ComplexMatrix IK = ComplexMatrix::Identity(k, k) - K;
  out.dim_ker_h = nullspace_dim(Hm);
  out.dim_ker_k = nullspace_dim(IK);

  for (const ComplexVector& f : nullspace_basis(Hm)) {
    ComplexVector g = (fp.A * f) / (lambda0 - z0);
    double gn = g.norm();
    if (gn < 1e-14)
      throw SingularPointError(
          "bs_eigen_correspondence: eigenvector of H annihilated by A");
    out.forward_residual =
        std::max(out.forward_residual, (K * g - g).norm() / gn);
  }
  for (const ComplexVector& g : nullspace_basis(IK)) {
    ComplexVector f = -R0 * fp.B.adjoint() * g;
    double fn = f.norm();
    if (fn < 1e-14)
      throw SingularPointError(
          "bs_eigen_correspondence: fixed point mapped to the zero vector");
    out.backward_residual =
        std::max(out.backward_residual, (H * f - lambda0 * f).norm() / fn);
  }
  return out;
}

struct WAResult {
  int lhs = 0;      // m(contour, H) - m(contour, H0)
  int rhs = 0;      // winding of the characteristic determinant
  int m_h = 0;      // enclosed algebraic multiplicity of H
  int m_h0 = 0;     // enclosed algebraic multiplicity of H0

  bool consistent() const { return lhs == rhs; }
};

// Multiplicity bookkeeping on a contour: the enclosed multiplicity of H
// minus that of H0 equals the winding number of z -> det(I - K(z)).
// (p = 1 version; enclosed multiplicities are Riesz projection traces.)
inline WAResult local_wa_check(const FactoredPerturbation& fp,
                               const ContourSpec& contour) {
  validate(fp);
  ComplexMatrix H = fp.H();
  WAResult out;
  out.m_h = enclosed_multiplicity(H, contour);
  out.m_h0 = enclosed_multiplicity(fp.H0, contour);
  out.lhs = out.m_h - out.m_h0;
  out.rhs = winding_multiplicity(
      [&](Complex z) {
        return det_fredholm(-bs_kernel(fp, z));
      },
      contour);
  return out;
}

// Same bookkeeping with the regularized determinant det_p(I - K(z)); the
// regularizing exponential is entire and nonvanishing, so the winding is
// unchanged and the same integer identity must hold.
inline WAResult global_wa_check(const FactoredPerturbation& fp,
                                const ContourSpec& contour, int p) {
  validate(fp);
  require(p == 1 || p == 2, "global_wa_check: order must be 1 or 2");
  ComplexMatrix H = fp.H();
  WAResult out;
  out.m_h = enclosed_multiplicity(H, contour);
  out.m_h0 = enclosed_multiplicity(fp.H0, contour);
  out.lhs = out.m_h - out.m_h0;
  out.rhs = winding_multiplicity(
      [&](Complex z) {
        return det_regularized(-bs_kernel(fp, z), p);
      },
      contour);
  return out;
}

struct KreinTraceResult {
  Complex lhs;  // tr(R(z) - R0(z)) via the factored resolvent formula
  Complex rhs;  // -integral of xi(lambda) (lambda - z)^{-2} d lambda
};

// Resolvent-trace identity for Hermitian instances: tr(R - R0) against the
// eigenvalue-counting shift xi(lambda) = #{eig H0 <= lambda} - #{eig H <=
// lambda}, integrated exactly over its finite jump set.
inline KreinTraceResult krein_trace_check(const FactoredPerturbation& fp,
                                          Complex z) {
  validate(fp);
  ComplexMatrix V = fp.V();
  if ((fp.H0 - fp.H0.adjoint()).norm() > 1e-10 * std::max(1.0, fp.H0.norm()) ||
      (V - V.adjoint()).norm() > 1e-10 * std::max(1.0, V.norm()))
    throw DomainError("krein_trace_check: H0 and V must be Hermitian");

  KreinTraceResult out;
  out.lhs = (perturbed_resolvent(fp, z) - free_resolvent(fp, z)).trace();

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es0(fp.H0);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(fp.H());
  std::vector<double> breaks;
  for (int i = 0; i < fp.dim(); ++i) {
    breaks.push_back(es0.eigenvalues()(i));
    breaks.push_back(es.eigenvalues()(i));
  }
  std::sort(breaks.begin(), breaks.end());
  auto count_leq = [](const Eigen::VectorXd& ev, double x) {
    int c = 0;
    for (int i = 0; i < ev.size(); ++i)
      if (ev(i) <= x) ++c;
    return c;
  };
  Complex rhs = 0.0;
  for (size_t j = 0; j + 1 < breaks.size(); ++j) {
    double a = breaks[j], b = breaks[j + 1];
    if (b <= a) continue;
    double mid = 0.5 * (a + b);
    int xi = count_leq(es0.eigenvalues(), mid) - count_leq(es.eigenvalues(), mid);
    if (xi == 0) continue;
    // -xi * int_a^b (lambda - z)^{-2} d lambda
    rhs -= static_cast<double>(xi) *
           (1.0 / (Complex(a, 0.0) - z) - 1.0 / (Complex(b, 0.0) - z));
  }
  out.rhs = rhs;
  return out;
}

struct Det2DerivativeResult {
  Complex fd;     // centered finite difference of log det_2(I - K(z))
  Complex trace;  // -tr(R - R0 + R0 V R0)
};

// Derivative identity linking the regularized characteristic determinant to
// resolvent traces: d/dz log det_2(I - K(z)) = -tr(R - R0 + R0 V R0).
inline Det2DerivativeResult det2_log_derivative_check(
    const FactoredPerturbation& fp, Complex z, double h = 1e-5) {
  validate(fp);
  Complex dp = det_regularized(-bs_kernel(fp, z + h), 2);
  Complex dm = det_regularized(-bs_kernel(fp, z - h), 2);
  Det2DerivativeResult out;
  out.fd = std::log(dp / dm) / (2.0 * h);
  ComplexMatrix R0 = free_resolvent(fp, z);
  ComplexMatrix R = perturbed_resolvent(fp, z);
  out.trace = -(R - R0 + R0 * fp.V() * R0).trace();
  return out;
}

// ---------------------------------------------------------------------------
// Seeded random instances.  Deterministic across platforms: uniforms are
// built from raw mt19937_64 output, not std::uniform_real_distribution.

class InstanceGenerator {
 public:
  explicit InstanceGenerator(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  Complex complex_uniform(double amp) {
    return {uniform(-amp, amp), uniform(-amp, amp)};
  }

  ComplexMatrix matrix(int rows, int cols, double amp) {
    ComplexMatrix M(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) M(i, j) = complex_uniform(amp);
    return M;
  }

  // Generic dense instance: H0 with well-separated random diagonal plus a
  // small dense part, factors of the requested rank.
  FactoredPerturbation dense_instance(int n, int k, double coupling) {
    FactoredPerturbation fp;
    fp.H0 = matrix(n, n, 0.2);
    for (int i = 0; i < n; ++i)
      fp.H0(i, i) += Complex(static_cast<double>(i) + uniform(-0.2, 0.2),
                             uniform(-0.2, 0.2));
    fp.A = matrix(k, n, coupling);
    fp.B = matrix(k, n, coupling);
    return fp;
  }

  // Hermitian instance: H0 = H0*, V = s A* A with s = +-1.
  FactoredPerturbation hermitian_instance(int n, int k, double coupling) {
    FactoredPerturbation fp;
    ComplexMatrix M = matrix(n, n, 0.5);
    fp.H0 = 0.5 * (M + M.adjoint());
    for (int i = 0; i < n; ++i) fp.H0(i, i) += static_cast<double>(i);
    fp.A = matrix(k, n, coupling);
    double s = uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    fp.B = s * fp.A;
    return fp;
  }

  std::uint64_t raw() { return rng_(); }

 private:
  std::mt19937_64 rng_;
};

}  // namespace bsdet
