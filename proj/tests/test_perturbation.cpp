#include <catch2/catch_amalgamated.hpp>

#include "bsdet/perturbation.hpp"

using namespace bsdet;

namespace {
const Complex I(0.0, 1.0);

// Eigenvalue of H farthest (in min-distance) from the spectrum of H0; the
// correspondence statements need a point off the free spectrum.
Complex separated_eigenvalue(const FactoredPerturbation& fp, double* dist = nullptr) {
  Eigen::ComplexEigenSolver<ComplexMatrix> esH(fp.H());
  Eigen::ComplexEigenSolver<ComplexMatrix> es0(fp.H0);
  Complex best = esH.eigenvalues()(0);
  double best_d = -1.0;
  for (int i = 0; i < esH.eigenvalues().size(); ++i) {
    double d = 1e300;
    for (int j = 0; j < es0.eigenvalues().size(); ++j)
      d = std::min(d, std::abs(esH.eigenvalues()(i) - es0.eigenvalues()(j)));
    if (d > best_d) {
      best_d = d;
      best = esH.eigenvalues()(i);
    }
  }
  if (dist) *dist = best_d;
  return best;
}
}  // namespace

TEST_CASE("factored perturbation validates shapes") {
  FactoredPerturbation fp;
  fp.H0 = ComplexMatrix::Zero(3, 4);
  fp.A = ComplexMatrix::Zero(2, 3);
  fp.B = ComplexMatrix::Zero(2, 3);
  REQUIRE_THROWS_AS(validate(fp), DimensionError);
  fp.H0 = ComplexMatrix::Zero(3, 3);
  fp.B = ComplexMatrix::Zero(1, 3);
  REQUIRE_THROWS_AS(validate(fp), DimensionError);
}

TEST_CASE("free resolvent inverts H0 - z and refuses the spectrum") {
  InstanceGenerator gen(31);
  FactoredPerturbation fp = gen.dense_instance(6, 2, 0.5);
  Complex z(0.37, 1.1);
  ComplexMatrix R0 = free_resolvent(fp, z);
  ComplexMatrix resid =
      (fp.H0 - z * ComplexMatrix::Identity(6, 6)) * R0 - ComplexMatrix::Identity(6, 6);
  REQUIRE(resid.norm() < 1e-12);

  Eigen::ComplexEigenSolver<ComplexMatrix> es(fp.H0);
  REQUIRE_THROWS_AS(free_resolvent(fp, es.eigenvalues()(2)), SingularPointError);
}

TEST_CASE("factored resolvent formula reproduces the direct inverse") {
  InstanceGenerator gen(32);
  for (int t = 0; t < 10; ++t) {
    FactoredPerturbation fp = gen.dense_instance(4 + t % 4, 1 + t % 3, 0.6);
    Complex z = Complex(gen.uniform(-1, 4), gen.uniform(0.4, 2.0));
    ComplexMatrix R = perturbed_resolvent(fp, z);
    int n = fp.dim();
    ComplexMatrix direct =
        (fp.H() - z * ComplexMatrix::Identity(n, n)).inverse();
    REQUIRE((R - direct).norm() <= 1e-11 * std::max(1.0, direct.norm()));
  }
}

TEST_CASE("inverse of I - K is expressed by the perturbed resolvent") {
  InstanceGenerator gen(33);
  FactoredPerturbation fp = gen.dense_instance(6, 3, 0.7);
  Complex z(1.3, 0.9);
  ComplexMatrix K = bs_kernel(fp, z);
  ComplexMatrix R = perturbed_resolvent(fp, z);
  int k = fp.rank();
  ComplexMatrix lhs = (ComplexMatrix::Identity(k, k) - K).inverse();
  ComplexMatrix rhs =
      ComplexMatrix::Identity(k, k) - fp.A * R * fp.B.adjoint();
  REQUIRE((lhs - rhs).norm() <= 1e-11 * std::max(1.0, lhs.norm()));
}

TEST_CASE("kernel difference identity across two spectral points") {
  InstanceGenerator gen(34);
  FactoredPerturbation fp = gen.dense_instance(5, 2, 0.8);
  Complex z1(0.4, 1.2), z2(-1.1, -0.7);
  ComplexMatrix lhs = bs_kernel(fp, z1) - bs_kernel(fp, z2);
  ComplexMatrix rhs = (z2 - z1) * fp.A * free_resolvent(fp, z1) *
                      free_resolvent(fp, z2) * fp.B.adjoint();
  REQUIRE((lhs - rhs).norm() <= 1e-12 * std::max(1.0, rhs.norm()));
}

TEST_CASE("characteristic determinant vanishes exactly on the perturbed spectrum") {
  InstanceGenerator gen(35);
  for (int t = 0; t < 6; ++t) {
    FactoredPerturbation fp = gen.dense_instance(6, 2, 0.5);
    double dist = 0.0;
    Complex lam = separated_eigenvalue(fp, &dist);
    REQUIRE(dist > 1e-3);
    Complex at_eig = det_fredholm(-bs_kernel(fp, lam));
    Complex away = det_fredholm(-bs_kernel(fp, lam + Complex(0.0, 0.9)));
    REQUIRE(std::abs(at_eig) < 1e-8);
    REQUIRE(std::abs(away) > 1e-4);
  }
}

TEST_CASE("self-adjoint factorization gives a self-adjoint kernel below the spectrum") {
  InstanceGenerator gen(36);
  FactoredPerturbation fp = gen.hermitian_instance(6, 2, 0.8);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(fp.H0);
  double z = es.eigenvalues()(0) - 1.5;
  ComplexMatrix K = bs_kernel(fp, Complex(z, 0.0));
  REQUIRE((K - K.adjoint()).norm() < 1e-12 * std::max(1.0, K.norm()));
}

TEST_CASE("eigenvector correspondence maps both ways with matching multiplicities") {
  InstanceGenerator gen(37);
  for (int t = 0; t < 8; ++t) {
    FactoredPerturbation fp = gen.dense_instance(5 + t % 3, 1 + t % 3, 0.6);
    double dist = 0.0;
    Complex lam = separated_eigenvalue(fp, &dist);
    if (dist < 1e-3) continue;
    CorrespondenceResult cr =
        bs_eigen_correspondence(fp, lam, lam + Complex(0.0, 2.0));
    REQUIRE(cr.dim_ker_h >= 1);
    REQUIRE(cr.dim_ker_h == cr.dim_ker_k);
    REQUIRE(cr.forward_residual < 1e-9);
    REQUIRE(cr.backward_residual < 1e-9);
  }
}

TEST_CASE("correspondence rejects a reference point colliding with the eigenvalue") {
  InstanceGenerator gen(38);
  FactoredPerturbation fp = gen.dense_instance(4, 1, 0.5);
  Complex lam = separated_eigenvalue(fp);
  REQUIRE_THROWS_AS(bs_eigen_correspondence(fp, lam, lam), DomainError);
}

TEST_CASE("multiplicity bookkeeping around an isolated perturbed eigenvalue") {
  InstanceGenerator gen(39);
  for (int t = 0; t < 5; ++t) {
    FactoredPerturbation fp = gen.dense_instance(6, 1 + t % 3, 0.45);
    Eigen::ComplexEigenSolver<ComplexMatrix> esH(fp.H());
    Eigen::ComplexEigenSolver<ComplexMatrix> es0(fp.H0);
    Complex center = esH.eigenvalues()(t % 6);
    double gap = 1e300;
    for (int j = 0; j < 6; ++j) {
      if (j != t % 6)
        gap = std::min(gap, std::abs(esH.eigenvalues()(j) - center));
      gap = std::min(gap, std::abs(es0.eigenvalues()(j) - center));
    }
    if (gap < 5e-3) continue;
    ContourSpec contour{center, 0.4 * gap, 256};
    WAResult wa = local_wa_check(fp, contour);
    REQUIRE(wa.m_h == 1);
    REQUIRE(wa.m_h0 == 0);
    REQUIRE(wa.consistent());
    WAResult wa2 = global_wa_check(fp, contour, 2);
    REQUIRE(wa2.lhs == wa.lhs);
    REQUIRE(wa2.consistent());
  }
}

TEST_CASE("multiplicity bookkeeping across a defective free eigenvalue") {
  // H0 has a 2x2 Jordan block at 1 (algebraic multiplicity 2, geometric 1).
  FactoredPerturbation fp;
  fp.H0 = ComplexMatrix::Zero(3, 3);
  fp.H0(0, 0) = 1.0;
  fp.H0(0, 1) = 1.0;
  fp.H0(1, 1) = 1.0;
  fp.H0(2, 2) = 4.0;
  InstanceGenerator gen(40);
  fp.A = gen.matrix(1, 3, 0.1);
  fp.B = gen.matrix(1, 3, 0.1);

  // Wide contour: both split eigenvalues of H stay inside, net count zero.
  ContourSpec wide{Complex(1.0, 0.0), 0.8, 512};
  WAResult inner = local_wa_check(fp, wide);
  REQUIRE(inner.m_h0 == 2);
  REQUIRE(inner.m_h == 2);
  REQUIRE(inner.lhs == 0);
  REQUIRE(inner.consistent());

  // Tight contour: the square-root splitting pushes both perturbed
  // eigenvalues outside, so the count is -2 (a pole of the determinant).
  Eigen::ComplexEigenSolver<ComplexMatrix> esH(fp.H());
  double split = 1e300;
  for (int j = 0; j < 3; ++j)
    split = std::min(split, std::abs(esH.eigenvalues()(j) - Complex(1.0, 0.0)));
  REQUIRE(split > 2e-2);  // Jordan structure amplifies the perturbation
  ContourSpec tight{Complex(1.0, 0.0), 0.5 * split, 512};
  WAResult outer = global_wa_check(fp, tight, 2);
  REQUIRE(outer.m_h == 0);
  REQUIRE(outer.m_h0 == 2);
  REQUIRE(outer.lhs == -2);
  REQUIRE(outer.consistent());
}

TEST_CASE("trace identity for the rank-one textbook pair") {
  // H0 = diag(0, 1), V = diag(delta, 0): the shift is 1 on [0, delta).
  double delta = 0.3;
  FactoredPerturbation fp;
  fp.H0 = ComplexMatrix::Zero(2, 2);
  fp.H0(1, 1) = 1.0;
  fp.A = ComplexMatrix::Zero(1, 2);
  fp.A(0, 0) = std::sqrt(delta);
  fp.B = fp.A;

  Complex z(0.52, 0.83);
  KreinTraceResult kt = krein_trace_check(fp, z);
  Complex expected = 1.0 / (delta - z) + 1.0 / z;
  REQUIRE(std::abs(kt.lhs - expected) < 1e-12);
  REQUIRE(std::abs(kt.rhs - expected) < 1e-12);
  REQUIRE(std::abs(kt.lhs - kt.rhs) < 1e-12);
}

TEST_CASE("trace identity holds on random self-adjoint instances") {
  InstanceGenerator gen(41);
  for (int t = 0; t < 8; ++t) {
    FactoredPerturbation fp = gen.hermitian_instance(3 + t % 5, 1 + t % 2, 0.7);
    Complex z(gen.uniform(-3.0, 3.0),
              (t % 2 ? 1.0 : -1.0) * gen.uniform(0.6, 2.2));
    KreinTraceResult kt = krein_trace_check(fp, z);
    REQUIRE(std::abs(kt.lhs - kt.rhs) <= 1e-10 * std::max(1.0, std::abs(kt.rhs)));
  }
}

TEST_CASE("trace identity refuses non-self-adjoint input") {
  InstanceGenerator gen(42);
  FactoredPerturbation fp = gen.dense_instance(4, 1, 0.5);
  REQUIRE_THROWS_AS(krein_trace_check(fp, Complex(0, 1)), DomainError);
}

TEST_CASE("derivative of the regularized determinant matches resolvent traces") {
  InstanceGenerator gen(43);
  for (int t = 0; t < 6; ++t) {
    FactoredPerturbation fp = gen.dense_instance(5, 1 + t % 3, 0.6);
    Complex z(gen.uniform(-1.0, 2.0), gen.uniform(0.8, 2.0));
    Det2DerivativeResult r = det2_log_derivative_check(fp, z);
    REQUIRE(std::abs(r.fd - r.trace) <= 1e-7 * std::max(1.0, std::abs(r.trace)));
  }
}

TEST_CASE("seeded generator is reproducible") {
  InstanceGenerator g1(99), g2(99);
  ComplexMatrix a = g1.matrix(3, 3, 1.0), b = g2.matrix(3, 3, 1.0);
  REQUIRE((a - b).norm() == 0.0);
}
