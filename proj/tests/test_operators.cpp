#include <doctest.h>

#include <cmath>

#include "helpers.hpp"

using namespace testing;

TEST_CASE("hermitian operator rejects non-hermitian input") {
  ComplexMatrix m(2, 2);
  m << 1, 2, 0, 1;
  CHECK_THROWS_AS(HermitianOperator{m}, InvalidArgument);
  CHECK_THROWS_AS(HermitianOperator{ComplexMatrix(0, 0)}, InvalidArgument);
  CHECK_NOTHROW(HermitianOperator{pauli_y()});
}

TEST_CASE("density operator validation") {
  CHECK_THROWS_AS(DensityOperator{HermitianOperator::identity(2)}, InvalidArgument);
  CHECK_THROWS_AS(DensityOperator{HermitianOperator::diagonal(RealVector{{1.5, -0.5}})},
                  InvalidArgument);
  const DensityOperator mixed = DensityOperator::maximally_mixed(4);
  CHECK(mixed.op().trace() == doctest::Approx(1.0));
  CHECK(purity(mixed) == doctest::Approx(0.25));
}

TEST_CASE("commutator identities") {
  Rng rng(1);
  const HermitianOperator a = random_hermitian(rng, 5);
  CHECK(commutator(a, a).norm() == 0.0);
  CHECK(commutator(HermitianOperator::identity(5), a).norm() < 1e-15);
  CHECK_THROWS_AS(commutator(a, HermitianOperator::identity(3)), DimensionError);
}

TEST_CASE("pauli algebra through heisenberg_dot") {
  // i[sx, sy] = i (2i sz) = -2 sz
  const HermitianOperator sx(pauli_x()), sy(pauli_y()), sz(pauli_z());
  CHECK((heisenberg_dot(sy, sx).matrix() + 2.0 * sz.matrix()).norm() < 1e-15);
  CHECK((i_commutator(sx, sy).matrix() + 2.0 * sz.matrix()).norm() < 1e-15);
}

TEST_CASE("heisenberg evolution") {
  Rng rng(2);
  const HermitianOperator h = random_hermitian(rng, 6);
  const HermitianOperator a = random_hermitian(rng, 6);

  SUBCASE("t = 0 and commuting operators are fixed points") {
    CHECK((heisenberg_evolve(a, h, 0.0).matrix() - a.matrix()).norm() < 1e-12);
    const HermitianOperator h2 = HermitianOperator::symmetrized(h.matrix() * h.matrix());
    CHECK((heisenberg_evolve(h2, h, 1.7).matrix() - h2.matrix()).norm() < 1e-12 * h2.frobenius_norm());
  }
  SUBCASE("norm and hermiticity preserved") {
    const HermitianOperator at = heisenberg_evolve(a, h, 2.3);
    CHECK(is_hermitian(at.matrix()));
    CHECK(std::abs(at.frobenius_norm() - a.frobenius_norm()) < 1e-10 * a.frobenius_norm());
  }
  SUBCASE("two-level closed form") {
    const double w = 1.3, t = 0.7;
    const HermitianOperator h2 = HermitianOperator::diagonal(RealVector{{0.0, w}});
    const HermitianOperator at = heisenberg_evolve(HermitianOperator(pauli_x()), h2, t);
    // (e^{iHt} sx e^{-iHt})_{01} = e^{i(0 - w)t}
    CHECK(std::abs(at.matrix()(0, 1) - std::exp(Complex(0, -w * t))) < 1e-13);
    CHECK(std::abs(at.matrix()(1, 0) - std::exp(Complex(0, w * t))) < 1e-13);
    CHECK(std::abs(at.matrix()(0, 0)) < 1e-15);
  }
}

TEST_CASE("unitary state evolution") {
  Rng rng(3);
  const HermitianOperator h = random_hermitian(rng, 6);
  const DensityOperator rho = normalized_exponential(random_hermitian(rng, 6, 0.8));

  SUBCASE("spectral invariants") {
    const DensityOperator out = unitary_evolve_state(rho, h, 1.9);
    CHECK(out.op().trace() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(purity(out) - purity(rho)) < 1e-10);
    CHECK(std::abs(von_neumann_entropy(out) - von_neumann_entropy(rho)) < 1e-8);
    const RealVector e0 = Spectrum(rho.op()).values(), e1 = Spectrum(out.op()).values();
    CHECK((e0 - e1).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("fixed points") {
    const DensityOperator mixed = DensityOperator::maximally_mixed(6);
    CHECK((unitary_evolve_state(mixed, h, 3.0).matrix() - mixed.matrix()).norm() < 1e-14);
    CHECK((unitary_evolve_state(rho, h, 0.0).matrix() - rho.matrix()).norm() < 1e-14);
    const Spectrum sp(h);
    const DensityOperator eig = DensityOperator::pure(sp.vectors().col(2));
    CHECK((unitary_evolve_state(eig, h, 2.5).matrix() - eig.matrix()).norm() < 1e-12);
  }
  SUBCASE("group property") {
    DensityOperator stepped = rho;
    for (int k = 0; k < 20; ++k) stepped = unitary_evolve_state(stepped, h, 0.05);
    CHECK((stepped.matrix() - unitary_evolve_state(rho, h, 1.0).matrix()).norm() < 1e-8);
  }
}

TEST_CASE("expectation values") {
  Rng rng(4);
  const HermitianOperator a = random_hermitian(rng, 4);
  const DensityOperator rho = normalized_exponential(random_hermitian(rng, 4));
  CHECK(expectation(HermitianOperator::identity(4), rho) == doctest::Approx(1.0));
  CHECK(expectation(a, DensityOperator::maximally_mixed(4)) == doctest::Approx(a.trace() / 4.0));
  Eigen::VectorXcd v(4);
  v << Complex(1, 0.5), -0.3, Complex(0, 2), 0.7;
  const double quad = (v.adjoint() * a.matrix() * v)(0, 0).real() / v.squaredNorm();
  CHECK(expectation(a, DensityOperator::pure(v)) == doctest::Approx(quad).epsilon(1e-12));
  CHECK_THROWS_AS(expectation(HermitianOperator::identity(3), rho), DimensionError);
}

TEST_CASE("normalized exponential survives large exponents") {
  const DensityOperator rho = normalized_exponential(HermitianOperator::diagonal(RealVector{{800.0, 799.0}}));
  const double p = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(rho.matrix()(0, 0).real() == doctest::Approx(p));
}
