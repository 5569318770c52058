#include <doctest.h>

#include "helpers.hpp"
#include "macrostate/maxent.hpp"

using namespace testing;

TEST_CASE("inversion of maximally mixed expectations") {
  const Model m = xxz(3);
  const RelevantSet rel = relevant_set(m.obs);
  const RealVector targets = expectations(rel.ops, DensityOperator::maximally_mixed(8));
  const GibbsState g = invert_macrostate(rel, targets);
  CHECK(g.params().zeta.cwiseAbs().maxCoeff() < 1e-8);
  CHECK(g.params().zeta0 == doctest::Approx(std::log(8.0)));
}

TEST_CASE("round trip and dual monotonicity") {
  const Model m = xxz(4, 0.7, 0.3);
  const RelevantSet rel = relevant_set(m.obs);
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const RealVector zeta = random_vector(rng, static_cast<Index>(rel.size()), 1.0);
    const GibbsState fwd = gibbs_state(rel, zeta);
    InversionReport report;
    const GibbsState inv = invert_macrostate(rel, fwd.expectations(), std::nullopt, {}, &report);
    for (Index j = 0; j < zeta.size(); ++j) {
      CHECK(std::abs(inv.expectations()(j) - fwd.expectations()(j)) <= 1e-10 * (1 + std::abs(fwd.expectations()(j))));
    }
    CHECK((inv.params().zeta - zeta).cwiseAbs().maxCoeff() < 1e-6);
    for (std::size_t k = 1; k < report.dual_values.size(); ++k) {
      CHECK(report.dual_values[k] <= report.dual_values[k - 1] + 1e-14);
    }
  }
}

TEST_CASE("non-realizable and dependent inputs") {
  const std::vector<HermitianOperator> ops{HermitianOperator::diagonal(RealVector{{-1.0, 0.0, 1.0}})};
  CHECK_THROWS_AS(invert_macrostate(ops, RealVector::Constant(1, 1.0)), NonRealizableError);
  CHECK_THROWS_AS(invert_macrostate(ops, RealVector::Constant(1, 1.5)), NonRealizableError);
  CHECK_NOTHROW(invert_macrostate(ops, RealVector::Constant(1, 0.99)));

  const std::vector<HermitianOperator> dependent{ops[0], 2.0 * ops[0]};
  CHECK_THROWS_AS(invert_macrostate(dependent, RealVector::Zero(2)), InvalidArgument);
  const std::vector<HermitianOperator> with_id{ops[0], HermitianOperator::identity(3)};
  CHECK_THROWS_AS(invert_macrostate(with_id, RealVector{{0.0, 1.0}}), InvalidArgument);

  InversionSettings bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = {};
  bad.max_iters = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("iteration budget") {
  const Model m = xxz(4);
  const RelevantSet rel = relevant_set(m.obs);
  Rng rng(22);
  const GibbsState fwd = gibbs_state(rel, random_vector(rng, static_cast<Index>(rel.size()), 2.0));
  InversionSettings s;
  s.max_iters = 1;
  CHECK_THROWS_AS(invert_macrostate(rel, fwd.expectations(), std::nullopt, s), ConvergenceError);
}

TEST_CASE("projection dominates the von Neumann entropy") {
  const Model m = xxz(3, 0.9, 0.1);
  const RelevantSet rel = relevant_set(m.obs);
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const DensityOperator rho = normalized_exponential(random_hermitian(rng, 8, 0.7));
    const GibbsState g = project_macrostate(rho, rel);
    CHECK(entropy(g) >= von_neumann_entropy(rho) - 1e-8);
  }
}

TEST_CASE("projection special cases") {
  const Model m = xxz(3, 0.9, 0.1);
  const RelevantSet rel = relevant_set(m.obs);
  Rng rng(24);
  const GibbsState g0 = gibbs_state(rel, random_vector(rng, static_cast<Index>(rel.size())));
  InversionReport report;
  const GibbsState again = project_macrostate(g0.state(), rel, g0.params(), {}, &report);
  CHECK(report.iterations == 0);
  CHECK((again.params().zeta - g0.params().zeta).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((project_macrostate(g0.state(), rel).params().zeta - g0.params().zeta).cwiseAbs().maxCoeff() < 1e-6);

  CHECK(project_macrostate(DensityOperator::maximally_mixed(8), rel).params().zeta.cwiseAbs().maxCoeff() < 1e-8);

  // Pure eigenstate of H with the energy as the only constraint.
  const Spectrum sp(m.hamiltonian);
  const DensityOperator pure = DensityOperator::pure(sp.vectors().col(3));
  const std::vector<HermitianOperator> h{m.hamiltonian};
  const GibbsState gh = project_macrostate(pure, h);
  CHECK(gh.expectations()(0) == doctest::Approx(sp.values()(3)).epsilon(1e-9));
  CHECK(entropy(gh) >= 0.0);
}

TEST_CASE("warm start does not change the solution") {
  const Model m = xxz(4, 0.6, 0.2);
  const RelevantSet rel = relevant_set(m.obs);
  Rng rng(25);
  const RealVector targets = gibbs_state(rel, random_vector(rng, static_cast<Index>(rel.size()))).expectations();
  const GibbsState cold = invert_macrostate(rel, targets);
  MacrostateParams init;
  init.zeta = random_vector(rng, static_cast<Index>(rel.size()), 0.5);
  const GibbsState warm = invert_macrostate(rel, targets, init);
  CHECK((cold.expectations() - warm.expectations()).cwiseAbs().maxCoeff() < 1e-8);
}
