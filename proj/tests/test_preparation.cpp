#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "macrostate/evolution.hpp"
#include "macrostate/preparation.hpp"

using namespace testing;

namespace {

struct Fixture {
  Model m = xxz(3, 0.8, 0.2);
  RelevantSet rel = relevant_set(m.obs);
  Index n = static_cast<Index>(rel.size());
};

PreparationSchedule bare(const Fixture& f, Rng& rng) {
  PreparationSchedule s;
  s.T = -1.0;
  s.t0 = 0.0;
  s.zeta_t0.zeta = random_vector(rng, f.n, 0.6);
  return s;
}

PreparationSchedule with_history(const Fixture& f, Rng& rng, double scale = 1.0) {
  PreparationSchedule s = bare(f, rng);
  s.gamma_T = scale * random_vector(rng, f.n, 0.4);
  TestFunction cosine{TestFunctionKind::cosine, 1.7, 0.3};
  TestFunction window{TestFunctionKind::gaussian_window, 0.0, 0.0, -0.4, 0.3};
  s.gamma_density = {{0, 0.5 * scale, cosine}, {2, -0.3 * scale, window}};
  s.gamma_current = {{1, 0.4 * scale, cosine}};
  return s;
}

double distance(const DensityOperator& a, const DensityOperator& b) { return (a.matrix() - b.matrix()).norm(); }

}  // namespace

TEST_CASE("test functions") {
  TestFunction c{TestFunctionKind::cosine, 2.0, 0.5};
  CHECK(c(0.3) == doctest::Approx(std::cos(2.0 * 0.3 + 0.5)));
  TestFunction g{TestFunctionKind::gaussian_window, 0.0, 0.0, 1.0, 0.5};
  CHECK(g(1.5) == doctest::Approx(std::exp(-0.5)));
  TestFunction k;
  k.value = 2.5;
  CHECK(k(-7.0) == 2.5);
  g.width = 0.0;
  CHECK_THROWS_AS(g.validate(), InvalidArgument);
  CHECK(test_function_kind_from_string(to_string(TestFunctionKind::gaussian_window)) ==
        TestFunctionKind::gaussian_window);
}

TEST_CASE("trapezoid quadrature") {
  const Quadrature q = trapezoid_with_step(0.0, 1.0, 0.25);
  REQUIRE(q.nodes.size() == 5);
  double integral = 0.0;
  for (std::size_t k = 0; k < q.nodes.size(); ++k) integral += q.weights[k] * q.nodes[k] * q.nodes[k];
  // Trapezoid error for x^2 on [0,1] is h^2/6.
  CHECK(integral == doctest::Approx(1.0 / 3.0 + 0.0625 / 6.0).epsilon(1e-14));
  CHECK(trapezoid_with_step(1.0, 1.0, 0.1).nodes.empty());
}

TEST_CASE("schedule validation") {
  Fixture f;
  Rng rng(31);
  PreparationSchedule s = with_history(f, rng);
  CHECK_NOTHROW(s.validate(f.rel, f.m.obs));
  CHECK(s.effective_step() == doctest::Approx(1.0 / 64.0));
  PreparationSchedule bad = s;
  bad.T = 0.5;
  CHECK_THROWS_AS(bad.validate(f.rel, f.m.obs), InvalidArgument);
  bad = s;
  bad.zeta_t0.zeta = RealVector::Zero(2);
  CHECK_THROWS_AS(bad.validate(f.rel, f.m.obs), InvalidArgument);
  bad = s;
  bad.gamma_current[0].current = 7;
  CHECK_THROWS_AS(bad.validate(f.rel, f.m.obs), InvalidArgument);
}

TEST_CASE("empty history reduces to the gibbs state") {
  Fixture f;
  Rng rng(32);
  const PreparationSchedule s = bare(f, rng);
  CHECK_FALSE(s.has_history());
  const GibbsState g = gibbs_state(f.rel, s.zeta_t0.zeta);
  CHECK(distance(prepared_state(s, f.m.obs, f.rel, f.m.hamiltonian), g.state()) < 1e-10);

  HermitianOperator expected = HermitianOperator::zero(8);
  for (Index j = 0; j < f.n; ++j) expected -= s.zeta_t0.zeta(j) * f.rel.ops[static_cast<std::size_t>(j)];
  CHECK((preparation_exponent(s, f.m.obs, f.rel, f.m.hamiltonian).matrix() - expected.matrix()).norm() < 1e-12);

  PreparationSchedule collapsed = s;
  collapsed.T = collapsed.t0;
  collapsed.gamma_T = random_vector(rng, f.n, 0.3);
  HermitianOperator with_boundary = expected;
  for (Index j = 0; j < f.n; ++j) with_boundary -= collapsed.gamma_T(j) * f.rel.ops[static_cast<std::size_t>(j)];
  CHECK((preparation_exponent(collapsed, f.m.obs, f.rel, f.m.hamiltonian).matrix() - with_boundary.matrix()).norm() <
        1e-12);
}

TEST_CASE("prepared state with history") {
  Fixture f;
  Rng rng(33);
  const PreparationSchedule s = with_history(f, rng);
  const HermitianOperator x = preparation_exponent(s, f.m.obs, f.rel, f.m.hamiltonian);
  CHECK(is_hermitian(x.matrix()));
  const DensityOperator rho = prepared_state(s, f.m.obs, f.rel, f.m.hamiltonian);
  CHECK(rho.op().trace() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(Spectrum(rho.op()).values().minCoeff() > 0.0);
  CHECK(distance(rho, gibbs_state(f.rel, s.zeta_t0.zeta).state()) > 1e-3);
}

TEST_CASE("prepared state departs linearly from the gibbs state") {
  Fixture f;
  Rng a(34), b(34);
  const PreparationSchedule s1 = with_history(f, a, 1e-2);
  const PreparationSchedule s2 = with_history(f, b, 5e-3);
  const DensityOperator g = gibbs_state(f.rel, s1.zeta_t0.zeta).state();
  const double d1 = distance(prepared_state(s1, f.m.obs, f.rel, f.m.hamiltonian), g);
  const double d2 = distance(prepared_state(s2, f.m.obs, f.rel, f.m.hamiltonian), g);
  CHECK(d1 / d2 == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("time arrow: boundary and final multipliers are not interchangeable") {
  Fixture f;
  Rng rng(35);
  const PreparationSchedule s = with_history(f, rng);
  PreparationSchedule swapped = s;
  swapped.gamma_T = s.zeta_t0.zeta;
  swapped.zeta_t0.zeta = s.gamma_T;
  CHECK(distance(prepared_state(s, f.m.obs, f.rel, f.m.hamiltonian),
                 prepared_state(swapped, f.m.obs, f.rel, f.m.hamiltonian)) > 1e-6);
}

TEST_CASE("evolved prepared state") {
  Fixture f;
  Rng rng(36);
  const PreparationSchedule s = with_history(f, rng);
  const DensityOperator rho = prepared_state(s, f.m.obs, f.rel, f.m.hamiltonian);
  CHECK(distance(evolved_prepared_state(s, f.m.obs, f.rel, f.m.hamiltonian, s.t0), rho) < 1e-12);

  const EvolvedRoutes r = evolved_prepared_routes(s, f.m.obs, f.rel, f.m.hamiltonian, s.t0 + 1.0);
  CHECK(r.discrepancy < 1e-10);
  CHECK(distance(r.via_state, unitary_evolve_state(rho, f.m.hamiltonian, 1.0)) < 1e-10);
  CHECK_THROWS_AS(evolved_prepared_state(s, f.m.obs, f.rel, f.m.hamiltonian, s.t0 - 0.1), InvalidArgument);

  // Exponent built from conserved operators only: stationary.
  PreparationSchedule still;
  still.T = -1.0;
  still.zeta_t0.zeta = RealVector::Zero(f.n);
  still.zeta_t0.zeta(f.n - 1) = 0.7;
  const DensityOperator r0 = prepared_state(still, f.m.obs, f.rel, f.m.hamiltonian);
  CHECK(distance(evolved_prepared_state(still, f.m.obs, f.rel, f.m.hamiltonian, 2.3), r0) < 1e-12);
}

TEST_CASE("finite difference rates") {
  std::vector<double> t;
  std::vector<RealVector> v;
  for (int k = 0; k <= 10; ++k) {
    t.push_back(0.1 * k);
    v.push_back(RealVector::Constant(1, t.back() * t.back()));
  }
  const auto r = finite_difference_rates(t, v);
  for (int k = 0; k <= 10; ++k) CHECK(r[static_cast<std::size_t>(k)](0) == doctest::Approx(2.0 * t[static_cast<std::size_t>(k)]));
  CHECK_THROWS_AS(finite_difference_rates({0.0, 1.0}, {v[0], v[1]}), InvalidArgument);
}

TEST_CASE("relevant time derivatives follow continuity") {
  Fixture f;
  const auto d = relevant_time_derivatives(f.rel, f.m.obs, f.m.hamiltonian);
  REQUIRE(d.size() == f.rel.size());
  for (std::size_t j = 0; j < d.size(); ++j) {
    CHECK((d[j].matrix() - heisenberg_dot(f.rel.ops[j], f.m.hamiltonian).matrix()).norm() < 1e-12);
  }
}

TEST_CASE("rewriting identity residual") {
  Fixture f;
  Rng rng(37);
  const PreparationSchedule s = with_history(f, rng, 0.5);
  const DensityOperator rho0 = prepared_state(s, f.m.obs, f.rel, f.m.hamiltonian);
  auto residual = [&](int n, double t) {
    std::vector<double> times;
    for (int k = 0; k <= n; ++k) times.push_back(s.t0 + (t - s.t0) * k / n);
    const Trajectory traj = exact_macrostate_trajectory(rho0, f.rel, f.m.hamiltonian, times);
    std::vector<RealVector> z;
    for (const auto& p : traj.zeta) z.push_back(p.zeta);
    return rewriting_identity_residual(s, f.m.obs, f.rel, f.m.hamiltonian, t, make_zeta_path(times, z));
  };

  SUBCASE("second order in the path step") {
    const double r1 = residual(32, 0.6), r2 = residual(64, 0.6);
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.1));
  }
  SUBCASE("vanishes at t = t0") {
    std::vector<double> times{0.0, 0.1, 0.2};
    std::vector<RealVector> z(3, s.zeta_t0.zeta);
    CHECK(rewriting_identity_residual(s, f.m.obs, f.rel, f.m.hamiltonian, 0.0, make_zeta_path(times, z)) < 1e-15);
  }
  SUBCASE("constant multipliers on conserved operators") {
    std::vector<double> times;
    std::vector<RealVector> z;
    RealVector zeta = RealVector::Zero(f.n);
    zeta(f.n - 1) = 0.9;
    for (int k = 0; k <= 8; ++k) {
      times.push_back(0.1 * k);
      z.push_back(zeta);
    }
    CHECK(rewriting_identity_residual(s, f.m.obs, f.rel, f.m.hamiltonian, 0.8, make_zeta_path(times, z)) < 1e-10);
  }
  SUBCASE("path must cover the interval") {
    std::vector<double> times{0.1, 0.2, 0.3};
    std::vector<RealVector> z(3, s.zeta_t0.zeta);
    CHECK_THROWS_AS(rewriting_identity_residual(s, f.m.obs, f.rel, f.m.hamiltonian, 0.3, make_zeta_path(times, z)),
                    InvalidArgument);
  }
}
