#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"

using namespace testing;

namespace {

double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

}  // namespace

TEST_CASE("xxz chain structure") {
  const Model m = xxz(4);
  CHECK(m.hamiltonian.dim() == 16);
  CHECK(m.obs.observables.size() == 4);
  CHECK(m.obs.currents.size() == 3);
  CHECK(m.obs.labels.front() == "Sz_0");
  CHECK(m.obs.current_labels.front() == "J_0_1");
  REQUIRE(m.obs.conserved_labels.size() == 3);
  CHECK(m.obs.conserved_labels[0] == "1");
  CHECK(m.obs.conserved_labels[1] == "H");
  CHECK(m.obs.conserved_labels[2] == "Sz_total");
  CHECK(max_commutator_defect(m.obs, m.hamiltonian) < 1e-12);
  CHECK(max_of(continuity_residual(m.obs, m.hamiltonian)) <= 1e-10 * m.hamiltonian.frobenius_norm());

  HermitianOperator total = HermitianOperator::zero(16);
  for (const auto& a : m.obs.observables) total += a;
  CHECK((total.matrix() - m.obs.conserved[2].matrix()).norm() == 0.0);
}

TEST_CASE("single site has no currents") {
  const Model m = xxz(1);
  CHECK(m.hamiltonian.dim() == 2);
  CHECK(m.obs.currents.empty());
  const auto res = continuity_residual(m.obs, m.hamiltonian);
  REQUIRE(res.size() == 1);
  CHECK(res[0] < 1e-15);
}

TEST_CASE("continuity fails without currents") {
  Model m = xxz(3);
  for (auto& j : m.obs.currents) j = HermitianOperator::zero(j.dim());
  CHECK(max_of(continuity_residual(m.obs, m.hamiltonian)) > 1e-3);
}

TEST_CASE("periodic chains and spin-1") {
  ModelSpec spec;
  spec.num_sites = 4;
  spec.periodic = true;
  const Model p = build_model(spec);
  CHECK(p.obs.currents.size() == 4);
  CHECK(max_of(continuity_residual(p.obs, p.hamiltonian)) <= 1e-10 * p.hamiltonian.frobenius_norm());

  spec.num_sites = 2;
  CHECK_THROWS_AS(build_model(spec), InvalidArgument);

  spec.periodic = false;
  spec.num_sites = 3;
  spec.local_dim = 3;
  const Model s1 = build_model(spec);
  CHECK(s1.hamiltonian.dim() == 27);
  CHECK(max_of(continuity_residual(s1.obs, s1.hamiltonian)) <= 1e-10 * s1.hamiltonian.frobenius_norm());
}

TEST_CASE("transverse ising energy densities") {
  ModelSpec spec;
  spec.kind = ModelKind::transverse_ising_chain;
  spec.num_sites = 4;
  spec.ising.longitudinal = 0.3;
  spec.include_h2 = true;
  const Model m = build_model(spec);
  CHECK(m.obs.labels[2] == "e_2");
  CHECK(m.obs.conserved_labels.back() == "H^2");
  CHECK(max_of(continuity_residual(m.obs, m.hamiltonian)) <= 1e-10 * m.hamiltonian.frobenius_norm());
  HermitianOperator total = HermitianOperator::zero(16);
  for (const auto& a : m.obs.observables) total += a;
  CHECK((total.matrix() - m.hamiltonian.matrix()).norm() < 1e-12);
}

TEST_CASE("custom matrices") {
  ModelSpec spec;
  spec.kind = ModelKind::custom_matrices;
  spec.custom.hamiltonian = pauli_x();
  spec.custom.observables = {pauli_z()};
  CHECK_NOTHROW(build_model(spec));

  ComplexMatrix bad(2, 2);
  bad << 0, 1, 0, 0;
  spec.custom.observables = {bad};
  CHECK_THROWS_AS(build_model(spec), InvalidArgument);

  spec.custom.observables = {pauli_z()};
  spec.custom.conserved = {pauli_z()};
  CHECK_THROWS_AS(build_model(spec), InvalidArgument);
}

TEST_CASE("dimension cap and names") {
  ModelSpec spec;
  spec.num_sites = 13;
  CHECK_THROWS_AS(build_model(spec), DimensionError);
  CHECK(model_kind_from_string(to_string(ModelKind::transverse_ising_chain)) == ModelKind::transverse_ising_chain);
  CHECK_THROWS(model_kind_from_string("heisenberg_ladder"));
}

TEST_CASE("conserved expectations constant under evolution") {
  const Model m = xxz(4, 0.6, 0.4, {0.2, -0.1, 0.0, 0.3});
  Rng rng(11);
  const DensityOperator rho0 = normalized_exponential(random_hermitian(rng, 16, 0.5));
  DensityOperator rho = rho0;
  for (int k = 0; k < 30; ++k) {
    rho = unitary_evolve_state(rho, m.hamiltonian, 0.1);
    for (const auto& c : m.obs.conserved) CHECK(std::abs(expectation(c, rho) - expectation(c, rho0)) < 1e-8);
  }
}

TEST_CASE("relevant set drops dependent constants") {
  const RelevantSet rel = relevant_set(xxz(4).obs);
  // Sz_total is the sum of the densities and 1 is carried by zeta0.
  REQUIRE(rel.size() == 5);
  CHECK(rel.labels.back() == "H");
  CHECK(rel.conserved_indices() == std::vector<std::size_t>{4});
  CHECK(rel.driven_indices().size() == 4);
  CHECK(gram_condition_number(rel.ops, true) < 1e6);
}
