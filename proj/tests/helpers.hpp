#pragma once

#include <random>

#include "macrostate/model.hpp"
#include "macrostate/operators.hpp"

namespace testing {

using namespace macrostate;

struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
};

inline HermitianOperator random_hermitian(Rng& rng, Index d, double scale = 1.0) {
  ComplexMatrix m(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) m(i, j) = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
  }
  return HermitianOperator::symmetrized(scale * m);
}

inline RealVector random_vector(Rng& rng, Index n, double scale = 1.0) {
  RealVector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.uniform(-scale, scale);
  return v;
}

inline Model xxz(int sites, double jz = 0.8, double field = 0.2, std::vector<double> site_fields = {}) {
  ModelSpec spec;
  spec.kind = ModelKind::xxz_chain;
  spec.num_sites = sites;
  spec.xxz.jz = jz;
  spec.xxz.field = field;
  spec.xxz.site_fields = std::move(site_fields);
  return build_model(spec);
}

inline ComplexMatrix pauli_x() { return (ComplexMatrix(2, 2) << 0, 1, 1, 0).finished(); }
inline ComplexMatrix pauli_y() { return (ComplexMatrix(2, 2) << 0, Complex(0, -1), Complex(0, 1), 0).finished(); }
inline ComplexMatrix pauli_z() { return (ComplexMatrix(2, 2) << 1, 0, 0, -1).finished(); }

}  // namespace testing
