#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "macrostate/error.hpp"

namespace macrostate {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Relative tolerance of the Hermiticity check (scaled by the largest entry).
inline constexpr double kHermiticityTol = 1e-12;

/// Complex square matrix equal to its conjugate transpose.
class HermitianOperator {
 public:
  /// Validates dim >= 1 and Hermiticity; throws InvalidArgument otherwise.
  explicit HermitianOperator(ComplexMatrix m);

  /// (m + m^dagger) / 2 without checking how far m was from Hermitian.
  static HermitianOperator symmetrized(const ComplexMatrix& m);
  static HermitianOperator identity(Index dim);
  static HermitianOperator zero(Index dim);
  /// Real diagonal operator.
  static HermitianOperator diagonal(const RealVector& d);

  Index dim() const noexcept { return m_.rows(); }
  const ComplexMatrix& matrix() const noexcept { return m_; }
  double frobenius_norm() const { return m_.norm(); }
  double trace() const { return m_.trace().real(); }

  HermitianOperator& operator+=(const HermitianOperator& o);
  HermitianOperator& operator-=(const HermitianOperator& o);
  HermitianOperator& operator*=(double s);

  friend HermitianOperator operator+(HermitianOperator a, const HermitianOperator& b) { return a += b; }
  friend HermitianOperator operator-(HermitianOperator a, const HermitianOperator& b) { return a -= b; }
  friend HermitianOperator operator*(double s, HermitianOperator a) { return a *= s; }
  friend HermitianOperator operator*(HermitianOperator a, double s) { return a *= s; }
  HermitianOperator operator-() const { return HermitianOperator(Unchecked{}, -m_); }

 private:
  struct Unchecked {};
  HermitianOperator(Unchecked, ComplexMatrix m) : m_(std::move(m)) {}
  ComplexMatrix m_;
};

/// Positive-semidefinite, unit-trace Hermitian operator.
class DensityOperator {
 public:
  /// Checks eigenvalues >= -1e-10 and |trace - 1| <= 1e-10.
  explicit DensityOperator(HermitianOperator op);
  /// For results that are valid by construction (normalized exponentials, unitary images).
  static DensityOperator trusted(HermitianOperator op) { return DensityOperator(Unchecked{}, std::move(op)); }
  static DensityOperator maximally_mixed(Index dim);
  /// |v><v| / <v|v>.
  static DensityOperator pure(const Eigen::VectorXcd& v);

  const HermitianOperator& op() const noexcept { return op_; }
  const ComplexMatrix& matrix() const noexcept { return op_.matrix(); }
  Index dim() const noexcept { return op_.dim(); }

 private:
  struct Unchecked {};
  DensityOperator(Unchecked, HermitianOperator op) : op_(std::move(op)) {}
  HermitianOperator op_;
};

/// Eigendecomposition of a Hermitian operator, op = V diag(values) V^dagger.
/// Evolution and every matrix function in the library go through this.
class Spectrum {
 public:
  explicit Spectrum(const HermitianOperator& op);

  Index dim() const noexcept { return values_.size(); }
  const RealVector& values() const noexcept { return values_; }
  const ComplexMatrix& vectors() const noexcept { return vectors_; }

  ComplexMatrix to_eigenbasis(const ComplexMatrix& m) const;
  ComplexMatrix from_eigenbasis(const ComplexMatrix& m) const;

  /// e^{+i op t} a e^{-i op t}.
  HermitianOperator heisenberg(const HermitianOperator& a, double t) const;
  /// Same, for a matrix already in the eigenbasis; result stays in the eigenbasis.
  ComplexMatrix heisenberg_in_eigenbasis(const ComplexMatrix& a, double t) const;
  /// e^{-i op dt} rho e^{+i op dt}.
  DensityOperator evolve(const DensityOperator& rho, double dt) const;
  /// Matrix of phases e^{i (E_m - E_n) t}.
  ComplexMatrix phases(double t) const;

 private:
  RealVector values_;
  ComplexMatrix vectors_;
};

/// Entrywise Hermiticity check relative to the largest entry.
bool is_hermitian(const ComplexMatrix& m, double rel_tol = kHermiticityTol);

/// ab - ba. Anti-Hermitian for Hermitian inputs.
ComplexMatrix commutator(const HermitianOperator& a, const HermitianOperator& b);
/// i[a, b], Hermitian for Hermitian inputs.
HermitianOperator i_commutator(const HermitianOperator& a, const HermitianOperator& b);
/// Time derivative i[h, a] of a in the Heisenberg picture (hbar = 1).
HermitianOperator heisenberg_dot(const HermitianOperator& a, const HermitianOperator& h);

HermitianOperator heisenberg_evolve(const HermitianOperator& a, const HermitianOperator& h, double t);
DensityOperator unitary_evolve_state(const DensityOperator& rho, const HermitianOperator& h, double dt);

/// Re Tr(a rho); throws NumericalError if the imaginary part exceeds 1e-10.
double expectation(const HermitianOperator& a, const DensityOperator& rho);
/// Re Tr(a b) without the imaginary-part check.
double trace_product(const ComplexMatrix& a, const ComplexMatrix& b);

double von_neumann_entropy(const DensityOperator& rho);
double purity(const DensityOperator& rho);

/// e^{x} / Tr e^{x}, with the largest eigenvalue shifted out before exponentiating.
DensityOperator normalized_exponential(const HermitianOperator& x);

void require_same_dim(Index a, Index b, const char* where);

}  // namespace macrostate
