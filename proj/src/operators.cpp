#include "macrostate/operators.hpp"

#include <cmath>
#include <string>

namespace macrostate {

void require_same_dim(Index a, Index b, const char* where) {
  if (a != b) {
    throw DimensionError(std::string(where) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
  }
}

bool is_hermitian(const ComplexMatrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

HermitianOperator::HermitianOperator(ComplexMatrix m) : m_(std::move(m)) {
  if (m_.rows() < 1 || m_.rows() != m_.cols()) {
    throw InvalidArgument("HermitianOperator: matrix must be square with dim >= 1");
  }
  if (!m_.allFinite()) throw InvalidArgument("HermitianOperator: non-finite entries");
  if (!is_hermitian(m_)) throw InvalidArgument("HermitianOperator: matrix is not Hermitian");
}

HermitianOperator HermitianOperator::symmetrized(const ComplexMatrix& m) {
  if (m.rows() < 1 || m.rows() != m.cols()) {
    throw InvalidArgument("HermitianOperator: matrix must be square with dim >= 1");
  }
  return HermitianOperator(Unchecked{}, 0.5 * (m + m.adjoint()));
}

HermitianOperator HermitianOperator::identity(Index dim) {
  return HermitianOperator(ComplexMatrix::Identity(dim, dim));
}

HermitianOperator HermitianOperator::zero(Index dim) { return HermitianOperator(ComplexMatrix::Zero(dim, dim)); }

HermitianOperator HermitianOperator::diagonal(const RealVector& d) {
  return HermitianOperator(d.cast<Complex>().asDiagonal().toDenseMatrix());
}

HermitianOperator& HermitianOperator::operator+=(const HermitianOperator& o) {
  require_same_dim(dim(), o.dim(), "operator+");
  m_ += o.m_;
  return *this;
}

HermitianOperator& HermitianOperator::operator-=(const HermitianOperator& o) {
  require_same_dim(dim(), o.dim(), "operator-");
  m_ -= o.m_;
  return *this;
}

HermitianOperator& HermitianOperator::operator*=(double s) {
  m_ *= s;
  return *this;
}

DensityOperator::DensityOperator(HermitianOperator op) : op_(std::move(op)) {
  if (std::abs(op_.trace() - 1.0) > 1e-10) throw InvalidArgument("DensityOperator: trace differs from 1");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(op_.matrix(), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) throw InvalidArgument("DensityOperator: negative eigenvalue");
}

DensityOperator DensityOperator::maximally_mixed(Index dim) {
  return trusted(HermitianOperator::identity(dim) * (1.0 / static_cast<double>(dim)));
}

DensityOperator DensityOperator::pure(const Eigen::VectorXcd& v) {
  const double n2 = v.squaredNorm();
  if (!(n2 > 0.0)) throw InvalidArgument("DensityOperator::pure: zero vector");
  return trusted(HermitianOperator::symmetrized(v * v.adjoint() / n2));
}

Spectrum::Spectrum(const HermitianOperator& op) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(op.matrix());
  if (es.info() != Eigen::Success) throw NumericalError("Spectrum: eigendecomposition failed");
  values_ = es.eigenvalues();
  vectors_ = es.eigenvectors();
}

ComplexMatrix Spectrum::to_eigenbasis(const ComplexMatrix& m) const { return vectors_.adjoint() * m * vectors_; }

ComplexMatrix Spectrum::from_eigenbasis(const ComplexMatrix& m) const { return vectors_ * m * vectors_.adjoint(); }

ComplexMatrix Spectrum::phases(double t) const {
  const Index d = dim();
  Eigen::VectorXcd p(d);
  for (Index m = 0; m < d; ++m) p(m) = std::polar(1.0, values_(m) * t);
  return p * p.adjoint();
}

ComplexMatrix Spectrum::heisenberg_in_eigenbasis(const ComplexMatrix& a, double t) const {
  return a.cwiseProduct(phases(t));
}

HermitianOperator Spectrum::heisenberg(const HermitianOperator& a, double t) const {
  require_same_dim(a.dim(), dim(), "heisenberg");
  if (t == 0.0) return a;
  return HermitianOperator::symmetrized(from_eigenbasis(heisenberg_in_eigenbasis(to_eigenbasis(a.matrix()), t)));
}

DensityOperator Spectrum::evolve(const DensityOperator& rho, double dt) const {
  require_same_dim(rho.dim(), dim(), "evolve");
  if (dt == 0.0) return rho;
  // e^{-iHdt} rho e^{iHdt} is the Heisenberg map at -dt.
  return DensityOperator::trusted(heisenberg(rho.op(), -dt));
}

ComplexMatrix commutator(const HermitianOperator& a, const HermitianOperator& b) {
  require_same_dim(a.dim(), b.dim(), "commutator");
  return a.matrix() * b.matrix() - b.matrix() * a.matrix();
}

HermitianOperator i_commutator(const HermitianOperator& a, const HermitianOperator& b) {
  return HermitianOperator::symmetrized(Complex(0.0, 1.0) * commutator(a, b));
}

HermitianOperator heisenberg_dot(const HermitianOperator& a, const HermitianOperator& h) { return i_commutator(h, a); }

HermitianOperator heisenberg_evolve(const HermitianOperator& a, const HermitianOperator& h, double t) {
  require_same_dim(a.dim(), h.dim(), "heisenberg_evolve");
  if (t == 0.0) return a;
  return Spectrum(h).heisenberg(a, t);
}

DensityOperator unitary_evolve_state(const DensityOperator& rho, const HermitianOperator& h, double dt) {
  require_same_dim(rho.dim(), h.dim(), "unitary_evolve_state");
  if (dt == 0.0) return rho;
  return Spectrum(h).evolve(rho, dt);
}

double trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  // Tr(ab) = sum_{ij} a_ij b_ji
  return (a.transpose().cwiseProduct(b)).sum().real();
}

double expectation(const HermitianOperator& a, const DensityOperator& rho) {
  require_same_dim(a.dim(), rho.dim(), "expectation");
  const Complex tr = (a.matrix().transpose().cwiseProduct(rho.matrix())).sum();
  const double scale = std::max(1.0, a.matrix().cwiseAbs().maxCoeff());
  if (std::abs(tr.imag()) > 1e-10 * scale) throw NumericalError("expectation: trace has an imaginary part");
  return tr.real();
}

double von_neumann_entropy(const DensityOperator& rho) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho.matrix(), Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double p = es.eigenvalues()(i);
    if (p > 0.0) s -= p * std::log(p);
  }
  return s;
}

double purity(const DensityOperator& rho) { return trace_product(rho.matrix(), rho.matrix()); }

DensityOperator normalized_exponential(const HermitianOperator& x) {
  const Spectrum sp(x);
  const double shift = sp.values().maxCoeff();
  RealVector w = (sp.values().array() - shift).exp();
  w /= w.sum();
  return DensityOperator::trusted(
      HermitianOperator::symmetrized(sp.vectors() * w.cast<Complex>().asDiagonal() * sp.vectors().adjoint()));
}

}  // namespace macrostate
