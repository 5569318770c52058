#include "macrostate/gibbs.hpp"

#include <cmath>

namespace macrostate {

namespace {

constexpr double kSeriesGap = 1e-8;

ComplexMatrix exponent_matrix(std::span<const HermitianOperator> ops, const RealVector& zeta) {
  if (ops.empty()) throw InvalidArgument("gibbs_state: empty operator list");
  if (static_cast<Index>(ops.size()) != zeta.size()) {
    throw DimensionError("gibbs_state: zeta has " + std::to_string(zeta.size()) + " entries for " +
                         std::to_string(ops.size()) + " operators");
  }
  if (!zeta.allFinite()) throw InvalidArgument("gibbs_state: non-finite zeta");
  const Index d = ops[0].dim();
  ComplexMatrix x = ComplexMatrix::Zero(d, d);
  for (std::size_t j = 0; j < ops.size(); ++j) {
    require_same_dim(ops[j].dim(), d, "gibbs_state");
    x -= zeta(static_cast<Index>(j)) * ops[j].matrix();
  }
  return x;
}

Eigen::MatrixXd kernel_matrix(const RealVector& c) {
  const Index d = c.size();
  Eigen::MatrixXd k(d, d);
  for (Index m = 0; m < d; ++m) {
    for (Index n = m; n < d; ++n) k(m, n) = k(n, m) = exp_divided_difference(c(m), c(n));
  }
  return k;
}

// sum_{mn} a_nm b_mn k_mn for matrices expressed in a common eigenbasis.
Complex kernel_pairing(const ComplexMatrix& a, const ComplexMatrix& b, const Eigen::MatrixXd& k) {
  return (a.transpose().cwiseProduct(b).cwiseProduct(k.cast<Complex>())).sum();
}

}  // namespace

double exp_divided_difference(double x, double y) {
  const double hi = std::max(x, y);
  const double d = std::min(x, y) - hi;  // <= 0
  if (-d < kSeriesGap) return std::exp(hi) * (1.0 + d / 2.0 + d * d / 6.0);
  return std::exp(hi) * std::expm1(d) / d;
}

GibbsState::GibbsState(std::span<const HermitianOperator> ops, const RealVector& zeta)
    : state_(DensityOperator::maximally_mixed(ops.empty() ? 1 : ops[0].dim())) {
  const ComplexMatrix x = exponent_matrix(ops, zeta);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (x + x.adjoint()));
  if (es.info() != Eigen::Success) throw NumericalError("gibbs_state: eigendecomposition failed");
  const RealVector& ev = es.eigenvalues();
  const double shift = ev.maxCoeff();
  const double log_z = shift + std::log((ev.array() - shift).exp().sum());

  params_.zeta0 = log_z;
  params_.zeta = zeta;
  log_weights_ = ev.array() - log_z;
  probabilities_ = log_weights_.array().exp();
  basis_ = es.eigenvectors();
  state_ = DensityOperator::trusted(HermitianOperator::symmetrized(
      basis_ * probabilities_.cast<Complex>().asDiagonal() * basis_.adjoint()));
  expectations_.resize(static_cast<Index>(ops.size()));
  for (std::size_t j = 0; j < ops.size(); ++j) {
    expectations_(static_cast<Index>(j)) = trace_product(ops[j].matrix(), state_.matrix());
  }
  kernel_ = kernel_matrix(log_weights_);
}

HermitianOperator GibbsState::kubo_transform(const HermitianOperator& a) const {
  require_same_dim(a.dim(), dim(), "kubo_transform");
  const ComplexMatrix ab = to_basis(a.matrix()).cwiseProduct(kernel_.cast<Complex>());
  return HermitianOperator::symmetrized(from_basis(ab));
}

GibbsState gibbs_state(std::span<const HermitianOperator> ops, const RealVector& zeta) {
  return GibbsState(ops, zeta);
}

GibbsState gibbs_state(const RelevantSet& set, const RealVector& zeta) { return GibbsState(set.ops, zeta); }

double log_partition(std::span<const HermitianOperator> ops, const RealVector& zeta) {
  const ComplexMatrix x = exponent_matrix(ops, zeta);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (x + x.adjoint()), Eigen::EigenvaluesOnly);
  const RealVector& ev = es.eigenvalues();
  const double shift = ev.maxCoeff();
  return shift + std::log((ev.array() - shift).exp().sum());
}

double entropy(const GibbsState& g) {
  const auto& p = g.params();
  const double formula = p.zeta0 + p.zeta.dot(g.expectations());
  double spectral = 0.0;
  for (Index m = 0; m < g.dim(); ++m) spectral -= g.probabilities()(m) * g.log_weights()(m);
  const double scale = std::max({1.0, std::abs(p.zeta0), p.zeta.cwiseProduct(g.expectations()).cwiseAbs().sum()});
  if (std::abs(formula - spectral) > 1e-8 * scale) {
    throw NumericalError("entropy: multiplier formula and spectral evaluation disagree");
  }
  return spectral;
}

double kubo_inner(const HermitianOperator& a, const HermitianOperator& b, const GibbsState& g) {
  require_same_dim(a.dim(), g.dim(), "kubo_inner");
  require_same_dim(b.dim(), g.dim(), "kubo_inner");
  const ComplexMatrix ab = g.to_basis(a.matrix());
  const ComplexMatrix bb = g.to_basis(b.matrix());
  const RealVector& p = g.probabilities();
  const double mean_a = (ab.diagonal().real().cwiseProduct(p)).sum();
  const double mean_b = (bb.diagonal().real().cwiseProduct(p)).sum();
  return kernel_pairing(ab, bb, g.kernel()).real() - mean_a * mean_b;
}

Eigen::MatrixXd kubo_covariance(std::span<const HermitianOperator> ops, const GibbsState& g) {
  const Index k = static_cast<Index>(ops.size());
  std::vector<ComplexMatrix> t;
  t.reserve(ops.size());
  RealVector means(k);
  for (Index j = 0; j < k; ++j) {
    require_same_dim(ops[j].dim(), g.dim(), "kubo_covariance");
    t.push_back(g.to_basis(ops[j].matrix()));
    means(j) = (t.back().diagonal().real().cwiseProduct(g.probabilities())).sum();
  }
  Eigen::MatrixXd out(k, k);
  for (Index j = 0; j < k; ++j) {
    for (Index l = j; l < k; ++l) {
      out(j, l) = out(l, j) = kernel_pairing(t[j], t[l], g.kernel()).real() - means(j) * means(l);
    }
  }
  return out;
}

double cumulant_expectation(const HermitianOperator& c_op, const HermitianOperator& perturbation,
                            const HermitianOperator& probe) {
  require_same_dim(c_op.dim(), perturbation.dim(), "cumulant_expectation");
  require_same_dim(c_op.dim(), probe.dim(), "cumulant_expectation");
  const Spectrum sp(c_op);
  // Shift by the largest eigenvalue; every term is a ratio with Tr e^{A}, so the shift cancels.
  const RealVector a = sp.values().array() - sp.values().maxCoeff();
  const RealVector w = a.array().exp();
  const double z = w.sum();
  const ComplexMatrix b = sp.to_eigenbasis(perturbation.matrix());
  const ComplexMatrix c = sp.to_eigenbasis(probe.matrix());
  const double zeroth = c.diagonal().real().dot(w) / z;
  const double mean_b = b.diagonal().real().dot(w) / z;
  const double u_integral = kernel_pairing(c, b, kernel_matrix(a)).real() / z;
  return zeroth + u_integral - zeroth * mean_b;
}

}  // namespace macrostate
