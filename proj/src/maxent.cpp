#include "macrostate/maxent.hpp"

#include <cmath>
#include <string>

namespace macrostate {

namespace {

double scaled_residual(const RealVector& current, const RealVector& targets) {
  return ((current - targets).array().abs() / (1.0 + targets.array().abs())).maxCoeff();
}

void check_realizable_marginals(std::span<const HermitianOperator> ops, const RealVector& targets) {
  for (std::size_t j = 0; j < ops.size(); ++j) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(ops[j].matrix(), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    const double t = targets(static_cast<Index>(j));
    const double eps = 1e-12 * std::max(1.0, hi - lo);
    if (!(t > lo + eps && t < hi - eps)) {
      throw NonRealizableError("invert_macrostate: target " + std::to_string(j) + " = " + std::to_string(t) +
                               " is not inside the open spectral interval (" + std::to_string(lo) + ", " +
                               std::to_string(hi) + ")");
    }
  }
}

}  // namespace

void InversionSettings::validate() const {
  if (!(tol > 0.0)) throw InvalidArgument("InversionSettings: tol must be > 0");
  if (max_iters < 1) throw InvalidArgument("InversionSettings: max_iters must be >= 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw InvalidArgument("InversionSettings: damping must be in (0, 1]");
  if (!(regularization >= 0.0)) throw InvalidArgument("InversionSettings: regularization must be >= 0");
  if (!(zeta_bound > 0.0)) throw InvalidArgument("InversionSettings: zeta_bound must be > 0");
}

RealVector expectations(std::span<const HermitianOperator> ops, const DensityOperator& rho) {
  RealVector out(static_cast<Index>(ops.size()));
  for (std::size_t j = 0; j < ops.size(); ++j) out(static_cast<Index>(j)) = expectation(ops[j], rho);
  return out;
}

GibbsState invert_macrostate(std::span<const HermitianOperator> ops, const RealVector& targets,
                             const std::optional<MacrostateParams>& init, const InversionSettings& settings,
                             InversionReport* report) {
  settings.validate();
  if (ops.empty()) throw InvalidArgument("invert_macrostate: empty operator list");
  const Index k = static_cast<Index>(ops.size());
  if (targets.size() != k) throw DimensionError("invert_macrostate: targets/operators size mismatch");
  if (!targets.allFinite()) throw InvalidArgument("invert_macrostate: non-finite targets");
  if (gram_condition_number(ops, true) > settings.independence_limit) {
    throw InvalidArgument("invert_macrostate: operators together with the identity are linearly dependent");
  }
  check_realizable_marginals(ops, targets);

  RealVector zeta = RealVector::Zero(k);
  if (init) {
    if (init->zeta.size() != k) throw DimensionError("invert_macrostate: init size mismatch");
    if (!init->finite()) throw InvalidArgument("invert_macrostate: non-finite init");
    zeta = init->zeta;
  }

  InversionReport local;
  InversionReport& rep = report ? *report : local;
  rep = InversionReport{};

  GibbsState g(ops, zeta);
  double dual = g.params().zeta0 + zeta.dot(targets);
  double residual = scaled_residual(g.expectations(), targets);
  rep.dual_values.push_back(dual);

  for (int iter = 0; iter < settings.max_iters; ++iter) {
    if (residual <= settings.tol) {
      rep.iterations = iter;
      rep.residual = residual;
      return g;
    }
    Eigen::MatrixXd hess = kubo_covariance(ops, g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > settings.condition_limit) {
      hess.diagonal().array() += settings.regularization * std::max(hi, 1e-300);
      rep.regularized = true;
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    const RealVector step = ldlt.solve(g.expectations() - targets);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      throw ConvergenceError("invert_macrostate: Kubo Hessian is singular beyond regularization");
    }

    bool accepted = false;
    for (double s = settings.damping; s > 1e-18; s *= 0.5) {
      const RealVector trial = zeta + s * step;
      if (trial.cwiseAbs().maxCoeff() > settings.zeta_bound) {
        throw NonRealizableError("invert_macrostate: multipliers diverge (|zeta| > " +
                                 std::to_string(settings.zeta_bound) + "); targets are not realizable");
      }
      GibbsState gt(ops, trial);
      const double dual_t = gt.params().zeta0 + trial.dot(targets);
      const double residual_t = scaled_residual(gt.expectations(), targets);
      // Near the optimum F is flat to rounding; a shrinking residual is then the decisive test.
      const bool flat = dual_t <= dual + 1e-14 * (1.0 + std::abs(dual)) && residual_t < residual;
      if (dual_t < dual || flat) {
        zeta = trial;
        g = std::move(gt);
        dual = std::min(dual, dual_t);
        residual = residual_t;
        rep.dual_values.push_back(dual);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw ConvergenceError("invert_macrostate: line search failed at residual " + std::to_string(residual));
    }
  }
  if (residual <= settings.tol) {
    rep.iterations = settings.max_iters;
    rep.residual = residual;
    return g;
  }
  throw ConvergenceError("invert_macrostate: max_iters exhausted at residual " + std::to_string(residual));
}

GibbsState invert_macrostate(const RelevantSet& set, const RealVector& targets,
                             const std::optional<MacrostateParams>& init, const InversionSettings& settings,
                             InversionReport* report) {
  return invert_macrostate(std::span<const HermitianOperator>(set.ops), targets, init, settings, report);
}

GibbsState project_macrostate(const DensityOperator& rho, std::span<const HermitianOperator> ops,
                              const std::optional<MacrostateParams>& init, const InversionSettings& settings,
                              InversionReport* report) {
  return invert_macrostate(ops, expectations(ops, rho), init, settings, report);
}

GibbsState project_macrostate(const DensityOperator& rho, const RelevantSet& set,
                              const std::optional<MacrostateParams>& init, const InversionSettings& settings,
                              InversionReport* report) {
  return project_macrostate(rho, std::span<const HermitianOperator>(set.ops), init, settings, report);
}

}  // namespace macrostate
