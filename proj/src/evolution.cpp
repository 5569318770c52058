#include "macrostate/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace macrostate {

namespace {

constexpr Complex kI{0.0, 1.0};

// Operators of the relevant set and their time derivatives in the eigenbasis of H.
struct EigenOperators {
  Spectrum sp;
  std::vector<ComplexMatrix> a;
  std::vector<ComplexMatrix> adot;
  Eigen::MatrixXd omega;  // E_m - E_n

  EigenOperators(const RelevantSet& relevant, const ObservableSet& obs, const HermitianOperator& h) : sp(h) {
    const auto derivs = relevant_time_derivatives(relevant, obs, h);
    for (std::size_t j = 0; j < relevant.size(); ++j) {
      require_same_dim(relevant.ops[j].dim(), h.dim(), "evolution");
      a.push_back(sp.to_eigenbasis(relevant.ops[j].matrix()));
      adot.push_back(sp.to_eigenbasis(derivs[j].matrix()));
    }
    const RealVector& e = sp.values();
    omega = e.replicate(1, e.size()) - e.transpose().replicate(e.size(), 1);
  }

  ComplexMatrix source(const RealVector& zeta, const RealVector& zeta_dot) const {
    const Index d = sp.dim();
    ComplexMatrix s = ComplexMatrix::Zero(d, d);
    for (std::size_t l = 0; l < a.size(); ++l) {
      s += zeta_dot(static_cast<Index>(l)) * a[l] + zeta(static_cast<Index>(l)) * adot[l];
    }
    return s;
  }

  ComplexMatrix rotate(const ComplexMatrix& b) const {
    return b.cwiseProduct((-kI * omega.cast<Complex>()).eval());
  }
};

// Kubo-form data of one Gibbs state, with operators given in the eigenbasis of H.
struct KuboFrame {
  const GibbsState& g;
  ComplexMatrix to_g;  // H-eigenbasis -> Gibbs basis

  KuboFrame(const GibbsState& gs, const Spectrum& sp) : g(gs), to_g(sp.vectors().adjoint() * gs.basis()) {}

  ComplexMatrix in_g(const ComplexMatrix& m) const { return to_g.adjoint() * m * to_g; }

  double mean(const ComplexMatrix& mg) const { return mg.diagonal().real().dot(g.probabilities()); }

  double covariance(const ComplexMatrix& xg, const ComplexMatrix& yg) const {
    const double pair = (xg.transpose().cwiseProduct(yg).cwiseProduct(g.kernel().cast<Complex>())).sum().real();
    return pair - mean(xg) * mean(yg);
  }
};

// Driven-row right side Tr(adot_j w) + <adot_j, B>; zero on conserved rows.
RealVector drive(const KuboFrame& f, const EigenOperators& ops, const RelevantSet& relevant, const ComplexMatrix& b) {
  RealVector r = RealVector::Zero(static_cast<Index>(relevant.size()));
  const ComplexMatrix bg = f.in_g(b);
  for (std::size_t j = 0; j < relevant.size(); ++j) {
    if (relevant.conserved[j]) continue;
    const ComplexMatrix xg = f.in_g(ops.adot[j]);
    r(static_cast<Index>(j)) = f.mean(xg) + f.covariance(xg, bg);
  }
  return r;
}

double min_driven_eigenvalue(const Eigen::MatrixXd& k, const RelevantSet& relevant) {
  const auto driven = relevant.driven_indices();
  if (driven.empty()) return std::numeric_limits<double>::infinity();
  Eigen::MatrixXd sub(driven.size(), driven.size());
  for (std::size_t i = 0; i < driven.size(); ++i) {
    for (std::size_t j = 0; j < driven.size(); ++j) sub(i, j) = k(driven[i], driven[j]);
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sub, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

RealVector solve_covariance(const Eigen::MatrixXd& k, const RealVector& rhs) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e14) {
    throw NumericalError("zeta_dot_solve: Kubo covariance is singular (degenerate macrostate)");
  }
  return k.ldlt().solve(rhs);
}

std::size_t grid_index(const std::vector<double>& times, double t, const char* where) {
  const double step = times.size() > 1 ? times[1] - times[0] : 1.0;
  const double slack = 1e-9 * std::max(1.0, std::abs(step));
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::abs(times[k] - t) <= slack) return k;
  }
  throw InvalidArgument(std::string(where) + ": time " + std::to_string(t) + " is not on the trajectory grid");
}

int lag_steps(double tau, double dt) { return std::max(1, static_cast<int>(std::lround(tau / dt))); }

// History operator at t0, eigenbasis of H.
ComplexMatrix initial_history_operator(const InitialHistory& init, const PreparationTerms* prep, const Spectrum& sp,
                                       const MemorySettings& mem) {
  const Index d = sp.dim();
  ComplexMatrix b = ComplexMatrix::Zero(d, d);
  if (prep) {
    if (mem.truncate_history) {
      b += prep->history(init.t0, init.t0 - mem.tau);
    } else {
      b += prep->history(init.t0, prep->schedule().T) + prep->boundary(init.t0);
    }
  }
  if (init.residual && !mem.truncate_history) b += sp.to_eigenbasis(init.residual->matrix());
  return b;
}

// Cubic Lagrange interpolation of stored samples at time s, using nodes no later than `last`.
ComplexMatrix interpolate(const std::vector<double>& times, const std::vector<ComplexMatrix>& values, std::size_t last,
                          double s) {
  if (last == 0) return values[0];
  const double h = times[1] - times[0];
  const auto below = static_cast<std::ptrdiff_t>(std::floor((s - times[0]) / h + 1e-9));
  std::ptrdiff_t lo = std::clamp<std::ptrdiff_t>(below - 1, 0, static_cast<std::ptrdiff_t>(last));
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(lo + 3, static_cast<std::ptrdiff_t>(last));
  lo = std::max<std::ptrdiff_t>(0, hi - 3);
  ComplexMatrix out = ComplexMatrix::Zero(values[0].rows(), values[0].cols());
  for (std::ptrdiff_t i = lo; i <= hi; ++i) {
    double w = 1.0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      if (j != i) w *= (s - times[j]) / (times[i] - times[j]);
    }
    out += w * values[i];
  }
  return out;
}

}  // namespace

void MemorySettings::validate() const {
  if (!(tau > 0.0)) throw InvalidArgument("MemorySettings: tau must be > 0");
  if (!(dt > 0.0) || dt > tau * (1.0 + 1e-12)) throw InvalidArgument("MemorySettings: need 0 < dt <= tau");
  if (order != 1) throw InvalidArgument("MemorySettings: only cumulant order 1 is implemented");
  if (!(step_bound > 0.0)) throw InvalidArgument("MemorySettings: step_bound must be > 0");
}

std::vector<double> uniform_grid(double t0, double t_end, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("uniform_grid: dt must be > 0");
  if (!(t_end > t0)) throw InvalidArgument("uniform_grid: t_end must exceed t0");
  const long n = std::max(1L, std::lround((t_end - t0) / dt));
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(n) + 1);
  for (long k = 0; k <= n; ++k) times.push_back(t0 + static_cast<double>(k) * dt);
  return times;
}

Trajectory exact_macrostate_trajectory(const DensityOperator& rho0, const RelevantSet& relevant,
                                       const HermitianOperator& h, const std::vector<double>& times,
                                       const InversionSettings& settings) {
  if (times.empty()) throw InvalidArgument("exact_macrostate_trajectory: empty time grid");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) throw InvalidArgument("exact_macrostate_trajectory: times must increase");
  }
  require_same_dim(rho0.dim(), h.dim(), "exact_macrostate_trajectory");
  const Spectrum sp(h);
  Trajectory traj;
  traj.labels = relevant.labels;
  traj.conserved = relevant.conserved;
  traj.min_driven_kubo_eigenvalue = std::numeric_limits<double>::infinity();
  std::optional<MacrostateParams> warm;
  std::vector<RealVector> zetas;
  for (double t : times) {
    try {
      const DensityOperator rho = sp.evolve(rho0, t - times.front());
      GibbsState g = project_macrostate(rho, relevant, warm, settings);
      warm = g.params();
      traj.times.push_back(t);
      traj.zeta.push_back(g.params());
      traj.expectations.push_back(g.expectations());
      traj.entropy.push_back(entropy(g));
      zetas.push_back(g.params().zeta);
      traj.min_driven_kubo_eigenvalue =
          std::min(traj.min_driven_kubo_eigenvalue, min_driven_eigenvalue(kubo_covariance(relevant.ops, g), relevant));
    } catch (const PipelineError&) {
      throw;
    } catch (const Error& e) {
      throw PipelineError(std::string("exact pipeline: ") + e.what(), t);
    }
  }
  if (times.size() >= 3) {
    traj.zeta_dot = finite_difference_rates(times, zetas);
  } else {
    traj.zeta_dot.assign(times.size(), RealVector::Zero(static_cast<Index>(relevant.size())));
  }
  return traj;
}

HermitianOperator history_residual(const DensityOperator& rho0, const GibbsState& w) {
  require_same_dim(rho0.dim(), w.dim(), "history_residual");
  const Spectrum sp(rho0.op());
  if (!(sp.values().minCoeff() > 0.0)) {
    throw InvalidArgument("history_residual: initial state is not of full rank, its logarithm does not exist");
  }
  const ComplexMatrix log_rho = sp.from_eigenbasis(sp.values().array().log().matrix().cast<Complex>().asDiagonal());
  const ComplexMatrix log_w = w.from_basis(w.log_weights().cast<Complex>().asDiagonal());
  return HermitianOperator::symmetrized(log_rho - log_w);
}

HermitianOperator memory_kernel_term(double t, double t_prime, const InitialHistory& init, const Trajectory& traj,
                                     const RelevantSet& relevant, const ObservableSet& obs,
                                     const HermitianOperator& h) {
  const double lower = init.schedule ? init.schedule->T : init.t0;
  if (t_prime < lower || t_prime > t) {
    throw InvalidArgument("memory_kernel_term: t_prime outside [T, t]");
  }
  const Spectrum sp(h);
  if (t_prime < init.t0) {
    if (!init.schedule) return HermitianOperator::zero(h.dim());
    const PreparationTerms prep(*init.schedule, obs, relevant, sp);
    return HermitianOperator::symmetrized(
        sp.from_eigenbasis(prep.source(t_prime).cwiseProduct(sp.phases(-(t - t_prime)))));
  }
  const std::size_t k = grid_index(traj.times, t_prime, "memory_kernel_term");
  if (k >= traj.zeta_dot.size()) throw InvalidArgument("memory_kernel_term: trajectory has no rate at t_prime");
  const EigenOperators ops(relevant, obs, h);
  const ComplexMatrix s = ops.source(traj.zeta[k].zeta, traj.zeta_dot[k]);
  return HermitianOperator::symmetrized(sp.from_eigenbasis(s.cwiseProduct(sp.phases(-(t - t_prime)))));
}

RealVector zeta_dot_solve(double t, const Trajectory& traj, const InitialHistory& init, const RelevantSet& relevant,
                          const ObservableSet& obs, const HermitianOperator& h, const MemorySettings& mem) {
  mem.validate();
  if (traj.times.empty() || std::abs(traj.times.front() - init.t0) > 1e-9 * std::max(1.0, std::abs(init.t0))) {
    throw InvalidArgument("zeta_dot_solve: trajectory must start at t0");
  }
  const std::size_t k = grid_index(traj.times, t, "zeta_dot_solve");
  if (k > 0 && traj.zeta_dot.size() < k) throw InvalidArgument("zeta_dot_solve: missing history rates");
  const EigenOperators ops(relevant, obs, h);
  const Spectrum& sp = ops.sp;
  std::optional<PreparationTerms> prep;
  if (init.schedule) prep.emplace(*init.schedule, obs, relevant, sp);

  const double dt = traj.step();
  const Index d = sp.dim();
  ComplexMatrix b = ComplexMatrix::Zero(d, d);
  std::size_t first = 0;
  if (mem.truncate_history) {
    const int lag = lag_steps(mem.tau, dt > 0.0 ? dt : mem.tau);
    if (prep) b += prep->history(t, t - lag * (dt > 0.0 ? dt : mem.tau));
    first = k > static_cast<std::size_t>(lag) ? k - static_cast<std::size_t>(lag) : 0;
  } else {
    b += initial_history_operator(init, prep ? &*prep : nullptr, sp, mem).cwiseProduct(sp.phases(-(t - init.t0)));
  }
  // Trapezoid over the stored dynamics branch; the endpoint rate is the unknown.
  for (std::size_t i = first; i < k; ++i) {
    const double w = (i == first) ? 0.5 * dt : dt;
    b += w * ops.source(traj.zeta[i].zeta, traj.zeta_dot[i]).cwiseProduct(sp.phases(-(t - traj.times[i])));
  }
  const double w_end = k > first ? 0.5 * dt : 0.0;
  const RealVector& zeta = traj.zeta[k].zeta;
  b += w_end * ops.source(zeta, RealVector::Zero(zeta.size()));

  const GibbsState g(relevant.ops, zeta);
  const KuboFrame f(g, sp);
  const RealVector r0 = drive(f, ops, relevant, b);
  Eigen::MatrixXd system = kubo_covariance(relevant.ops, g);
  if (w_end > 0.0) {
    std::vector<ComplexMatrix> a_g;
    for (const auto& a : ops.a) a_g.push_back(f.in_g(a));
    for (std::size_t j = 0; j < relevant.size(); ++j) {
      if (relevant.conserved[j]) continue;
      const ComplexMatrix xg = f.in_g(ops.adot[j]);
      for (std::size_t l = 0; l < relevant.size(); ++l) {
        system(static_cast<Index>(j), static_cast<Index>(l)) += w_end * f.covariance(xg, a_g[l]);
      }
    }
    const RealVector out = system.partialPivLu().solve(-r0);
    if (!out.allFinite()) throw NumericalError("zeta_dot_solve: singular system");
    return out;
  }
  return solve_covariance(system, -r0);
}

Trajectory integrate_zeta(const MacrostateParams& zeta_init, const InitialHistory& init, const RelevantSet& relevant,
                          const ObservableSet& obs, const HermitianOperator& h, const MemorySettings& mem,
                          double t_end) {
  mem.validate();
  const Index k_ops = static_cast<Index>(relevant.size());
  if (zeta_init.zeta.size() != k_ops) throw DimensionError("integrate_zeta: zeta size does not match relevant set");
  if (!zeta_init.finite()) throw InvalidArgument("integrate_zeta: non-finite initial multipliers");
  if (init.schedule && std::abs(init.schedule->t0 - init.t0) > 1e-12 * std::max(1.0, std::abs(init.t0))) {
    throw InvalidArgument("integrate_zeta: schedule t0 differs from the initial time");
  }
  const EigenOperators ops(relevant, obs, h);
  const Spectrum& sp = ops.sp;
  std::optional<PreparationTerms> prep;
  if (init.schedule) prep.emplace(*init.schedule, obs, relevant, sp);
  const double lower = init.schedule ? init.schedule->T : init.t0;

  const std::vector<double> times = uniform_grid(init.t0, t_end, mem.dt);
  const double dt = times[1] - times[0];
  const double tau = lag_steps(mem.tau, dt) * dt;

  Trajectory traj;
  traj.labels = relevant.labels;
  traj.conserved = relevant.conserved;
  traj.min_driven_kubo_eigenvalue = std::numeric_limits<double>::infinity();
  std::vector<ComplexMatrix> sources;  // S(t_n), eigenbasis

  ComplexMatrix b = initial_history_operator(init, prep ? &*prep : nullptr, sp, mem);
  if (b.cwiseAbs().maxCoeff() > 0.0) traj.initial_history = HermitianOperator::symmetrized(sp.from_eigenbasis(b));
  RealVector zeta = zeta_init.zeta;

  struct Rate {
    RealVector zeta_dot;
    ComplexMatrix b_dot;
    ComplexMatrix source;
  };
  // `latest` is the index of the newest stored source, used for the outflow term under truncation.
  // The first stage of a step stores its source before the outflow lookup, which may need it.
  auto rate = [&](double t, const RealVector& z, const ComplexMatrix& hist, std::size_t latest,
                  const GibbsState& g, bool store) -> Rate {
    const KuboFrame f(g, sp);
    const Eigen::MatrixXd k = kubo_covariance(relevant.ops, g);
    const RealVector zd = solve_covariance(k, -drive(f, ops, relevant, hist));
    Rate out{zd, ops.rotate(hist), ops.source(z, zd)};
    out.b_dot += out.source;
    if (store) sources.push_back(out.source);
    if (mem.truncate_history) {
      const double s = t - tau;
      if (s >= init.t0 - 1e-12 * std::max(1.0, std::abs(init.t0))) {
        out.b_dot -= interpolate(times, sources, latest, s).cwiseProduct(sp.phases(-tau));
      } else if (prep && s >= lower) {
        out.b_dot -= prep->source(s).cwiseProduct(sp.phases(-tau));
      }
    }
    return out;
  };

  auto record = [&](std::size_t n, const GibbsState& g, const Rate& r) {
    traj.times.push_back(times[n]);
    traj.zeta.push_back(g.params());
    traj.expectations.push_back(g.expectations());
    traj.entropy.push_back(entropy(g));
    traj.zeta_dot.push_back(r.zeta_dot);
    traj.min_driven_kubo_eigenvalue =
        std::min(traj.min_driven_kubo_eigenvalue, min_driven_eigenvalue(kubo_covariance(relevant.ops, g), relevant));
  };

  for (std::size_t n = 0; n < times.size(); ++n) {
    const double t = times[n];
    try {
      const GibbsState g(relevant.ops, zeta);
      const Rate k1 = rate(t, zeta, b, n, g, true);
      record(n, g, k1);
      if (n + 1 == times.size()) break;
      if (k1.zeta_dot.cwiseAbs().maxCoeff() * dt > mem.step_bound) {
        throw PipelineError("memory pipeline: step rejected, |zeta_dot| dt = " +
                                std::to_string(k1.zeta_dot.cwiseAbs().maxCoeff() * dt) + " exceeds the bound",
                            t);
      }
      const RealVector z2 = zeta + 0.5 * dt * k1.zeta_dot;
      const ComplexMatrix b2 = b + 0.5 * dt * k1.b_dot;
      const Rate k2 = rate(t + 0.5 * dt, z2, b2, n, GibbsState(relevant.ops, z2), false);
      const RealVector z3 = zeta + 0.5 * dt * k2.zeta_dot;
      const ComplexMatrix b3 = b + 0.5 * dt * k2.b_dot;
      const Rate k3 = rate(t + 0.5 * dt, z3, b3, n, GibbsState(relevant.ops, z3), false);
      const RealVector z4 = zeta + dt * k3.zeta_dot;
      const ComplexMatrix b4 = b + dt * k3.b_dot;
      const Rate k4 = rate(t + dt, z4, b4, n, GibbsState(relevant.ops, z4), false);
      zeta += dt / 6.0 * (k1.zeta_dot + 2.0 * k2.zeta_dot + 2.0 * k3.zeta_dot + k4.zeta_dot);
      b += dt / 6.0 * (k1.b_dot + 2.0 * k2.b_dot + 2.0 * k3.b_dot + k4.b_dot);
      b = 0.5 * (b + b.adjoint()).eval();
      if (!zeta.allFinite()) throw NumericalError("memory pipeline: multipliers became non-finite");
    } catch (const PipelineError&) {
      throw;
    } catch (const Error& e) {
      throw PipelineError(std::string("memory pipeline: ") + e.what(), t);
    }
  }
  return traj;
}

EntropyReport entropy_report(const Trajectory& traj, double tau, const RelevantSet& relevant,
                             const InversionSettings& settings) {
  if (traj.size() < 2) throw InvalidArgument("entropy_report: trajectory too short");
  if (!(tau > 0.0)) throw InvalidArgument("entropy_report: tau must be > 0");
  EntropyReport rep;
  const double dt = traj.step();
  rep.lag_steps = lag_steps(tau, dt);
  rep.tau = rep.lag_steps * dt;
  const std::size_t lag = static_cast<std::size_t>(rep.lag_steps);
  if (traj.size() - 1 < 2 * lag) throw InvalidArgument("entropy_report: trajectory must cover at least 2 tau");
  for (std::size_t k = lag; k < traj.size(); ++k) {
    const double step = traj.entropy[k] - traj.entropy[k - lag];
    rep.times.push_back(traj.times[k]);
    rep.steps.push_back(step);
    if (step < -1e-8) ++rep.negative_steps;
  }
  rep.first_step = rep.steps.front();

  std::vector<HermitianOperator> cons;
  std::vector<double> targets;
  for (std::size_t j : relevant.conserved_indices()) {
    cons.push_back(relevant.ops[j]);
    targets.push_back(traj.expectations.front()(static_cast<Index>(j)));
  }
  if (cons.empty()) {
    rep.equilibrium_entropy = std::log(static_cast<double>(relevant.dim()));
  } else {
    const GibbsState eq = invert_macrostate(cons, Eigen::Map<const RealVector>(targets.data(), static_cast<Index>(targets.size())),
                                            std::nullopt, settings);
    rep.equilibrium_entropy = entropy(eq);
  }
  rep.min_equilibrium_gap = std::numeric_limits<double>::infinity();
  for (double s : traj.entropy) {
    rep.equilibrium_gap.push_back(rep.equilibrium_entropy - s);
    rep.min_equilibrium_gap = std::min(rep.min_equilibrium_gap, rep.equilibrium_gap.back());
  }
  return rep;
}

bool TauEstimate::certifies(double tau) const {
  if (!tau_est || times.empty() || tau > times.back()) return false;
  return !recurrence || tau < *recurrence;
}

GibbsState equilibrium_state(const DensityOperator& rho, const RelevantSet& relevant,
                             const InversionSettings& settings) {
  std::vector<HermitianOperator> cons;
  for (std::size_t j : relevant.conserved_indices()) cons.push_back(relevant.ops[j]);
  if (cons.empty()) {
    const std::vector<HermitianOperator> none{HermitianOperator::zero(rho.dim())};
    return GibbsState(none, RealVector::Zero(1));
  }
  return project_macrostate(rho, cons, std::nullopt, settings);
}

TauEstimate estimate_tau(const RelevantSet& relevant, const HermitianOperator& h, const GibbsState& equilibrium,
                         double t_max, double dt, double recurrence_threshold) {
  if (!(dt > 0.0) || !(t_max > 0.0)) throw InvalidArgument("estimate_tau: need t_max > 0 and dt > 0");
  TauEstimate est;
  const auto driven = relevant.driven_indices();
  if (driven.empty()) {
    est.no_driven = true;
    return est;
  }
  std::vector<HermitianOperator> cons;
  for (std::size_t j : relevant.conserved_indices()) cons.push_back(relevant.ops[j]);
  Eigen::MatrixXd gram;
  if (!cons.empty()) gram = kubo_covariance(cons, equilibrium);

  const Spectrum sp(h);
  const ComplexMatrix w_eb = sp.to_eigenbasis(equilibrium.state().matrix());
  const long steps = std::lround(t_max / dt);
  for (long s = 0; s <= steps; ++s) est.times.push_back(static_cast<double>(s) * dt);

  for (std::size_t j : driven) {
    HermitianOperator a = relevant.ops[j];
    if (!cons.empty()) {
      RealVector rhs(static_cast<Index>(cons.size()));
      for (std::size_t l = 0; l < cons.size(); ++l) rhs(static_cast<Index>(l)) = kubo_inner(cons[l], a, equilibrium);
      const RealVector c = gram.completeOrthogonalDecomposition().solve(rhs);
      for (std::size_t l = 0; l < cons.size(); ++l) a -= c(static_cast<Index>(l)) * cons[l];
    }
    const ComplexMatrix a_eb = sp.to_eigenbasis(a.matrix());
    const ComplexMatrix phi_t = sp.to_eigenbasis(equilibrium.kubo_transform(a).matrix()).transpose();
    const double mean = (w_eb.transpose().cwiseProduct(a_eb)).sum().real();
    auto corr = [&](double s) {
      const ComplexMatrix lagged = a_eb.cwiseProduct(sp.phases(-s));
      const double lagged_mean = (w_eb.transpose().cwiseProduct(lagged)).sum().real();
      return phi_t.cwiseProduct(lagged).sum().real() - mean * lagged_mean;
    };
    const double c0 = corr(0.0);
    std::vector<double> series;
    std::optional<double> crossing, recurrence;
    for (double s : est.times) {
      const double c = c0 > 1e-14 ? corr(s) / c0 : 1.0;
      series.push_back(c);
      if (!crossing && c < std::exp(-1.0)) crossing = s;
      if (crossing && !recurrence && s > *crossing && std::abs(c) > recurrence_threshold) recurrence = s;
    }
    est.labels.push_back(relevant.labels[j]);
    est.correlations.push_back(std::move(series));
    est.crossings.push_back(crossing);
    est.recurrences.push_back(recurrence);
    if (crossing) est.tau_est = std::max(est.tau_est.value_or(0.0), *crossing);
    if (recurrence) est.recurrence = std::min(est.recurrence.value_or(*recurrence), *recurrence);
  }
  return est;
}

}  // namespace macrostate
