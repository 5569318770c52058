#include "macrostate/semigroup.hpp"

#include <algorithm>
#include <cmath>

namespace macrostate {

namespace {

double relative_spread(const std::vector<double>& v, std::size_t first, std::size_t last) {
  double lo = v[first], hi = v[first], scale = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    lo = std::min(lo, v[i]);
    hi = std::max(hi, v[i]);
    scale = std::max(scale, std::abs(v[i]));
  }
  return scale > 1e-14 ? (hi - lo) / scale : 0.0;
}

}  // namespace

double kubo_product(const HermitianOperator& a, const HermitianOperator& b, const GibbsState& g) {
  require_same_dim(a.dim(), g.dim(), "kubo_product");
  require_same_dim(b.dim(), g.dim(), "kubo_product");
  const ComplexMatrix ab = g.to_basis(a.matrix());
  const ComplexMatrix bb = g.to_basis(b.matrix());
  return (ab.transpose().cwiseProduct(bb).cwiseProduct(g.kernel().cast<Complex>())).sum().real();
}

OrthogonalDecomposition decompose(std::span<const HermitianOperator> observables, std::span<const std::string> labels,
                                  std::span<const HermitianOperator> conserved,
                                  std::span<const std::string> conserved_labels, const GibbsState& g) {
  if (labels.size() != observables.size() || conserved_labels.size() != conserved.size()) {
    throw InvalidArgument("decompose: label count mismatch");
  }
  OrthogonalDecomposition dec;
  std::vector<HermitianOperator> retained{HermitianOperator::identity(g.dim())};

  auto project_out = [&](HermitianOperator v) {
    // Two passes of modified Gram-Schmidt.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& e : dec.basis_parallel) v -= kubo_product(e, v, g) * e;
    }
    return v;
  };

  dec.basis_parallel.push_back(HermitianOperator::identity(g.dim()));
  dec.parallel_labels.push_back("identity");
  for (std::size_t c = 0; c < conserved.size(); ++c) {
    const double before = std::sqrt(std::max(0.0, kubo_product(conserved[c], conserved[c], g)));
    HermitianOperator v = project_out(conserved[c]);
    const double norm = std::sqrt(std::max(0.0, kubo_product(v, v, g)));
    if (norm < 1e-10 * std::max(1.0, before)) {
      dec.dropped.push_back(conserved_labels[c]);
      continue;
    }
    dec.basis_parallel.push_back((1.0 / norm) * v);
    dec.parallel_labels.push_back(conserved_labels[c]);
    retained.push_back(conserved[c]);
  }
  const Index r = static_cast<Index>(retained.size());
  dec.gram_parallel.resize(r, r);
  for (Index i = 0; i < r; ++i) {
    for (Index j = i; j < r; ++j) {
      dec.gram_parallel(i, j) = dec.gram_parallel(j, i) = kubo_product(retained[i], retained[j], g);
    }
  }

  for (std::size_t j = 0; j < observables.size(); ++j) {
    const HermitianOperator& a = observables[j];
    require_same_dim(a.dim(), g.dim(), "decompose");
    HermitianOperator par = HermitianOperator::zero(g.dim());
    HermitianOperator rest = a;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& e : dec.basis_parallel) {
        const double c = kubo_product(e, rest, g);
        par += c * e;
        rest -= c * e;
      }
    }
    dec.labels.push_back(labels[j]);
    dec.parallel.push_back(std::move(par));
    dec.orthogonal.push_back(std::move(rest));
  }
  return dec;
}

OrthogonalDecomposition decompose(const RelevantSet& relevant, const GibbsState& g) {
  std::vector<HermitianOperator> obs, cons;
  std::vector<std::string> obs_labels, cons_labels;
  for (std::size_t j = 0; j < relevant.size(); ++j) {
    if (relevant.conserved[j]) {
      cons.push_back(relevant.ops[j]);
      cons_labels.push_back(relevant.labels[j]);
    } else {
      obs.push_back(relevant.ops[j]);
      obs_labels.push_back(relevant.labels[j]);
    }
  }
  return decompose(obs, obs_labels, cons, cons_labels, g);
}

HermitianOperator coarse_grained_generator(const HermitianOperator& a_perp, const HermitianOperator& h, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("coarse_grained_generator: tau must be > 0");
  return (1.0 / tau) * (heisenberg_evolve(a_perp, h, tau) - a_perp);
}

ReducedStep reduced_dynamics_step(const OrthogonalDecomposition& dec, const RelevantSet& relevant, const GibbsState& g,
                                  const HermitianOperator& h, double tau, double dt,
                                  const InversionSettings& settings) {
  if (!(dt > 0.0) || !(tau > 0.0)) throw InvalidArgument("reduced_dynamics_step: dt and tau must be > 0");
  const auto driven = relevant.driven_indices();
  if (dec.orthogonal.size() != driven.size()) {
    throw InvalidArgument("reduced_dynamics_step: decomposition does not match the driven operators");
  }
  RealVector targets = g.expectations();
  const Spectrum sp(h);
  for (std::size_t i = 0; i < driven.size(); ++i) {
    const HermitianOperator gen = (1.0 / tau) * (sp.heisenberg(dec.orthogonal[i], tau) - dec.orthogonal[i]);
    targets(static_cast<Index>(driven[i])) += dt * expectation(gen, g.state());
  }
  GibbsState next = invert_macrostate(relevant, targets, g.params(), settings);
  return ReducedStep{std::move(next), std::move(targets)};
}

Trajectory reduced_trajectory(const RelevantSet& relevant, const GibbsState& g0, const HermitianOperator& h, double tau,
                              double dt, double t0, double t_end, const InversionSettings& settings) {
  const std::vector<double> times = uniform_grid(t0, t_end, dt);
  Trajectory traj;
  traj.labels = relevant.labels;
  traj.conserved = relevant.conserved;
  GibbsState g = g0;
  std::vector<RealVector> zetas;
  for (std::size_t n = 0; n < times.size(); ++n) {
    traj.times.push_back(times[n]);
    traj.zeta.push_back(g.params());
    traj.expectations.push_back(g.expectations());
    traj.entropy.push_back(entropy(g));
    zetas.push_back(g.params().zeta);
    if (n + 1 == times.size()) break;
    try {
      const OrthogonalDecomposition dec = decompose(relevant, g);
      g = reduced_dynamics_step(dec, relevant, g, h, tau, times[n + 1] - times[n], settings).state;
    } catch (const Error& e) {
      throw PipelineError(std::string("semigroup pipeline: ") + e.what(), times[n]);
    }
  }
  if (times.size() >= 3) {
    traj.zeta_dot = finite_difference_rates(times, zetas);
  } else {
    traj.zeta_dot.assign(times.size(), RealVector::Zero(static_cast<Index>(relevant.size())));
  }
  return traj;
}

TauIndependence tau_independence_diagnostic(const HermitianOperator& a_perp, const HermitianOperator& h,
                                            const GibbsState& g, const std::vector<double>& tau_grid,
                                            double threshold) {
  if (tau_grid.empty()) throw InvalidArgument("tau_independence_diagnostic: empty tau grid");
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    if (!(tau_grid[i] > 0.0) || (i > 0 && !(tau_grid[i] > tau_grid[i - 1]))) {
      throw InvalidArgument("tau_independence_diagnostic: tau grid must be positive and increasing");
    }
  }
  TauIndependence out;
  out.taus = tau_grid;
  const Spectrum sp(h);
  for (double tau : tau_grid) {
    const HermitianOperator gen = (1.0 / tau) * (sp.heisenberg(a_perp, tau) - a_perp);
    out.values.push_back(expectation(gen, g.state()));
  }
  out.spread = relative_spread(out.values, 0, out.values.size() - 1);
  std::size_t best = 0;
  for (std::size_t i = 0; i + 2 < out.values.size(); ++i) {
    std::size_t j = i;
    while (j + 1 < out.values.size() && relative_spread(out.values, i, j + 1) < threshold) ++j;
    if (j - i + 1 >= 3 && j - i + 1 > best) {
      best = j - i + 1;
      out.plateau = std::make_pair(i, j);
    }
  }
  return out;
}

}  // namespace macrostate
