#include "macrostate/model.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace macrostate {

namespace {

constexpr double kCommuteTol = 1e-10;

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

std::size_t checked_dimension(int local_dim, int num_sites, std::size_t cap) {
  if (num_sites < 1) throw InvalidArgument("build_model: num_sites must be >= 1");
  if (local_dim < 2) throw InvalidArgument("build_model: local_dim must be >= 2");
  std::size_t dim = 1;
  for (int i = 0; i < num_sites; ++i) {
    dim *= static_cast<std::size_t>(local_dim);
    if (dim > cap) {
      throw DimensionError("build_model: Hilbert dimension " + std::to_string(local_dim) + "^" +
                           std::to_string(num_sites) + " exceeds the cap of " + std::to_string(cap));
    }
  }
  return dim;
}

std::vector<std::pair<int, int>> chain_bonds(int n, bool periodic) {
  std::vector<std::pair<int, int>> bonds;
  if (periodic && n < 3) throw InvalidArgument("build_model: periodic chains need at least 3 sites");
  for (int i = 0; i + 1 < n; ++i) bonds.emplace_back(i, i + 1);
  if (periodic) bonds.emplace_back(n - 1, 0);
  return bonds;
}

std::string bond_label(const std::pair<int, int>& b) {
  return "J_" + std::to_string(b.first) + "_" + std::to_string(b.second);
}

void add_standard_conserved(ObservableSet& obs, const HermitianOperator& h, bool include_h2) {
  obs.conserved.insert(obs.conserved.begin(), {HermitianOperator::identity(h.dim()), h});
  obs.conserved_labels.insert(obs.conserved_labels.begin(), {"1", "H"});
  if (include_h2) {
    obs.conserved.push_back(HermitianOperator::symmetrized(h.matrix() * h.matrix()));
    obs.conserved_labels.emplace_back("H^2");
  }
}

Model build_xxz(const ModelSpec& spec) {
  const int n = spec.num_sites;
  const int ld = spec.local_dim;
  const auto s = spin_matrices(ld);
  const auto& c = spec.xxz;
  if (!c.site_fields.empty() && static_cast<int>(c.site_fields.size()) != n) {
    throw InvalidArgument("build_model: xxz site_fields must have one entry per site");
  }
  const auto bonds = chain_bonds(n, spec.periodic);
  const Index dim = static_cast<Index>(std::pow(ld, n));

  std::vector<std::array<ComplexMatrix, 3>> site_ops(n);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) site_ops[i][a] = embed_site(s[a], i, n, ld);
  }

  ObservableSet obs;
  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
  for (int i = 0; i < n; ++i) {
    const double f = c.field + (c.site_fields.empty() ? 0.0 : c.site_fields[i]);
    h += f * site_ops[i][2];
    obs.observables.push_back(HermitianOperator::symmetrized(site_ops[i][2]));
    obs.labels.push_back("Sz_" + std::to_string(i));
  }
  std::vector<ComplexMatrix> bond_terms;
  for (const auto& [l, r] : bonds) {
    ComplexMatrix hb = c.jxy * (site_ops[l][0] * site_ops[r][0] + site_ops[l][1] * site_ops[r][1]) +
                       c.jz * site_ops[l][2] * site_ops[r][2];
    h += hb;
    bond_terms.push_back(std::move(hb));
  }
  HermitianOperator ham = HermitianOperator::symmetrized(h);

  // Magnetization current across bond (l, r): i[h_b, Sz_r].
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    const auto hb = HermitianOperator::symmetrized(bond_terms[b]);
    obs.currents.push_back(i_commutator(hb, obs.observables[bonds[b].second]));
    obs.current_labels.push_back(bond_label(bonds[b]));
  }
  obs.bonds = bonds;

  HermitianOperator total = HermitianOperator::zero(dim);
  for (const auto& a : obs.observables) total += a;
  obs.conserved.push_back(total);
  obs.conserved_labels.emplace_back("Sz_total");
  add_standard_conserved(obs, ham, spec.include_h2);
  return Model{std::move(ham), std::move(obs)};
}

Model build_ising(const ModelSpec& spec) {
  if (spec.local_dim != 2) throw InvalidArgument("build_model: transverse_ising_chain requires local_dim = 2");
  const int n = spec.num_sites;
  const auto& c = spec.ising;
  const auto bonds = chain_bonds(n, spec.periodic);
  const Index dim = Index{1} << n;

  ComplexMatrix x(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  z << 1, 0, 0, -1;
  std::vector<ComplexMatrix> xs, zs;
  for (int i = 0; i < n; ++i) {
    xs.push_back(embed_site(x, i, n, 2));
    zs.push_back(embed_site(z, i, n, 2));
  }
  // Energy density: on-site terms plus half of each adjacent bond.
  std::vector<ComplexMatrix> e(n);
  for (int i = 0; i < n; ++i) e[i] = -c.transverse * xs[i] - c.longitudinal * zs[i];
  for (const auto& [l, r] : bonds) {
    const ComplexMatrix zz = -0.5 * c.j * zs[l] * zs[r];
    e[l] += zz;
    e[r] += zz;
  }
  ObservableSet obs;
  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
  for (int i = 0; i < n; ++i) {
    h += e[i];
    obs.observables.push_back(HermitianOperator::symmetrized(e[i]));
    obs.labels.push_back("e_" + std::to_string(i));
  }
  // Energy current across bond (l, r): i[e_l, e_r]; only neighbouring densities fail to commute.
  for (const auto& b : bonds) {
    obs.currents.push_back(i_commutator(obs.observables[b.first], obs.observables[b.second]));
    obs.current_labels.push_back(bond_label(b));
  }
  obs.bonds = bonds;
  HermitianOperator ham = HermitianOperator::symmetrized(h);
  // The total density is H itself.
  add_standard_conserved(obs, ham, spec.include_h2);
  return Model{std::move(ham), std::move(obs)};
}

Model build_custom(const ModelSpec& spec) {
  const auto& c = spec.custom;
  HermitianOperator ham(c.hamiltonian);
  if (static_cast<std::size_t>(ham.dim()) > spec.dimension_cap) {
    throw DimensionError("build_model: Hilbert dimension " + std::to_string(ham.dim()) + " exceeds the cap");
  }
  if (c.observables.empty()) throw InvalidArgument("build_model: custom_matrices needs at least one observable");
  ObservableSet obs;
  for (std::size_t i = 0; i < c.observables.size(); ++i) {
    obs.observables.emplace_back(c.observables[i]);
    require_same_dim(obs.observables.back().dim(), ham.dim(), "build_model(custom observable)");
    obs.labels.push_back("A_" + std::to_string(i));
  }
  const int n = static_cast<int>(obs.observables.size());
  if (!c.currents.empty()) {
    if (static_cast<int>(c.currents.size()) != n - 1) {
      throw InvalidArgument("build_model: custom_matrices needs num_observables - 1 currents (open chain)");
    }
    for (int i = 0; i + 1 < n; ++i) {
      obs.currents.emplace_back(c.currents[i]);
      require_same_dim(obs.currents.back().dim(), ham.dim(), "build_model(custom current)");
      obs.bonds.emplace_back(i, i + 1);
      obs.current_labels.push_back(bond_label(obs.bonds.back()));
    }
  }
  HermitianOperator total = HermitianOperator::zero(ham.dim());
  for (const auto& a : obs.observables) total += a;
  const double scale = ham.frobenius_norm() * total.frobenius_norm();
  if (commutator(ham, total).norm() <= kCommuteTol * scale) {
    obs.conserved.push_back(total);
    obs.conserved_labels.emplace_back("A_total");
  }
  for (std::size_t i = 0; i < c.conserved.size(); ++i) {
    obs.conserved.emplace_back(c.conserved[i]);
    obs.conserved_labels.push_back("C_" + std::to_string(i));
  }
  add_standard_conserved(obs, ham, spec.include_h2);
  if (max_commutator_defect(obs, ham) > kCommuteTol) {
    throw InvalidArgument("build_model: a custom conserved operator does not commute with H");
  }
  return Model{std::move(ham), std::move(obs)};
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::xxz_chain: return "xxz_chain";
    case ModelKind::transverse_ising_chain: return "transverse_ising_chain";
    case ModelKind::custom_matrices: return "custom_matrices";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "xxz_chain") return ModelKind::xxz_chain;
  if (s == "transverse_ising_chain") return ModelKind::transverse_ising_chain;
  if (s == "custom_matrices") return ModelKind::custom_matrices;
  throw InvalidArgument("unknown model kind '" + s + "'");
}

std::vector<ComplexMatrix> spin_matrices(int local_dim) {
  if (local_dim < 2) throw InvalidArgument("spin_matrices: local_dim must be >= 2");
  const double s = 0.5 * (local_dim - 1);
  ComplexMatrix sp = ComplexMatrix::Zero(local_dim, local_dim);
  ComplexMatrix sz = ComplexMatrix::Zero(local_dim, local_dim);
  for (int k = 0; k < local_dim; ++k) {
    const double m = s - k;
    sz(k, k) = m;
    if (k > 0) sp(k - 1, k) = std::sqrt(s * (s + 1) - m * (m + 1));
  }
  const ComplexMatrix sm = sp.adjoint();
  const ComplexMatrix sx = 0.5 * (sp + sm);
  const ComplexMatrix sy = Complex(0.0, -0.5) * (sp - sm);
  return {sx, sy, sz};
}

ComplexMatrix embed_site(const ComplexMatrix& op, int site, int num_sites, int local_dim) {
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  const ComplexMatrix id = ComplexMatrix::Identity(local_dim, local_dim);
  for (int i = 0; i < num_sites; ++i) out = kron(out, i == site ? op : id);
  return out;
}

Model build_model(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::xxz_chain:
      checked_dimension(spec.local_dim, spec.num_sites, spec.dimension_cap);
      return build_xxz(spec);
    case ModelKind::transverse_ising_chain:
      checked_dimension(spec.local_dim, spec.num_sites, spec.dimension_cap);
      return build_ising(spec);
    case ModelKind::custom_matrices:
      return build_custom(spec);
  }
  throw InvalidArgument("build_model: unknown model kind");
}

std::vector<double> continuity_residual(const ObservableSet& obs, const HermitianOperator& h) {
  std::vector<double> out;
  out.reserve(obs.observables.size());
  for (std::size_t i = 0; i < obs.observables.size(); ++i) {
    ComplexMatrix r = heisenberg_dot(obs.observables[i], h).matrix();
    for (std::size_t b = 0; b < obs.currents.size(); ++b) {
      if (obs.bonds[b].first == static_cast<int>(i)) r += obs.currents[b].matrix();
      if (obs.bonds[b].second == static_cast<int>(i)) r -= obs.currents[b].matrix();
    }
    out.push_back(r.norm());
  }
  return out;
}

double max_commutator_defect(const ObservableSet& obs, const HermitianOperator& h) {
  double worst = 0.0;
  for (const auto& c : obs.conserved) {
    const double scale = h.frobenius_norm() * c.frobenius_norm();
    if (scale == 0.0) continue;
    worst = std::max(worst, commutator(h, c).norm() / scale);
  }
  return worst;
}

double gram_condition_number(std::span<const HermitianOperator> ops, bool include_identity) {
  std::vector<ComplexMatrix> v;
  if (!ops.empty() && include_identity) v.push_back(ComplexMatrix::Identity(ops[0].dim(), ops[0].dim()));
  for (const auto& o : ops) v.push_back(o.matrix());
  const Index k = static_cast<Index>(v.size());
  if (k == 0) return 1.0;
  for (auto& m : v) {
    const double n = m.norm();
    if (n == 0.0) return std::numeric_limits<double>::infinity();
    m /= n;
  }
  Eigen::MatrixXd g(k, k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = i; j < k; ++j) g(i, j) = g(j, i) = trace_product(v[i], v[j]);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return es.eigenvalues().maxCoeff() / lo;
}

std::vector<std::size_t> RelevantSet::conserved_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (conserved[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> RelevantSet::driven_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (!conserved[i]) out.push_back(i);
  }
  return out;
}

void append_independent(RelevantSet& set, std::span<const HermitianOperator> candidates,
                        std::span<const std::string> labels) {
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& cand = candidates[c];
    const Index d = cand.dim();
    const double cn = cand.frobenius_norm();
    if (cn == 0.0) continue;
    // Least-squares distance of the candidate from span{1, set.ops} in the Frobenius metric.
    Eigen::MatrixXcd basis(d * d, static_cast<Index>(set.ops.size()) + 1);
    basis.col(0) = ComplexMatrix::Identity(d, d).reshaped();
    for (std::size_t i = 0; i < set.ops.size(); ++i) basis.col(static_cast<Index>(i) + 1) = set.ops[i].matrix().reshaped();
    const Eigen::VectorXcd target = cand.matrix().reshaped();
    const Eigen::VectorXcd coef = basis.colPivHouseholderQr().solve(target);
    const double residual = (basis * coef - target).norm() / cn;
    if (residual > 1e-8) {
      set.ops.push_back(cand);
      set.labels.push_back(labels[c]);
      set.conserved.push_back(true);
    }
  }
}

RelevantSet relevant_set(const ObservableSet& obs) {
  RelevantSet set;
  set.ops = obs.observables;
  set.labels = obs.labels;
  // obs.conserved = {1, H, ...}
  const HermitianOperator& h = obs.conserved.at(1);
  for (const auto& a : obs.observables) {
    const double scale = h.frobenius_norm() * a.frobenius_norm();
    set.conserved.push_back(scale == 0.0 || commutator(h, a).norm() <= kCommuteTol * scale);
  }
  append_independent(set, obs.conserved, obs.conserved_labels);
  return set;
}

RelevantSet conserved_set(const ObservableSet& obs) {
  RelevantSet set;
  append_independent(set, obs.conserved, obs.conserved_labels);
  return set;
}

}  // namespace macrostate
