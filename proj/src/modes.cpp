#include "macrostate/evolution.hpp"

#include <cmath>
#include <numbers>

namespace macrostate {

std::string to_string(ModeFamily family) {
  return family == ModeFamily::fourier ? "fourier" : "cosine";
}

ModeFamily mode_family_from_string(const std::string& s) {
  if (s == "fourier") return ModeFamily::fourier;
  if (s == "cosine") return ModeFamily::cosine;
  throw InvalidArgument("unknown mode basis '" + s + "'");
}

ModeBasis make_mode_basis(int num_sites, int n_max, ModeFamily family) {
  if (num_sites < 1) throw InvalidArgument("make_mode_basis: num_sites must be >= 1");
  const int L = num_sites;
  const double pi = std::numbers::pi;
  Eigen::MatrixXd all(L, L);
  std::vector<std::string> names;
  all.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(L)));
  names.push_back("n0");
  if (family == ModeFamily::fourier) {
    int col = 1;
    for (int k = 1; 2 * k < L; ++k) {
      for (int x = 0; x < L; ++x) {
        all(x, col) = std::sqrt(2.0 / L) * std::cos(2.0 * pi * k * x / L);
        all(x, col + 1) = std::sqrt(2.0 / L) * std::sin(2.0 * pi * k * x / L);
      }
      names.push_back("c" + std::to_string(k));
      names.push_back("s" + std::to_string(k));
      col += 2;
    }
    if (L % 2 == 0 && L > 1) {
      for (int x = 0; x < L; ++x) all(x, col) = (x % 2 == 0 ? 1.0 : -1.0) / std::sqrt(static_cast<double>(L));
      names.push_back("alt");
    }
  } else {
    for (int n = 1; n < L; ++n) {
      for (int x = 0; x < L; ++x) all(x, n) = std::sqrt(2.0 / L) * std::cos(pi * n * (x + 0.5) / L);
      names.push_back("k" + std::to_string(n));
    }
  }
  const int keep = (n_max <= 0 || n_max > L) ? L : n_max;
  ModeBasis basis;
  basis.functions = all.leftCols(keep);
  basis.names.assign(names.begin(), names.begin() + keep);
  return basis;
}

std::vector<HermitianOperator> mode_transform(std::span<const HermitianOperator> densities, const ModeBasis& basis) {
  if (static_cast<int>(densities.size()) != basis.num_sites()) {
    throw DimensionError("mode_transform: basis has " + std::to_string(basis.num_sites()) + " sites, lattice has " +
                         std::to_string(densities.size()));
  }
  std::vector<HermitianOperator> out;
  for (int n = 0; n < basis.n_max(); ++n) {
    HermitianOperator a = HermitianOperator::zero(densities.front().dim());
    for (int x = 0; x < basis.num_sites(); ++x) a += basis.functions(x, n) * densities[static_cast<std::size_t>(x)];
    out.push_back(std::move(a));
  }
  return out;
}

RelevantSet mode_relevant_set(const ObservableSet& obs, const ModeBasis& basis) {
  RelevantSet set;
  set.ops = mode_transform(obs.observables, basis);
  std::string base = obs.labels.empty() ? "A" : obs.labels.front();
  if (const auto cut = base.rfind('_'); cut != std::string::npos) base = base.substr(0, cut);
  const HermitianOperator& h = obs.conserved.at(1);
  for (int n = 0; n < basis.n_max(); ++n) {
    set.labels.push_back(base + ":" + basis.names[static_cast<std::size_t>(n)]);
    const auto& a = set.ops[static_cast<std::size_t>(n)];
    const double scale = h.frobenius_norm() * a.frobenius_norm();
    set.conserved.push_back(scale == 0.0 || commutator(h, a).norm() <= 1e-10 * scale);
  }
  append_independent(set, obs.conserved, obs.conserved_labels);
  return set;
}

}  // namespace macrostate
