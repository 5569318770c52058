#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "macrostate/operators.hpp"

namespace macrostate {

enum class ModelKind { xxz_chain, transverse_ising_chain, custom_matrices };

/// H = sum_bonds [jxy (SxSx + SySy) + jz SzSz] + sum_i (field + site_fields[i]) Sz_i.
struct XxzCouplings {
  double jxy = 1.0;
  double jz = 1.0;
  double field = 0.0;
  std::vector<double> site_fields;  ///< optional, one entry per site
};

/// H = -j sum_bonds Z Z - transverse sum_i X_i - longitudinal sum_i Z_i (Pauli matrices).
struct IsingCouplings {
  double j = 1.0;
  double transverse = 1.0;
  double longitudinal = 0.0;
};

/// Matrices supplied directly. Currents follow the open-chain convention:
/// currents[i] sits on the bond between observables[i] and observables[i + 1].
struct CustomMatrices {
  ComplexMatrix hamiltonian;
  std::vector<ComplexMatrix> observables;
  std::vector<ComplexMatrix> currents;
  std::vector<ComplexMatrix> conserved;  ///< extra constants of motion besides 1 and H
};

struct ModelSpec {
  ModelKind kind = ModelKind::xxz_chain;
  int num_sites = 2;
  int local_dim = 2;
  bool periodic = false;
  bool include_h2 = false;  ///< add H^2 to the constants of motion (energy-dispersion constraint)
  std::size_t dimension_cap = 4096;
  XxzCouplings xxz;
  IsingCouplings ising;
  CustomMatrices custom;
};

/// Local densities of one conserved quantity, their bond currents, and the constants of motion.
struct ObservableSet {
  std::vector<HermitianOperator> observables;
  std::vector<std::string> labels;
  std::vector<HermitianOperator> currents;
  std::vector<std::string> current_labels;
  /// Site pair (left, right) of each current; current k flows from left to right.
  std::vector<std::pair<int, int>> bonds;
  std::vector<HermitianOperator> conserved;
  std::vector<std::string> conserved_labels;

  Index dim() const { return observables.empty() ? conserved.front().dim() : observables.front().dim(); }
  int num_sites() const { return static_cast<int>(observables.size()); }
};

struct Model {
  HermitianOperator hamiltonian;
  ObservableSet obs;
};

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

/// Throws DimensionError above the cap, InvalidArgument on malformed input.
Model build_model(const ModelSpec& spec);

/// Spin-S matrices for local dimension 2S + 1: {Sx, Sy, Sz}.
std::vector<ComplexMatrix> spin_matrices(int local_dim);
/// op acting on `site` of an n-site chain, identity elsewhere.
ComplexMatrix embed_site(const ComplexMatrix& op, int site, int num_sites, int local_dim);

/// Per-site Frobenius norm of i[H, A_j] + (J_j - J_{j-1}).
std::vector<double> continuity_residual(const ObservableSet& obs, const HermitianOperator& h);

/// Max over conserved C of ||[H, C]|| / (||H|| ||C||).
double max_commutator_defect(const ObservableSet& obs, const HermitianOperator& h);

/// Condition number of the Frobenius Gram matrix of the given operators (after normalization).
double gram_condition_number(std::span<const HermitianOperator> ops, bool include_identity);

/// Ordered operator set whose Lagrange multipliers form zeta. The identity is never part of it;
/// normalization is carried by zeta_0.
struct RelevantSet {
  std::vector<HermitianOperator> ops;
  std::vector<std::string> labels;
  std::vector<bool> conserved;  ///< commutes with H (constraint rows)

  std::size_t size() const { return ops.size(); }
  Index dim() const { return ops.front().dim(); }
  std::vector<std::size_t> conserved_indices() const;
  std::vector<std::size_t> driven_indices() const;
};

/// Site densities followed by every constant of motion that is linearly independent of
/// span{1, densities}.
RelevantSet relevant_set(const ObservableSet& obs);
/// Only the constants of motion (minus the identity and dependent entries).
RelevantSet conserved_set(const ObservableSet& obs);

/// Appends each candidate (flagged conserved) when it is not already in span{1, set.ops}.
void append_independent(RelevantSet& set, std::span<const HermitianOperator> candidates,
                        std::span<const std::string> labels);

}  // namespace macrostate
