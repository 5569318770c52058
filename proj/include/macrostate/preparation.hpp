#pragma once

#include <string>
#include <vector>

#include "macrostate/gibbs.hpp"
#include "macrostate/model.hpp"

namespace macrostate {

enum class TestFunctionKind { cosine, constant, gaussian_window };

/// Control profile h(t') applied during the preparation interval.
struct TestFunction {
  TestFunctionKind kind = TestFunctionKind::constant;
  double omega = 0.0;   ///< cosine: cos(omega t + phase)
  double phase = 0.0;
  double center = 0.0;  ///< gaussian_window: exp(-(t - center)^2 / (2 width^2))
  double width = 1.0;
  double value = 1.0;   ///< constant

  double operator()(double t) const;
  void validate() const;
};

std::string to_string(TestFunctionKind kind);
TestFunctionKind test_function_kind_from_string(const std::string& s);

/// gamma_alpha int_T^{t0} A_j(-(t - t')) h_alpha(t') dt' on a site density.
struct DensityControl {
  int observable = 0;
  double coefficient = 0.0;
  TestFunction h;
};

/// Same on a bond current.
struct CurrentControl {
  int current = 0;
  double coefficient = 0.0;
  TestFunction h;
};

/// Preparation over [T, t0]. zeta_t0 and gamma_T are indexed like the relevant set; the
/// multiplier of the final measurement is always zeta_t0 (the suitability condition).
struct PreparationSchedule {
  double T = 0.0;
  double t0 = 0.0;
  RealVector gamma_T;  ///< empty means zero
  std::vector<DensityControl> gamma_density;
  std::vector<CurrentControl> gamma_current;
  MacrostateParams zeta_t0;
  double quadrature_step = 0.0;  ///< 0 selects (t0 - T) / 64

  /// Throws InvalidArgument (T > t0, missing zeta_t0, bad indices, ...).
  void validate(const RelevantSet& relevant, const ObservableSet& obs) const;
  double effective_step() const;
  bool has_history() const;
};

/// Uniform composite trapezoid rule on [a, b] with n intervals.
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};
Quadrature trapezoid(double a, double b, int intervals);
/// Trapezoid on [a, b] whose step does not exceed `step`.
Quadrature trapezoid_with_step(double a, double b, double step);

/// Preparation data pre-transformed into the eigenbasis of H. All matrices handled here are in
/// that eigenbasis; Heisenberg lags become entrywise phases.
class PreparationTerms {
 public:
  PreparationTerms(const PreparationSchedule& sched, const ObservableSet& obs, const RelevantSet& relevant,
                   const Spectrum& spectrum);

  const PreparationSchedule& schedule() const noexcept { return sched_; }
  const Spectrum& spectrum() const noexcept { return spectrum_; }

  /// sum_alpha gamma_alpha h_alpha(t') O_alpha, O = density or current (no lag applied).
  ComplexMatrix source(double t_prime) const;
  /// int_{max(T, lower)}^{t0} dt' source(t') lagged by -(t - t').
  ComplexMatrix history(double t, double lower) const;
  /// -sum_j gamma_j(T) A_j(-(t - T)).
  ComplexMatrix boundary(double t) const;
  /// -sum_j zeta_j(t0) A_j(-(t - t0)).
  ComplexMatrix final_measurement(double t) const;
  /// Full exponent of the evolved preparation operator, term by term at lag t - t'.
  ComplexMatrix exponent_at(double t) const;

 private:
  PreparationSchedule sched_;
  Spectrum spectrum_;
  std::vector<ComplexMatrix> relevant_eb_;
  std::vector<ComplexMatrix> density_eb_;
  std::vector<ComplexMatrix> current_eb_;
};

/// Hermitian X with rho_{t0} = e^X / Tr e^X.
HermitianOperator preparation_exponent(const PreparationSchedule& sched, const ObservableSet& obs,
                                       const RelevantSet& relevant, const HermitianOperator& h);
DensityOperator prepared_state(const PreparationSchedule& sched, const ObservableSet& obs,
                               const RelevantSet& relevant, const HermitianOperator& h);

struct EvolvedRoutes {
  DensityOperator via_state;     ///< unitary evolution of the prepared state
  DensityOperator via_exponent;  ///< exponential of the term-by-term shifted exponent
  double discrepancy = 0.0;      ///< Frobenius distance between the two
};
EvolvedRoutes evolved_prepared_routes(const PreparationSchedule& sched, const ObservableSet& obs,
                                      const RelevantSet& relevant, const HermitianOperator& h, double t);
/// Returns the state route; throws NumericalError when the routes disagree beyond 1e-9.
DensityOperator evolved_prepared_state(const PreparationSchedule& sched, const ObservableSet& obs,
                                       const RelevantSet& relevant, const HermitianOperator& h, double t);

/// Multipliers and their rates on a uniform time grid.
struct ZetaPath {
  std::vector<double> times;
  std::vector<RealVector> zeta;
  std::vector<RealVector> zeta_dot;
};
/// Central differences inside, second-order one-sided differences at the ends.
std::vector<RealVector> finite_difference_rates(const std::vector<double>& times, const std::vector<RealVector>& values);
ZetaPath make_zeta_path(std::vector<double> times, std::vector<RealVector> zeta);

/// Frobenius norm of the difference between the evolved exponent written with the initial
/// multipliers, zeta(t0) A(-(t - t0)), and its rewriting through the path:
/// zeta(t) A - int zeta_dot A(-(t - t')) - int zeta Adot(-(t - t')), trapezoid on the path grid.
/// zeta(t0) is read from the path. Every other exponent term is shared by both forms.
double rewriting_identity_residual(const PreparationSchedule& sched, const ObservableSet& obs,
                                   const RelevantSet& relevant, const HermitianOperator& h, double t,
                                   const ZetaPath& path);

/// Time derivative of each relevant operator: -div J for site densities, i[H, A] otherwise.
std::vector<HermitianOperator> relevant_time_derivatives(const RelevantSet& relevant, const ObservableSet& obs,
                                                         const HermitianOperator& h);

}  // namespace macrostate
