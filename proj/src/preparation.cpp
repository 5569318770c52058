#include "macrostate/preparation.hpp"

#include <cmath>

namespace macrostate {

namespace {

bool is_site_density(const RelevantSet& relevant, const ObservableSet& obs, std::size_t j) {
  return j < obs.observables.size() && relevant.labels[j] == obs.labels[j];
}

}  // namespace

double TestFunction::operator()(double t) const {
  switch (kind) {
    case TestFunctionKind::cosine: return std::cos(omega * t + phase);
    case TestFunctionKind::constant: return value;
    case TestFunctionKind::gaussian_window: {
      const double x = (t - center) / width;
      return std::exp(-0.5 * x * x);
    }
  }
  return 0.0;
}

void TestFunction::validate() const {
  if (kind == TestFunctionKind::gaussian_window && !(width > 0.0)) {
    throw InvalidArgument("TestFunction: gaussian_window width must be > 0");
  }
  if (!std::isfinite(omega) || !std::isfinite(phase) || !std::isfinite(center) || !std::isfinite(value)) {
    throw InvalidArgument("TestFunction: non-finite parameter");
  }
}

std::string to_string(TestFunctionKind kind) {
  switch (kind) {
    case TestFunctionKind::cosine: return "cosine";
    case TestFunctionKind::constant: return "constant";
    case TestFunctionKind::gaussian_window: return "gaussian_window";
  }
  return "unknown";
}

TestFunctionKind test_function_kind_from_string(const std::string& s) {
  if (s == "cosine") return TestFunctionKind::cosine;
  if (s == "constant") return TestFunctionKind::constant;
  if (s == "gaussian_window") return TestFunctionKind::gaussian_window;
  throw InvalidArgument("unknown test function kind '" + s + "'");
}

void PreparationSchedule::validate(const RelevantSet& relevant, const ObservableSet& obs) const {
  if (!(T <= t0)) throw InvalidArgument("PreparationSchedule: T must not exceed t0");
  if (zeta_t0.zeta.size() != static_cast<Index>(relevant.size())) {
    throw InvalidArgument("PreparationSchedule: zeta_t0 must have one entry per relevant operator");
  }
  if (!zeta_t0.finite()) throw InvalidArgument("PreparationSchedule: non-finite zeta_t0");
  if (gamma_T.size() != 0 && gamma_T.size() != static_cast<Index>(relevant.size())) {
    throw InvalidArgument("PreparationSchedule: gamma_T must be empty or match the relevant set");
  }
  if (quadrature_step < 0.0) throw InvalidArgument("PreparationSchedule: quadrature_step must be >= 0");
  for (const auto& c : gamma_density) {
    if (c.observable < 0 || c.observable >= static_cast<int>(obs.observables.size())) {
      throw InvalidArgument("PreparationSchedule: density control index out of range");
    }
    c.h.validate();
  }
  for (const auto& c : gamma_current) {
    if (c.current < 0 || c.current >= static_cast<int>(obs.currents.size())) {
      throw InvalidArgument("PreparationSchedule: current control index out of range");
    }
    c.h.validate();
  }
}

double PreparationSchedule::effective_step() const {
  if (quadrature_step > 0.0) return quadrature_step;
  return t0 > T ? (t0 - T) / 64.0 : 1.0;
}

bool PreparationSchedule::has_history() const {
  return !gamma_density.empty() || !gamma_current.empty() || (gamma_T.size() > 0 && gamma_T.cwiseAbs().maxCoeff() > 0.0);
}

Quadrature trapezoid(double a, double b, int intervals) {
  Quadrature q;
  if (intervals < 1 || !(b > a)) return q;
  const double h = (b - a) / intervals;
  for (int k = 0; k <= intervals; ++k) {
    q.nodes.push_back(k == intervals ? b : a + k * h);
    q.weights.push_back((k == 0 || k == intervals) ? 0.5 * h : h);
  }
  return q;
}

Quadrature trapezoid_with_step(double a, double b, double step) {
  if (!(b > a)) return {};
  const int n = std::max(1, static_cast<int>(std::ceil((b - a) / step - 1e-9)));
  return trapezoid(a, b, n);
}

PreparationTerms::PreparationTerms(const PreparationSchedule& sched, const ObservableSet& obs,
                                   const RelevantSet& relevant, const Spectrum& spectrum)
    : sched_(sched), spectrum_(spectrum) {
  sched_.validate(relevant, obs);
  for (const auto& a : relevant.ops) {
    require_same_dim(a.dim(), spectrum.dim(), "PreparationTerms");
    relevant_eb_.push_back(spectrum.to_eigenbasis(a.matrix()));
  }
  for (const auto& c : sched_.gamma_density) density_eb_.push_back(spectrum.to_eigenbasis(obs.observables[c.observable].matrix()));
  for (const auto& c : sched_.gamma_current) current_eb_.push_back(spectrum.to_eigenbasis(obs.currents[c.current].matrix()));
}

ComplexMatrix PreparationTerms::source(double t_prime) const {
  const Index d = spectrum_.dim();
  ComplexMatrix s = ComplexMatrix::Zero(d, d);
  for (std::size_t a = 0; a < density_eb_.size(); ++a) {
    const auto& c = sched_.gamma_density[a];
    s += (c.coefficient * c.h(t_prime)) * density_eb_[a];
  }
  for (std::size_t a = 0; a < current_eb_.size(); ++a) {
    const auto& c = sched_.gamma_current[a];
    s += (c.coefficient * c.h(t_prime)) * current_eb_[a];
  }
  return s;
}

ComplexMatrix PreparationTerms::history(double t, double lower) const {
  const Index d = spectrum_.dim();
  ComplexMatrix out = ComplexMatrix::Zero(d, d);
  if (density_eb_.empty() && current_eb_.empty()) return out;
  const auto q = trapezoid_with_step(std::max(sched_.T, lower), sched_.t0, sched_.effective_step());
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    out += q.weights[k] * source(q.nodes[k]).cwiseProduct(spectrum_.phases(-(t - q.nodes[k])));
  }
  return out;
}

ComplexMatrix PreparationTerms::boundary(double t) const {
  const Index d = spectrum_.dim();
  ComplexMatrix out = ComplexMatrix::Zero(d, d);
  if (sched_.gamma_T.size() == 0) return out;
  for (std::size_t j = 0; j < relevant_eb_.size(); ++j) out -= sched_.gamma_T(static_cast<Index>(j)) * relevant_eb_[j];
  return out.cwiseProduct(spectrum_.phases(-(t - sched_.T)));
}

ComplexMatrix PreparationTerms::final_measurement(double t) const {
  const Index d = spectrum_.dim();
  ComplexMatrix out = ComplexMatrix::Zero(d, d);
  for (std::size_t j = 0; j < relevant_eb_.size(); ++j) {
    out -= sched_.zeta_t0.zeta(static_cast<Index>(j)) * relevant_eb_[j];
  }
  return out.cwiseProduct(spectrum_.phases(-(t - sched_.t0)));
}

ComplexMatrix PreparationTerms::exponent_at(double t) const {
  return final_measurement(t) + history(t, sched_.T) + boundary(t);
}

HermitianOperator preparation_exponent(const PreparationSchedule& sched, const ObservableSet& obs,
                                       const RelevantSet& relevant, const HermitianOperator& h) {
  const Spectrum sp(h);
  const PreparationTerms terms(sched, obs, relevant, sp);
  return HermitianOperator::symmetrized(sp.from_eigenbasis(terms.exponent_at(sched.t0)));
}

DensityOperator prepared_state(const PreparationSchedule& sched, const ObservableSet& obs,
                               const RelevantSet& relevant, const HermitianOperator& h) {
  return normalized_exponential(preparation_exponent(sched, obs, relevant, h));
}

EvolvedRoutes evolved_prepared_routes(const PreparationSchedule& sched, const ObservableSet& obs,
                                      const RelevantSet& relevant, const HermitianOperator& h, double t) {
  if (t < sched.t0) throw InvalidArgument("evolved_prepared_state: t must be >= t0");
  const Spectrum sp(h);
  const PreparationTerms terms(sched, obs, relevant, sp);
  const auto x0 = HermitianOperator::symmetrized(sp.from_eigenbasis(terms.exponent_at(sched.t0)));
  const auto xt = HermitianOperator::symmetrized(sp.from_eigenbasis(terms.exponent_at(t)));
  DensityOperator via_state = sp.evolve(normalized_exponential(x0), t - sched.t0);
  DensityOperator via_exponent = normalized_exponential(xt);
  const double gap = (via_state.matrix() - via_exponent.matrix()).norm();
  return EvolvedRoutes{std::move(via_state), std::move(via_exponent), gap};
}

DensityOperator evolved_prepared_state(const PreparationSchedule& sched, const ObservableSet& obs,
                                       const RelevantSet& relevant, const HermitianOperator& h, double t) {
  auto routes = evolved_prepared_routes(sched, obs, relevant, h, t);
  if (routes.discrepancy > 1e-9) {
    throw NumericalError("evolved_prepared_state: state and exponent routes disagree by " +
                         std::to_string(routes.discrepancy));
  }
  return std::move(routes.via_state);
}

std::vector<RealVector> finite_difference_rates(const std::vector<double>& times, const std::vector<RealVector>& values) {
  const std::size_t n = times.size();
  if (n < 3 || values.size() != n) throw InvalidArgument("finite_difference_rates: need >= 3 matching samples");
  const double h = (times.back() - times.front()) / static_cast<double>(n - 1);
  std::vector<RealVector> out(n);
  out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
  for (std::size_t k = 1; k + 1 < n; ++k) out[k] = (values[k + 1] - values[k - 1]) / (2.0 * h);
  out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
  return out;
}

ZetaPath make_zeta_path(std::vector<double> times, std::vector<RealVector> zeta) {
  ZetaPath p;
  p.zeta_dot = finite_difference_rates(times, zeta);
  p.times = std::move(times);
  p.zeta = std::move(zeta);
  return p;
}

std::vector<HermitianOperator> relevant_time_derivatives(const RelevantSet& relevant, const ObservableSet& obs,
                                                         const HermitianOperator& h) {
  std::vector<HermitianOperator> out;
  for (std::size_t j = 0; j < relevant.size(); ++j) {
    if (is_site_density(relevant, obs, j) && !obs.currents.empty()) {
      HermitianOperator d = HermitianOperator::zero(h.dim());
      for (std::size_t b = 0; b < obs.currents.size(); ++b) {
        if (obs.bonds[b].first == static_cast<int>(j)) d -= obs.currents[b];
        if (obs.bonds[b].second == static_cast<int>(j)) d += obs.currents[b];
      }
      out.push_back(std::move(d));
    } else {
      out.push_back(heisenberg_dot(relevant.ops[j], h));
    }
  }
  return out;
}

double rewriting_identity_residual(const PreparationSchedule& sched, const ObservableSet& obs,
                                   const RelevantSet& relevant, const HermitianOperator& h, double t,
                                   const ZetaPath& path) {
  sched.validate(relevant, obs);
  if (t < sched.t0) throw InvalidArgument("rewriting_identity_residual: t must be >= t0");
  if (path.times.size() < 2) throw InvalidArgument("rewriting_identity_residual: path too short");
  const double step = path.times[1] - path.times[0];
  const double slack = 1e-9 * std::max(1.0, std::abs(step));
  auto locate = [&](double time) -> std::size_t {
    for (std::size_t k = 0; k < path.times.size(); ++k) {
      if (std::abs(path.times[k] - time) <= slack) return k;
    }
    throw InvalidArgument("rewriting_identity_residual: path does not cover [t0, t] on its grid");
  };
  const std::size_t first = locate(sched.t0);
  const std::size_t last = locate(t);

  const Spectrum sp(h);
  const Index d = sp.dim();
  std::vector<ComplexMatrix> a_eb, adot_eb;
  const auto derivs = relevant_time_derivatives(relevant, obs, h);
  for (std::size_t j = 0; j < relevant.size(); ++j) {
    a_eb.push_back(sp.to_eigenbasis(relevant.ops[j].matrix()));
    adot_eb.push_back(sp.to_eigenbasis(derivs[j].matrix()));
  }
  auto combine = [&](const std::vector<ComplexMatrix>& ops, const RealVector& coef) {
    ComplexMatrix m = ComplexMatrix::Zero(d, d);
    for (std::size_t j = 0; j < ops.size(); ++j) m += coef(static_cast<Index>(j)) * ops[j];
    return m;
  };

  // Left: zeta(t0) A(-(t - t0)).
  ComplexMatrix diff = combine(a_eb, path.zeta[first]).cwiseProduct(sp.phases(-(t - sched.t0)));
  // Right: zeta(t) A - int [zeta_dot A(-(t - t')) + zeta Adot(-(t - t'))] dt'.
  diff -= combine(a_eb, path.zeta[last]);
  for (std::size_t k = first; k <= last && last > first; ++k) {
    const double w = (k == first || k == last) ? 0.5 * step : step;
    const ComplexMatrix integrand = combine(a_eb, path.zeta_dot[k]) + combine(adot_eb, path.zeta[k]);
    diff += w * integrand.cwiseProduct(sp.phases(-(t - path.times[k])));
  }
  return diff.norm();
}

}  // namespace macrostate
