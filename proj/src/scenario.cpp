#include "macrostate/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "macrostate/series.hpp"

namespace macrostate {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

template <class T>
T convert(const json& v, const std::string& field);

template <>
double convert<double>(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field + ": expected a number");
  return v.get<double>();
}
template <>
int convert<int>(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ConfigError(field + ": expected an integer");
  return v.get<int>();
}
template <>
bool convert<bool>(const json& v, const std::string& field) {
  if (!v.is_boolean()) throw ConfigError(field + ": expected true or false");
  return v.get<bool>();
}
template <>
std::string convert<std::string>(const json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field + ": expected a string");
  return v.get<std::string>();
}
template <>
std::uint64_t convert<std::uint64_t>(const json& v, const std::string& field) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError(field + ": expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}
template <>
std::vector<double> convert<std::vector<double>>(const json& v, const std::string& field) {
  if (!v.is_array()) throw ConfigError(field + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(convert<double>(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

RealVector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const RealVector>(v.data(), static_cast<Index>(v.size()));
}

// One JSON object of the config, mirrored into the resolved config with defaults filled in.
class Section {
 public:
  Section(const json& src, json& dst, std::string path, std::vector<std::string>& defaults)
      : src_(src), dst_(dst), path_(std::move(path)), defaults_(defaults) {
    if (!src_.is_object()) throw ConfigError((path_.empty() ? "config" : path_) + ": expected an object");
    if (!dst_.is_object()) dst_ = json::object();
  }

  bool has(const std::string& key) const { return src_.contains(key) && !src_.at(key).is_null(); }
  std::string field(const std::string& key) const { return join(path_, key); }
  const json& raw(const std::string& key) const { return src_.at(key); }

  template <class T>
  T req(const std::string& key) {
    if (!has(key)) throw ConfigError(field(key) + ": required field is missing");
    T v = convert<T>(src_.at(key), field(key));
    dst_[key] = src_.at(key);
    return v;
  }

  template <class T>
  T opt(const std::string& key, const T& def) {
    if (has(key)) return req<T>(key);
    dst_[key] = def;
    defaults_.push_back(field(key));
    return def;
  }

  Section child(const std::string& key, bool required) {
    if (!has(key)) {
      if (required) throw ConfigError(field(key) + ": required section is missing");
      dst_[key] = json::object();
      defaults_.push_back(field(key));
      return Section(empty_, dst_[key], field(key), defaults_);
    }
    return Section(src_.at(key), dst_[key], field(key), defaults_);
  }

  /// Sections for the elements of an array of objects (an absent key means an empty array).
  std::vector<Section> array_children(const std::string& key) {
    std::vector<Section> out;
    if (!has(key)) {
      dst_[key] = json::array();
      defaults_.push_back(field(key));
      return out;
    }
    const json& arr = src_.at(key);
    if (!arr.is_array()) throw ConfigError(field(key) + ": expected an array");
    dst_[key] = json::array();
    for (std::size_t i = 0; i < arr.size(); ++i) dst_[key].push_back(json::object());
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.emplace_back(arr[i], dst_[key][i], field(key) + "[" + std::to_string(i) + "]", defaults_);
    }
    return out;
  }

  void allow(std::initializer_list<const char*> keys) const {
    for (const auto& item : src_.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; })) {
        throw ConfigError(field(item.key()) + ": unknown field");
      }
    }
  }

  json& dst() { return dst_; }

 private:
  static inline const json empty_ = json::object();
  const json& src_;
  json& dst_;
  std::string path_;
  std::vector<std::string>& defaults_;
};

ComplexMatrix parse_matrix(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) throw ConfigError(field + ": expected a non-empty array of rows");
  const Index n = static_cast<Index>(v.size());
  ComplexMatrix m(n, n);
  for (Index r = 0; r < n; ++r) {
    const json& row = v[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != n) throw ConfigError(field + ": matrix must be square");
    for (Index c = 0; c < n; ++c) {
      const json& e = row[static_cast<std::size_t>(c)];
      const std::string where = field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]";
      if (e.is_number()) {
        m(r, c) = Complex(e.get<double>(), 0.0);
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
      } else {
        throw ConfigError(where + ": expected a number or [re, im]");
      }
    }
  }
  return m;
}

std::vector<ComplexMatrix> parse_matrices(const json& v, const std::string& field) {
  if (!v.is_array()) throw ConfigError(field + ": expected an array of matrices");
  std::vector<ComplexMatrix> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parse_matrix(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

void parse_couplings(Section s, ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::xxz_chain:
      s.allow({"jxy", "jz", "field", "site_fields"});
      spec.xxz.jxy = s.opt<double>("jxy", 1.0);
      spec.xxz.jz = s.opt<double>("jz", 1.0);
      spec.xxz.field = s.opt<double>("field", 0.0);
      spec.xxz.site_fields = s.opt<std::vector<double>>("site_fields", {});
      break;
    case ModelKind::transverse_ising_chain:
      s.allow({"j", "transverse", "longitudinal"});
      spec.ising.j = s.opt<double>("j", 1.0);
      spec.ising.transverse = s.opt<double>("transverse", 1.0);
      spec.ising.longitudinal = s.opt<double>("longitudinal", 0.0);
      break;
    case ModelKind::custom_matrices:
      s.allow({"hamiltonian", "observables", "currents", "conserved"});
      if (!s.has("hamiltonian")) throw ConfigError(s.field("hamiltonian") + ": required field is missing");
      spec.custom.hamiltonian = parse_matrix(s.raw("hamiltonian"), s.field("hamiltonian"));
      s.dst()["hamiltonian"] = s.raw("hamiltonian");
      for (const char* key : {"observables", "currents", "conserved"}) {
        std::vector<ComplexMatrix> ms;
        if (s.has(key)) {
          ms = parse_matrices(s.raw(key), s.field(key));
          s.dst()[key] = s.raw(key);
        } else {
          s.dst()[key] = json::array();
        }
        if (std::string(key) == "observables") spec.custom.observables = std::move(ms);
        else if (std::string(key) == "currents") spec.custom.currents = std::move(ms);
        else spec.custom.conserved = std::move(ms);
      }
      break;
  }
}

ModelSpec parse_model(Section s) {
  s.allow({"model_kind", "num_sites", "local_dim", "periodic", "include_h2", "dimension_cap", "couplings"});
  ModelSpec spec;
  const std::string kind = s.req<std::string>("model_kind");
  try {
    spec.kind = model_kind_from_string(kind);
  } catch (const Error& e) {
    throw ConfigError(s.field("model_kind") + ": " + e.what());
  }
  spec.num_sites = s.opt<int>("num_sites", 2);
  spec.local_dim = s.opt<int>("local_dim", 2);
  spec.periodic = s.opt<bool>("periodic", false);
  spec.include_h2 = s.opt<bool>("include_h2", false);
  spec.dimension_cap = static_cast<std::size_t>(s.opt<int>("dimension_cap", 4096));
  parse_couplings(s.child("couplings", spec.kind == ModelKind::custom_matrices), spec);
  return spec;
}

TestFunction parse_test_function(Section s) {
  s.allow({"kind", "omega", "phase", "center", "width", "value"});
  TestFunction h;
  try {
    h.kind = test_function_kind_from_string(s.opt<std::string>("kind", "constant"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(s.field("kind") + ": " + e.what());
  }
  h.omega = s.opt<double>("omega", 0.0);
  h.phase = s.opt<double>("phase", 0.0);
  h.center = s.opt<double>("center", 0.0);
  h.width = s.opt<double>("width", 1.0);
  h.value = s.opt<double>("value", 1.0);
  return h;
}

PreparationSchedule parse_schedule(Section s) {
  s.allow({"T", "t0", "gamma_T", "gamma_density", "gamma_current", "zeta_t0", "quadrature_step"});
  PreparationSchedule sched;
  sched.T = s.req<double>("T");
  sched.t0 = s.opt<double>("t0", 0.0);
  if (!(sched.T <= sched.t0)) throw ConfigError(s.field("T") + ": must not exceed t0");
  sched.gamma_T = to_vector(s.opt<std::vector<double>>("gamma_T", {}));
  sched.zeta_t0.zeta = to_vector(s.req<std::vector<double>>("zeta_t0"));
  sched.quadrature_step = s.opt<double>("quadrature_step", 0.0);
  for (auto& c : s.array_children("gamma_density")) {
    c.allow({"observable", "coefficient", "h"});
    sched.gamma_density.push_back(
        DensityControl{c.req<int>("observable"), c.req<double>("coefficient"), parse_test_function(c.child("h", false))});
  }
  for (auto& c : s.array_children("gamma_current")) {
    c.allow({"current", "coefficient", "h"});
    sched.gamma_current.push_back(
        CurrentControl{c.req<int>("current"), c.req<double>("coefficient"), parse_test_function(c.child("h", false))});
  }
  return sched;
}


std::vector<double> random_uniform(std::uint64_t seed, std::size_t n, double scale) {
  std::mt19937_64 rng(seed);
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    out.push_back(scale * (2.0 * u - 1.0));
  }
  return out;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("output.dir: cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("output.dir: write to '" + path.string() + "' failed");
}

fs::path prepare_output_dir(const std::string& dir, const char* probe_name) {
  std::error_code ec;
  const fs::path p(dir);
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw ConfigError("output.dir: cannot create '" + dir + "'");
  std::ofstream probe(p / probe_name, std::ios::binary | std::ios::trunc);
  if (!probe) throw ConfigError("output.dir: '" + dir + "' is not writable");
  return p;
}

struct Setup {
  Model model;
  RelevantSet relevant;
  DensityOperator rho0;
  InitialHistory init;
  MacrostateParams zeta_init;
};

RealVector resolve_zeta(const ScenarioConfig& sc, std::size_t n) {
  if (sc.random_zeta) return to_vector(random_uniform(sc.seed, n, sc.random_scale));
  if (!sc.zeta || static_cast<std::size_t>(sc.zeta->size()) != n) {
    throw ConfigError("initial_condition.zeta: expected " + std::to_string(n) + " entries (relevant set order)");
  }
  return *sc.zeta;
}

Setup build_setup(const ScenarioConfig& sc) {
  std::optional<Model> model;
  try {
    model = build_model(sc.model);
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  RelevantSet relevant;
  if (sc.mode_cutoff > 0) {
    relevant = mode_relevant_set(model->obs, make_mode_basis(sc.model.num_sites, sc.mode_cutoff, sc.mode_basis));
  } else {
    relevant = relevant_set(model->obs);
  }
  const HermitianOperator& h = model->hamiltonian;
  const std::size_t n = relevant.size();

  switch (sc.initial) {
    case InitialKind::gibbs: {
      const GibbsState g(relevant.ops, resolve_zeta(sc, n));
      return Setup{*model, relevant, g.state(), InitialHistory{0.0, std::nullopt, std::nullopt}, g.params()};
    }
    case InitialKind::prepared: {
      PreparationSchedule sched = *sc.schedule;
      try {
        sched.validate(relevant, model->obs);
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("initial_condition.schedule: ") + e.what());
      }
      const GibbsState g(relevant.ops, sched.zeta_t0.zeta);
      sched.zeta_t0 = g.params();
      DensityOperator rho0 = prepared_state(sched, model->obs, relevant, h);
      return Setup{*model, relevant, std::move(rho0), InitialHistory{sched.t0, sched, std::nullopt}, g.params()};
    }
    case InitialKind::quench: {
      std::optional<Model> pre;
      try {
        pre = build_model(sc.pre_model);
      } catch (const Error& e) {
        throw ConfigError(std::string("initial_condition.pre_couplings: ") + e.what());
      }
      const HermitianOperator h_pre = h + sc.strength * (pre->hamiltonian - h);
      const RealVector zeta = resolve_zeta(sc, n);
      HermitianOperator x = HermitianOperator::zero(h.dim());
      for (std::size_t j = 0; j < n; ++j) {
        HermitianOperator a = relevant.ops[j];
        if (relevant.labels[j] == "H") a = h_pre;
        if (relevant.labels[j] == "H^2") a = HermitianOperator::symmetrized(h_pre.matrix() * h_pre.matrix());
        x -= zeta(static_cast<Index>(j)) * a;
      }
      DensityOperator rho0 = normalized_exponential(x);
      const GibbsState g0 = project_macrostate(rho0, relevant, std::nullopt, sc.inversion);
      HermitianOperator residual = history_residual(rho0, g0);
      return Setup{*model, relevant, std::move(rho0), InitialHistory{0.0, std::nullopt, std::move(residual)},
                   g0.params()};
    }
  }
  throw ConfigError("initial_condition.kind: unsupported");
}

TauEstimate run_tau_diagnostic(const ScenarioConfig& sc, const Setup& s) {
  const GibbsState eq = equilibrium_state(s.rho0, s.relevant, sc.inversion);
  return estimate_tau(s.relevant, s.model.hamiltonian, eq, sc.tau_t_max, sc.tau_dt, sc.recurrence_threshold);
}

json tau_json(const TauEstimate& est, const ScenarioConfig& sc) {
  json j;
  j["t_max"] = sc.tau_t_max;
  j["dt"] = sc.tau_dt;
  j["recurrence_threshold"] = sc.recurrence_threshold;
  j["no_driven"] = est.no_driven;
  j["tau_est"] = optional_number(est.tau_est);
  j["recurrence"] = optional_number(est.recurrence);
  j["probes"] = json::array();
  for (std::size_t p = 0; p < est.labels.size(); ++p) {
    j["probes"].push_back({{"label", est.labels[p]},
                           {"crossing", optional_number(est.crossings[p])},
                           {"recurrence", optional_number(est.recurrences[p])}});
  }
  return j;
}

json deviation_json(const std::string& name_a, const Trajectory& a, const std::string& name_b, const Trajectory& b) {
  json per_label = json::object();
  double overall = 0.0;
  std::size_t common = 0;
  std::size_t ib = 0;
  const double slack = 1e-9 * std::max({1.0, a.step(), b.step()});
  std::vector<double> max_label(a.labels.size(), 0.0);
  for (std::size_t ia = 0; ia < a.size(); ++ia) {
    while (ib < b.size() && b.times[ib] < a.times[ia] - slack) ++ib;
    if (ib >= b.size()) break;
    if (std::abs(b.times[ib] - a.times[ia]) > slack) continue;
    ++common;
    for (std::size_t j = 0; j < a.labels.size(); ++j) {
      const double d = std::abs(a.expectations[ia](static_cast<Index>(j)) - b.expectations[ib](static_cast<Index>(j)));
      max_label[j] = std::max(max_label[j], d);
      overall = std::max(overall, d);
    }
  }
  for (std::size_t j = 0; j < a.labels.size(); ++j) per_label[a.labels[j]] = max_label[j];
  return json{{"a", name_a}, {"b", name_b}, {"common_times", common}, {"max_abs", overall}, {"per_label", per_label}};
}

json entropy_json(const Trajectory& traj, std::optional<double> tau, const RelevantSet& relevant,
                  const InversionSettings& inv) {
  if (!tau) return json{{"skipped", "no tau available"}};
  try {
    const EntropyReport rep = entropy_report(traj, *tau, relevant, inv);
    return json{{"tau", rep.tau},
                {"lag_steps", rep.lag_steps},
                {"negative_steps", rep.negative_steps},
                {"first_step", rep.first_step},
                {"min_step", *std::min_element(rep.steps.begin(), rep.steps.end())},
                {"equilibrium_entropy", rep.equilibrium_entropy},
                {"min_equilibrium_gap", rep.min_equilibrium_gap}};
  } catch (const InvalidArgument& e) {
    return json{{"skipped", e.what()}};
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void say(const RunOptions& opts, std::ostream& out, const std::string& msg) {
  if (!opts.quiet) out << msg << "\n";
}

}  // namespace

void apply_override(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--override: expected key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("--override: empty path segment in '" + key + "'");
    const bool index = std::all_of(part.begin(), part.end(), [](char c) { return c >= '0' && c <= '9'; });
    if (index && node->is_array()) {
      const std::size_t i = std::stoul(part);
      if (i >= node->size()) throw ConfigError("--override: index " + part + " out of range in '" + key + "'");
      node = &(*node)[i];
    } else {
      if (!node->is_object() && !node->is_null()) {
        throw ConfigError("--override: '" + key + "' descends into a non-object");
      }
      node = &(*node)[part];
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

json load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  for (const auto& o : overrides) apply_override(cfg, o);
  return cfg;
}

ScenarioConfig parse_config(const json& cfg) {
  ScenarioConfig sc;
  sc.resolved = json::object();
  Section top(cfg, sc.resolved, "", sc.defaults_applied);
  top.allow({"model", "observables", "initial_condition", "pipelines", "mem", "inversion", "semigroup", "dt", "t_end",
             "output", "seed", "tau_diagnostic"});

  sc.model = parse_model(top.child("model", true));

  {
    Section s = top.child("observables", false);
    s.allow({"mode_cutoff", "mode_basis"});
    sc.mode_cutoff = s.opt<int>("mode_cutoff", 0);
    if (sc.mode_cutoff < 0) throw ConfigError(s.field("mode_cutoff") + ": must be >= 0");
    try {
      sc.mode_basis = mode_family_from_string(s.opt<std::string>("mode_basis", "fourier"));
    } catch (const InvalidArgument& e) {
      throw ConfigError(s.field("mode_basis") + ": " + e.what());
    }
  }

  sc.seed = top.opt<std::uint64_t>("seed", 0);
  sc.dt = top.opt<double>("dt", 0.01);
  if (!(sc.dt > 0.0)) throw ConfigError("dt: must be > 0");

  double t0 = 0.0;
  {
    Section s = top.child("initial_condition", true);
    const std::string kind = s.req<std::string>("kind");
    auto read_zeta = [&]() {
      if (s.has("zeta") && s.raw("zeta").is_string()) {
        if (s.raw("zeta").get<std::string>() != "random") {
          throw ConfigError(s.field("zeta") + ": expected an array of numbers or \"random\"");
        }
        s.dst()["zeta"] = "random";
        sc.random_zeta = true;
        sc.random_scale = s.opt<double>("random_scale", 0.5);
      } else {
        sc.zeta = to_vector(s.req<std::vector<double>>("zeta"));
      }
    };
    if (kind == "gibbs") {
      s.allow({"kind", "zeta", "random_scale"});
      sc.initial = InitialKind::gibbs;
      read_zeta();
    } else if (kind == "prepared") {
      s.allow({"kind", "schedule"});
      sc.initial = InitialKind::prepared;
      sc.schedule = parse_schedule(s.child("schedule", true));
      t0 = sc.schedule->t0;
    } else if (kind == "quench") {
      s.allow({"kind", "zeta", "random_scale", "pre_couplings", "strength"});
      sc.initial = InitialKind::quench;
      read_zeta();
      sc.pre_model = sc.model;
      parse_couplings(s.child("pre_couplings", true), sc.pre_model);
      sc.strength = s.opt<double>("strength", 1.0);
    } else {
      throw ConfigError(s.field("kind") + ": expected gibbs, prepared or quench, got '" + kind + "'");
    }
  }

  sc.t_end = top.req<double>("t_end");
  if (!(sc.t_end > t0)) throw ConfigError("t_end: must exceed the initial time " + std::to_string(t0));

  if (top.has("pipelines")) {
    const json& p = top.raw("pipelines");
    if (!p.is_array()) throw ConfigError("pipelines: expected an array");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string name = convert<std::string>(p[i], "pipelines[" + std::to_string(i) + "]");
      if (name != "exact" && name != "memory" && name != "semigroup") {
        throw ConfigError("pipelines[" + std::to_string(i) + "]: unknown pipeline '" + name + "'");
      }
      if (std::find(sc.pipelines.begin(), sc.pipelines.end(), name) != sc.pipelines.end()) {
        throw ConfigError("pipelines: '" + name + "' listed twice");
      }
      sc.pipelines.push_back(name);
    }
    top.dst()["pipelines"] = p;
  } else {
    sc.pipelines = {"exact"};
    top.dst()["pipelines"] = sc.pipelines;
    sc.defaults_applied.push_back("pipelines");
  }
  const auto wants = [&](const char* name) {
    return std::find(sc.pipelines.begin(), sc.pipelines.end(), name) != sc.pipelines.end();
  };

  if (top.has("mem")) {
    Section s = top.child("mem", true);
    s.allow({"tau", "truncate_history", "dt", "order", "step_bound"});
    MemorySettings mem;
    mem.tau = s.req<double>("tau");
    mem.truncate_history = s.opt<bool>("truncate_history", false);
    mem.dt = s.opt<double>("dt", sc.dt);
    mem.order = s.opt<int>("order", 1);
    mem.step_bound = s.opt<double>("step_bound", 1.0);
    try {
      mem.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("mem: ") + e.what());
    }
    sc.mem = mem;
  } else if (wants("memory")) {
    throw ConfigError("mem: required by the memory pipeline but missing");
  }

  {
    Section s = top.child("inversion", false);
    s.allow({"tol", "max_iters", "damping", "regularization", "condition_limit", "zeta_bound", "independence_limit"});
    InversionSettings inv;
    inv.tol = s.opt<double>("tol", inv.tol);
    inv.max_iters = s.opt<int>("max_iters", inv.max_iters);
    inv.damping = s.opt<double>("damping", inv.damping);
    inv.regularization = s.opt<double>("regularization", inv.regularization);
    inv.condition_limit = s.opt<double>("condition_limit", inv.condition_limit);
    inv.zeta_bound = s.opt<double>("zeta_bound", inv.zeta_bound);
    inv.independence_limit = s.opt<double>("independence_limit", inv.independence_limit);
    try {
      inv.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("inversion: ") + e.what());
    }
    sc.inversion = inv;
  }

  {
    Section s = top.child("semigroup", false);
    s.allow({"tau", "dt"});
    if (s.has("tau") && s.raw("tau").is_string()) {
      if (s.raw("tau").get<std::string>() != "estimated") {
        throw ConfigError(s.field("tau") + ": expected a number or \"estimated\"");
      }
      s.dst()["tau"] = "estimated";
    } else if (s.has("tau")) {
      sc.semigroup_tau = s.req<double>("tau");
      if (!(*sc.semigroup_tau > 0.0)) throw ConfigError("semigroup.tau: must be > 0");
    } else {
      s.dst()["tau"] = "estimated";
      sc.defaults_applied.push_back("semigroup.tau");
    }
    sc.semigroup_dt = s.opt<double>("dt", sc.dt);
    if (!(sc.semigroup_dt > 0.0)) throw ConfigError("semigroup.dt: must be > 0");
  }

  {
    Section s = top.child("output", false);
    s.allow({"dir"});
    sc.output_dir = s.opt<std::string>("dir", "macrostate_out");
  }

  {
    Section s = top.child("tau_diagnostic", false);
    s.allow({"t_max", "dt", "recurrence_threshold"});
    sc.tau_t_max = s.opt<double>("t_max", 20.0);
    sc.tau_dt = s.opt<double>("dt", 0.05);
    sc.recurrence_threshold = s.opt<double>("recurrence_threshold", 0.9);
    if (!(sc.tau_t_max > 0.0) || !(sc.tau_dt > 0.0)) throw ConfigError("tau_diagnostic: t_max and dt must be > 0");
  }
  return sc;
}

int run_command(const std::string& config_path, const RunOptions& opts, std::ostream& out, std::ostream& err) {
  ScenarioConfig sc;
  fs::path dir;
  std::optional<Setup> setup;
  try {
    sc = parse_config(load_config(config_path, opts.overrides));
    dir = prepare_output_dir(opts.output_dir.value_or(sc.output_dir), "manifest.json");
    setup = build_setup(sc);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "numerical failure while preparing the initial state: " << e.what() << "\n";
    if (!dir.empty()) {
      json manifest{{"config", sc.resolved},
                    {"defaults_applied", sc.defaults_applied},
                    {"status", "numerical_failure"},
                    {"exit_code", kExitNumericalFailure},
                    {"failure", {{"pipeline", "setup"}, {"time", nullptr}, {"message", e.what()}}}};
      try {
        write_text(dir / "manifest.json", dump(manifest));
      } catch (const std::exception&) {
      }
    }
    return kExitNumericalFailure;
  }

  const Setup& s = *setup;
  const HermitianOperator& h = s.model.hamiltonian;
  const double t0 = s.init.t0;
  json failure = nullptr;
  std::map<std::string, Trajectory> done;
  std::vector<std::string> order;

  std::optional<TauEstimate> tau_est;
  json tau_report;
  try {
    tau_est = run_tau_diagnostic(sc, s);
    tau_report = tau_json(*tau_est, sc);
  } catch (const std::exception& e) {
    tau_report = json{{"error", e.what()}};
  }

  std::optional<double> semigroup_tau = sc.semigroup_tau;
  if (!semigroup_tau && tau_est && tau_est->tau_est) semigroup_tau = *tau_est->tau_est;

  for (const auto& name : sc.pipelines) {
    try {
      if (name == "exact") {
        done.emplace(name, exact_macrostate_trajectory(s.rho0, s.relevant, h, uniform_grid(t0, sc.t_end, sc.dt),
                                                       sc.inversion));
      } else if (name == "memory") {
        done.emplace(name, integrate_zeta(s.zeta_init, s.init, s.relevant, s.model.obs, h, *sc.mem, sc.t_end));
      } else {
        if (!semigroup_tau) throw PipelineError("semigroup pipeline: no tau configured and no estimate available", t0);
        const GibbsState g0 = project_macrostate(s.rho0, s.relevant, std::nullopt, sc.inversion);
        done.emplace(name, reduced_trajectory(s.relevant, g0, h, *semigroup_tau, sc.semigroup_dt, t0, sc.t_end,
                                              sc.inversion));
      }
      order.push_back(name);
      say(opts, out, name + ": " + std::to_string(done.at(name).size()) + " points");
    } catch (const PipelineError& e) {
      failure = json{{"pipeline", name}, {"time", e.time()}, {"message", e.what()}};
      break;
    } catch (const std::exception& e) {
      failure = json{{"pipeline", name}, {"time", nullptr}, {"message", e.what()}};
      break;
    }
  }

  json report;
  report["relevant_set"] = s.relevant.labels;
  report["hilbert_dimension"] = h.dim();
  report["pipelines"] = json::object();
  report["entropy"] = json::object();
  std::optional<double> entropy_tau;
  if (sc.mem) {
    entropy_tau = sc.mem->tau;
  } else if (tau_est && tau_est->tau_est) {
    entropy_tau = *tau_est->tau_est;
  }
  for (const auto& name : order) {
    const Trajectory& traj = done.at(name);
    report["pipelines"][name] = {{"file", name + ".tsv"},
                                 {"points", traj.size()},
                                 {"min_driven_kubo_eigenvalue", number_or_null(traj.min_driven_kubo_eigenvalue)}};
    report["entropy"][name] = entropy_json(traj, entropy_tau, s.relevant, sc.inversion);
  }
  report["deviations"] = json::array();
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      report["deviations"].push_back(deviation_json(order[i], done.at(order[i]), order[j], done.at(order[j])));
    }
  }
  report["tau_diagnostic"] = tau_report;
  report["semigroup_tau"] = optional_number(semigroup_tau);

  const int code = failure.is_null() ? kExitOk : kExitNumericalFailure;
  json manifest{{"config", sc.resolved},
                {"defaults_applied", sc.defaults_applied},
                {"status", failure.is_null() ? "ok" : "numerical_failure"},
                {"exit_code", code},
                {"failure", failure}};
  json outputs = json::array();
  try {
    for (const auto& name : order) {
      write_text(dir / (name + ".tsv"), format_series(done.at(name)));
      outputs.push_back(name + ".tsv");
    }
    write_text(dir / "report.json", dump(report));
    outputs.push_back("report.json");
    manifest["outputs"] = outputs;
    write_text(dir / "manifest.json", dump(manifest));
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  if (!failure.is_null()) {
    err << "numerical failure in " << failure["pipeline"].get<std::string>() << ": "
        << failure["message"].get<std::string>() << "\n";
    return code;
  }
  say(opts, out, "wrote " + dir.string());
  return kExitOk;
}

int diagnose_tau_command(const std::string& config_path, const RunOptions& opts, std::ostream& out,
                         std::ostream& err) {
  ScenarioConfig sc;
  fs::path dir;
  std::optional<Setup> setup;
  try {
    sc = parse_config(load_config(config_path, opts.overrides));
    dir = prepare_output_dir(opts.output_dir.value_or(sc.output_dir), "tau_report.json");
    setup = build_setup(sc);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  }
  try {
    const TauEstimate est = run_tau_diagnostic(sc, *setup);
    write_text(dir / "tau_report.json", dump(tau_json(est, sc)));
    if (est.no_driven) {
      say(opts, out, "no driven modes: every relevant operator is a constant of motion");
    } else {
      for (std::size_t p = 0; p < est.labels.size(); ++p) {
        std::ostringstream line;
        line << est.labels[p] << ": crossing ";
        if (est.crossings[p]) line << *est.crossings[p]; else line << "none";
        line << ", recurrence ";
        if (est.recurrences[p]) line << *est.recurrences[p]; else line << "none";
        say(opts, out, line.str());
      }
      std::ostringstream line;
      line << "tau_est ";
      if (est.tau_est) line << *est.tau_est; else line << "none (no 1/e crossing within t_max)";
      if (est.recurrence) line << ", first recurrence " << *est.recurrence;
      say(opts, out, line.str());
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  }
  return kExitOk;
}

int compare_command(const std::string& series_a, const std::string& series_b, const RunOptions& opts,
                    std::ostream& out, std::ostream& err) {
  std::vector<ColumnDeviation> devs;
  try {
    devs = compare_series(read_series(series_a), read_series(series_b));
  } catch (const std::exception& e) {
    err << "compare: " << e.what() << "\n";
    return kExitConfigError;
  }
  (void)opts;
  char buf[128];
  out << "column\tmax_abs\tmean_abs\n";
  double overall = 0.0;
  for (const auto& d : devs) {
    std::snprintf(buf, sizeof buf, "\t%.17g\t%.17g\n", d.max_abs, d.mean_abs);
    out << d.column << buf;
    overall = std::max(overall, d.max_abs);
  }
  std::snprintf(buf, sizeof buf, "%.17g", overall);
  out << "overall_max_abs\t" << buf << "\n";
  return kExitOk;
}

}  // namespace macrostate
