#pragma once

// Run configuration: an INI-style file of [section] headers and key = value
// lines (# or ; comments). Every key has a default; [case] kind and the
// [domain] keys are required.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "ehl/study.hpp"

namespace ehl {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CaseKind { line, point, manufactured, obstacle };
enum class SweepKind { h, p, penalty };

struct RunConfig {
  CaseKind kind = CaseKind::line;
  std::string case_name;  // manufactured/obstacle case
  CoefficientMode coefficient = CoefficientMode::constant;
  std::uint64_t seed = 0;

  DomainSpec domain;
  int degree = 1;
  SpaceOptions space;
  FormParams form;
  PenaltyConfig penalty;
  SolveConfig solve;

  bool paper_defaults = true;
  PhysicalInputs inputs = ehl::paper_defaults();
  LogBase log_base = LogBase::natural;
  LubricantOptions lubricant;
  KernelOptions kernel;
  double continuation_start = 0.0;
  double continuation_factor = 10.0;
  double continuation_min_factor = 1.01;
  double force_target = std::numeric_limits<double>::quiet_NaN();

  SweepKind sweep = SweepKind::h;
  int sweep_levels = 4;
  std::vector<int> sweep_degrees{1, 2};
  std::vector<double> sweep_eps{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};

  std::string output_dir = "out";

  [[nodiscard]] bool contact() const { return kind == CaseKind::line || kind == CaseKind::point; }
  [[nodiscard]] ContactKind contact_kind() const { return kind == CaseKind::point ? ContactKind::point : ContactKind::line; }
};

namespace detail {

template <class E>
struct EnumName {
  E value;
  const char* name;
};

inline constexpr EnumName<CaseKind> kCaseKinds[] = {
    {CaseKind::line, "line"}, {CaseKind::point, "point"}, {CaseKind::manufactured, "manufactured"},
    {CaseKind::obstacle, "obstacle"}};
inline constexpr EnumName<SweepKind> kSweepKinds[] = {{SweepKind::h, "h"}, {SweepKind::p, "p"}, {SweepKind::penalty, "penalty"}};
inline constexpr EnumName<CoefficientMode> kCoefficientModes[] = {{CoefficientMode::constant, "constant"},
                                                                   {CoefficientMode::nonlinear, "nonlinear"}};
inline constexpr EnumName<PenaltyWeighting> kWeightings[] = {{PenaltyWeighting::none, "none"},
                                                             {PenaltyWeighting::coefficient, "coefficient"}};
inline constexpr EnumName<PenaltyTreatment> kTreatments[] = {{PenaltyTreatment::semi_implicit, "semi_implicit"},
                                                             {PenaltyTreatment::explicit_rhs, "explicit_rhs"}};
inline constexpr EnumName<InnerMethod> kMethods[] = {
    {InnerMethod::picard, "picard"}, {InnerMethod::newton, "newton"}, {InnerMethod::hybrid, "hybrid"}};
inline constexpr EnumName<ForceUpdate> kForceUpdates[] = {
    {ForceUpdate::coupled, "coupled"}, {ForceUpdate::secant, "secant"}, {ForceUpdate::relaxation, "relaxation"}};
inline constexpr EnumName<LogBase> kLogBases[] = {{LogBase::natural, "natural"}, {LogBase::ten, "ten"}};
inline constexpr EnumName<NegativePressure> kNegatives[] = {{NegativePressure::as_printed, "as_printed"},
                                                            {NegativePressure::positive_part, "positive_part"},
                                                            {NegativePressure::reflect, "reflect"},
                                                            {NegativePressure::smooth, "smooth"}};
inline constexpr EnumName<ClampMode> kClampModes[] = {{ClampMode::hard, "hard"}, {ClampMode::soft, "soft"}};

template <class E, std::size_t N>
const char* enum_name(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <class E, std::size_t N>
E enum_value(const EnumName<E> (&table)[N], const std::string& s, const std::string& key) {
  for (const auto& e : table)
    if (s == e.name) return e.value;
  std::string options;
  for (const auto& e : table) options += std::string(options.empty() ? "" : "|") + e.name;
  throw ConfigError("invalid value '" + s + "' for " + key + " (expected " + options + ")");
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t") - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t n = 0;
    const double v = std::stod(s, &n);
    if (trim(s.substr(n)).empty()) return v;
  } catch (const std::exception&) {
  }
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw ConfigError("invalid number '" + s + "' for " + key);
}

inline long long parse_int(const std::string& s, const std::string& key) {
  try {
    std::size_t n = 0;
    const long long v = std::stoll(s, &n);
    if (trim(s.substr(n)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("invalid integer '" + s + "' for " + key);
}

inline bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("invalid boolean '" + s + "' for " + key);
}

inline std::vector<double> parse_doubles(const std::string& s, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(parse_double(item, key));
  return out;
}

inline std::vector<int> parse_ints(const std::string& s, const std::string& key) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) out.push_back(static_cast<int>(parse_int(item, key)));
  return out;
}

/// Reads keys from a property tree and records the ones it consumed so that
/// unknown keys can be reported.
class Reader {
 public:
  explicit Reader(const boost::property_tree::ptree& tree) : tree_(tree) {}

  [[nodiscard]] std::optional<std::string> get(const std::string& key) {
    seen_.push_back(key);
    const auto v = tree_.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  std::string require(const std::string& key) {
    auto v = get(key);
    if (!v || v->empty()) throw ConfigError("missing required field " + key);
    return *v;
  }

  void read(const std::string& key, double& out) {
    if (auto v = get(key); v && !v->empty()) out = parse_double(*v, key);
  }
  void read(const std::string& key, int& out) {
    if (auto v = get(key); v && !v->empty()) out = static_cast<int>(parse_int(*v, key));
  }
  void read(const std::string& key, bool& out) {
    if (auto v = get(key); v && !v->empty()) out = parse_bool(*v, key);
  }
  template <class E, std::size_t N>
  void read(const std::string& key, E& out, const EnumName<E> (&table)[N]) {
    if (auto v = get(key); v && !v->empty()) out = enum_value(table, *v, key);
  }

  void check_unknown() const {
    for (const auto& section : tree_) {
      if (section.second.empty()) throw ConfigError("key outside a section: " + section.first);
      for (const auto& kv : section.second) {
        const std::string key = section.first + "." + kv.first;
        if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) throw ConfigError("unknown field " + key);
      }
    }
  }

 private:
  const boost::property_tree::ptree& tree_;
  std::vector<std::string> seen_;
};

inline RunConfig kind_defaults(CaseKind kind) {
  RunConfig c;
  c.kind = kind;
  if (kind == CaseKind::line || kind == CaseKind::point) {
    const ContactSetup s = contact_defaults(kind == CaseKind::point ? ContactKind::point : ContactKind::line, 256, 1);
    c.domain = s.domain;
    c.lubricant = s.lubricant;
    c.solve = s.solve;
    c.penalty = s.penalty;
    c.form = s.form;
    c.continuation_start = s.continuation_start;
    c.continuation_factor = s.continuation_factor;
    c.continuation_min_factor = s.continuation_min_factor;
  } else {
    const StudyOptions st;
    c.form = st.form;
    c.solve = st.solve;
    c.case_name = kind == CaseKind::obstacle ? "obstacle_1d" : "smooth_1d";
    c.penalty.enabled = kind == CaseKind::obstacle;
    c.penalty.eps_p = st.eps_p;
    c.sweep = kind == CaseKind::obstacle ? SweepKind::penalty : SweepKind::h;
  }
  return c;
}

}  // namespace detail

/// Manufactured or obstacle case named in the configuration, on its domain.
inline ManufacturedCase make_case(const RunConfig& c) {
  ManufacturedCase mc;
  const int cells = c.domain.cells[0];
  if (c.case_name == "smooth_1d") mc = smooth_1d(c.coefficient, cells);
  else if (c.case_name == "smooth_2d") mc = smooth_2d(c.coefficient, cells);
  else if (c.case_name == "limited_1d") mc = limited_1d(cells);
  else if (c.case_name == "quadratic_1d") mc = quadratic_1d(cells);
  else if (c.case_name == "obstacle_1d") mc = obstacle_1d(cells);
  else if (c.case_name == "obstacle_trivial") mc = obstacle_trivial(cells);
  else throw ConfigError("unknown case name '" + c.case_name + "' for case.name");
  if (mc.domain.dim != c.domain.dim) throw ConfigError("case " + c.case_name + " needs a " + std::to_string(mc.domain.dim) + "D domain");
  mc.domain = c.domain;
  return mc;
}

inline RunConfig parse_config(std::istream& in) {
  using namespace detail;
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("syntax error: ") + e.what());
  }
  Reader r(tree);
  const CaseKind kind = enum_value(kCaseKinds, r.require("case.kind"), "case.kind");
  RunConfig c = kind_defaults(kind);
  if (auto v = r.get("case.name"); v && !v->empty()) c.case_name = *v;
  r.read("case.coefficient", c.coefficient, kCoefficientModes);
  if (auto v = r.get("case.seed"); v && !v->empty()) c.seed = static_cast<std::uint64_t>(parse_int(*v, "case.seed"));

  const auto lower = parse_doubles(r.require("domain.lower"), "domain.lower");
  const auto upper = parse_doubles(r.require("domain.upper"), "domain.upper");
  const auto cells = parse_ints(r.require("domain.cells"), "domain.cells");
  const int dim = kind == CaseKind::point ? 2 : kind == CaseKind::line ? 1 : static_cast<int>(std::max(lower.size(), upper.size()));
  if ((dim != 1 && dim != 2) || lower.size() != static_cast<std::size_t>(dim) || upper.size() != static_cast<std::size_t>(dim))
    throw ConfigError("domain.lower and domain.upper need one value per axis");
  if (cells.size() != 1 && cells.size() != static_cast<std::size_t>(dim))
    throw ConfigError("domain.cells needs one value or one per axis");
  c.domain.dim = dim;
  for (int a = 0; a < dim; ++a) {
    c.domain.lower[static_cast<std::size_t>(a)] = lower[static_cast<std::size_t>(a)];
    c.domain.upper[static_cast<std::size_t>(a)] = upper[static_cast<std::size_t>(a)];
  }
  c.domain.cells = {cells[0], cells.size() > 1 ? cells[1] : cells[0]};

  r.read("discretization.degree", c.degree);
  r.read("discretization.extra_points", c.space.extra_points);
  r.read("discretization.a_k", c.form.a_k);
  r.read("discretization.beta", c.form.beta);
  r.read("discretization.theta", c.form.theta);
  r.read("discretization.weighting", c.form.weighting, kWeightings);

  r.read("penalty.enabled", c.penalty.enabled);
  r.read("penalty.eps_p", c.penalty.eps_p);
  if (auto v = r.get("penalty.schedule")) c.penalty.schedule = parse_doubles(*v, "penalty.schedule");
  r.read("penalty.treatment", c.penalty.treatment, kTreatments);

  SolveConfig& s = c.solve;
  r.read("solver.method", s.method, kMethods);
  r.read("solver.max_picard", s.max_picard);
  r.read("solver.damping", s.damping);
  r.read("solver.max_newton", s.max_newton);
  r.read("solver.max_backtracks", s.max_backtracks);
  r.read("solver.max_step", s.max_step);
  r.read("solver.pseudo_dt", s.pseudo_dt);
  r.read("solver.tol_residual", s.tol_residual);
  r.read("solver.tol_increment", s.tol_increment);
  r.read("solver.newton_switch", s.newton_switch);
  r.read("solver.divergence_window", s.divergence_window);
  r.read("solver.force_update", s.force_update, kForceUpdates);
  r.read("solver.force_tol", s.force_tol);
  r.read("solver.force_gain", s.force_gain);
  r.read("solver.max_outer", s.max_outer);
  r.read("solver.monotonicity_retries", s.monotonicity_retries);

  r.read("physics.paper_defaults", c.paper_defaults);
  if (!c.paper_defaults) c.inputs = PhysicalInputs{};
  PhysicalInputs& phys = c.inputs;
  r.read("physics.eta0", phys.eta0);
  r.read("physics.Rx", phys.Rx);
  r.read("physics.G0", phys.G0);
  r.read("physics.U", phys.U);
  r.read("physics.W", phys.W);
  r.read("physics.alpha", phys.alpha);
  r.read("physics.p0", phys.p0);
  r.read("physics.h00_init", phys.h00_init);
  if (auto v = r.get("physics.z"); v && !v->empty()) phys.z_override = parse_double(*v, "physics.z");
  r.read("physics.log_base", c.log_base, kLogBases);
  if (auto v = r.get("physics.force_target"); v && !v->empty()) c.force_target = parse_double(*v, "physics.force_target");
  r.read("physics.negative_pressure", c.lubricant.negative, kNegatives);
  r.read("physics.clamp", c.lubricant.clamp);
  r.read("physics.clamp_mode", c.lubricant.clamp_mode, kClampModes);
  r.read("physics.eps_min", c.lubricant.eps_min);
  r.read("physics.eps_max", c.lubricant.eps_max);
  r.read("physics.derivative_floor", c.lubricant.derivative_floor);
  r.read("physics.smoothing_width", c.lubricant.smoothing_width);
  r.read("physics.clamp_collapse", c.lubricant.clamp_collapse);
  r.read("physics.kernel_sign", c.kernel.sign);
  r.read("physics.continuation_start", c.continuation_start);
  r.read("physics.continuation_factor", c.continuation_factor);
  r.read("physics.continuation_min_factor", c.continuation_min_factor);

  r.read("sweep.kind", c.sweep, kSweepKinds);
  r.read("sweep.levels", c.sweep_levels);
  if (auto v = r.get("sweep.degrees")) c.sweep_degrees = parse_ints(*v, "sweep.degrees");
  if (auto v = r.get("sweep.eps_p")) c.sweep_eps = parse_doubles(*v, "sweep.eps_p");

  if (auto v = r.get("output.directory"); v && !v->empty()) c.output_dir = *v;
  r.check_unknown();

  try {
    c.domain.validate();
    if (c.degree < 1) throw ConfigError("discretization.degree must be >= 1");
    c.form.validate();
    c.penalty.validate();
    c.solve.validate();
    if (c.contact()) validate(c.inputs);
    else make_case(c);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

/// Resolved configuration with every key, floats at 17 significant digits.
inline std::string write_config(const RunConfig& c) {
  using namespace detail;
  std::ostringstream os;
  auto num = [](double v) { return format_g17(v); };
  auto list = [&](const auto& values) {
    std::string out;
    for (const auto& v : values) {
      if (!out.empty()) out += ",";
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>) out += num(v);
      else out += std::to_string(v);
    }
    return out;
  };
  const int dim = c.domain.dim;
  std::vector<double> lower(c.domain.lower.begin(), c.domain.lower.begin() + dim);
  std::vector<double> upper(c.domain.upper.begin(), c.domain.upper.begin() + dim);
  std::vector<int> cells(c.domain.cells.begin(), c.domain.cells.begin() + dim);
  const SolveConfig& s = c.solve;
  const PhysicalInputs& in = c.inputs;
  os << "[case]\n"
     << "kind = " << enum_name(kCaseKinds, c.kind) << "\n"
     << "name = " << c.case_name << "\n"
     << "coefficient = " << enum_name(kCoefficientModes, c.coefficient) << "\n"
     << "seed = " << c.seed << "\n\n"
     << "[domain]\n"
     << "lower = " << list(lower) << "\n"
     << "upper = " << list(upper) << "\n"
     << "cells = " << list(cells) << "\n\n"
     << "[discretization]\n"
     << "degree = " << c.degree << "\n"
     << "extra_points = " << c.space.extra_points << "\n"
     << "a_k = " << num(c.form.a_k) << "\n"
     << "beta = " << num(c.form.beta) << "\n"
     << "theta = " << num(c.form.theta) << "\n"
     << "weighting = " << enum_name(kWeightings, c.form.weighting) << "\n\n"
     << "[penalty]\n"
     << "enabled = " << (c.penalty.enabled ? "true" : "false") << "\n"
     << "eps_p = " << num(c.penalty.eps_p) << "\n"
     << "schedule = " << list(c.penalty.schedule) << "\n"
     << "treatment = " << enum_name(kTreatments, c.penalty.treatment) << "\n\n"
     << "[solver]\n"
     << "method = " << enum_name(kMethods, s.method) << "\n"
     << "max_picard = " << s.max_picard << "\n"
     << "damping = " << num(s.damping) << "\n"
     << "max_newton = " << s.max_newton << "\n"
     << "max_backtracks = " << s.max_backtracks << "\n"
     << "max_step = " << num(s.max_step) << "\n"
     << "pseudo_dt = " << num(s.pseudo_dt) << "\n"
     << "tol_residual = " << num(s.tol_residual) << "\n"
     << "tol_increment = " << num(s.tol_increment) << "\n"
     << "newton_switch = " << num(s.newton_switch) << "\n"
     << "divergence_window = " << s.divergence_window << "\n"
     << "force_update = " << enum_name(kForceUpdates, s.force_update) << "\n"
     << "force_tol = " << num(s.force_tol) << "\n"
     << "force_gain = " << num(s.force_gain) << "\n"
     << "max_outer = " << s.max_outer << "\n"
     << "monotonicity_retries = " << s.monotonicity_retries << "\n\n"
     << "[physics]\n"
     << "paper_defaults = " << (c.paper_defaults ? "true" : "false") << "\n"
     << "eta0 = " << num(in.eta0) << "\n"
     << "Rx = " << num(in.Rx) << "\n"
     << "G0 = " << num(in.G0) << "\n"
     << "U = " << num(in.U) << "\n"
     << "W = " << num(in.W) << "\n"
     << "alpha = " << num(in.alpha) << "\n"
     << "p0 = " << num(in.p0) << "\n"
     << "h00_init = " << num(in.h00_init) << "\n"
     << "z = " << (in.z_override ? num(*in.z_override) : std::string()) << "\n"
     << "log_base = " << enum_name(kLogBases, c.log_base) << "\n"
     << "force_target = " << (std::isnan(c.force_target) ? std::string() : num(c.force_target)) << "\n"
     << "negative_pressure = " << enum_name(kNegatives, c.lubricant.negative) << "\n"
     << "clamp = " << (c.lubricant.clamp ? "true" : "false") << "\n"
     << "clamp_mode = " << enum_name(kClampModes, c.lubricant.clamp_mode) << "\n"
     << "eps_min = " << num(c.lubricant.eps_min) << "\n"
     << "eps_max = " << num(c.lubricant.eps_max) << "\n"
     << "derivative_floor = " << num(c.lubricant.derivative_floor) << "\n"
     << "smoothing_width = " << num(c.lubricant.smoothing_width) << "\n"
     << "clamp_collapse = " << (c.lubricant.clamp_collapse ? "true" : "false") << "\n"
     << "kernel_sign = " << num(c.kernel.sign) << "\n"
     << "continuation_start = " << num(c.continuation_start) << "\n"
     << "continuation_factor = " << num(c.continuation_factor) << "\n"
     << "continuation_min_factor = " << num(c.continuation_min_factor) << "\n\n"
     << "[sweep]\n"
     << "kind = " << enum_name(kSweepKinds, c.sweep) << "\n"
     << "levels = " << c.sweep_levels << "\n"
     << "degrees = " << list(c.sweep_degrees) << "\n"
     << "eps_p = " << list(c.sweep_eps) << "\n\n"
     << "[output]\n"
     << "directory = " << c.output_dir << "\n";
  return os.str();
}

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string config_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline RunConfig default_run_config() { return detail::kind_defaults(CaseKind::line); }

/// Contact setup described by a configuration.
inline ContactSetup to_contact_setup(const RunConfig& c) {
  ContactSetup s;
  s.kind = c.contact_kind();
  s.domain = c.domain;
  s.degree = c.degree;
  s.inputs = c.inputs;
  s.log_base = c.log_base;
  s.lubricant = c.lubricant;
  s.kernel = c.kernel;
  s.space = c.space;
  s.form = c.form;
  s.penalty = c.penalty;
  s.solve = c.solve;
  s.continuation_start = c.continuation_start;
  s.continuation_factor = c.continuation_factor;
  s.continuation_min_factor = c.continuation_min_factor;
  s.force_target = c.force_target;
  return s;
}

inline StudyOptions to_study_options(const RunConfig& c) {
  StudyOptions o;
  o.form = c.form;
  o.solve = c.solve;
  o.space = c.space;
  o.eps_p = c.penalty.enabled ? c.penalty.eps_p : 0.0;
  return o;
}

}  // namespace ehl
