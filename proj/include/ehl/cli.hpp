#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "ehl/config.hpp"

namespace ehl::cli {

enum ExitCode : int { ok = 0, parse_error = 2, solver_error = 3, io_error = 4 };

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// EHL_OUT when set, else the configured directory.
inline std::filesystem::path output_directory(const RunConfig& c) {
  if (const char* env = std::getenv("EHL_OUT"); env && *env) return env;
  return c.output_dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  os.close();
  if (!os) throw IoError("failed writing " + path.string());
}

/// x[,y],value rows at the volume quadrature points.
inline std::string point_csv(const DgSpace& s, const Eigen::VectorXd& values) {
  std::ostringstream os;
  os << (s.dim() == 2 ? "x,y,value\n" : "x,value\n");
  const std::vector<Point> pts = quadrature_points(s);
  for (int i = 0; i < s.num_volume_points(); ++i) {
    const Point& x = pts[static_cast<std::size_t>(i)];
    os << format_g17(x[0]) << ',';
    if (s.dim() == 2) os << format_g17(x[1]) << ',';
    os << format_g17(values[i]) << "\n";
  }
  return os.str();
}

inline nlohmann::ordered_json number(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

inline std::function<void(const std::string&)> stderr_log() {
  return [](const std::string& line) { std::cerr << line << "\n"; };
}

inline std::filesystem::path prepare_output(const RunConfig& c) {
  const auto dir = output_directory(c);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_file(dir / "resolved.cfg", write_config(c));
  return dir;
}

inline int run_contact(const RunConfig& c, const std::filesystem::path& dir, const std::string& hash) {
  ContactSetup setup = to_contact_setup(c);
  setup.solve.log = stderr_log();
  const ContactRun run = solve_contact(setup);
  const SolveReport& r = run.report;
  nlohmann::ordered_json j;
  j["case"] = to_string(setup.kind);
  j["config_hash"] = hash;
  j["seed"] = c.seed;
  j["converged"] = r.converged;
  j["message"] = r.message;
  j["elements"] = run.space->mesh().num_elements();
  j["degree"] = c.degree;
  j["dofs"] = run.space->size();
  j["lambda"] = number(run.lubricant.lambda);
  j["pH"] = number(run.derived.pH);
  j["z"] = number(run.derived.z);
  j["h00"] = number(r.h00);
  j["force_target"] = number(setup.target());
  j["force_integral"] = number(r.pressure.space ? integral(r.pressure) : std::nan(""));
  j["force_residual"] = number(r.force_residual);
  j["residual"] = number(r.residual);
  j["residual_l2"] = number(r.residual_l2);
  j["increment"] = number(r.increment);
  j["min_pressure"] = number(r.min_u);
  j["min_film"] = number(r.min_film);
  j["negative_part"] = number(r.negative_part);
  j["complementarity"] = number(r.complementarity);
  j["clamp_active"] = r.clamp_active;
  j["monotone_force"] = r.monotone_force;
  j["picard_iterations"] = r.picard_iterations;
  j["newton_iterations"] = r.newton_iterations;
  j["outer_iterations"] = r.outer_iterations;
  j["penalty_levels"] = r.penalty_levels;
  write_file(dir / "report.json", j.dump(2) + "\n");
  if (r.pressure.space) {
    write_file(dir / "pressure.csv", point_csv(*run.space, volume_values(r.pressure)));
    if (r.film.size() > 0) write_file(dir / "film.csv", point_csv(*run.space, r.film));
  }
  if (!r.converged) {
    std::cerr << "error: solver did not converge: " << r.message << "\n";
    return solver_error;
  }
  return ok;
}

inline int run_study_case(const RunConfig& c, const std::filesystem::path& dir, const std::string& hash) {
  const ManufacturedCase mc = make_case(c);
  StudyOptions opt = to_study_options(c);
  opt.solve.log = stderr_log();
  const Mesh mesh = Mesh::build(mc.domain, c.degree);
  RateTable t;
  t.case_name = mc.name;
  t.config_hash = hash;
  SolveReport r;
  t.rows.push_back(solve_case(mc, mesh, opt, std::nullopt, &r));
  const RateRow& row = t.rows.back();
  const Problem pb = case_problem(mc, mesh, opt, mc.penalty ? opt.eps_p : 0.0);

  nlohmann::ordered_json j;
  j["case"] = mc.name;
  j["config_hash"] = hash;
  j["seed"] = c.seed;
  j["converged"] = row.status != "failed";
  j["message"] = row.message;
  j["elements"] = pb.space->mesh().num_elements();
  j["degree"] = c.degree;
  j["dofs"] = pb.space->size();
  j["eps_p"] = number(row.eps_p);
  j["err_l2"] = number(row.err_l2);
  j["err_energy"] = number(row.err_energy);
  j["err_energy_nu"] = number(row.err_energy_nu);
  j["min_pressure"] = number(row.min_u);
  j["residual"] = number(r.residual);
  j["newton_iterations"] = r.newton_iterations;
  j["picard_iterations"] = r.picard_iterations;
  write_file(dir / "report.json", j.dump(2) + "\n");
  std::ostringstream rates;
  write_rates_csv(rates, t);
  write_file(dir / "rates.csv", rates.str());
  if (r.pressure.space) {
    write_file(dir / "pressure.csv", point_csv(*pb.space, volume_values(r.pressure)));
    write_file(dir / "film.csv", point_csv(*pb.space, film_values(pb, r.pressure.coefficients)));
  }
  if (row.status == "failed") {
    std::cerr << "error: solver failed: " << row.message << "\n";
    return solver_error;
  }
  return ok;
}

/// `ehl run`: one solve, artifacts in the output directory.
inline int run(const std::string& config_path) {
  RunConfig c;
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read config file " + config_path);
    c = parse_config(in);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return parse_error;
  }
  try {
    const auto dir = prepare_output(c);
    const std::string hash = config_hash(write_config(c));
    return c.contact() ? run_contact(c, dir, hash) : run_study_case(c, dir, hash);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return io_error;
  } catch (const std::exception& e) {
    std::cerr << "error: solver failure: " << e.what() << "\n";
    return solver_error;
  }
}

struct SweepOptions {
  std::optional<int> levels;
  std::optional<std::vector<int>> degrees;
  bool allow_partial = false;
};

/// `ehl sweep`: a rate table for a manufactured or obstacle case.
inline int sweep(const std::string& config_path, const SweepOptions& so) {
  RunConfig c;
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read config file " + config_path);
    c = parse_config(in);
    if (c.contact()) throw ConfigError("sweep needs case.kind = manufactured or obstacle");
    if (so.levels) c.sweep_levels = *so.levels;
    if (so.degrees) c.sweep_degrees = *so.degrees;
    if (c.sweep == SweepKind::penalty) {
      if (c.sweep_eps.empty()) throw ConfigError("empty sweep list: sweep.eps_p");
    } else {
      if (c.sweep_degrees.empty()) throw ConfigError("empty sweep list: degrees");
      for (int p : c.sweep_degrees)
        if (p < 1) throw ConfigError("sweep degrees must be >= 1");
      if (c.sweep == SweepKind::h && c.sweep_levels < 1) throw ConfigError("empty sweep list: levels must be >= 1");
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return parse_error;
  }
  try {
    const auto dir = prepare_output(c);
    const std::string hash = config_hash(write_config(c));
    const ManufacturedCase mc = make_case(c);
    StudyOptions opt = to_study_options(c);
    auto run_table = [&](const StudyOptions& o) {
      switch (c.sweep) {
        case SweepKind::h: return run_h_sweep(mc, c.sweep_degrees, c.sweep_levels, o);
        case SweepKind::p: return run_p_sweep(mc, c.sweep_degrees, o);
        case SweepKind::penalty: break;
      }
      return run_penalty_sweep(mc, c.sweep_eps, c.degree, o);
    };
    RateTable t = run_table(opt);
    t.config_hash = hash;
    std::ostringstream os;
    write_rates_csv(os, t);
    write_file(dir / "rates.csv", os.str());
    if (c.sweep == SweepKind::penalty) {
      std::ostringstream ps;
      write_penalty_csv(ps, t);
      write_file(dir / "penalty.csv", ps.str());
    }
    if (c.sweep == SweepKind::h && c.form.theta != 0.0) {
      StudyOptions o0 = opt;
      o0.form.theta = 0.0;
      RateTable t0 = run_table(o0);
      std::ostringstream s0;
      write_rates_csv(s0, t0);
      write_file(dir / "rates_theta0.csv", s0.str());
    }
    std::size_t failed = 0;
    for (const RateRow& r : t.rows) {
      if (r.status == "failed") {
        ++failed;
        std::cerr << "row h=" << r.h << " p=" << r.p << " failed: " << r.message << "\n";
      }
    }
    if (failed == 0) return ok;
    if (so.allow_partial && failed < t.rows.size()) return ok;
    return solver_error;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return io_error;
  } catch (const std::exception& e) {
    std::cerr << "error: solver failure: " << e.what() << "\n";
    return solver_error;
  }
}

}  // namespace ehl::cli
