// maslov-wave: batch driver for the pulse construction, index bookkeeping,
// spectrum scan, and PDE experiments.  Every subcommand resolves its settings
// from an optional JSON config file plus flag overrides (flags win), writes
// artifacts atomically into --out, embeds the resolved config in each of
// them, and finishes with a manifest listing what was produced.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mwave/io.hpp"
#include "mwave/maslov.hpp"
#include "mwave/pde.hpp"

using namespace mwave;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr int kSchemaVersion = 1;

struct Settings {
  double a = 0.25;
  double gamma = 1.0;
  double eps = 1e-4;
  std::string out = "out";
  std::string eps_list;  // comma-separated sweep for solve-wave

  // maslov
  double interior_pad = 0.08;
  double margin_threshold = 0.02;
  int skip_admissible = 0;

  // corners
  double a_lo = 0.05;
  double a_hi = 0.45;
  int a_count = 9;
  double u_tau_frac = 0.5;

  // spectrum-scan
  double lambda_lo = 0.01;
  double lambda_hi = 1.0;
  int lambda_count = 20;

  // pde-sim
  double x_lo = -25.0;
  double x_hi = 120.0;
  int nx = 726;
  double dt = 0.01;
  double t_end = 60.0;
  double record_dt = 0.5;
  double stop_ratio = 0.0;
  std::string pert = "bump";  // bump | zero | translate
  double bump_amp = 0.05;
  double bump_center = 10.0;
  double bump_width = 1.0;
};

// Settings keys a config file may carry; anything else is a typo and is
// rejected so a silently ignored knob can never skew a sweep.
void apply_config_file(const fs::path& path, Settings& s) {
  const json cfg = json::parse(read_text(path));
  if (!cfg.is_object())
    throw std::invalid_argument("config file must hold a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    if (key == "a") s.a = value.get<double>();
    else if (key == "gamma") s.gamma = value.get<double>();
    else if (key == "eps") s.eps = value.get<double>();
    else if (key == "out") s.out = value.get<std::string>();
    else if (key == "eps_list") s.eps_list = value.get<std::string>();
    else if (key == "interior_pad") s.interior_pad = value.get<double>();
    else if (key == "margin_threshold") s.margin_threshold = value.get<double>();
    else if (key == "skip_admissible") s.skip_admissible = value.get<int>();
    else if (key == "a_lo") s.a_lo = value.get<double>();
    else if (key == "a_hi") s.a_hi = value.get<double>();
    else if (key == "a_count") s.a_count = value.get<int>();
    else if (key == "u_tau_frac") s.u_tau_frac = value.get<double>();
    else if (key == "lambda_lo") s.lambda_lo = value.get<double>();
    else if (key == "lambda_hi") s.lambda_hi = value.get<double>();
    else if (key == "lambda_count") s.lambda_count = value.get<int>();
    else if (key == "x_lo") s.x_lo = value.get<double>();
    else if (key == "x_hi") s.x_hi = value.get<double>();
    else if (key == "nx") s.nx = value.get<int>();
    else if (key == "dt") s.dt = value.get<double>();
    else if (key == "t_end") s.t_end = value.get<double>();
    else if (key == "record_dt") s.record_dt = value.get<double>();
    else if (key == "stop_ratio") s.stop_ratio = value.get<double>();
    else if (key == "pert") s.pert = value.get<std::string>();
    else if (key == "bump_amp") s.bump_amp = value.get<double>();
    else if (key == "bump_center") s.bump_center = value.get<double>();
    else if (key == "bump_width") s.bump_width = value.get<double>();
    else
      throw std::invalid_argument("unknown config key: " + key);
  }
}

void validate_params(const Settings& s) {
  if (!(s.a > 0.0 && s.a < 0.5))
    throw std::invalid_argument("a must lie in (0, 0.5); got " + fmt17(s.a));
  if (!(s.gamma > 0.0))
    throw std::invalid_argument("gamma must be positive");
  if (!(s.eps > 0.0)) throw std::invalid_argument("eps must be positive");
}

json params_json(const Settings& s) {
  return json{{"a", s.a}, {"gamma", s.gamma}, {"eps", s.eps}, {"out", s.out}};
}

// one "# config {...}" line ahead of the CSV header keeps every artifact
// self-describing without breaking header-row readers that skip comments
std::string with_config_comment(const json& cfg, const std::string& csv) {
  return "# config " + cfg.dump() + "\n" + csv;
}

class ArtifactSink {
 public:
  ArtifactSink(fs::path dir, std::string subcommand, json config)
      : dir_(std::move(dir)),
        subcommand_(std::move(subcommand)),
        config_(std::move(config)) {}

  void write(const std::string& name, const std::string& content) {
    write_text_atomic(dir_ / name, content);
    names_.push_back(name);
  }

  void write_json(const std::string& name, json body) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["config"] = config_;
    doc.update(body);
    write(name, doc.dump(2) + "\n");
  }

  void write_csv(const std::string& name, const std::string& csv) {
    write(name, with_config_comment(config_, csv));
  }

  void finish() {
    json m;
    m["schema_version"] = kSchemaVersion;
    m["subcommand"] = subcommand_;
    m["config"] = config_;
    m["artifacts"] = names_;
    m["status"] = "ok";
    write_text_atomic(dir_ / "manifest.json", m.dump(2) + "\n");
  }

  const json& config() const { return config_; }

 private:
  fs::path dir_;
  std::string subcommand_;
  json config_;
  std::vector<std::string> names_;
};

std::vector<double> parse_eps_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

void run_singular_orbit(const Settings& s) {
  validate_params(s);
  const Params ps = Params::singular(s.a, s.gamma);
  const SingularOrbit orbit = assemble_singular_orbit(ps);

  json cfg = params_json(s);
  cfg.erase("eps");  // the skeleton is an eps = 0 object
  ArtifactSink sink(s.out, "singular-orbit", cfg);
  sink.write_csv("orbit.csv", orbit_to_csv(orbit));

  json constants;
  constants["c_star"] = singular_speed(s.a);
  constants["u_star"] = u_star(s.a);
  constants["v_star"] = v_star(s.a);
  constants["front_strength_quadrature"] = front_k(s.a);
  constants["front_strength_closed_form"] = front_k_closed_form(s.a);
  constants["melnikov_front"] = melnikov_front(s.a);
  constants["melnikov_back"] = melnikov_back(s.a);
  sink.write_json("constants.json", {{"constants", constants}});
  sink.finish();
}

void run_solve_wave(const Settings& s) {
  validate_params(s);
  const SingularOrbit orbit =
      assemble_singular_orbit(Params::singular(s.a, s.gamma));

  std::vector<double> sweep = {s.eps};
  if (!s.eps_list.empty()) sweep = parse_eps_list(s.eps_list);
  if (sweep.empty()) throw std::invalid_argument("eps_list parsed to nothing");
  for (double e : sweep)
    if (!(e > 0.0)) throw std::invalid_argument("eps must be positive");

  json cfg = params_json(s);
  if (!s.eps_list.empty()) cfg["eps_list"] = s.eps_list;
  ArtifactSink sink(s.out, "solve-wave", cfg);

  json branch = json::array();
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    Settings si = s;
    si.eps = sweep[i];
    const WaveProfile prof =
        solve_pulse(Params::make(s.a, s.gamma, sweep[i]), orbit);
    const std::string csv_name =
        sweep.size() == 1 ? "profile.csv"
                          : "profile_" + std::to_string(i) + ".csv";
    sink.write_csv(csv_name, profile_to_csv(prof));
    branch.push_back(json{{"eps", sweep[i]},
                          {"c", prof.p.c},
                          {"residual", prof.residual},
                          {"endpoint_defect", prof.endpoint_defect},
                          {"z_min", prof.z_min()},
                          {"z_max", prof.z_max()},
                          {"profile_csv", csv_name}});
  }
  sink.write_json("wave.json",
                  {{"c_star", singular_speed(s.a)}, {"branch", branch}});
  sink.finish();
}

void run_maslov(const Settings& s) {
  validate_params(s);
  const WaveProfile prof =
      solve_pulse(Params::make(s.a, s.gamma, s.eps),
                  assemble_singular_orbit(Params::singular(s.a, s.gamma)));

  const BundlePathMeta un = compute_unstable_bundle(prof, 0.0);
  const BundlePathMeta st = compute_stable_bundle(prof, 0.0);

  ReferenceOptions ro;
  ro.interior_pad = s.interior_pad;
  ro.margin_threshold = s.margin_threshold;
  ro.skip_admissible = s.skip_admissible;

  ReferencePlane ref;
  ConjugateLedger led;
  for (int attempt = 0; attempt < 5; ++attempt) {
    ref = compute_reference_plane(prof, st, ro);
    led = locate_conjugate_points(prof, un, ref);
    if (!led.degenerate) break;
    ro.skip_admissible += 25;
  }

  json cfg = params_json(s);
  cfg["interior_pad"] = s.interior_pad;
  cfg["margin_threshold"] = s.margin_threshold;
  cfg["skip_admissible"] = s.skip_admissible;
  ArtifactSink sink(s.out, "maslov", cfg);

  json entries = json::array();
  for (const auto& e : led.entries)
    entries.push_back(json{{"z", e.z},
                           {"dim", e.dim},
                           {"gamma", e.gamma_value},
                           {"sign", e.sign},
                           {"segment", e.segment}});
  sink.write_json("ledger.json",
                  {{"entries", entries},
                   {"endpoint", json{{"tau", led.tau},
                                     {"n_plus", led.n_plus},
                                     {"gamma", led.endpoint_gamma},
                                     {"u_tau", led.u_tau}}},
                   {"total", led.total},
                   {"degenerate", led.degenerate},
                   {"c", prof.p.c}});

  // detection-form trace along the transported plane, thinned to keep the
  // artifact readable; the ledger above holds the refined crossings
  std::ostringstream trace;
  trace << "z,beta\n";
  const auto& nodes = un.path.nodes;
  const std::size_t stride = std::max<std::size_t>(1, nodes.size() / 16384);
  for (std::size_t i = 0; i < nodes.size(); i += stride) {
    if (nodes[i].z > led.tau) break;
    trace << fmt17(nodes[i].z) << ','
          << fmt17(detection_form(PluckerPoint{nodes[i].x}, ref.plane))
          << '\n';
  }
  sink.write_csv("beta_trace.csv", trace.str());
  sink.finish();
}

void run_corners(const Settings& s) {
  if (!(s.a_count >= 1)) throw std::invalid_argument("a_count must be >= 1");
  if (!(s.a_lo > 0.0 && s.a_hi < 0.5 && s.a_lo <= s.a_hi))
    throw std::invalid_argument("need 0 < a_lo <= a_hi < 0.5");
  if (!(s.u_tau_frac > 0.0 && s.u_tau_frac < 1.0))
    throw std::invalid_argument("u_tau_frac must lie in (0, 1)");

  json cfg;
  cfg["gamma"] = s.gamma;
  cfg["out"] = s.out;
  cfg["a_lo"] = s.a_lo;
  cfg["a_hi"] = s.a_hi;
  cfg["a_count"] = s.a_count;
  cfg["u_tau_frac"] = s.u_tau_frac;
  ArtifactSink sink(s.out, "corners", cfg);

  auto corner_json = [](const CornerReport& rep) {
    json j;
    j["u_corner"] = rep.u_corner;
    j["pass"] = rep.pass;
    if (rep.which == Corner::Q) {
      j["u_tau"] = rep.u_tau;
      j["det_in"] = rep.det_in;
      j["det_out"] = rep.det_out;
      j["c_times_k"] = rep.c_times_k;
      j["entrance_positive"] = rep.entrance_positive;
      j["exit_lower_link"] = rep.exit_lower_link;
    } else {
      j["k"] = rep.k;
      j["ha"] = rep.ha;
      j["hb"] = rep.hb;
      j["hc"] = rep.hc;
      j["h_min"] = rep.h_min;
    }
    return j;
  };

  json grid = json::array();
  for (int i = 0; i < s.a_count; ++i) {
    const double ai =
        s.a_count == 1
            ? s.a_lo
            : s.a_lo + (s.a_hi - s.a_lo) * i / (s.a_count - 1.0);
    const Params ps = Params::singular(ai, s.gamma);
    const double u_tau = s.u_tau_frac * 2.0 / 3.0 * (ai - 0.5);
    json row;
    row["a"] = ai;
    row["landing"] = corner_json(corner_diagnostics(Corner::P, ps));
    row["jump_off"] = corner_json(corner_diagnostics(Corner::Q, ps, u_tau));
    row["return_landing"] = corner_json(corner_diagnostics(Corner::QHat, ps));
    grid.push_back(std::move(row));
  }
  sink.write_json("corners.json", {{"grid", grid}});
  sink.finish();
}

void run_spectrum_scan(const Settings& s) {
  validate_params(s);
  if (!(s.lambda_count >= 2))
    throw std::invalid_argument("lambda_count must be >= 2");
  if (!(s.lambda_lo > 0.0 && s.lambda_hi > s.lambda_lo))
    throw std::invalid_argument("need 0 < lambda_lo < lambda_hi");

  const WaveProfile prof =
      solve_pulse(Params::make(s.a, s.gamma, s.eps),
                  assemble_singular_orbit(Params::singular(s.a, s.gamma)));

  std::vector<double> grid(s.lambda_count);
  for (int i = 0; i < s.lambda_count; ++i)
    grid[i] = s.lambda_lo +
              (s.lambda_hi - s.lambda_lo) * i / (s.lambda_count - 1.0);
  const EigenvalueScanResult scan = eigenvalue_scan(prof, grid);

  json cfg = params_json(s);
  cfg["lambda_lo"] = s.lambda_lo;
  cfg["lambda_hi"] = s.lambda_hi;
  cfg["lambda_count"] = s.lambda_count;
  ArtifactSink sink(s.out, "spectrum-scan", cfg);

  std::ostringstream csv;
  csv << "lambda,beta\n";
  for (std::size_t i = 0; i < scan.beta_values.size(); ++i)
    csv << fmt17(scan.lambdas[i]) << ',' << fmt17(scan.beta_values[i]) << '\n';
  sink.write_csv("scan.csv", csv.str());
  sink.write_json("scan.json",
                  {{"sign_changes", scan.sign_changes},
                   {"complete", scan.complete},
                   {"first_failed_index", scan.first_failed_index},
                   {"lagrangian_residual_max", scan.lagrangian_residual_max},
                   {"c", prof.p.c}});
  sink.finish();
}

void run_pde_sim(const Settings& s) {
  validate_params(s);
  if (s.pert != "bump" && s.pert != "zero" && s.pert != "translate")
    throw std::invalid_argument("pert must be bump, zero or translate");

  const WaveProfile prof =
      solve_pulse(Params::make(s.a, s.gamma, s.eps),
                  assemble_singular_orbit(Params::singular(s.a, s.gamma)));
  const ProfileInterpolant interp(prof);

  Perturbation pert;
  if (s.pert == "zero") {
    pert = [](double) { return std::array<double, 2>{0.0, 0.0}; };
  } else if (s.pert == "translate") {
    pert = [&](double x) {
      const Vec4 d = vector_field(interp.state(x), prof.p);
      return std::array<double, 2>{0.01 * d[0], 0.01 * d[1]};
    };
  } else {
    const double amp = s.bump_amp, x0 = s.bump_center, w = s.bump_width;
    pert = [amp, x0, w](double x) {
      return std::array<double, 2>{
          amp * std::exp(-(x - x0) * (x - x0) / (2.0 * w * w)), 0.0};
    };
  }

  PdeGrid grid;
  grid.x_lo = s.x_lo;
  grid.x_hi = s.x_hi;
  grid.nx = s.nx;
  grid.dt = s.dt;
  PdeOptions opt;
  opt.t_end = s.t_end;
  opt.record_dt = s.record_dt;
  opt.stop_ratio = s.stop_ratio;
  const PdeRunResult run = evolve(prof, pert, grid, opt);

  json cfg = params_json(s);
  cfg["x_lo"] = s.x_lo;
  cfg["x_hi"] = s.x_hi;
  cfg["nx"] = s.nx;
  cfg["dt"] = s.dt;
  cfg["t_end"] = s.t_end;
  cfg["record_dt"] = s.record_dt;
  cfg["stop_ratio"] = s.stop_ratio;
  cfg["pert"] = s.pert;
  if (s.pert == "bump") {
    cfg["bump_amp"] = s.bump_amp;
    cfg["bump_center"] = s.bump_center;
    cfg["bump_width"] = s.bump_width;
  }
  ArtifactSink sink(s.out, "pde-sim", cfg);
  sink.write_csv("decay.csv", decay_trace_to_csv(run));
  sink.write_json("pde.json", {{"d0", run.d0},
                               {"d_final", run.d_final},
                               {"shift_final", run.shift_final},
                               {"blew_up", run.blew_up},
                               {"samples", run.trace.size()}});
  sink.finish();
}

void write_error_report(const Settings& s, const std::string& subcommand,
                        const std::string& kind, const std::string& message) {
  try {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["subcommand"] = subcommand;
    doc["status"] = "error";
    doc["error"] = json{{"kind", kind}, {"message", message}};
    write_text_atomic(fs::path(s.out) / "error.json", doc.dump(2) + "\n");
  } catch (...) {
    // the report is best-effort; the exit status already carries the failure
  }
}

}  // namespace

int main(int argc, char** argv) {
  Settings s;

  // the config file seeds the defaults, so flags parsed afterwards win
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    try {
      if (arg == "--config" && i + 1 < argc) {
        apply_config_file(argv[i + 1], s);
        break;
      }
      if (arg.rfind("--config=", 0) == 0) {
        apply_config_file(arg.substr(9), s);
        break;
      }
    } catch (const std::exception& ex) {
      std::fprintf(stderr, "error: %s\n", ex.what());
      return 2;
    }
  }

  CLI::App app{"fast-pulse construction and stability toolkit"};
  app.require_subcommand(1);
  std::string config_path;  // consumed above; declared so --config parses

  auto add_common = [&](CLI::App* sc) {
    sc->add_option("--config", config_path, "JSON config file (flags win)");
    sc->add_option("--a", s.a, "cubic parameter in (0, 0.5)");
    sc->add_option("--gamma", s.gamma, "recovery coupling");
    sc->add_option("--eps", s.eps, "timescale separation");
    sc->add_option("--out", s.out, "output directory");
    return sc;
  };

  auto* sc_orbit = add_common(app.add_subcommand(
      "singular-orbit", "assemble the eps=0 skeleton and its constants"));
  auto* sc_wave = add_common(app.add_subcommand(
      "solve-wave", "construct the pulse profile and wave speed"));
  sc_wave->add_option("--eps-list", s.eps_list,
                      "comma-separated eps sweep (overrides --eps)");
  auto* sc_maslov = add_common(app.add_subcommand(
      "maslov", "conjugate-point ledger along the computed pulse"));
  sc_maslov->add_option("--interior-pad", s.interior_pad,
                        "how far inside the return segment tau may sit");
  sc_maslov->add_option("--margin-threshold", s.margin_threshold,
                        "minimum admissible transversality margin");
  sc_maslov->add_option("--skip-admissible", s.skip_admissible,
                        "skip this many admissible nodes before choosing tau");
  auto* sc_corners = add_common(app.add_subcommand(
      "corners", "transition-corner certificates across an a-grid"));
  sc_corners->add_option("--a-lo", s.a_lo, "grid start");
  sc_corners->add_option("--a-hi", s.a_hi, "grid end");
  sc_corners->add_option("--a-count", s.a_count, "grid size");
  sc_corners->add_option("--u-tau-frac", s.u_tau_frac,
                         "reference point as a fraction of the landing value");
  auto* sc_scan = add_common(app.add_subcommand(
      "spectrum-scan", "detection-form scan over real spectral parameters"));
  sc_scan->add_option("--lambda-lo", s.lambda_lo, "scan start (> 0)");
  sc_scan->add_option("--lambda-hi", s.lambda_hi, "scan end");
  sc_scan->add_option("--lambda-count", s.lambda_count, "scan points");
  auto* sc_pde = add_common(app.add_subcommand(
      "pde-sim", "evolve a perturbed pulse in the co-moving frame"));
  sc_pde->add_option("--x-lo", s.x_lo, "grid left edge");
  sc_pde->add_option("--x-hi", s.x_hi, "grid right edge");
  sc_pde->add_option("--nx", s.nx, "grid points");
  sc_pde->add_option("--dt", s.dt, "time step");
  sc_pde->add_option("--t-end", s.t_end, "final time");
  sc_pde->add_option("--record-dt", s.record_dt, "distance sampling period");
  sc_pde->add_option("--stop-ratio", s.stop_ratio,
                     "stop once d0/d(t) reaches this (0 = run to t_end)");
  sc_pde->add_option("--pert", s.pert, "bump | zero | translate");
  sc_pde->add_option("--bump-amp", s.bump_amp, "bump amplitude");
  sc_pde->add_option("--bump-center", s.bump_center, "bump center");
  sc_pde->add_option("--bump-width", s.bump_width, "bump gaussian width");

  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (sc_orbit->parsed()) run_singular_orbit(s);
    else if (sc_wave->parsed()) run_solve_wave(s);
    else if (sc_maslov->parsed()) run_maslov(s);
    else if (sc_corners->parsed()) run_corners(s);
    else if (sc_scan->parsed()) run_spectrum_scan(s);
    else if (sc_pde->parsed()) run_pde_sim(s);
  } catch (const std::invalid_argument& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    write_error_report(s, name, "validation", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    write_error_report(s, name, "runtime", ex.what());
    return 1;
  }
  return 0;
}
