// waveband: command-line front end for the boundary-control pipeline.
//
// Exit codes: 0 ok, 2 configuration or input error, 3 numerical failure,
// 4 recovery rejected.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "waveband/boundary_triple.hpp"
#include "waveband/io.hpp"
#include "waveband/linalg.hpp"
#include "waveband/pipeline.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace waveband;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitRejected = 4;

// Flat "section.key" -> value view of the config file.
using Settings = std::map<std::string, std::string>;

Settings read_settings(const std::string& path) {
  Settings s;
  if (path.empty()) return s;
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config '" + path + "'");
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_config(in)) {
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
    s[item.fullname()] = value;
  }
  return s;
}

double parse_number(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash != std::string::npos)
      return std::stod(text.substr(0, slash)) / std::stod(text.substr(slash + 1));
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::configuration, "not a number: '" + text + "'");
  }
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(parse_number(item));
  }
  return out;
}

struct Config {
  std::string potential;
  int n = 1;
  double T = 1.0;
  double h = 1.0 / 256;
  std::string control = "sin";
  std::vector<double> levels;  // step sizes, coarse to fine
  PipelineOptions options;
  std::string c_file;          // import C instead of simulating
  double corrupt = 0.0;
  std::uint64_t seed = 1;
  std::vector<int> eikonal_parts{32, 64};
  std::vector<int> diagonal_parts{8, 16, 32};

  Grid grid(double step) const { return grid_for(T, step, n); }
  bool simulate() const { return c_file.empty(); }
};

struct Flags {
  std::string config;
  std::string out = "out";
  std::string route;
  std::string levels;
  bool cross_validate = false;
  bool frame = false;
};

Config make_config(const Flags& flags) {
  const Settings s = read_settings(flags.config);
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto it = s.find(key);
    if (it == s.end()) return std::nullopt;
    return it->second;
  };
  Config c;
  if (auto v = get("problem.potential")) c.potential = *v;
  if (auto v = get("problem.n")) c.n = int(parse_number(*v));
  if (auto v = get("problem.T")) c.T = parse_number(*v);
  if (auto v = get("problem.h")) c.h = parse_number(*v);
  if (auto v = get("problem.N")) c.h = c.T / parse_number(*v);
  if (auto v = get("problem.control")) c.control = *v;
  if (auto v = get("pipeline.route")) c.options.route = route_from_string(*v);
  if (auto v = get("pipeline.method")) c.options.method = assembly_method_from_string(*v);
  if (auto v = get("pipeline.margin")) c.options.margin_fraction = parse_number(*v);
  if (auto v = get("pipeline.mask_steps")) c.options.mask_steps = int(parse_number(*v));
  if (auto v = get("pipeline.coarsest_parts")) c.options.coarsest_parts = int(parse_number(*v));
  if (auto v = get("pipeline.finest_parts")) c.options.finest_parts = int(parse_number(*v));
  if (auto v = get("pipeline.levels")) c.levels = parse_list(*v);
  if (auto v = get("pipeline.C_file")) c.c_file = *v;
  if (auto v = get("pipeline.corrupt")) c.corrupt = parse_number(*v);
  if (auto v = get("pipeline.seed")) c.seed = std::uint64_t(parse_number(*v));
  if (auto v = get("verify.eikonal_parts"))
    for (c.eikonal_parts.clear(); double p : parse_list(*v)) c.eikonal_parts.push_back(int(p));
  if (auto v = get("verify.diagonal_parts"))
    for (c.diagonal_parts.clear(); double p : parse_list(*v)) c.diagonal_parts.push_back(int(p));

  if (!flags.route.empty()) c.options.route = route_from_string(flags.route);
  if (!flags.levels.empty()) c.levels = parse_list(flags.levels);
  if (c.levels.empty()) c.levels = {c.h};
  std::sort(c.levels.begin(), c.levels.end(), std::greater<>());
  if (c.simulate() && c.potential.empty())
    throw Error(ErrorKind::configuration, "problem.potential is required");
  if (c.n < 1 || c.n > 3) throw Error(ErrorKind::configuration, "n must be 1, 2 or 3");
  if (!(c.T > 0.0)) throw Error(ErrorKind::configuration, "T must be positive");
  if (!(c.options.margin_fraction > 0.0 && c.options.margin_fraction < 0.5))
    throw Error(ErrorKind::configuration, "margin must lie in (0, 0.5)");
  return c;
}

void write_json(const fs::path& path, const json& j) { io::write_text(path, j.dump(2) + "\n"); }

// C either from the simulation or from the configured file, on `grid`.
struct Inputs {
  Grid grid;
  std::optional<HermitianPotential> potential;
  std::optional<DiscreteOperator> W;
  DiscreteOperator C;
};

Inputs load_inputs(const Config& cfg, double h) {
  if (!cfg.simulate()) {
    DiscreteOperator C = io::load_operator(cfg.c_file);
    if (C.role != Role::C) throw Error(ErrorKind::configuration, "operator file does not hold C");
    C.validate();
    Grid g = Grid::make(C.col_slots(), C.h, C.n);
    if (cfg.corrupt > 0.0) C = corrupt_connecting(C, cfg.corrupt, cfg.seed);
    return Inputs{g, std::nullopt, std::nullopt, std::move(C)};
  }
  Grid g = cfg.grid(h);
  HermitianPotential q = make_potential(cfg.potential, g);
  std::optional<KernelField> kernel;
  if (cfg.options.method == AssemblyMethod::kernel) kernel = solve_goursat_kernel(q, g);
  DiscreteOperator W = assemble_control_operator(q, g, cfg.options.method, kernel ? &*kernel : nullptr);
  DiscreteOperator C = compute_connecting(W);
  if (cfg.corrupt > 0.0) C = corrupt_connecting(C, cfg.corrupt, cfg.seed);
  return Inputs{g, std::move(q), std::move(W), std::move(C)};
}

// Error against the configured builtin potential, when there is one.
std::optional<ReconstructionError> truth_error(const Config& cfg, const Recovery& r) {
  if (!cfg.simulate() || cfg.potential.rfind("file:", 0) == 0) return std::nullopt;
  return reconstruction_error(r.potential, builtin_potential(cfg.potential, cfg.n));
}

std::string level_tag(const Grid& g) { return "N" + std::to_string(g.N); }

int cmd_forward(const Config& cfg, const Flags& flags) {
  const Grid g = cfg.grid(cfg.levels.back());
  const HermitianPotential q = make_potential(cfg.potential, g);
  const bool smooth = control_is_smooth(cfg.control);
  const BoundaryControl f = BoundaryControl::sample(builtin_control(cfg.control, g), g, smooth);
  const WaveField u = solve_wave_fd(q, f, g);
  io::save_wave_field(u, fs::path(flags.out) / "wave.csv");
  io::save_wave_field(u, fs::path(flags.out) / "wave_final.csv", g.N);
  json j{{"h", g.h}, {"N", g.N}, {"n", g.n}, {"T", g.T()}, {"potential", cfg.potential},
         {"control", cfg.control}, {"final_l2_norm", l2_norm(u.slice(g.N), g.h)}};
  if (flags.cross_validate) {
    // The solvers only agree at second order for controls with f(0) = f'(0) = 0.
    const std::string probe = smooth ? cfg.control : "smooth";
    const CrossValidationReport r =
        cross_validate_solvers(builtin_potential(cfg.potential, cfg.n), builtin_control(probe, g), g);
    j["cross_validation"] = {{"control", probe}, {"h", r.h}, {"l2_error", r.l2_error},
                             {"l2_error_refined", r.l2_error_refined}, {"ratio", r.ratio}};
  }
  write_json(fs::path(flags.out) / "forward.json", j);
  return 0;
}

int cmd_kernel(const Config& cfg, const Flags& flags) {
  const Grid g = cfg.grid(cfg.levels.back());
  const HermitianPotential q = make_potential(cfg.potential, g);
  const KernelField k = solve_goursat_kernel(q, g);
  std::ofstream out(fs::path(flags.out) / "kernel.csv");
  if (!out) throw Error(ErrorKind::io, "cannot write kernel.csv");
  out << "# x,s";
  for (int a = 0; a < g.n * g.n; ++a) out << ",re" << a << ",im" << a;
  out << "\n";
  for (int i = 0; i <= g.N; ++i)
    for (int j = i; j <= g.N; ++j) {
      out << io::format_double(i * g.h) << ',' << io::format_double(j * g.h);
      const Mat& w = k.at(i, j);
      for (int r = 0; r < g.n; ++r)
        for (int c = 0; c < g.n; ++c)
          out << ',' << io::format_double(w(r, c).real()) << ',' << io::format_double(w(r, c).imag());
      out << "\n";
    }
  json j{{"h", g.h}, {"N", g.N}, {"n", g.n}, {"omega", k.omega}};
  if (flags.frame) {
    const Grid fg = Grid::make(g.N, g.h, g.n, default_frame_extent(make_potential(cfg.potential, g), g.T()));
    const HermitianPotential fq = make_potential(cfg.potential, fg);
    const DefectFrame frame = compute_defect_frame(fq, fg);
    save_frame(frame, flags.out);
    j["frame"] = {{"M", frame.M}, {"K1p0_condition", frame.K1p0_condition}};
  }
  write_json(fs::path(flags.out) / "kernel.json", j);
  return 0;
}

json spectrum_summary(const DiscreteOperator& C) {
  const Eigen::VectorXd ev = linalg::eigh(C.matrix).values;
  return {{"min_eigenvalue", ev(0)},
          {"max_eigenvalue", ev(ev.size() - 1)},
          {"hermitian_deviation", linalg::hermitian_deviation(C.matrix)}};
}

int cmd_connect(const Config& cfg, const Flags& flags) {
  Inputs in = load_inputs(cfg, cfg.levels.back());
  io::save_operator(in.C, fs::path(flags.out) / "C.op");
  if (in.W) io::save_operator(*in.W, fs::path(flags.out) / "W.op");
  json j{{"h", in.grid.h}, {"N", in.grid.N}, {"n", in.grid.n}, {"spectrum", spectrum_summary(in.C)}};
  write_json(fs::path(flags.out) / "connect.json", j);
  return 0;
}

int cmd_factorize(const Config& cfg, const Flags& flags) {
  Inputs in = load_inputs(cfg, cfg.levels.back());
  const CholeskyFactorization ch = factorize_cholesky_nest(in.C);
  const auto residual = [&](const DiscreteOperator& V) {
    return (V.matrix.adjoint() * V.matrix - in.C.matrix).norm() / in.C.matrix.norm();
  };
  json j{{"h", in.grid.h}, {"N", in.grid.N}, {"n", in.grid.n}, {"route", to_string(cfg.options.route)}};
  j["cholesky"] = {{"residual", residual(ch.V)}, {"ridge", ch.ridge}, {"leakage", nest_leakage(ch.V, in.grid)}};
  DiscreteOperator V = ch.V;
  if (cfg.options.route == Route::formula) {
    const auto schedule = halving_schedule(in.grid, cfg.options.coarsest_parts, cfg.options.finest(in.grid));
    const FormulaFactorization f = factorize_formula(in.C, in.grid, schedule);
    const FactorComparison cmp = compare_factors(f.V, ch.V, in.grid.N / cfg.options.finest(in.grid));
    j["formula"] = {{"residual", residual(f.V)},
                    {"leakage", nest_leakage(f.V, in.grid)},
                    {"leakage_relative_frobenius", nest_leakage(f.V, in.grid, true)},
                    {"diagonal", f.diagonal.to_json()},
                    {"gauge", cmp.to_json()}};
    io::save_operator(f.Phi, fs::path(flags.out) / "Phi.op");
    V = f.V;
  }
  io::save_operator(V, fs::path(flags.out) / "V.op");
  const DiscreteOperator Wt = model_control_operator(V, in.grid);
  io::save_operator(Wt, fs::path(flags.out) / "Wt.op");
  j["isometry_transfer"] = [&] {
    const BoundaryControl f = BoundaryControl::sample(builtin_control("smooth", in.grid), in.grid, true);
    const Vec x = f.control_vector();
    const Vec rhs = operator_sqrt(in.C).matrix * (control_reversal(in.grid) * x);
    return std::abs(l2_norm(Wt.matrix * x, in.grid.h) - l2_norm(rhs, in.grid.h));
  }();
  write_json(fs::path(flags.out) / "factorize.json", j);
  return 0;
}

// Runs the pipeline on one level; writes q_hat and returns the report.
json recover_level(const Config& cfg, double h, const fs::path& out, bool& rejected,
                   std::optional<LevelResult>* keep = nullptr) {
  Inputs in = load_inputs(cfg, h);
  LevelResult r = run_from_connecting(std::move(in.C), in.grid, cfg.options, std::move(in.W));
  json j = r.to_json();
  if (r.recovery) {
    io::save_potential(r.recovery->potential, out / ("q_hat_" + level_tag(in.grid) + ".csv"));
    if (auto e = truth_error(cfg, *r.recovery)) j["error"] = {{"nodal", e->nodal}, {"cell", e->cell}};
  } else {
    rejected = true;
  }
  if (keep) *keep = std::move(r);
  return j;
}

int cmd_recover(const Config& cfg, const Flags& flags) {
  bool rejected = false;
  json j = recover_level(cfg, cfg.levels.back(), flags.out, rejected);
  write_json(fs::path(flags.out) / "recover.json", j);
  if (rejected) {
    std::cerr << "recovery rejected: " << j.value("rejection", std::string()) << "\n";
    return kExitRejected;
  }
  return 0;
}

int cmd_roundtrip(const Config& cfg, const Flags& flags) {
  bool rejected = false;
  json j;
  j["potential"] = cfg.potential;
  j["route"] = to_string(cfg.options.route);
  j["levels"] = json::array();
  for (double h : cfg.levels) j["levels"].push_back(recover_level(cfg, h, flags.out, rejected));
  const auto& lv = j["levels"];
  if (lv.size() >= 2 && lv.front().contains("error") && lv.back().contains("error"))
    j["refines"] = lv.back()["error"]["cell"].get<double>() < lv.front()["error"]["cell"].get<double>();
  write_json(fs::path(flags.out) / "roundtrip.json", j);
  if (rejected) return kExitRejected;
  return 0;
}

int cmd_verify(const Config& cfg, const Flags& flags) {
  if (cfg.levels.size() < 2) throw Error(ErrorKind::configuration, "verify needs at least two levels");
  const fs::path out = flags.out;
  std::vector<PipelineLevel> levels;
  json j;
  j["levels"] = json::array();
  std::ofstream diag(out / "diagonal_convergence.csv"), eik(out / "eikonal.csv");
  if (!diag || !eik) throw Error(ErrorKind::io, "cannot write plot tables");
  diag << "h,delta,step_difference,sigma_min\n";
  eik << "h,delta,deviation\n";
  for (double h : cfg.levels) {
    bool rejected = false;
    std::optional<LevelResult> r;
    j["levels"].push_back(recover_level(cfg, h, out, rejected, &r));
    const Grid& g = r->level.grid;
    if (r->level.W) {
      DiagonalOptions opts;
      opts.source = ProjectionSource::exact_cutoff;
      std::vector<NestPartition> schedule;
      for (int p : cfg.diagonal_parts) schedule.push_back(make_partition(g, p));
      const DiagonalLimit lim = diagonal_limit(*r->level.W, g, schedule, opts);
      for (const auto& l : lim.report.levels)
        diag << io::format_double(g.h) << ',' << io::format_double(l.delta) << ','
             << (l.step_difference ? io::format_double(*l.step_difference) : "") << ','
             << io::format_double(l.sigma_min) << "\n";
      const DiscreteOperator phi = control_orthogonalizer(*r->level.W, g);
      json e = json::array();
      for (const EikonalLevel& l : eikonal_check(*r->level.W, phi, g, cfg.eikonal_parts)) {
        eik << io::format_double(g.h) << ',' << io::format_double(l.delta) << ','
            << io::format_double(l.deviation) << "\n";
        e.push_back({{"delta", l.delta}, {"deviation", l.deviation}, {"pass", l.deviation <= 2.0 * l.delta}});
      }
      j["levels"].back()["eikonal"] = e;
    }
    levels.push_back(std::move(r->level));
  }
  const ConditionsReport report = verify_conditions(levels);
  j["conditions"] = report.to_json();
  {
    std::ofstream c(out / "conditions.csv");
    c << "condition,pass,surrogate";
    for (const auto& l : levels) c << ",N" << l.grid.N;
    c << "\n";
    for (const auto& e : report.entries) {
      c << e.name << ',' << int(e.pass) << ',' << int(e.surrogate);
      for (double v : e.values) c << ',' << io::format_double(v);
      c << "\n";
    }
  }
  if (cfg.simulate()) {
    // Orthogonalizer consistency between T / 2 and T on the finest step.
    const double h = cfg.levels.back();
    const Grid g_long = cfg.grid(h);
    if (g_long.N % 2 == 0 && g_long.N >= 16) {
      const Grid g_short = Grid::make(g_long.N / 2, h, cfg.n);
      const HermitianPotential q = make_potential(cfg.potential, g_long);
      const DiscreteOperator Wl = assemble_control_operator(q, g_long);
      const DiscreteOperator Ws = assemble_control_operator(q, g_short);
      j["orthogonalizer_consistency"] = orthogonalizer_consistency(
          control_orthogonalizer(Ws, g_short), g_short, control_orthogonalizer(Wl, g_long), g_long);
    }
    // Conjugation check when q admits a defect frame.
    try {
      const Grid g = cfg.grid(h);
      const Grid fg = Grid::make(g.N, g.h, g.n, default_frame_extent(make_potential(cfg.potential, g), g.T()));
      const DefectFrame frame = compute_defect_frame(make_potential(cfg.potential, fg), fg);
      const std::string tag = "q_hat_" + level_tag(g) + ".csv";
      if (fs::exists(out / tag))
        j["conjugation"] = conjugation_check(io::load_potential(out / tag), &frame).to_json();
    } catch (const Error& e) {
      j["conjugation"] = {{"skipped", e.what()}};
    }
  }
  write_json(out / "verify.json", j);
  return 0;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::configuration:
    case ErrorKind::io:
    case ErrorKind::grid:
    case ErrorKind::coverage:
    case ErrorKind::frame_missing:
      return kExitConfig;
    case ErrorKind::recovery_rejected:
      return kExitRejected;
    default:
      return kExitNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary-control wave model pipeline for matrix Schrodinger operators"};
  app.require_subcommand(1);
  Flags flags;
  app.add_option("--config", flags.config, "Config file (key = value sections)");
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--route", flags.route, "Factorization route")->check(CLI::IsMember({"cholesky", "formula"}));
  app.add_option("--levels", flags.levels, "Comma separated step sizes, e.g. 1/128,1/256");

  std::map<std::string, int (*)(const Config&, const Flags&)> commands{
      {"forward", cmd_forward}, {"kernel", cmd_kernel},   {"connect", cmd_connect},
      {"factorize", cmd_factorize}, {"recover", cmd_recover}, {"verify", cmd_verify},
      {"roundtrip", cmd_roundtrip}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, fn] : commands) subs[name] = app.add_subcommand(name);
  subs["forward"]->add_flag("--cross-validate", flags.cross_validate, "Compare against the kernel solver");
  subs["kernel"]->add_flag("--frame", flags.frame, "Also write the defect frame");
  for (auto& [name, sub] : subs) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const Config cfg = make_config(flags);
    fs::create_directories(flags.out);
    for (const auto& [name, sub] : subs)
      if (sub->parsed()) return commands.at(name)(cfg, flags);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
