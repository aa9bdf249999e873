// moire: command-line front end. Exit codes: 0 success, 1 error, 2 empty result.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "moire/moire.hpp"

namespace fs = std::filesystem;
using namespace moire;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitEmpty = 2;

struct EmptyResult : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Comma- or space-separated numbers, each accepting the config file's constant forms.
std::vector<double> parse_numbers(const std::string& spec, std::size_t expected, const char* flag) {
  std::string s = spec;
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    auto v = detail::parse_number(tok);
    if (!v) throw Error(ErrorKind::InvalidArgument, std::string(flag) + ": cannot parse number '" + tok + "'");
    out.push_back(*v);
  }
  if (out.size() != expected)
    throw Error(ErrorKind::InvalidArgument,
                std::string(flag) + ": expected " + std::to_string(expected) + " numbers, got '" + spec + "'");
  return out;
}

Vec2 parse_point(const std::string& s, const char* flag) {
  const auto v = parse_numbers(s, 2, flag);
  return {v[0], v[1]};
}

struct Common {
  std::string config;
  std::optional<double> level;
  std::optional<double> budget_L;
  std::optional<double> cell_h;
  std::string out;
  std::string format;
  std::string window;
  std::size_t workers{0};
};

void add_common(CLI::App* cmd, Common& c, bool needs_config = true) {
  auto* opt = cmd->add_option("--config", c.config, "potential definition file");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory (default: primary output to stdout)");
  cmd->add_option("--format", c.format, "csv | json | svg")->check(CLI::IsMember({"csv", "json", "svg"}));
}

void add_budget(CLI::App* cmd, Common& c) {
  cmd->add_option("--level", c.level, "level E");
  cmd->add_option("--budget-L", c.budget_L, "arc-length budget L per trace");
  cmd->add_option("--cell-h", c.cell_h, "grid cell size h");
  cmd->add_option("--window", c.window, "seed window x0,y0,x1,y1");
}

TraceBudget resolve_budget(const SuperpositionPotential& f, const Common& c) {
  TraceBudget b = TraceBudget::defaults_for(f);
  if (c.cell_h) b.cell_size = *c.cell_h;
  if (c.budget_L) b.max_arc_length = *c.budget_L;
  b.max_cells = TraceBudget::default_max_cells(b.cell_size, b.max_arc_length);
  b.validate(f);
  return b;
}

Window resolve_window(const SuperpositionPotential& f, const Common& c) {
  if (c.window.empty()) return default_window(f);
  const auto v = parse_numbers(c.window, 4, "--window");
  Window w{{v[0], v[1]}, {v[2], v[3]}};
  if (w.empty()) throw Error(ErrorKind::InvalidArgument, "--window is empty");
  return w;
}

json window_json(const Window& w) { return json::array({w.lo.x, w.lo.y, w.hi.x, w.hi.y}); }

/// Writes files into --out (all formats unless --format picks one), or the
/// primary format to stdout. Returns the written paths.
class Emitter {
 public:
  Emitter(const Common& c, std::string primary) : c_(c), primary_(c.format.empty() ? std::move(primary) : c.format) {
    if (!c_.out.empty()) fs::create_directories(c_.out);
  }

  bool wants(const std::string& fmt) const {
    if (c_.out.empty()) return fmt == primary_;
    return c_.format.empty() || c_.format == fmt;
  }

  void emit(const std::string& fmt, const std::string& name, const std::string& text) {
    if (!wants(fmt)) return;
    if (c_.out.empty()) {
      std::cout << text;
      return;
    }
    const fs::path p = fs::path(c_.out) / name;
    write_text_file(p, text);
    written_.push_back(p.filename().string());
  }

  void finish(RunManifest m) {
    if (c_.out.empty()) return;
    m.outputs = written_;
    m.finished_at = utc_now();
    write_text_file(fs::path(c_.out) / "manifest.json", to_json_text(manifest_json(m)));
  }

  const std::string& primary() const { return primary_; }

 private:
  const Common& c_;
  std::string primary_;
  std::vector<std::string> written_;
};

RunManifest start_manifest(const std::string& command, const Common& c, const SuperpositionPotential* f) {
  RunManifest m;
  m.command = command;
  m.config_path = c.config;
  if (f) m.config_hash = config_fingerprint(*f);
  m.started_at = utc_now();
  return m;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> points;
  std::size_t grid{0};
};

int cmd_eval(const Common& c, const EvalArgs& a) {
  const auto f = load_potential_config(c.config);
  std::vector<Vec2> pts;
  for (const auto& s : a.points) pts.push_back(parse_point(s, "--point"));
  const Window w = resolve_window(f, c);
  if (a.grid > 0) {
    if (a.grid < 2) throw Error(ErrorKind::InvalidArgument, "--grid needs at least 2 samples per axis");
    const double n = static_cast<double>(a.grid - 1);
    for (std::size_t j = 0; j < a.grid; ++j)
      for (std::size_t i = 0; i < a.grid; ++i)
        pts.push_back({w.lo.x + (w.hi.x - w.lo.x) * static_cast<double>(i) / n,
                       w.lo.y + (w.hi.y - w.lo.y) * static_cast<double>(j) / n});
  }
  if (pts.empty()) throw Error(ErrorKind::InvalidArgument, "eval needs --point or --grid");
  if (c.format == "svg") throw Error(ErrorKind::InvalidArgument, "eval writes csv or json");

  Emitter out(c, "csv");
  std::string csv = "x,y,value\n";
  json rows = json::array();
  for (const Vec2& p : pts) {
    const double v = eval_superposition(f, p);
    csv += format_double(p.x) + "," + format_double(p.y) + "," + format_double(v) + "\n";
    rows.push_back(json{{"x", p.x}, {"y", p.y}, {"value", v}});
  }
  out.emit("csv", "values.csv", csv);
  out.emit("json", "values.json", to_json_text(rows));
  RunManifest m = start_manifest("eval", c, &f);
  m.parameters = json{{"points", static_cast<std::uint64_t>(pts.size())}, {"grid", static_cast<std::uint64_t>(a.grid)},
                      {"window", window_json(w)}};
  out.finish(m);
  return kExitOk;
}

// ---- trace / classify -----------------------------------------------------

/// Seed nearest to `target` among the crossings of the window around it.
std::optional<Vec2> nearest_seed(const SuperpositionPotential& f, double level, const Window& w, double h,
                                 const Vec2& target) {
  const auto seeds = find_seeds(f, level, w, h);
  std::optional<Vec2> best;
  double best_d = 0.0;
  for (const Vec2& s : seeds) {
    const double d = norm(s - target);
    if (!best || d < best_d) best = s, best_d = d;
  }
  return best;
}

struct TraceArgs {
  std::string start;
};

Window seed_window(const SuperpositionPotential& f, const Common& c, const std::optional<Vec2>& start) {
  if (start && c.window.empty()) return Window::centered(*start, f.longest_period());
  return resolve_window(f, c);
}

double level_or_midpoint(const SuperpositionPotential& f, const Common& c, const Window& w, const TraceBudget& b,
                         std::optional<EnergyInterval>& interval) {
  if (c.level) return *c.level;
  const auto [lo, hi] = f.value_bounds();
  const double pad = 1e-3 * (hi - lo);
  interval = energy_interval(f, w, b, lo - pad, hi + pad, ClassifierOptions{}.level_tol);
  return interval->midpoint();
}

json line_json(const LevelLine& l) {
  return json{{"level", l.level},
              {"jitter", l.jitter},
              {"status", to_string(l.status)},
              {"arc_length", l.arc_length},
              {"vertices", static_cast<std::uint64_t>(l.points.size())},
              {"seed", vec_json(l.seed)},
              {"cell_size", l.cell_size}};
}

int cmd_trace(const Common& c, const TraceArgs& a) {
  const auto f = load_potential_config(c.config);
  if (!c.level) throw Error(ErrorKind::InvalidArgument, "trace needs --level");
  const TraceBudget b = resolve_budget(f, c);
  std::optional<Vec2> start;
  if (!a.start.empty()) start = parse_point(a.start, "--start");
  const Window w = seed_window(f, c, start);
  const auto seed = nearest_seed(f, *c.level, w, b.cell_size, start.value_or(w.center()));
  if (!seed) throw EmptyResult("no crossing of level " + format_double(*c.level) + " in the seed window");
  const LevelLine line = trace_level_line(f, *seed, *c.level, b);

  Emitter out(c, "csv");
  out.emit("csv", "trace.csv", polyline_csv(line));
  out.emit("svg", "trace.svg", lines_svg({line}));
  out.emit("json", "trace.json", to_json_text(line_json(line)));
  RunManifest m = start_manifest("trace", c, &f);
  m.parameters = json{{"level", *c.level}, {"budget", budget_json(b)}, {"window", window_json(w)},
                      {"start", start ? vec_json(*start) : json(nullptr)}};
  out.finish(m);
  return kExitOk;
}

int cmd_classify(const Common& c, const TraceArgs& a) {
  const auto f = load_potential_config(c.config);
  const TraceBudget b = resolve_budget(f, c);
  std::optional<Vec2> start;
  if (!a.start.empty()) start = parse_point(a.start, "--start");
  const Window w = seed_window(f, c, start);
  std::optional<EnergyInterval> interval;
  const double level = level_or_midpoint(f, c, w, b, interval);
  const ClassifierOptions opt;

  Classification cls;
  if (start) {
    const auto seed = nearest_seed(f, level, w, b.cell_size, *start);
    if (!seed) throw EmptyResult("no crossing of level " + format_double(level) + " near --start");
    cls = classify(f, trace_level_line(f, *seed, level, b), b, opt);
  } else {
    if (find_seeds(f, level, w, b.cell_size).empty())
      throw EmptyResult("no crossing of level " + format_double(level) + " in the seed window");
    cls = classify_level(f, level, w, b, opt);
  }
  json params{{"config_hash", config_fingerprint(f)},
              {"alpha", f.transform().alpha()},
              {"shift", vec_json(f.transform().shift())},
              {"requested_level", level},
              {"energy_interval", interval_json(interval)},
              {"budget", budget_json(b)},
              {"window", window_json(w)},
              {"classifier", classifier_options_json(opt)}};
  Emitter out(c, "json");
  if (c.format == "csv" || c.format == "svg") throw Error(ErrorKind::InvalidArgument, "classify writes json");
  out.emit("json", "classification.json", to_json_text(classification_json(cls, params)));
  RunManifest m = start_manifest("classify", c, &f);
  m.parameters = params;
  out.finish(m);
  return kExitOk;
}

// ---- sweep / zones --------------------------------------------------------

struct SweepArgs {
  double alpha_start{0.0};
  double alpha_end{0.5 * std::numbers::pi};
  std::size_t alpha_count{64};
  std::size_t shifts{3};
  std::uint64_t seed{1};
  std::optional<double> refine_tol;
};

void emit_zones(Emitter& out, const ZoneDetection& det) {
  out.emit("csv", "zones.csv", zones_csv(det));
  out.emit("svg", "zones.svg", zones_svg(det));
}

int cmd_sweep(const Common& c, const SweepArgs& a) {
  const auto f = load_potential_config(c.config);
  SweepConfig cfg;
  cfg.alpha_start = a.alpha_start;
  cfg.alpha_end = a.alpha_end;
  cfg.alpha_count = a.alpha_count;
  cfg.shifts_per_alpha = a.shifts;
  cfg.seed = a.seed;
  cfg.workers = c.workers;
  if (c.level) {
    cfg.level_strategy = LevelStrategy::Fixed;
    cfg.fixed_level = *c.level;
  }
  if (c.budget_L || c.cell_h) cfg.budget = resolve_budget(f, c);
  if (!c.window.empty()) cfg.window = resolve_window(f, c);
  cfg.validate();

  const SweepResult r = sweep_angle(cfg, f.v(), f.u(), f.combiner());
  const double spacing = (cfg.alpha_end - cfg.alpha_start) / static_cast<double>(cfg.alpha_count - 1);
  const double tol = a.refine_tol.value_or(spacing / 16.0);
  const SuperpositionPotential base(f.v(), f.u(), EuclideanTransform(0.0), f.combiner());
  const ZoneDetection det = detect_zones(r, tol, tol > 0.0 ? make_angle_classifier(base, cfg) : AngleClassifier{});

  Emitter out(c, "csv");
  emit_zones(out, det);
  out.emit("json", "sweep.json", to_json_text(sweep_json(r, &det)));
  RunManifest m = start_manifest("sweep", c, &f);
  m.parameters = sweep_config_json(cfg);
  m.parameters["refine_tol"] = tol;
  m.parameters["workers"] = static_cast<std::uint64_t>(resolve_workers(cfg.workers));
  out.finish(m);
  return kExitOk;
}

struct ZonesArgs {
  std::string input;
  double refine_tol{0.0};
  std::size_t shifts{3};
  std::uint64_t seed{1};
};

int cmd_zones(const Common& c, const ZonesArgs& a) {
  const SweepResult r = sweep_result_from_json(json::parse(read_text_file(a.input)));
  if (r.points.empty()) throw EmptyResult("sweep document has no points");
  std::optional<SuperpositionPotential> f;
  AngleClassifier classify_at;
  if (!c.config.empty() && a.refine_tol > 0.0) {
    f = load_potential_config(c.config);
    SweepConfig cfg = r.config;
    cfg.shifts_per_alpha = a.shifts;
    cfg.seed = a.seed;
    if (c.budget_L || c.cell_h) cfg.budget = resolve_budget(*f, c);
    classify_at = make_angle_classifier(SuperpositionPotential(f->v(), f->u(), EuclideanTransform(0.0), f->combiner()), cfg);
  }
  const ZoneDetection det = detect_zones(r, classify_at ? a.refine_tol : 0.0, classify_at);
  Emitter out(c, "csv");
  emit_zones(out, det);
  out.emit("json", "zones.json", to_json_text(zones_json(det)));
  RunManifest m = start_manifest("zones", c, f ? &*f : nullptr);
  m.parameters = json{{"input", a.input}, {"refine_tol", classify_at ? a.refine_tol : 0.0}};
  out.finish(m);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level lines of two-layer quasi-periodic potentials"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common c;
  EvalArgs ea;
  TraceArgs ta;
  SweepArgs sa;
  ZonesArgs za;

  auto* eval = app.add_subcommand("eval", "evaluate the potential at points or on a grid");
  add_common(eval, c);
  eval->add_option("--point", ea.points, "point x,y (repeatable)");
  eval->add_option("--grid", ea.grid, "N x N grid over --window");
  eval->add_option("--window", c.window, "grid window x0,y0,x1,y1");

  auto* trace = app.add_subcommand("trace", "trace one level line");
  add_common(trace, c);
  add_budget(trace, c);
  trace->add_option("--start", ta.start, "trace the crossing nearest to x,y");

  auto* cls = app.add_subcommand("classify", "classify an open level line");
  add_common(cls, c);
  add_budget(cls, c);
  cls->add_option("--start", ta.start, "classify the line through the crossing nearest to x,y");

  auto* sweep = app.add_subcommand("sweep", "sweep the twist angle and detect zones");
  add_common(sweep, c);
  add_budget(sweep, c);
  sweep->add_option("--alpha-start", sa.alpha_start);
  sweep->add_option("--alpha-end", sa.alpha_end);
  sweep->add_option("--alpha-count", sa.alpha_count)->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
  sweep->add_option("--shifts", sa.shifts, "shift samples per angle")->check(CLI::PositiveNumber);
  sweep->add_option("--seed", sa.seed);
  sweep->add_option("--workers", c.workers, "worker threads (0 = all cores)");
  sweep->add_option("--refine-tol", sa.refine_tol, "boundary bisection tolerance (0 disables)");

  auto* zones = app.add_subcommand("zones", "detect zones in a saved sweep document");
  add_common(zones, c, false);
  zones->add_option("--input", za.input, "sweep.json from the sweep command")->required()->check(CLI::ExistingFile);
  zones->add_option("--refine-tol", za.refine_tol, "bisection tolerance; needs --config");
  zones->add_option("--shifts", za.shifts);
  zones->add_option("--seed", za.seed);
  zones->add_option("--budget-L", c.budget_L);
  zones->add_option("--cell-h", c.cell_h);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*eval) return cmd_eval(c, ea);
    if (*trace) return cmd_trace(c, ta);
    if (*cls) return cmd_classify(c, ta);
    if (*sweep) return cmd_sweep(c, sa);
    if (*zones) return cmd_zones(c, za);
  } catch (const EmptyResult& e) {
    std::cerr << "moire: " << e.what() << "\n";
    return kExitEmpty;
  } catch (const Error& e) {
    std::cerr << "moire: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return e.kind() == ErrorKind::SeedNotOnLevel ? kExitEmpty : kExitError;
  } catch (const std::exception& e) {
    std::cerr << "moire: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
