#include "bodelim/config.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "bodelim/error.hpp"

namespace bodelim {

namespace {

const std::vector<std::string> kFormats{"json", "text", "csv", "binary", "signal_csv"};

// Strict object access: every key must be listed, every read names its path.
class Node {
 public:
  Node(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const Json& json() const { return j_; }

  void require_object(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) fail("expected an object");
    for (const auto& [key, v] : j_.items()) {
      (void)v;
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
        throw ConfigError(child_path(key) + ": unknown key");
    }
  }
  bool has(const char* key) const { return j_.contains(key); }
  Node at(const char* key) const {
    if (!j_.contains(key)) fail(std::string("missing required key '") + key + "'");
    return Node(j_.at(key), child_path(key));
  }
  Node item(std::size_t i) const { return Node(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }
  std::size_t size() const { return j_.size(); }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }
  double positive() const {
    const double x = number();
    if (!(x > 0.0)) fail("must be positive");
    return x;
  }
  double nonnegative() const {
    const double x = number();
    if (!(x >= 0.0)) fail("must be nonnegative");
    return x;
  }
  std::uint64_t u64() const {
    if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<std::int64_t>() >= 0))
      fail("expected a nonnegative integer");
    return j_.get<std::uint64_t>();
  }
  bool boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
  }
  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }
  void require_array() const {
    if (!j_.is_array()) fail("expected an array");
  }
  std::vector<double> numbers() const {
    require_array();
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(item(i).number());
    return out;
  }
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_ + ": " + what); }

 private:
  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json& j_;
  std::string path_;
};

std::vector<Complex> roots(const Node& n) {
  n.require_array();
  std::vector<Complex> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const Node r = n.item(i);
    if (r.json().is_number()) {
      out.emplace_back(r.number(), 0.0);
    } else if (r.json().is_array() && r.size() == 2) {
      out.emplace_back(r.item(0).number(), r.item(1).number());
    } else {
      r.fail("expected a number or a [re, im] pair");
    }
  }
  return out;
}

RationalTF rational(const Node& n) {
  n.require_object({"zeros", "poles", "gain", "num_coeffs", "den_coeffs"});
  const bool zpk = n.has("zeros") || n.has("poles") || n.has("gain");
  const bool coeffs = n.has("num_coeffs") || n.has("den_coeffs");
  if (zpk == coeffs) n.fail("give exactly one of {zeros, poles, gain} or {num_coeffs, den_coeffs}");
  try {
    if (zpk) {
      const std::vector<Complex> z = n.has("zeros") ? roots(n.at("zeros")) : std::vector<Complex>{};
      const std::vector<Complex> p = n.has("poles") ? roots(n.at("poles")) : std::vector<Complex>{};
      return RationalTF::from_zpk(z, p, n.at("gain").number());
    }
    const std::vector<double> num = n.at("num_coeffs").numbers();
    const std::vector<double> den = n.at("den_coeffs").numbers();
    return RationalTF::from_coeffs(num, den);
  } catch (const DomainError& e) {
    n.fail(e.what());
  }
}

ConfiguredSystem system(const Node& n, const std::string& fallback_id) {
  n.require_object({"id", "plant", "controller", "noise"});
  ConfiguredSystem s;
  s.id = n.has("id") ? n.at("id").string() : fallback_id;
  s.plant = rational(n.at("plant"));
  if (n.has("controller")) s.controller = rational(n.at("controller"));
  if (n.has("noise")) {
    const Node nn = n.at("noise");
    nn.require_object({"shape", "intensity"});
    NoiseSpec spec{rational(nn.at("shape")), nn.has("intensity") ? nn.at("intensity").positive() : 1.0};
    if (spec.shape.relative_degree() < 1) nn.at("shape").fail("noise shape must be strictly proper");
    if (!classify(spec.shape).unstable_poles.empty() || !classify(spec.shape).marginal_poles.empty())
      nn.at("shape").fail("noise shape must be stable");
    s.noise = spec;
  }
  return s;
}

void sim_section(const Node& n, RunConfig& cfg) {
  n.require_object({"dt", "duration", "samples", "trials", "seed", "dither", "dither_corner", "oversample"});
  if (n.has("dt")) cfg.sim.dt = n.at("dt").positive();
  if (n.has("duration")) cfg.sim.duration = n.at("duration").positive();
  if (n.has("samples")) cfg.sim.samples = n.at("samples").u64();
  if (n.has("trials")) {
    cfg.sim.trials = n.at("trials").u64();
    if (cfg.sim.trials < 1) n.at("trials").fail("must be at least 1");
  }
  if (n.has("seed")) cfg.sim.seed = n.at("seed").u64();
  if (n.has("dither")) cfg.sim.dither = n.at("dither").nonnegative();
  if (n.has("dither_corner")) cfg.sim.dither_corner = n.at("dither_corner").positive();
  if (n.has("oversample")) {
    const std::uint64_t q = n.at("oversample").u64();
    if (q < 1 || q > 64) n.at("oversample").fail("must be in [1, 64]");
    cfg.sim.oversample = static_cast<unsigned>(q);
  }
  if ((cfg.sim.dt > 0.0) != (cfg.sim.duration > 0.0)) n.fail("give both dt and duration, or neither");
}

void analysis_section(const Node& n, RunConfig& cfg) {
  n.require_object({"weights", "lemma1", "appendix", "tolerances", "quadrature"});
  if (n.has("weights")) {
    const Node w = n.at("weights");
    w.require_array();
    cfg.weights.clear();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const std::string s = w.item(i).string();
      if (s == "unweighted") cfg.weights.push_back(Weight::kUnweighted);
      else if (s == "inv_omega_sq") cfg.weights.push_back(Weight::kInvOmegaSq);
      else w.item(i).fail("expected \"unweighted\" or \"inv_omega_sq\"");
    }
  }
  if (n.has("lemma1")) cfg.lemma1 = n.at("lemma1").boolean();
  if (n.has("appendix")) cfg.appendix = n.at("appendix").boolean();
  if (n.has("tolerances")) {
    const Node t = n.at("tolerances");
    t.require_object({"slack_rel", "pointwise", "integral_abs", "integral_rel", "mi_identity", "appendix",
                      "stationarity", "psd_floor_rel"});
    const auto set = [&](const char* key, double& dst) {
      if (t.has(key)) dst = t.at(key).nonnegative();
    };
    set("slack_rel", cfg.tol.slack_rel);
    set("pointwise", cfg.tol.pointwise);
    set("integral_abs", cfg.tol.integral_abs);
    set("integral_rel", cfg.tol.integral_rel);
    set("mi_identity", cfg.tol.mi_identity);
    set("appendix", cfg.tol.appendix);
    set("stationarity", cfg.tol.stationarity);
    set("psd_floor_rel", cfg.tol.psd_floor_rel);
  }
  if (n.has("quadrature")) {
    const Node q = n.at("quadrature");
    q.require_object({"panel_abs_tol", "panels_per_decade", "max_subdivisions"});
    if (q.has("panel_abs_tol")) cfg.quadrature.panel_abs_tol = q.at("panel_abs_tol").positive();
    if (q.has("panels_per_decade"))
      cfg.quadrature.panels_per_decade = static_cast<int>(std::max<std::uint64_t>(1, q.at("panels_per_decade").u64()));
    if (q.has("max_subdivisions"))
      cfg.quadrature.max_subdivisions = std::max<std::uint64_t>(1, q.at("max_subdivisions").u64());
  }
}

void output_section(const Node& n, RunConfig& cfg) {
  n.require_object({"directory", "formats"});
  if (n.has("directory")) cfg.output.directory = n.at("directory").string();
  if (n.has("formats")) {
    const Node f = n.at("formats");
    f.require_array();
    cfg.output.formats.clear();
    for (std::size_t i = 0; i < f.size(); ++i) {
      const std::string s = f.item(i).string();
      if (std::find(kFormats.begin(), kFormats.end(), s) == kFormats.end())
        f.item(i).fail("unknown format '" + s + "'");
      cfg.output.formats.push_back(s);
    }
  }
}

Json tf_json(const RationalTF& t) {
  Json z = Json::array(), p = Json::array();
  for (const Complex& r : t.zeros()) z.push_back({r.real(), r.imag()});
  for (const Complex& r : t.poles()) p.push_back({r.real(), r.imag()});
  return {{"zeros", z}, {"poles", p}, {"gain", t.gain()}};
}

Json sim_json(const SimParams& s) {
  return {{"dt", s.dt},           {"duration", s.duration}, {"samples", s.samples},
          {"trials", s.trials},   {"seed", s.seed},         {"dither", s.dither},
          {"dither_corner", s.dither_corner}, {"oversample", s.oversample}};
}

Json tol_json(const Tolerances& t) {
  return {{"slack_rel", t.slack_rel},         {"pointwise", t.pointwise},
          {"integral_abs", t.integral_abs},   {"integral_rel", t.integral_rel},
          {"mi_identity", t.mi_identity},     {"appendix", t.appendix},
          {"stationarity", t.stationarity},   {"psd_floor_rel", t.psd_floor_rel}};
}

Json quad_json(const QuadratureOptions& q) {
  return {{"panel_abs_tol", q.panel_abs_tol},
          {"panels_per_decade", q.panels_per_decade},
          {"max_subdivisions", q.max_subdivisions}};
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return s.empty() ? "system" : s;
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Verdict worst_of(const std::vector<LimitReport>& reps) { return worst(reps); }

int exit_for(Verdict v) { return v == Verdict::kViolated ? kExitViolated : kExitHolds; }

void write_plots(const std::vector<LimitReport>& reps, const std::string& dir) {
  for (const auto& r : reps)
    for (const auto& c : r.curves) {
      std::ostringstream os;
      write_curve_csv(c, os);
      write_file(join(join(dir, "plots"), sanitize(r.system_id) + "_" + c.kind + ".csv"), os.str());
    }
}

void write_rendered(const std::vector<LimitReport>& reps, const RunConfig& cfg) {
  if (cfg.output.wants("text")) write_file(join(cfg.output.directory, "report.txt"), report_table(reps));
  if (cfg.output.wants("csv")) write_plots(reps, cfg.output.directory);
}

int run_analyze(const RunConfig& cfg, std::ostream& log) {
  Json systems = Json::array();
  std::vector<LimitReport> reps;
  for (const auto& s : cfg.systems) {
    const BoundReport b = analytic_bounds(s.plant);
    LimitReport rep;
    rep.system_id = s.id;
    if (s.controller) {
      try {
        rep = corollary3_report(s.plant, *s.controller, cfg.tol.slack_rel, cfg.quadrature);
        rep.system_id = s.id;
      } catch (const DomainError& e) {
        InequalityRecord r;
        r.id = "closed_loop_stability";
        r.lhs = "closed loop";
        r.rhs = "mean-square stable";
        r.note = e.what();
        rep.inequalities.push_back(std::move(r));
      }
    } else {
      rep.notes.push_back("no controller: plant bounds only");
    }
    systems.push_back({{"id", s.id}, {"plant", tf_json(s.plant)}, {"bounds", to_json(b)}, {"report", to_json(rep)}});
    log << s.id << ": sens_bound " << b.sens_bound << ", comp_bound " << b.comp_bound << ", worst "
        << to_string(rep.worst()) << '\n';
    reps.push_back(std::move(rep));
  }
  const Json out = {{"command", "analyze"},
                    {"defaults", defaults_table()},
                    {"config", effective_config(cfg)},
                    {"systems", systems}};
  if (cfg.output.wants("json")) write_file(join(cfg.output.directory, "analyze.json"), dump(out));
  if (cfg.output.wants("text")) write_file(join(cfg.output.directory, "analyze.txt"), report_table(reps));
  return exit_for(worst_of(reps));
}

int run_simulate(const RunConfig& cfg, std::ostream& log) {
  SimParams clean = cfg.sim;
  clean.dither = 0.0;
  clean.oversample = 1;
  Json listing = Json::array();
  for (std::size_t i = 0; i < cfg.systems.size(); ++i) {
    const ConfiguredSystem& s = cfg.systems[i];
    if (!s.controller) throw ConfigError("systems[" + std::to_string(i) + "]: simulate needs a controller");
    const std::uint64_t seed = system_seed(cfg.sim.seed, i);
    for (Injection inj : {Injection::kControlNoise, Injection::kMeasurementNoise}) {
      const std::string loop = inj == Injection::kControlNoise ? "control" : "measurement";
      const std::string dir = join(join(cfg.output.directory, sanitize(s.id)), loop);
      Json entry = {{"id", s.id}, {"loop", loop}};
      try {
        const SimPlan plan = plan_simulation(s.plant, *s.controller, inj, s.noise, clean);
        const std::uint64_t stream = inj == Injection::kControlNoise ? 0 : std::uint64_t{2} << 32;
        const SignalBundle b = simulate(plan.loop, plan.dt, plan.duration, seed, stream);
        if (cfg.output.wants("binary")) {
          std::ostringstream os;
          write_signal_binary(b, os);
          write_file(join(dir, "signals.blimsig"), os.str());
        }
        if (cfg.output.wants("signal_csv")) {
          std::ostringstream os;
          write_signal_csv(b, os);
          write_file(join(dir, "signals.csv"), os.str());
        }
        const SpectralMatrix m = welch_matrix(b, plan.loop.channels);
        Json spectra = Json::array();
        for (const auto& x : plan.loop.channels)
          for (const auto& y : plan.loop.channels) {
            spectra.push_back(to_json(m(x, y)));
            if (cfg.output.wants("csv")) {
              std::ostringstream os;
              write_spectrum_csv(m(x, y), os);
              write_file(join(join(dir, "spectra"), x + "_" + y + ".csv"), os.str());
            }
          }
        if (cfg.output.wants("json")) write_file(join(dir, "spectra.json"), dump(spectra));
        entry["dt"] = plan.dt;
        entry["duration"] = plan.duration;
        entry["samples"] = b.samples();
        entry["burn_in_samples"] = b.burn_in_samples;
        entry["bandwidth"] = plan.bandwidth;
        entry["seed"] = seed;
        entry["trial"] = stream;
        entry["inverted_frequency"] = inj == Injection::kMeasurementNoise;
        log << s.id << " " << loop << ": " << b.samples() << " samples at dt " << plan.dt << '\n';
      } catch (const UnstableLoopError& e) {
        entry["skipped"] = e.what();
        log << s.id << " " << loop << ": skipped (" << e.what() << ")\n";
      }
      listing.push_back(std::move(entry));
    }
  }
  const Json out = {{"command", "simulate"},
                    {"defaults", defaults_table()},
                    {"config", effective_config(cfg)},
                    {"runs", listing}};
  write_file(join(cfg.output.directory, "simulate.json"), dump(out));
  return kExitHolds;
}

int run_verify(const RunConfig& cfg, std::ostream& log) {
  const std::vector<LimitReport> reps = run_full_suite(cfg.suite());
  const Json out = {{"command", "verify"},
                    {"defaults", defaults_table()},
                    {"config", effective_config(cfg)},
                    {"worst_verdict", std::string(to_string(worst_of(reps)))},
                    {"reports", to_json(reps)}};
  write_file(join(cfg.output.directory, "report.json"), dump(out));
  write_rendered(reps, cfg);
  log << report_table(reps);
  return exit_for(worst_of(reps));
}

int run_report(const RunConfig& cfg, std::ostream& log) {
  const std::string path = join(cfg.output.directory, "report.json");
  if (!std::filesystem::exists(path)) throw ConfigError(path + ": not found (run verify first)");
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!j.contains("reports")) throw ConfigError(path + ": no reports");
  std::vector<LimitReport> reps;
  try {
    reps = reports_from_json(j.at("reports"));
  } catch (const DomainError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  RunConfig render = cfg;
  if (!render.output.wants("text")) render.output.formats.push_back("text");
  if (!render.output.wants("csv")) render.output.formats.push_back("csv");
  write_rendered(reps, render);
  log << report_table(reps);
  return exit_for(worst_of(reps));
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

bool OutputSpec::wants(const std::string& f) const {
  return std::find(formats.begin(), formats.end(), f) != formats.end();
}

SuiteConfig RunConfig::suite() const {
  SuiteConfig s;
  for (std::size_t i = 0; i < systems.size(); ++i) {
    if (!systems[i].controller)
      throw ConfigError("systems[" + std::to_string(i) + "].controller: required for simulation");
    s.systems.push_back({systems[i].id, systems[i].plant, *systems[i].controller, systems[i].noise});
  }
  s.sim = sim;
  s.tol = tol;
  s.quadrature = quadrature;
  s.lemma1 = lemma1;
  s.appendix = appendix;
  s.control_chain = std::find(weights.begin(), weights.end(), Weight::kUnweighted) != weights.end();
  s.measurement_chain = std::find(weights.begin(), weights.end(), Weight::kInvOmegaSq) != weights.end();
  return s;
}

RunConfig parse_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
    const std::size_t nl = text.rfind('\n', upto == 0 ? 0 : upto - 1);
    const std::size_t col = nl == std::string::npos ? upto + 1 : upto - nl;
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) +
                      ": JSON syntax error: " + e.what());
  }
  const Node root(j, "");
  root.require_object({"seed", "systems", "id", "plant", "controller", "noise", "sim", "analysis", "output"});
  RunConfig cfg;
  if (!root.has("seed")) throw ConfigError("seed: required (runs are reproducible only with an explicit seed)");
  cfg.sim.seed = root.at("seed").u64();
  const bool single = root.has("plant") || root.has("controller") || root.has("noise") || root.has("id");
  if (single == root.has("systems")) throw ConfigError("give either systems or a single plant/controller, not both");
  if (single) {
    Json one = Json::object();
    for (const char* k : {"id", "plant", "controller", "noise"})
      if (j.contains(k)) one[k] = j[k];
    cfg.systems.push_back(system(Node(one, ""), "system"));
  } else {
    const Node list = root.at("systems");
    list.require_array();
    for (std::size_t i = 0; i < list.size(); ++i) cfg.systems.push_back(system(list.item(i), "system" + std::to_string(i)));
  }
  if (root.has("sim")) {
    const std::uint64_t seed = cfg.sim.seed;
    sim_section(root.at("sim"), cfg);
    if (root.at("sim").has("seed") && cfg.sim.seed != seed) throw ConfigError("sim.seed: conflicts with seed");
  }
  if (root.has("analysis")) analysis_section(root.at("analysis"), cfg);
  if (root.has("output")) output_section(root.at("output"), cfg);
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  try {
    return parse_config_text(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Json defaults_table() {
  return {{"sim", sim_json(SimParams{})},
          {"tolerances", tol_json(Tolerances{})},
          {"quadrature", quad_json(QuadratureOptions{})},
          {"stability_tol", kDefaultStabilityTol},
          {"welch", {{"window", "hann"}, {"overlap", WelchOptions{}.overlap}, {"nperseg", "2^ceil(log2(n / 64))"}}},
          {"dt_rule", "pi/dt = max(20 max|eig A|, 120 bandwidth)"},
          {"duration_rule", "max(samples dt, 100 slowest time constants, 128 pi 100 / bandwidth)"},
          {"mi_band_rule", "[2 pi / (duration / 10), 0.8 pi / dt]"},
          {"pointwise_band", "[bandwidth / 10, 10 bandwidth]"},
          {"default_noise", "unit-variance OU, pole at the geometric mean of closed-loop pole magnitudes"},
          {"stationarity", {{"blocks", 16}, {"z_threshold", 4.0}}},
          {"output", {{"directory", OutputSpec{}.directory}, {"formats", OutputSpec{}.formats}}}};
}

Json effective_config(const RunConfig& cfg) {
  Json systems = Json::array();
  for (const auto& s : cfg.systems) {
    Json j = {{"id", s.id}, {"plant", tf_json(s.plant)}};
    j["controller"] = s.controller ? tf_json(*s.controller) : Json();
    j["noise"] = s.noise ? Json{{"shape", tf_json(s.noise->shape)}, {"intensity", s.noise->intensity}} : Json();
    systems.push_back(std::move(j));
  }
  Json weights = Json::array();
  for (Weight w : cfg.weights) weights.push_back(w == Weight::kUnweighted ? "unweighted" : "inv_omega_sq");
  return {{"systems", systems},
          {"sim", sim_json(cfg.sim)},
          {"analysis",
           {{"weights", weights},
            {"lemma1", cfg.lemma1},
            {"appendix", cfg.appendix},
            {"tolerances", tol_json(cfg.tol)},
            {"quadrature", quad_json(cfg.quadrature)}}},
          {"output", {{"formats", cfg.output.formats}}}};
}

Command parse_command(const std::string& name) {
  if (name == "analyze") return Command::kAnalyze;
  if (name == "simulate") return Command::kSimulate;
  if (name == "verify") return Command::kVerify;
  if (name == "report") return Command::kReport;
  throw ConfigError("unknown command '" + name + "' (analyze, simulate, verify, report)");
}

int dispatch(Command command, const RunConfig& cfg, std::ostream& log) {
  static const char* names[] = {"analyze", "simulate", "verify", "report"};
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  int code = kExitHolds;
  try {
    switch (command) {
      case Command::kAnalyze: code = run_analyze(cfg, log); break;
      case Command::kSimulate: code = run_simulate(cfg, log); break;
      case Command::kVerify: code = run_verify(cfg, log); break;
      case Command::kReport: code = run_report(cfg, log); break;
    }
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    log << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DomainError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Json meta = {{"command", names[static_cast<int>(command)]},
                     {"started_utc", started},
                     {"wall_seconds", seconds},
                     {"worker_threads", worker_threads()},
                     {"exit_code", code}};
  write_file(join(cfg.output.directory, "metadata.json"), dump(meta));
  return code;
}

}  // namespace bodelim
