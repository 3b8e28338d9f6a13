#include "adamlab/config.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "adamlab/errors.hpp"

namespace adamlab {

namespace {

constexpr std::array<std::pair<Command, std::string_view>, 9> kCommands{{
    {Command::run, "run"},
    {Command::ensemble, "ensemble"},
    {Command::vf_eval, "vf-eval"},
    {Command::vf_zero, "vf-zero"},
    {Command::sweep_beta2, "sweep-beta2"},
    {Command::sweep_batch, "sweep-batch"},
    {Command::sweep_asym, "sweep-asym"},
    {Command::check_schedule, "check-schedule"},
    {Command::selftest, "selftest"},
}};

constexpr std::array<KeyInfo, 33> kSchema{{
    {"optimizer", "adam", "adam | sgd"},
    {"beta1", "0.9", "first-moment decay"},
    {"beta2", "0.999", "second-moment decay, beta1^2 < beta2 < 1"},
    {"eps", "1e-8", "denominator offset"},
    {"lr", "power", "power (gamma_n = c n^-r) | constant (gamma_n = c)"},
    {"lr-c", "1", "step-size scale c"},
    {"lr-r", "0.99", "step-size exponent r"},
    {"batch", "1", "mini-batch size M"},
    {"steps", "400000", "optimizer steps per trajectory"},
    {"reps", "100", "independent trajectories per ensemble"},
    {"seed", "1", "root seed"},
    {"v", "-1", "first atom"},
    {"w", "0.1", "second atom (v = w gives a point mass)"},
    {"pv", "auto", "P(X = v); auto gives the mean-zero value w / (w - v)"},
    {"theta0", "1", "initial point"},
    {"ref", "minimizer", "ensemble reference: minimizer | vfzero"},
    {"error", "abs", "ensemble error: abs | clipped | signed"},
    {"per-decade", "200", "recorded grid points per decade of n"},
    {"theta", "0", "vf eval points, comma separated"},
    {"vf-reps", "100000", "vector-field replications"},
    {"vf-tol", "1e-12", "series truncation tolerance"},
    {"vf-terms", "auto", "fixed truncation N (series n = 0..N)"},
    {"estimator", "auto", "auto | plain | conditioned"},
    {"zero-tol", "1e-7", "zero-search bracket width"},
    {"lo", "auto", "zero-search lower end"},
    {"hi", "auto", "zero-search upper end"},
    {"beta2-grid", "default", "comma list; default 1 - 2^(-4 - 5i/9), i = 0..9"},
    {"batch-grid", "1,2,3,4,5,6", "comma list of M"},
    {"w-grid", "default", "comma list; default 2^i, i = -8..7"},
    {"ensembles", "true", "sweeps also run ensembles (false: zeros only)"},
    {"n-max", "1000000", "check schedule horizon"},
    {"p", "2", "check schedule summability exponent"},
    {"out", ".", "output directory"},
}};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool known_key(std::string_view key) {
  if (key == "plot") return true;
  return std::any_of(kSchema.begin(), kSchema.end(),
                     [&](const KeyInfo& k) { return k.name == key; });
}

double parse_double(const std::string& key, const std::string& text) {
  double x = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last || !std::isfinite(x)) {
    throw config_error(key, "expected a finite number, got '" + text + "'");
  }
  return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  std::uint64_t x = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last) {
    // accept integral scientific notation such as 4e5
    double d = 0.0;
    const auto r = std::from_chars(first, last, d);
    if (r.ec == std::errc() && r.ptr == last && d >= 0.0 && d < 1.8e19 &&
        std::floor(d) == d) {
      return static_cast<std::uint64_t>(d);
    }
    throw config_error(key, "expected a non-negative integer, got '" + text +
                                "'");
  }
  return x;
}

std::size_t parse_count(const std::string& key, const std::string& text,
                        std::size_t min_value) {
  const std::uint64_t x = parse_u64(key, text);
  if (x < min_value) {
    throw config_error(key, "must be >= " + std::to_string(min_value));
  }
  return static_cast<std::size_t>(x);
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw config_error(key, "expected true or false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<double> parse_double_list(const std::string& key,
                                      const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(key, item));
  if (out.empty()) throw config_error(key, "empty list");
  return out;
}

std::optional<double> parse_auto_double(const std::string& key,
                                        const std::string& text) {
  if (text == "auto") return std::nullopt;
  return parse_double(key, text);
}

}  // namespace

std::string_view command_name(Command c) {
  for (const auto& [cmd, name] : kCommands) {
    if (cmd == c) return name;
  }
  return "unknown";
}

std::optional<Command> command_from_name(std::string_view name) {
  for (const auto& [cmd, n] : kCommands) {
    if (n == name) return cmd;
  }
  return std::nullopt;
}

std::span<const KeyInfo> config_schema() { return kSchema; }

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read config file " + path.string());
  KeyValues values;
  std::string line;
  std::size_t line_no = 0;
  bool provenance = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("#! adamlab", 0) == 0) provenance = true;
    std::string body;
    if (provenance) {
      // only "# key = value" lines count; "#!" lines and the table do not
      if (line.rfind("# ", 0) != 0) continue;
      body = trim(std::string_view(line).substr(2));
    } else {
      const auto hash = line.find('#');
      body = trim(std::string_view(line).substr(0, hash));
    }
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw config_error("", path.string() + ":" + std::to_string(line_no) +
                                 ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!known_key(key)) {
      throw config_error(key, "unknown key (" + path.string() + ":" +
                                  std::to_string(line_no) + ")");
    }
    if (value.empty()) throw config_error(key, "empty value");
    values[key] = value;
  }
  return values;
}

QuadraticSOP RunConfig::sop() const {
  if (v == w) return QuadraticSOP{TwoPointDistribution::point_mass(Point{v})};
  if (p_v) return QuadraticSOP{TwoPointDistribution::scalar(v, w, *p_v)};
  return QuadraticSOP{two_point_mean_zero(v, w)};
}

EnsembleConfig RunConfig::ensemble() const {
  EnsembleConfig cfg;
  cfg.sop = sop();
  cfg.kind = optimizer;
  cfg.schedule = schedule;
  cfg.batch = batch;
  cfg.n_steps = steps;
  cfg.replications = reps;
  cfg.theta0 = Point{theta0};
  cfg.grid = geometric_grid(steps, per_decade);
  cfg.seed = seed;
  cfg.reference = ref == Reference::Kind::vf_zero ? Reference::vf_zero()
                                                   : Reference::minimizer();
  cfg.error = error;
  cfg.zero.policy = policy;
  cfg.zero.replications = vf_reps;
  cfg.zero.abs_tol = zero_tol;
  cfg.zero.options.estimator = estimator.value_or(VFEstimator::conditioned);
  return cfg;
}

const std::string& RunConfig::value(std::string_view key) const {
  const auto it = resolved.find(key);
  if (it == resolved.end()) {
    throw config_error(std::string(key), "not a config key");
  }
  return it->second;
}

RunConfig resolve_config(Command command, const KeyValues& file_values,
                         const KeyValues& flags) {
  RunConfig cfg;
  cfg.command = command;
  for (const auto* src : {&file_values, &flags}) {
    for (const auto& [key, value] : *src) {
      if (!known_key(key)) throw config_error(key, "unknown key");
    }
  }
  auto lookup = [&](std::string_view key, std::string_view fallback) {
    if (auto it = flags.find(key); it != flags.end()) return it->second;
    if (auto it = file_values.find(key); it != file_values.end()) {
      return it->second;
    }
    return std::string(fallback);
  };
  for (const auto& k : kSchema) {
    cfg.resolved[std::string(k.name)] = lookup(k.name, k.default_value);
  }
  cfg.resolved["plot"] = lookup("plot", "false");
  auto get = [&](const char* key) -> const std::string& {
    return cfg.resolved.at(key);
  };
  auto num = [&](const char* key) { return parse_double(key, get(key)); };

  const std::string& opt = get("optimizer");
  const double b1 = num("beta1");
  const double b2 = num("beta2");
  const double eps = num("eps");
  if (!(b1 > 0.0 && b1 < 1.0)) throw config_error("beta1", "must lie in (0, 1)");
  if (!(b2 > 0.0 && b2 < 1.0)) throw config_error("beta2", "must lie in (0, 1)");
  if (!(eps > 0.0)) throw config_error("eps", "must be > 0");
  if (!(b2 > b1 * b1)) {
    throw config_error("beta2", "must exceed beta1^2 = " +
                                    std::to_string(b1 * b1) + ", got " +
                                    get("beta2"));
  }
  cfg.hp = AdamHyperparams(b1, b2, eps);
  if (opt == "adam") {
    cfg.optimizer = OptimizerKind::adam(cfg.hp);
  } else if (opt == "sgd") {
    cfg.optimizer = OptimizerKind::sgd();
  } else {
    throw config_error("optimizer", "expected adam or sgd, got '" + opt + "'");
  }

  const double lr_c = num("lr-c");
  const double lr_r = num("lr-r");
  if (!(lr_c > 0.0)) throw config_error("lr-c", "must be > 0");
  if (get("lr") == "power") {
    if (!(lr_r > 0.0)) throw config_error("lr-r", "must be > 0");
    cfg.schedule = LearningRateSchedule::power_law(lr_c, lr_r);
  } else if (get("lr") == "constant") {
    cfg.schedule = LearningRateSchedule::constant(lr_c);
  } else {
    throw config_error("lr", "expected power or constant, got '" + get("lr") +
                                 "'");
  }

  cfg.batch = parse_count("batch", get("batch"), 1);
  if (cfg.batch > 255) throw config_error("batch", "must be <= 255");
  cfg.steps = parse_count("steps", get("steps"), 1);
  cfg.reps = parse_count("reps", get("reps"), 2);
  cfg.seed = parse_u64("seed", get("seed"));
  cfg.v = num("v");
  cfg.w = num("w");
  cfg.p_v = parse_auto_double("pv", get("pv"));
  if (cfg.v != cfg.w) {
    if (cfg.p_v) {
      if (!(*cfg.p_v > 0.0 && *cfg.p_v < 1.0)) {
        throw config_error("pv", "must lie in (0, 1)");
      }
    } else if (!(cfg.v < 0.0 && cfg.w > 0.0) && !(cfg.w < 0.0 && cfg.v > 0.0)) {
      throw config_error("w", "mean-zero data needs v and w of opposite sign "
                              "(or set pv)");
    }
  }
  cfg.theta0 = num("theta0");

  const std::string& ref = get("ref");
  if (ref == "minimizer") {
    cfg.ref = Reference::Kind::minimizer;
  } else if (ref == "vfzero") {
    cfg.ref = Reference::Kind::vf_zero;
  } else {
    throw config_error("ref", "expected minimizer or vfzero, got '" + ref + "'");
  }
  const std::string& err = get("error");
  if (err == "abs") {
    cfg.error = ErrorMode::abs_distance;
  } else if (err == "clipped") {
    cfg.error = ErrorMode::clipped_distance;
  } else if (err == "signed") {
    cfg.error = ErrorMode::signed_distance;
  } else {
    throw config_error("error", "expected abs, clipped or signed, got '" + err +
                                    "'");
  }
  cfg.per_decade = parse_count("per-decade", get("per-decade"), 1);

  cfg.theta = parse_double_list("theta", get("theta"));
  cfg.vf_reps = parse_count("vf-reps", get("vf-reps"), 2);
  cfg.policy.tol = num("vf-tol");
  if (!(cfg.policy.tol > 0.0 && cfg.policy.tol < 1.0)) {
    throw config_error("vf-tol", "must lie in (0, 1)");
  }
  if (get("vf-terms") != "auto") {
    cfg.policy.fixed_terms = parse_count("vf-terms", get("vf-terms"), 0);
  }
  const std::string& est = get("estimator");
  if (est == "plain") {
    cfg.estimator = VFEstimator::plain;
  } else if (est == "conditioned") {
    cfg.estimator = VFEstimator::conditioned;
  } else if (est != "auto") {
    throw config_error("estimator", "expected auto, plain or conditioned, got '" +
                                        est + "'");
  }
  cfg.zero_tol = num("zero-tol");
  if (!(cfg.zero_tol > 0.0)) throw config_error("zero-tol", "must be > 0");
  cfg.lo = parse_auto_double("lo", get("lo"));
  cfg.hi = parse_auto_double("hi", get("hi"));
  if (cfg.lo && cfg.hi && !(*cfg.lo < *cfg.hi)) {
    throw config_error("hi", "must exceed lo");
  }

  cfg.beta2_grid = get("beta2-grid") == "default"
                       ? beta2_grid_default()
                       : parse_double_list("beta2-grid", get("beta2-grid"));
  for (double x : cfg.beta2_grid) {
    if (!(x > 0.0 && x < 1.0)) {
      throw config_error("beta2-grid", "values must lie in (0, 1)");
    }
  }
  for (const auto& item : split_list(get("batch-grid"))) {
    const std::size_t m = parse_count("batch-grid", item, 1);
    if (m > 255) throw config_error("batch-grid", "values must be <= 255");
    cfg.batch_grid.push_back(m);
  }
  if (cfg.batch_grid.empty()) throw config_error("batch-grid", "empty list");
  cfg.w_grid = get("w-grid") == "default"
                   ? w_grid_default()
                   : parse_double_list("w-grid", get("w-grid"));
  for (double x : cfg.w_grid) {
    if (!(x > 0.0)) throw config_error("w-grid", "values must be > 0");
  }
  cfg.ensembles = parse_bool("ensembles", get("ensembles"));

  cfg.n_max = parse_count("n-max", get("n-max"), 10);
  cfg.p = num("p");
  if (!(cfg.p > 0.0)) throw config_error("p", "must be > 0");
  cfg.out = get("out");
  cfg.plot = parse_bool("plot", get("plot"));
  return cfg;
}

namespace {

// "#! command: <name>" from a CSV written by emit_csv.
Command replay_command(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read " + path.string());
  std::string line;
  while (std::getline(in, line) && line.rfind("#", 0) == 0) {
    constexpr std::string_view tag = "#! command: ";
    if (line.rfind(tag, 0) == 0) {
      const auto cmd = command_from_name(trim(line.substr(tag.size())));
      if (cmd) return *cmd;
    }
  }
  throw config_error("replay", path.string() + " has no command provenance");
}

}  // namespace

Invocation parse_args(int argc, const char* const* argv) {
  Invocation inv;
  if (argc < 2) {
    inv.help = true;
    return inv;
  }
  int i = 1;
  const std::string first = argv[i++];
  if (first == "-h" || first == "--help" || first == "help") {
    inv.help = true;
    return inv;
  }
  KeyValues file_values;
  std::optional<Command> command;
  if (first == "replay") {
    if (i >= argc) throw config_error("replay", "missing file argument");
    const std::filesystem::path path = argv[i++];
    command = replay_command(path);
    file_values = read_config_file(path);
  } else if (first == "vf" || first == "sweep" || first == "check") {
    if (i >= argc) throw config_error("command", first + " needs a subcommand");
    command = command_from_name(first + "-" + argv[i++]);
  } else {
    command = command_from_name(first);
  }
  if (!command) throw config_error("command", "unknown command '" + first + "'");

  KeyValues flags;
  std::optional<std::filesystem::path> config_path;
  for (; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "-h" || arg == "--help") {
      inv.help = true;
      continue;
    }
    if (arg.rfind("--", 0) != 0) {
      throw config_error("", "unexpected argument '" + arg + "'");
    }
    arg = arg.substr(2);
    std::string key = arg;
    std::optional<std::string> value;
    if (const auto eq = arg.find('='); eq != std::string::npos) {
      key = arg.substr(0, eq);
      value = arg.substr(eq + 1);
    }
    if (!value && key == "plot") value = "true";
    if (!value) {
      if (i + 1 >= argc) throw config_error(key, "missing value");
      value = argv[++i];
    }
    if (key == "config") {
      config_path = *value;
      continue;
    }
    if (!known_key(key)) throw config_error(key, "unknown key");
    flags[key] = *value;
  }
  if (config_path) {
    for (auto& [k, v] : read_config_file(*config_path)) file_values[k] = v;
  }
  inv.config = resolve_config(*command, file_values, flags);
  return inv;
}

std::string usage() {
  std::string s =
      "usage: adamlab <command> [--key value ...] [--config FILE] [--plot]\n"
      "       adamlab replay FILE.csv [--out DIR]\n\n"
      "commands:\n"
      "  run             one trajectory (n, theta)\n"
      "  ensemble        mean error over reps trajectories (n, mean, stderr)\n"
      "  vf eval         vector field at --theta points\n"
      "  vf zero         zero of the vector field\n"
      "  sweep beta2     zeros and final errors over --beta2-grid\n"
      "  sweep batch     zeros and final errors over --batch-grid\n"
      "  sweep asym      signed zeros and final means over --w-grid (v = -1)\n"
      "  check schedule  finite-horizon step-size diagnostics\n"
      "  selftest        fast property suites\n\n"
      "keys (flags and config file share names):\n";
  for (const auto& k : kSchema) {
    std::string name(k.name);
    name.resize(std::max<std::size_t>(name.size(), 12), ' ');
    s += "  " + name + " " + std::string(k.help) + " [" +
         std::string(k.default_value) + "]\n";
  }
  s += "  plot         also write an SVG next to the CSV [false]\n\n"
       "env: ADAMLAB_THREADS sets the worker count\n"
       "exit: 0 ok, 1 selftest failure, 2 config, 3 numeric, 4 I/O\n";
  return s;
}

}  // namespace adamlab
