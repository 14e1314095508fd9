#include "sparkle/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sparkle/strategy.hpp"

namespace sparkle {
namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

struct Issues {
  std::vector<std::string> list;
  void add(std::string m) { list.push_back(std::move(m)); }
};

struct RawSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> kv;
};

// A # or ; starts a comment when it opens the line or follows whitespace;
// glued to a value ("foo#bar") it is kept, so such names stay expressible.
std::string strip_comment(const std::string& line) {
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] != '#' && line[i] != ';') continue;
    if (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')
      return line.substr(0, i);
  }
  return line;
}

// Raw INI scan: sections and key = value lines.
std::vector<RawSection> scan(const std::string& text, Issues& issues) {
  std::vector<RawSection> sections;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  int cur = -1;
  std::set<std::string> seen_sections;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(strip_comment(line));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        issues.add("line " + std::to_string(lineno) + ": malformed section '" +
                   t + "'");
        cur = -1;
        continue;
      }
      std::string name = trim(t.substr(1, t.size() - 2));
      if (!seen_sections.insert(name).second) {
        issues.add("line " + std::to_string(lineno) + ": duplicate section [" +
                   name + "]");
        cur = -1;
        continue;
      }
      sections.push_back({name, {}});
      cur = static_cast<int>(sections.size()) - 1;
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      issues.add("line " + std::to_string(lineno) +
                 ": expected 'key = value', got '" + t + "'");
      continue;
    }
    if (cur < 0) {
      issues.add("line " + std::to_string(lineno) +
                 ": key outside any section: '" + t + "'");
      continue;
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      issues.add("line " + std::to_string(lineno) + ": empty key");
      continue;
    }
    auto& kv = sections[static_cast<size_t>(cur)].kv;
    bool dup = std::any_of(kv.begin(), kv.end(),
                           [&](const auto& p) { return p.first == key; });
    if (dup) {
      issues.add("line " + std::to_string(lineno) + ": duplicate key '" + key +
                 "' in [" + sections[static_cast<size_t>(cur)].name + "]");
      continue;
    }
    kv.emplace_back(std::move(key), std::move(value));
  }
  return sections;
}

// Typed access to one section. Every get marks its key consumed; finish()
// reports whatever the file supplied that nothing asked for.
class SectionReader {
 public:
  SectionReader(const RawSection* sec, std::string display, Issues& issues)
      : sec_(sec), display_(std::move(display)), issues_(issues) {}

  std::string str(const char* key, std::string def) {
    const std::string* v = take(key);
    return v ? *v : def;
  }

  double f64(const char* key, double def) {
    const std::string* v = take(key);
    if (!v) return def;
    double out;
    if (!parse_f64(*v, out)) {
      bad(key, *v, "a number");
      return def;
    }
    return out;
  }

  template <typename Int>
  Int integer(const char* key, Int def) {
    const std::string* v = take(key);
    if (!v) return def;
    Int out{};
    auto res = std::from_chars(v->data(), v->data() + v->size(), out);
    if (res.ec != std::errc() || res.ptr != v->data() + v->size()) {
      bad(key, *v, "an integer");
      return def;
    }
    return out;
  }

  bool onoff(const char* key, bool def) {
    const std::string* v = take(key);
    if (!v) return def;
    if (*v == "on" || *v == "true") return true;
    if (*v == "off" || *v == "false") return false;
    bad(key, *v, "on or off");
    return def;
  }

  StepSchedule schedule(const char* key, StepSchedule def) {
    const std::string* v = take(key);
    if (!v) return def;
    auto toks = split_ws(*v);
    std::vector<double> nums;
    for (const auto& t : toks) {
      double d;
      if (!parse_f64(t, d)) {
        bad(key, *v, "1 or 3 numbers");
        return def;
      }
      nums.push_back(d);
    }
    if (nums.size() == 1) return StepSchedule{nums[0], 1.0, 0.0};
    if (nums.size() == 3) return StepSchedule{nums[0], nums[1], nums[2]};
    bad(key, *v, "1 number (constant) or 3 numbers c0 c1 c2");
    return def;
  }

  std::vector<std::string> words(const char* key) {
    const std::string* v = take(key);
    return v ? split_ws(*v) : std::vector<std::string>{};
  }

  void finish() {
    if (!sec_) return;
    for (const auto& [k, v] : sec_->kv) {
      if (!consumed_.count(k)) {
        issues_.add("[" + display_ + "]: unknown key '" + k + "'");
      }
    }
  }

 private:
  static bool parse_f64(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
  }

  const std::string* take(const char* key) {
    if (!sec_) return nullptr;
    consumed_.insert(key);
    for (const auto& [k, v] : sec_->kv) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  void bad(const char* key, const std::string& value, const char* expected) {
    issues_.add("[" + display_ + "] " + key + ": expected " + expected +
                ", got '" + value + "'");
  }

  const RawSection* sec_;
  std::string display_;
  Issues& issues_;
  std::set<std::string> consumed_;
};

TopologyConfig read_topology(const RawSection* sec, const std::string& name,
                             const TopologyConfig& base, Issues& issues) {
  SectionReader r(sec, name, issues);
  TopologyConfig t = base;
  t.kind = r.str("kind", base.kind);
  t.a = r.f64("a", base.a);
  t.rho = r.f64("rho", base.rho);
  t.rows = r.integer<int>("rows", base.rows);
  t.cols = r.integer<int>("cols", base.cols);
  t.file = r.str("file", base.file);
  r.finish();
  return t;
}

void check_strategy_name(const std::string& which, const std::string& name,
                         Issues& issues) {
  if (name.empty()) return;
  try {
    strategy_from_name(name);
  } catch (const std::exception& e) {
    issues.add("[strategy] " + which + ": " + e.what());
  }
}

void check_schedule(const char* which, const StepSchedule& s, Issues& issues) {
  if (!(s.c0 > 0.0) || !(s.c1 > 0.0) || s.c2 < 0.0) {
    issues.add(std::string("[hyperparams] ") + which +
               ": need c0 > 0, c1 > 0, c2 >= 0");
  }
}

void check_topology(const std::string& name, const TopologyConfig& t,
                    int agents, Issues& issues) {
  static const std::set<std::string> kinds = {
      "complete", "ring_adjusted", "five_peer", "torus", "custom"};
  if (!kinds.count(t.kind)) {
    issues.add("[" + name + "] kind: unknown kind '" + t.kind + "'");
    return;
  }
  if (t.kind == "ring_adjusted") {
    bool has_rho = t.rho >= 0.0;
    if (has_rho && !(t.rho > 0.0 && t.rho < 1.0)) {
      issues.add("[" + name + "] rho: must lie in (0, 1)");
    }
    if (!has_rho && !(t.a > 0.0 && t.a < 1.0)) {
      issues.add("[" + name + "] a: must lie in (0, 1)");
    }
  } else if (t.rho >= 0.0) {
    issues.add("[" + name + "] rho: only meaningful for kind ring_adjusted");
  }
  if (t.kind == "torus") {
    if (t.rows < 0 || t.cols < 0) {
      issues.add("[" + name + "] rows/cols: must be nonnegative");
    } else if ((t.rows == 0) != (t.cols == 0)) {
      issues.add("[" + name + "] rows/cols: give both or neither");
    } else if (t.rows > 0 && t.rows * t.cols != agents) {
      issues.add("[" + name + "] rows*cols must equal the agent count (" +
                 std::to_string(agents) + ")");
    }
  }
  if (t.kind == "custom" && t.file.empty()) {
    issues.add("[" + name + "] file: required for kind custom");
  }
}

void validate(const ExperimentConfig& cfg, Issues& issues) {
  const auto& p = cfg.problem;
  static const std::set<std::string> families = {"synthetic", "policy_eval",
                                                 "single_level"};
  if (!families.count(p.family)) {
    issues.add("[problem] family: unknown family '" + p.family + "'");
  }
  if (p.agents < 1) issues.add("[problem] agents: must be >= 1");
  if (p.dim_x < 1) issues.add("[problem] dim_x: must be >= 1");
  if (p.dim_y < 1) issues.add("[problem] dim_y: must be >= 1");
  if (p.sigma_g < 0) issues.add("[problem] sigma_g: must be >= 0");
  if (p.sigma_h < 0) issues.add("[problem] sigma_h: must be >= 0");
  if (p.c_reg < 0) issues.add("[problem] c_reg: must be >= 0");
  if (p.states < 1) issues.add("[problem] states: must be >= 1");
  if (p.features < 1) issues.add("[problem] features: must be >= 1");
  if (!(p.discount >= 0 && p.discount < 1)) {
    issues.add("[problem] discount: must lie in [0, 1)");
  }
  if (p.reward_noise < 0) issues.add("[problem] reward_noise: must be >= 0");
  if (p.noise_std < 0) issues.add("[problem] noise_std: must be >= 0");
  if (p.hetero_std < 0) issues.add("[problem] hetero_std: must be >= 0");

  check_topology("topology", cfg.topology, p.agents, issues);
  if (cfg.topology_x) check_topology("topology.x", *cfg.topology_x, p.agents, issues);
  if (cfg.topology_y) check_topology("topology.y", *cfg.topology_y, p.agents, issues);
  if (cfg.topology_z) check_topology("topology.z", *cfg.topology_z, p.agents, issues);

  const auto& s = cfg.strategy;
  if (s.upper.empty()) {
    issues.add("[strategy] upper: required");
  } else {
    check_strategy_name("upper", s.upper, issues);
  }
  check_strategy_name("lower", s.lower, issues);
  check_strategy_name("aux", s.aux, issues);
  bool any_custom = s.upper == "custom" || s.lower == "custom" ||
                    s.aux == "custom";
  if (any_custom && s.file.empty()) {
    issues.add("[strategy] file: required when a level uses custom");
  }

  const auto& h = cfg.hyper;
  check_schedule("alpha", h.alpha, issues);
  check_schedule("beta", h.beta, issues);
  check_schedule("gamma", h.gamma, issues);
  if (!(h.theta > 0.0 && h.theta <= 1.0)) {
    issues.add("[hyperparams] theta: must lie in (0, 1]");
  }
  if (h.iterations < 0) issues.add("[hyperparams] iterations: must be >= 0");
  if (h.batch_size < 1) issues.add("[hyperparams] batch_size: must be >= 1");
  if (h.mode != "stochastic" && h.mode != "deterministic") {
    issues.add("[hyperparams] mode: expected stochastic or deterministic");
  }

  const auto& r = cfg.run;
  if (r.replicates < 1) issues.add("[run] replicates: must be >= 1");
  if (r.metrics_stride < 1) issues.add("[run] metrics_stride: must be >= 1");
  if (r.out.empty()) issues.add("[run] out: must not be empty");
  if (r.engine != "generic" && r.engine != "recursive") {
    issues.add("[run] engine: expected generic or recursive");
  }
  if (r.threads < 1) issues.add("[run] threads: must be >= 1");
  if (r.engine == "recursive" && any_custom) {
    issues.add(
        "[run] engine: the recursive stepper has no form for a custom "
        "strategy triple; use generic");
  }

  const auto& sw = cfg.sweep;
  static const std::set<std::string> axes = {"n", "strategy", "theta", "rho"};
  if (!sw.axis.empty()) {
    if (!axes.count(sw.axis)) {
      issues.add("[sweep] axis: unknown axis '" + sw.axis +
                 "' (expected n, strategy, theta, or rho)");
    } else if (sw.values.empty()) {
      issues.add("[sweep] values: required when axis is set");
    } else {
      for (const auto& v : sw.values) {
        if (sw.axis == "strategy") {
          check_strategy_name("values", v, issues);
        } else if (sw.axis == "n") {
          int n = 0;
          auto res = std::from_chars(v.data(), v.data() + v.size(), n);
          if (res.ec != std::errc() || res.ptr != v.data() + v.size() ||
              n < 1) {
            issues.add("[sweep] values: '" + v + "' is not a positive agent count");
          }
        } else {
          char* end = nullptr;
          double d = std::strtod(v.c_str(), &end);
          bool num = end == v.c_str() + v.size() && !v.empty();
          if (sw.axis == "theta" && (!num || d <= 0.0 || d > 1.0)) {
            issues.add("[sweep] values: theta '" + v + "' must lie in (0, 1]");
          }
          if (sw.axis == "rho" && (!num || d <= 0.0 || d >= 1.0)) {
            issues.add("[sweep] values: rho '" + v + "' must lie in (0, 1)");
          }
        }
      }
    }
  } else if (!sw.values.empty()) {
    issues.add("[sweep] values: set without an axis");
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(const StepSchedule& s) {
  if (s.c1 == 1.0 && s.c2 == 0.0) return fmt(s.c0);
  return fmt(s.c0) + " " + fmt(s.c1) + " " + fmt(s.c2);
}

void write_topology(std::ostream& out, const std::string& name,
                    const TopologyConfig& t) {
  out << "[" << name << "]\n";
  out << "kind = " << t.kind << "\n";
  out << "a = " << fmt(t.a) << "\n";
  out << "rho = " << fmt(t.rho) << "\n";
  out << "rows = " << t.rows << "\n";
  out << "cols = " << t.cols << "\n";
  if (!t.file.empty()) out << "file = " << t.file << "\n";
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  Issues issues;
  auto sections = scan(text, issues);

  auto find = [&](const std::string& name) -> const RawSection* {
    for (const auto& s : sections) {
      if (s.name == name) return &s;
    }
    return nullptr;
  };

  ExperimentConfig cfg;

  {
    SectionReader r(find("problem"), "problem", issues);
    auto& p = cfg.problem;
    p.family = r.str("family", p.family);
    p.agents = r.integer<int>("agents", p.agents);
    p.dim_x = r.integer<int>("dim_x", p.dim_x);
    p.dim_y = r.integer<int>("dim_y", p.dim_y);
    p.sigma_g = r.f64("sigma_g", p.sigma_g);
    p.sigma_h = r.f64("sigma_h", p.sigma_h);
    p.c_reg = r.f64("c_reg", p.c_reg);
    p.states = r.integer<int>("states", p.states);
    p.features = r.integer<int>("features", p.features);
    p.discount = r.f64("discount", p.discount);
    p.reward_noise = r.f64("reward_noise", p.reward_noise);
    p.noise_std = r.f64("noise_std", p.noise_std);
    p.hetero_std = r.f64("hetero_std", p.hetero_std);
    p.data_seed = r.integer<std::uint64_t>("data_seed", p.data_seed);
    r.finish();
  }

  cfg.topology =
      read_topology(find("topology"), "topology", TopologyConfig{}, issues);
  if (const RawSection* s = find("topology.x")) {
    cfg.topology_x = read_topology(s, "topology.x", cfg.topology, issues);
  }
  if (const RawSection* s = find("topology.y")) {
    cfg.topology_y = read_topology(s, "topology.y", cfg.topology, issues);
  }
  if (const RawSection* s = find("topology.z")) {
    cfg.topology_z = read_topology(s, "topology.z", cfg.topology, issues);
  }

  {
    SectionReader r(find("strategy"), "strategy", issues);
    auto& s = cfg.strategy;
    s.upper = r.str("upper", s.upper);
    s.lower = r.str("lower", s.lower);
    s.aux = r.str("aux", s.aux);
    s.file = r.str("file", s.file);
    r.finish();
  }

  {
    SectionReader r(find("hyperparams"), "hyperparams", issues);
    auto& h = cfg.hyper;
    h.alpha = r.schedule("alpha", h.alpha);
    h.beta = r.schedule("beta", h.beta);
    h.gamma = r.schedule("gamma", h.gamma);
    h.theta = r.f64("theta", h.theta);
    h.iterations = r.integer<std::int64_t>("iterations", h.iterations);
    h.batch_size = r.integer<int>("batch_size", h.batch_size);
    h.mode = r.str("mode", h.mode);
    r.finish();
  }

  {
    SectionReader r(find("run"), "run", issues);
    auto& rc = cfg.run;
    rc.master_seed = r.integer<std::uint64_t>("master_seed", rc.master_seed);
    rc.replicates = r.integer<int>("replicates", rc.replicates);
    rc.metrics_stride = r.integer<std::int64_t>("metrics_stride", rc.metrics_stride);
    rc.out = r.str("out", rc.out);
    rc.engine = r.str("engine", rc.engine);
    rc.threads = r.integer<int>("threads", rc.threads);
    rc.timing = r.onoff("timing", rc.timing);
    rc.pd_shift = r.onoff("pd_shift", rc.pd_shift);
    r.finish();
  }

  {
    SectionReader r(find("sweep"), "sweep", issues);
    cfg.sweep.axis = r.str("axis", cfg.sweep.axis);
    cfg.sweep.values = r.words("values");
    r.finish();
  }

  static const std::set<std::string> known = {
      "problem",    "topology", "topology.x", "topology.y", "topology.z",
      "strategy",   "hyperparams", "run",     "sweep"};
  for (const auto& s : sections) {
    if (!known.count(s.name)) {
      issues.add("unknown section [" + s.name + "]");
    }
  }

  // keys that failed to parse kept their defaults, so semantic validation
  // cannot cascade off structural errors; run it either way
  validate(cfg, issues);

  if (!issues.list.empty()) {
    std::string msg = "config error";
    if (issues.list.size() > 1) {
      msg += " (" + std::to_string(issues.list.size()) + " issues)";
    }
    for (const auto& i : issues.list) msg += "\n  " + i;
    throw ConfigError(msg, issues.list);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  const auto& p = cfg.problem;
  out << "[problem]\n";
  out << "family = " << p.family << "\n";
  out << "agents = " << p.agents << "\n";
  out << "dim_x = " << p.dim_x << "\n";
  out << "dim_y = " << p.dim_y << "\n";
  out << "sigma_g = " << fmt(p.sigma_g) << "\n";
  out << "sigma_h = " << fmt(p.sigma_h) << "\n";
  out << "c_reg = " << fmt(p.c_reg) << "\n";
  out << "states = " << p.states << "\n";
  out << "features = " << p.features << "\n";
  out << "discount = " << fmt(p.discount) << "\n";
  out << "reward_noise = " << fmt(p.reward_noise) << "\n";
  out << "noise_std = " << fmt(p.noise_std) << "\n";
  out << "hetero_std = " << fmt(p.hetero_std) << "\n";
  out << "data_seed = " << p.data_seed << "\n";

  out << "\n";
  write_topology(out, "topology", cfg.topology);
  if (cfg.topology_x) {
    out << "\n";
    write_topology(out, "topology.x", *cfg.topology_x);
  }
  if (cfg.topology_y) {
    out << "\n";
    write_topology(out, "topology.y", *cfg.topology_y);
  }
  if (cfg.topology_z) {
    out << "\n";
    write_topology(out, "topology.z", *cfg.topology_z);
  }

  out << "\n[strategy]\n";
  out << "upper = " << cfg.strategy.upper << "\n";
  if (!cfg.strategy.lower.empty()) out << "lower = " << cfg.strategy.lower << "\n";
  if (!cfg.strategy.aux.empty()) out << "aux = " << cfg.strategy.aux << "\n";
  if (!cfg.strategy.file.empty()) out << "file = " << cfg.strategy.file << "\n";

  const auto& h = cfg.hyper;
  out << "\n[hyperparams]\n";
  out << "alpha = " << fmt(h.alpha) << "\n";
  out << "beta = " << fmt(h.beta) << "\n";
  out << "gamma = " << fmt(h.gamma) << "\n";
  out << "theta = " << fmt(h.theta) << "\n";
  out << "iterations = " << h.iterations << "\n";
  out << "batch_size = " << h.batch_size << "\n";
  out << "mode = " << h.mode << "\n";

  const auto& r = cfg.run;
  out << "\n[run]\n";
  out << "master_seed = " << r.master_seed << "\n";
  out << "replicates = " << r.replicates << "\n";
  out << "metrics_stride = " << r.metrics_stride << "\n";
  out << "out = " << r.out << "\n";
  out << "engine = " << r.engine << "\n";
  out << "threads = " << r.threads << "\n";
  out << "timing = " << (r.timing ? "on" : "off") << "\n";
  out << "pd_shift = " << (r.pd_shift ? "on" : "off") << "\n";

  if (!cfg.sweep.axis.empty()) {
    out << "\n[sweep]\n";
    out << "axis = " << cfg.sweep.axis << "\n";
    out << "values =";
    for (const auto& v : cfg.sweep.values) out << " " << v;
    out << "\n";
  }
  return out.str();
}

}  // namespace sparkle
