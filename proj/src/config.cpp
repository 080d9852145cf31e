#include "thetaskew/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "thetaskew/errors.hpp"

namespace thetaskew::config {

namespace {

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

const std::set<std::string> kSections = {"run",   "deformation", "grid",        "model", "solver",
                                         "noise", "analysis",    "calibration", "sweep"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

class Table {
 public:
  explicit Table(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      auto cut = raw.find_first_of("#;");
      const std::string s = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') throw ConfigError("", line, "malformed section header '" + s + "'");
        section = trim(s.substr(1, s.size() - 2));
        if (!kSections.count(section))
          throw ConfigError(section, line, "unknown section [" + section + "]");
        if (!seen_sections_.insert(section).second)
          throw ConfigError(section, line, "duplicate section [" + section + "]");
        section_lines_[section] = line;
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("", line, "expected 'key = value'");
      if (section.empty()) throw ConfigError("", line, "key outside of any section");
      const std::string key = section + "." + trim(s.substr(0, eq));
      const std::string value = trim(s.substr(eq + 1));
      if (value.empty()) throw ConfigError(key, line, "empty value");
      if (entries_.count(key)) throw ConfigError(key, line, "duplicate key");
      entries_[key] = {value, line, false};
    }
  }

  bool has_section(const std::string& s) const { return seen_sections_.count(s) != 0; }
  int section_line(const std::string& s) const {
    auto it = section_lines_.find(s);
    return it == section_lines_.end() ? 0 : it->second;
  }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  int line(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  const Entry* find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  const Entry& require(const std::string& key) {
    const Entry* e = find(key);
    if (!e) throw ConfigError(key, 0, "required key is missing (no default for this parameter)");
    return *e;
  }

  void reject_unused() const {
    for (const auto& [key, e] : entries_)
      if (!e.used) throw ConfigError(key, e.line, "unknown or inapplicable key");
  }

 private:
  std::map<std::string, Entry> entries_;
  std::set<std::string> seen_sections_;
  std::map<std::string, int> section_lines_;
};

double to_double(const std::string& key, const Entry& e) {
  double v = 0.0;
  const char* end = e.value.data() + e.value.size();
  auto [p, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v))
    throw ConfigError(key, e.line, "not a finite number: '" + e.value + "'");
  return v;
}

long long to_int(const std::string& key, const Entry& e) {
  long long v = 0;
  const char* end = e.value.data() + e.value.size();
  auto [p, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError(key, e.line, "not an integer: '" + e.value + "'");
  return v;
}

std::uint64_t to_u64(const std::string& key, const Entry& e) {
  std::uint64_t v = 0;
  const char* end = e.value.data() + e.value.size();
  auto [p, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || p != end)
    throw ConfigError(key, e.line, "not an unsigned 64-bit integer: '" + e.value + "'");
  return v;
}

bool to_bool(const std::string& key, const Entry& e) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  throw ConfigError(key, e.line, "expected true or false, got '" + e.value + "'");
}

std::vector<double> to_list(const std::string& key, const Entry& e) {
  std::vector<double> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    Entry one{trim(item), e.line, true};
    if (one.value.empty()) throw ConfigError(key, e.line, "empty list element");
    out.push_back(to_double(key, one));
  }
  if (out.empty()) throw ConfigError(key, e.line, "empty list");
  return out;
}

template <class Enum>
Enum to_enum(const std::string& key, const Entry& e,
             std::initializer_list<std::pair<const char*, Enum>> names) {
  std::string options;
  for (const auto& [name, value] : names) {
    if (e.value == name) return value;
    options += options.empty() ? name : std::string(", ") + name;
  }
  throw ConfigError(key, e.line, "unknown value '" + e.value + "' (expected one of " + options + ")");
}

struct Reader {
  Table& t;

  double num(const std::string& key) { return to_double(key, t.require(key)); }
  double num(const std::string& key, double fallback) {
    const Entry* e = t.find(key);
    return e ? to_double(key, *e) : fallback;
  }
  long long integer(const std::string& key, long long fallback) {
    const Entry* e = t.find(key);
    return e ? to_int(key, *e) : fallback;
  }
  void check(bool ok, const std::string& key, const std::string& message) {
    if (!ok) throw ConfigError(key, t.line(key), message);
  }
};

}  // namespace

std::uint64_t fnv1a(std::string_view data, std::uint64_t h) noexcept {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string RunConfig::hash() const {
  const std::string seed_text = "\nseed=" + std::to_string(seed);
  const auto h = fnv1a(seed_text, fnv1a(text));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void RunConfig::override_seed(std::uint64_t s) {
  seed = s;
  noise.seed = s;
}

std::string to_string(Mode m) {
  return m == Mode::analytic_two_packet ? "analytic_two_packet" : "solver_two_packet";
}

std::string to_string(Envelope e) { return e == Envelope::flat ? "flat" : "gaussian"; }

RunConfig parse(std::string_view text) {
  Table t(text);
  Reader r{t};
  RunConfig c;
  c.text = std::string(text);

  c.mode = to_enum<Mode>("run.mode", t.require("run.mode"),
                         {{"analytic_two_packet", Mode::analytic_two_packet},
                          {"solver_two_packet", Mode::solver_two_packet}});
  if (const Entry* e = t.find("run.seed")) c.seed = to_u64("run.seed", *e);

  {
    const double re_kappa = r.num("deformation.re_kappa");
    const double theta = r.num("deformation.theta");
    r.check(re_kappa > 0.0, "deformation.re_kappa", "re_kappa must be > 0");
    r.check(std::abs(theta) < 1.0, "deformation.theta",
            "|theta| < 1 required (perturbative regime), got " + t.find("deformation.theta")->value);
    c.deformation = DeformationParams(re_kappa, theta);
  }

  {
    const long long points = to_int("grid.points", t.require("grid.points"));
    r.check(points >= static_cast<long long>(WaveField::kMinSamples), "grid.points",
            "at least 8 grid points required");
    c.grid.points = static_cast<std::size_t>(points);
    c.grid.dx = r.num("grid.dx");
    r.check(c.grid.dx > 0.0, "grid.dx", "dx must be > 0");
    c.grid.x0 = r.num("grid.x0");
  }

  {
    auto& m = c.model;
    m.envelope = to_enum<Envelope>("model.envelope", t.require("model.envelope"),
                                   {{"flat", Envelope::flat}, {"gaussian", Envelope::gaussian}});
    m.amplitude_mean = r.num("model.amplitude_mean");
    r.check(m.amplitude_mean > 0.0, "model.amplitude_mean", "amplitude_mean must be > 0");
    m.imbalance = r.num("model.imbalance");
    r.check(std::abs(m.imbalance) < 1.0, "model.imbalance", "|imbalance| < 1 required");
    m.momentum1 = r.num("model.momentum1");
    m.momentum2 = r.num("model.momentum2");
    m.offset1 = r.num("model.offset1", 0.0);
    m.offset2 = r.num("model.offset2", 0.0);
    if (m.envelope == Envelope::gaussian) {
      m.center1 = r.num("model.center1");
      m.center2 = r.num("model.center2");
      m.width1 = r.num("model.width1");
      m.width2 = r.num("model.width2");
      r.check(m.width1 > 0.0, "model.width1", "width1 must be > 0");
      r.check(m.width2 > 0.0, "model.width2", "width2 must be > 0");
    }
  }

  if (c.mode == Mode::solver_two_packet) {
    if (!t.has_section("solver"))
      throw ConfigError("solver", 0, "mode solver_two_packet needs a [solver] section");
    if (c.model.envelope != Envelope::gaussian)
      throw ConfigError("model.envelope", t.line("model.envelope"),
                        "solver mode evolves localized packets: envelope must be gaussian");
    SolverSpec s;
    s.mass = r.num("solver.mass");
    r.check(s.mass > 0.0, "solver.mass", "mass must be > 0");
    s.dt = r.num("solver.dt");
    r.check(s.dt > 0.0, "solver.dt", "dt must be > 0");
    s.steps = to_int("solver.steps", t.require("solver.steps"));
    r.check(s.steps > 0, "solver.steps", "steps must be > 0");
    if (const Entry* e = t.find("solver.potential"))
      s.potential = to_enum<Potential>("solver.potential", *e,
                                       {{"free", Potential::free}, {"harmonic", Potential::harmonic}});
    if (s.potential == Potential::harmonic) {
      s.omega = r.num("solver.omega");
      r.check(s.omega > 0.0, "solver.omega", "omega must be > 0");
    }
    if (const Entry* e = t.find("solver.boundary"))
      s.boundary.kind = to_enum<solver::BoundaryKind>(
          "solver.boundary", *e,
          {{"periodic", solver::BoundaryKind::periodic},
           {"absorbing_ramp", solver::BoundaryKind::absorbing_ramp}});
    if (s.boundary.kind == solver::BoundaryKind::absorbing_ramp) {
      s.boundary.width = r.num("solver.ramp_width");
      s.boundary.strength = r.num("solver.ramp_strength");
    }
    s.trace_stride = r.integer("solver.trace_stride", 0);
    r.check(s.trace_stride >= 0, "solver.trace_stride", "trace_stride must be >= 0");
    c.solver = s;
  } else if (t.has_section("solver")) {
    throw ConfigError("solver", t.section_line("solver"),
                      "[solver] only applies to mode = solver_two_packet");
  }

  {
    auto& n = c.noise;
    n.phase_jitter_sigma = r.num("noise.phase_jitter", 0.0);
    n.path_jitter_sigma = r.num("noise.path_jitter", 0.0);
    n.psf_sigma = r.num("noise.psf_sigma", 0.0);
    n.shots = r.integer("noise.shots", 1);
    n.events_per_shot = r.integer("noise.events", 0);
    n.seed = c.seed;
    c.realizations = r.integer("noise.realizations", 1);
    r.check(n.phase_jitter_sigma >= 0.0, "noise.phase_jitter", "must be >= 0");
    r.check(n.path_jitter_sigma >= 0.0, "noise.path_jitter", "must be >= 0");
    r.check(n.psf_sigma >= 0.0, "noise.psf_sigma", "must be >= 0");
    r.check(n.shots >= 1, "noise.shots", "must be >= 1");
    r.check(n.events_per_shot >= 0, "noise.events", "must be >= 0");
    r.check(c.realizations >= 1, "noise.realizations", "must be >= 1");
  }

  {
    auto& a = c.analysis;
    a.sigma_max = r.num("analysis.sigma_max", a.sigma_max);
    r.check(a.sigma_max > 0.0 && a.sigma_max <= 3.141592653589793, "analysis.sigma_max",
            "sigma_max must lie in (0, pi]");
    a.fit_halfwidth = r.num("analysis.fit_halfwidth", a.fit_halfwidth);
    r.check(a.fit_halfwidth > 0.0 && a.fit_halfwidth <= 1.0, "analysis.fit_halfwidth",
            "fit_halfwidth is a fraction of the window half-width in (0, 1]");
    a.min_prominence = r.num("analysis.min_prominence", a.min_prominence);
    r.check(a.min_prominence > 0.0 && a.min_prominence < 1.0, "analysis.min_prominence",
            "min_prominence must lie in (0, 1)");
    if (const Entry* e = t.find("analysis.center")) {
      try {
        a.center = analysis::parse_center_method(e->value);
      } catch (const Error& err) {
        throw ConfigError("analysis.center", e->line, err.what());
      }
    }
    if (const Entry* e = t.find("analysis.linear_background"))
      a.linear_background = to_bool("analysis.linear_background", *e);
    if (const Entry* e = t.find("analysis.windows"))
      a.windows = to_enum<WindowSource>("analysis.windows", *e,
                                        {{"model", WindowSource::model}, {"peaks", WindowSource::peaks}});
    if (const Entry* e = t.find("analysis.region_lo")) a.region_lo = to_double("analysis.region_lo", *e);
    if (const Entry* e = t.find("analysis.region_hi")) a.region_hi = to_double("analysis.region_hi", *e);
    if (a.region_lo && a.region_hi)
      r.check(*a.region_lo < *a.region_hi, "analysis.region_hi", "region_hi must exceed region_lo");
  }

  c.theta_cal = r.num("calibration.theta_cal", c.theta_cal);
  r.check(c.theta_cal != 0.0 && std::abs(c.theta_cal) < 1.0, "calibration.theta_cal",
          "theta_cal must be nonzero with |theta_cal| < 1");

  if (t.has_section("sweep")) {
    SweepSpec s;
    s.theta = to_list("sweep.theta", t.require("sweep.theta"));
    s.imbalance = to_list("sweep.imbalance", t.require("sweep.imbalance"));
    for (double th : s.theta)
      r.check(std::abs(th) < 1.0, "sweep.theta", "|theta| < 1 required for every sweep value");
    for (double im : s.imbalance)
      r.check(std::abs(im) < 1.0, "sweep.imbalance", "|imbalance| < 1 required");
    s.order = static_cast<int>(r.integer("sweep.order", 0));
    c.sweep = s;
  }

  t.reject_unused();
  return c;
}

RunConfig load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", 0, "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace thetaskew::config
