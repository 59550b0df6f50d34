#pragma once

// Text formats: the INI-style run configuration, the count-dataset file,
// Wigner grids as CSV plus grayscale PGM, and density matrices.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "apparatus.hpp"
#include "phase_space.hpp"

namespace nwt {

// ---------------------------------------------------------------- numbers

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

template <class Int>
std::optional<Int> parse_integer(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  Int v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << content;
  if (!out) throw IoError(path, "write failed");
}

}  // namespace detail

// ---------------------------------------------------------------- config

struct StateBlock {
  std::string family = "gaussian";  // gaussian | evolved | cat
  double l_coh = 1.0;
  double x_center = 0.0;
  double p_center = 0.0;
  double tau = 0.0;
  double separation = 8.0;
  std::size_t n_points = 64;
  double x_extent = 40.0;
  bool operator==(const StateBlock&) const = default;
};

struct ScheduleBlock {
  std::vector<double> dp, dx;  // natural units
  std::vector<double> B, L;    // tesla, meters
  double exposure = 1e4;
  bool with_aux = true;
  std::uint64_t seed = 1;
  bool noiseless = false;  // rounded expected counts instead of Poisson draws
  std::optional<double> aux_shift;  // unset: pi / (2 p0) from the physics block
  bool operator==(const ScheduleBlock&) const = default;
};

struct MethodBlock {
  std::string name = "direct";  // direct | radon | ml
  std::size_t ml_dim = 0;
  double ml_dilution = 0.5;
  std::size_t ml_max_iter = 2000;
  double ml_tol = 1e-9;
  bool ml_use_aux = false;
  std::size_t radon_bins = 64;
  std::size_t radon_omega = 128;
  std::string radon_window = "hann";
  bool operator==(const MethodBlock&) const = default;
};

struct OutputBlock {
  std::string dir = ".";
  std::string prefix = "run";
  std::string dataset;  // read counts from this file instead of simulating
  std::size_t wigner_points = 128;
  double x_half = 0.0;  // 0: half the grid extent
  double p_half = 0.0;  // 0: the grid momentum limit
  bool operator==(const OutputBlock&) const = default;
};

struct RunConfig {
  PhysicalConfig physics;
  StateBlock state;
  ScheduleBlock schedule;
  MethodBlock method;
  OutputBlock output;

  bool operator==(const RunConfig& o) const {
    return physics.wavelength == o.physics.wavelength && physics.mass == o.physics.mass &&
           physics.moment == o.physics.moment && physics.length_unit == o.physics.length_unit &&
           physics.efficiency == o.physics.efficiency && physics.background == o.physics.background &&
           state == o.state && schedule == o.schedule && method == o.method && output == o.output;
  }
};

namespace detail {

struct Entry {
  std::string value;
  int line = 0;
};

using Sections = std::map<std::string, std::map<std::string, Entry>>;

/// linspace(lo, hi, n) or a comma-separated list.
inline std::optional<std::vector<double>> parse_list(const std::string& v) {
  std::vector<double> out;
  const std::string t = trim(v);
  if (t.rfind("linspace(", 0) == 0 && t.back() == ')') {
    const auto parts = split(std::string_view(t).substr(9, t.size() - 10), ',');
    if (parts.size() != 3) return std::nullopt;
    auto lo = parse_double(parts[0]), hi = parse_double(parts[1]);
    auto n = parse_integer<std::size_t>(parts[2]);
    if (!lo || !hi || !n || *n == 0) return std::nullopt;
    for (std::size_t i = 0; i < *n; ++i)
      out.push_back(*n == 1 ? *lo : *lo + (*hi - *lo) * static_cast<double>(i) / static_cast<double>(*n - 1));
    return out;
  }
  if (t.empty()) return out;
  for (const auto& p : split(t, ',')) {
    auto d = parse_double(p);
    if (!d) return std::nullopt;
    out.push_back(*d);
  }
  return out;
}

inline std::optional<bool> parse_bool(const std::string& v) {
  std::string t = trim(v);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  return std::nullopt;
}

inline std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s;
}

}  // namespace detail

/// Applies one `section.key = value` assignment; problems go to `issues`.
inline void apply_setting(RunConfig& c, const std::string& section, const std::string& key, const std::string& value,
                          int line, std::vector<ConfigIssue>& issues) {
  auto bad = [&](const std::string& what) { issues.push_back({line, section + "." + key + ": " + what}); };
  auto num = [&](double& dst) {
    if (auto d = parse_double(value)) dst = *d;
    else bad("expected a number, got '" + value + "'");
  };
  auto count = [&](std::size_t& dst) {
    if (auto d = parse_integer<std::size_t>(value)) dst = *d;
    else bad("expected a non-negative integer, got '" + value + "'");
  };
  auto flag = [&](bool& dst) {
    if (auto b = detail::parse_bool(value)) dst = *b;
    else bad("expected true or false, got '" + value + "'");
  };
  auto list = [&](std::vector<double>& dst) {
    auto l = detail::parse_list(value);
    if (!l) bad("expected a number list or linspace(lo, hi, n), got '" + value + "'");
    else if (l->empty()) bad("list must not be empty");
    else dst = *l;
  };
  auto text = [&](std::string& dst) { dst = detail::trim(value); };

  if (section == "physics") {
    if (key == "wavelength") return num(c.physics.wavelength);
    if (key == "mass") return num(c.physics.mass);
    if (key == "moment") return num(c.physics.moment);
    if (key == "length_unit") return num(c.physics.length_unit);
    if (key == "efficiency") return num(c.physics.efficiency);
    if (key == "background") return num(c.physics.background);
  } else if (section == "state") {
    if (key == "family") return text(c.state.family);
    if (key == "l_coh") return num(c.state.l_coh);
    if (key == "x_center") return num(c.state.x_center);
    if (key == "p_center") return num(c.state.p_center);
    if (key == "tau") return num(c.state.tau);
    if (key == "separation") return num(c.state.separation);
    if (key == "n_points") return count(c.state.n_points);
    if (key == "x_extent") return num(c.state.x_extent);
  } else if (section == "schedule") {
    if (key == "dp") return list(c.schedule.dp);
    if (key == "dx") return list(c.schedule.dx);
    if (key == "B") return list(c.schedule.B);
    if (key == "L") return list(c.schedule.L);
    if (key == "exposure") return num(c.schedule.exposure);
    if (key == "with_aux") return flag(c.schedule.with_aux);
    if (key == "noiseless") return flag(c.schedule.noiseless);
    if (key == "seed") {
      if (auto s = parse_integer<std::uint64_t>(value)) c.schedule.seed = *s;
      else bad("expected a non-negative integer, got '" + value + "'");
      return;
    }
    if (key == "aux_shift") {
      if (detail::trim(value) == "auto") c.schedule.aux_shift.reset();
      else if (auto d = parse_double(value)) c.schedule.aux_shift = *d;
      else bad("expected a number or 'auto', got '" + value + "'");
      return;
    }
  } else if (section == "method") {
    if (key == "name") return text(c.method.name);
    if (key == "ml.dim") return count(c.method.ml_dim);
    if (key == "ml.dilution") return num(c.method.ml_dilution);
    if (key == "ml.max_iter") return count(c.method.ml_max_iter);
    if (key == "ml.tol") return num(c.method.ml_tol);
    if (key == "ml.use_aux") return flag(c.method.ml_use_aux);
    if (key == "radon.bins") return count(c.method.radon_bins);
    if (key == "radon.omega") return count(c.method.radon_omega);
    if (key == "radon.window") return text(c.method.radon_window);
  } else if (section == "output") {
    if (key == "dir") return text(c.output.dir);
    if (key == "prefix") return text(c.output.prefix);
    if (key == "dataset") return text(c.output.dataset);
    if (key == "wigner_points") return count(c.output.wigner_points);
    if (key == "x_half") return num(c.output.x_half);
    if (key == "p_half") return num(c.output.p_half);
  } else {
    issues.push_back({line, "unknown section [" + section + "]"});
    return;
  }
  issues.push_back({line, "unknown key '" + key + "' in [" + section + "]"});
}

/// Semantic checks; line numbers are taken from `where` when known.
inline void validate_config(const RunConfig& c, std::vector<ConfigIssue>& issues,
                            const std::map<std::string, int>& where = {}) {
  auto at = [&](const std::string& k) {
    auto it = where.find(k);
    return it == where.end() ? 0 : it->second;
  };
  auto positive = [&](double v, const std::string& k) {
    if (!(v > 0.0)) issues.push_back({at(k), k + " must be positive"});
  };
  positive(c.physics.wavelength, "physics.wavelength");
  positive(c.physics.mass, "physics.mass");
  positive(c.physics.moment, "physics.moment");
  positive(c.physics.length_unit, "physics.length_unit");
  if (!(c.physics.efficiency > 0.0 && c.physics.efficiency <= 1.0))
    issues.push_back({at("physics.efficiency"), "physics.efficiency must lie in (0, 1]"});
  if (c.physics.background < 0.0) issues.push_back({at("physics.background"), "physics.background must be >= 0"});

  const auto& s = c.state;
  if (s.family != "gaussian" && s.family != "evolved" && s.family != "cat")
    issues.push_back({at("state.family"), "state.family must be gaussian, evolved or cat"});
  positive(s.l_coh, "state.l_coh");
  positive(s.x_extent, "state.x_extent");
  if (s.n_points < 2 || s.n_points % 2 != 0) issues.push_back({at("state.n_points"), "state.n_points must be even and >= 2"});
  if (s.family == "evolved" && s.tau < 0.0) issues.push_back({at("state.tau"), "state.tau must be >= 0"});
  if (s.family == "cat" && s.separation < 0.0) issues.push_back({at("state.separation"), "state.separation must be >= 0"});

  const auto& k = c.schedule;
  const bool natural = !k.dp.empty() || !k.dx.empty();
  const bool hardware = !k.B.empty() || !k.L.empty();
  if (natural && hardware)
    issues.push_back({at("schedule.B"), "give either dp/dx or B/L lists, not both"});
  else if (natural) {
    if (k.dp.empty()) issues.push_back({at("schedule.dp"), "schedule.dp must not be empty"});
    if (k.dx.empty()) issues.push_back({at("schedule.dx"), "schedule.dx must not be empty"});
  } else if (hardware) {
    if (k.B.empty()) issues.push_back({at("schedule.B"), "schedule.B must not be empty"});
    if (k.L.empty()) issues.push_back({at("schedule.L"), "schedule.L must not be empty"});
    for (double b : k.B)
      if (b < 0.0) {
        issues.push_back({at("schedule.B"), "schedule.B values must be >= 0"});
        break;
      }
    for (double l : k.L)
      if (l < 0.0) {
        issues.push_back({at("schedule.L"), "schedule.L values must be >= 0"});
        break;
      }
  }
  positive(k.exposure, "schedule.exposure");
  if (k.aux_shift && *k.aux_shift < 0.0) issues.push_back({at("schedule.aux_shift"), "schedule.aux_shift must be >= 0"});

  const auto& m = c.method;
  if (m.name != "direct" && m.name != "radon" && m.name != "ml")
    issues.push_back({at("method.name"), "method.name must be direct, radon or ml"});
  if (!(m.ml_dilution > 0.0 && m.ml_dilution <= 1.0))
    issues.push_back({at("method.ml.dilution"), "method.ml.dilution must lie in (0, 1]"});
  positive(m.ml_tol, "method.ml.tol");
  if (m.ml_max_iter == 0) issues.push_back({at("method.ml.max_iter"), "method.ml.max_iter must be positive"});
  if (m.ml_dim == 1) issues.push_back({at("method.ml.dim"), "method.ml.dim must be 0 or >= 2"});
  if (m.radon_window != "hann" && m.radon_window != "ram-lak")
    issues.push_back({at("method.radon.window"), "method.radon.window must be hann or ram-lak"});
  if (m.radon_bins == 0) issues.push_back({at("method.radon.bins"), "method.radon.bins must be positive"});
  if (m.radon_omega < 2) issues.push_back({at("method.radon.omega"), "method.radon.omega must be >= 2"});
  if (c.output.wigner_points < 2) issues.push_back({at("output.wigner_points"), "output.wigner_points must be >= 2"});
  if (c.output.x_half < 0.0 || c.output.p_half < 0.0)
    issues.push_back({at("output.x_half"), "output.x_half and output.p_half must be >= 0"});
}

/// Parses an INI-style document: `[section]` headers, `key = value` lines,
/// `#` or `;` comments. Every syntax and validation problem is collected
/// before a ConfigError is thrown.
inline RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::vector<ConfigIssue> issues;
  std::map<std::string, int> where;
  std::string section;
  bool known = true;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string line(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    ++line_no;
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    for (const char* mark : {"#", ";"}) {
      const auto pos = line.find(mark);
      if (pos != std::string::npos) line.erase(pos);
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        issues.push_back({line_no, "malformed section header"});
        continue;
      }
      section = detail::trim(line.substr(1, line.size() - 2));
      known = section == "physics" || section == "state" || section == "schedule" || section == "method" ||
              section == "output";
      if (!known) issues.push_back({line_no, "unknown section [" + section + "]"});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      issues.push_back({line_no, "expected 'key = value'"});
      continue;
    }
    if (section.empty()) {
      issues.push_back({line_no, "key outside of any section"});
      continue;
    }
    if (!known) continue;
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string full = section + "." + key;
    if (where.count(full)) issues.push_back({line_no, "duplicate key " + full});
    where[full] = line_no;
    apply_setting(c, section, key, line.substr(eq + 1), line_no, issues);
  }
  validate_config(c, issues, where);
  std::stable_sort(issues.begin(), issues.end(), [](const ConfigIssue& a, const ConfigIssue& b) { return a.line < b.line; });
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

inline RunConfig load_config(const std::string& path) { return parse_config(detail::read_file(path)); }

/// Applies `section.key=value` overrides (command-line flags) and revalidates.
inline void apply_overrides(RunConfig& c, const std::vector<std::string>& overrides) {
  std::vector<ConfigIssue> issues;
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      issues.push_back({0, "override '" + o + "' is not of the form section.key=value"});
      continue;
    }
    apply_setting(c, detail::trim(o.substr(0, dot)), detail::trim(o.substr(dot + 1, eq - dot - 1)), o.substr(eq + 1), 0,
                  issues);
  }
  validate_config(c, issues);
  if (!issues.empty()) throw ConfigError(std::move(issues));
}

inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream o;
  auto kv = [&](const std::string& k, const std::string& v) { o << k << " = " << v << "\n"; };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  o << "[physics]\n";
  kv("wavelength", format_double(c.physics.wavelength));
  kv("mass", format_double(c.physics.mass));
  kv("moment", format_double(c.physics.moment));
  kv("length_unit", format_double(c.physics.length_unit));
  kv("efficiency", format_double(c.physics.efficiency));
  kv("background", format_double(c.physics.background));
  o << "\n[state]\n";
  kv("family", c.state.family);
  kv("l_coh", format_double(c.state.l_coh));
  kv("x_center", format_double(c.state.x_center));
  kv("p_center", format_double(c.state.p_center));
  kv("tau", format_double(c.state.tau));
  kv("separation", format_double(c.state.separation));
  kv("n_points", std::to_string(c.state.n_points));
  kv("x_extent", format_double(c.state.x_extent));
  o << "\n[schedule]\n";
  if (!c.schedule.dp.empty()) kv("dp", detail::format_list(c.schedule.dp));
  if (!c.schedule.dx.empty()) kv("dx", detail::format_list(c.schedule.dx));
  if (!c.schedule.B.empty()) kv("B", detail::format_list(c.schedule.B));
  if (!c.schedule.L.empty()) kv("L", detail::format_list(c.schedule.L));
  kv("exposure", format_double(c.schedule.exposure));
  kv("with_aux", b(c.schedule.with_aux));
  kv("seed", std::to_string(c.schedule.seed));
  kv("noiseless", b(c.schedule.noiseless));
  kv("aux_shift", c.schedule.aux_shift ? format_double(*c.schedule.aux_shift) : "auto");
  o << "\n[method]\n";
  kv("name", c.method.name);
  kv("ml.dim", std::to_string(c.method.ml_dim));
  kv("ml.dilution", format_double(c.method.ml_dilution));
  kv("ml.max_iter", std::to_string(c.method.ml_max_iter));
  kv("ml.tol", format_double(c.method.ml_tol));
  kv("ml.use_aux", b(c.method.ml_use_aux));
  kv("radon.bins", std::to_string(c.method.radon_bins));
  kv("radon.omega", std::to_string(c.method.radon_omega));
  kv("radon.window", c.method.radon_window);
  o << "\n[output]\n";
  kv("dir", c.output.dir);
  kv("prefix", c.output.prefix);
  if (!c.output.dataset.empty()) kv("dataset", c.output.dataset);
  kv("wigner_points", std::to_string(c.output.wigner_points));
  kv("x_half", format_double(c.output.x_half));
  kv("p_half", format_double(c.output.p_half));
  return o.str();
}

// ---------------------------------------------------------------- datasets

inline constexpr std::string_view kDatasetHeader = "dp[hbar/unit] dx[unit] aux exposure counts";

/// Line-oriented dataset text. Directive lines start with '@', comments with
/// '#'; the checksum footer covers every record line.
inline std::string format_dataset(const CountDataset& d) {
  std::ostringstream o;
  o << "# neutron kick-tomography count record\n";
  o << "@length_unit_m " << format_double(d.length_unit) << "\n";
  o << "@aux_shift " << format_double(d.aux_shift) << "\n";
  o << "@seed " << d.seed << "\n";
  if (!d.tag.empty()) o << "@tag " << d.tag << "\n";
  o << kDatasetHeader << "\n";
  std::uint64_t h = fnv1a("");
  for (const auto& r : d.records) {
    const std::string line = format_double(r.setting.dp) + " " + format_double(r.setting.dx) + " " +
                             (r.setting.aux ? "1" : "0") + " " + format_double(r.setting.exposure) + " " +
                             std::to_string(r.counts);
    h = fnv1a(line + "\n", h);
    o << line << "\n";
  }
  o << "@checksum " << hex64(h) << "\n";
  return o.str();
}

inline CountDataset parse_dataset(std::string_view text, const std::string& origin = "<memory>") {
  CountDataset d;
  std::uint64_t h = fnv1a("");
  std::optional<std::string> checksum;
  bool header = false;
  int line_no = 0;
  std::size_t start = 0;
  auto fail = [&](const std::string& what) {
    throw IoError(origin, "line " + std::to_string(line_no) + ": " + what);
  };
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    std::string raw(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    start = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (checksum) fail("content after the checksum footer");
    if (line.front() == '@') {
      std::istringstream ls(line.substr(1));
      std::string key, value;
      ls >> key;
      std::getline(ls, value);
      value = detail::trim(value);
      if (key == "length_unit_m") {
        auto v = parse_double(value);
        if (!v || !(*v > 0.0)) fail("bad length unit");
        d.length_unit = *v;
      } else if (key == "aux_shift") {
        auto v = parse_double(value);
        if (!v) fail("bad aux shift");
        d.aux_shift = *v;
      } else if (key == "seed") {
        auto v = parse_integer<std::uint64_t>(value);
        if (!v) fail("bad seed");
        d.seed = *v;
      } else if (key == "tag") {
        d.tag = value;
      } else if (key == "checksum") {
        checksum = value;
      } else {
        fail("unknown directive @" + key);
      }
      continue;
    }
    if (!header) {
      if (line != kDatasetHeader) fail("expected column header '" + std::string(kDatasetHeader) + "'");
      header = true;
      continue;
    }
    std::istringstream ls(line);
    std::string f[5], extra;
    for (auto& s : f)
      if (!(ls >> s)) fail("expected 5 fields");
    if (ls >> extra) fail("expected 5 fields");
    auto dp = parse_double(f[0]), dx = parse_double(f[1]), ex = parse_double(f[3]);
    auto counts = parse_integer<std::int64_t>(f[4]);
    if (!dp || !dx) fail("bad kick value");
    if (f[2] != "0" && f[2] != "1") fail("aux flag must be 0 or 1");
    if (!ex || !(*ex > 0.0)) fail("exposure must be a positive number");
    if (!counts || *counts < 0) fail("counts must be a non-negative integer");
    d.records.push_back({{*dp, *dx, f[2] == "1", *ex}, *counts});
    h = fnv1a(line + "\n", h);
  }
  if (!header) throw IoError(origin, "missing column header");
  if (checksum && *checksum != hex64(h))
    throw IoError(origin, "checksum mismatch (file " + *checksum + ", computed " + hex64(h) + ")");
  return d;
}

inline void write_dataset(const CountDataset& d, const std::string& path) { detail::write_file(path, format_dataset(d)); }

inline CountDataset read_dataset(const std::string& path) { return parse_dataset(detail::read_file(path), path); }

// ---------------------------------------------------------------- wigner output

inline std::string format_wigner_csv(const WignerGrid& w) {
  if (!w.values.allFinite()) throw ValidationError("emit_wigner: non-finite values");
  std::ostringstream o;
  o << "# x first=" << format_double(w.x.first) << " step=" << format_double(w.x.step) << " count=" << w.x.count << "\n";
  o << "# p first=" << format_double(w.p.first) << " step=" << format_double(w.p.step) << " count=" << w.p.count << "\n";
  o << "x,p,value\n";
  for (std::size_t i = 0; i < w.x.count; ++i)
    for (std::size_t j = 0; j < w.p.count; ++j)
      o << format_double(w.x[i]) << "," << format_double(w.p[j]) << ","
        << format_double(w.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << "\n";
  return o.str();
}

/// 8-bit binary PGM: columns run along x, rows along p with p increasing
/// upwards; 128 is zero, 255 is +max|W| and 1 is -max|W|.
inline std::string format_wigner_pgm(const WignerGrid& w) {
  if (!w.values.allFinite()) throw ValidationError("emit_wigner: non-finite values");
  const double peak = w.values.cwiseAbs().maxCoeff();
  std::string out = "P5\n" + std::to_string(w.x.count) + " " + std::to_string(w.p.count) + "\n255\n";
  for (std::size_t r = 0; r < w.p.count; ++r) {
    const auto j = static_cast<Eigen::Index>(w.p.count - 1 - r);
    for (std::size_t i = 0; i < w.x.count; ++i) {
      const double v = peak > 0.0 ? w.values(static_cast<Eigen::Index>(i), j) / peak : 0.0;
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(128.0 + 127.0 * v))));
    }
  }
  return out;
}

inline void emit_wigner(const WignerGrid& w, const std::string& path_csv, const std::string& path_image) {
  detail::write_file(path_csv, format_wigner_csv(w));
  detail::write_file(path_image, format_wigner_pgm(w));
}

inline WignerGrid parse_wigner_csv(std::string_view text, const std::string& origin = "<memory>") {
  WignerGrid w;
  std::istringstream in{std::string(text)};
  std::string line;
  auto lattice = [&](const std::string& l, char axis) {
    Lattice1D lat;
    double first = 0, step = 0;
    std::size_t count = 0;
    if (std::sscanf(l.c_str(), "# %*c first=%lf step=%lf count=%zu", &first, &step, &count) != 3 || l[2] != axis)
      throw IoError(origin, std::string("bad ") + axis + " lattice header");
    lat.first = first;
    lat.step = step;
    lat.count = count;
    return lat;
  };
  if (!std::getline(in, line)) throw IoError(origin, "empty file");
  w.x = lattice(line, 'x');
  if (!std::getline(in, line)) throw IoError(origin, "missing p header");
  w.p = lattice(line, 'p');
  if (!std::getline(in, line) || detail::trim(line) != "x,p,value") throw IoError(origin, "missing column header");
  w.values = RMatrix::Zero(static_cast<Eigen::Index>(w.x.count), static_cast<Eigen::Index>(w.p.count));
  for (std::size_t i = 0; i < w.x.count; ++i)
    for (std::size_t j = 0; j < w.p.count; ++j) {
      if (!std::getline(in, line)) throw IoError(origin, "truncated grid");
      const auto parts = detail::split(line, ',');
      auto v = parts.size() == 3 ? parse_double(parts[2]) : std::nullopt;
      if (!v) throw IoError(origin, "bad row: " + line);
      w.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
    }
  return w;
}

inline WignerGrid read_wigner_csv(const std::string& path) { return parse_wigner_csv(detail::read_file(path), path); }

// ---------------------------------------------------------------- density matrices

/// "n extent" header followed by n rows of n "re im" pairs.
inline std::string format_density(const DensityMatrix& rho) {
  std::ostringstream o;
  o << "# density matrix, position basis, trace-normalized\n";
  o << rho.grid.size() << " " << format_double(rho.grid.extent()) << "\n";
  for (Eigen::Index a = 0; a < rho.matrix.rows(); ++a) {
    for (Eigen::Index b = 0; b < rho.matrix.cols(); ++b)
      o << (b ? " " : "") << format_double(rho.matrix(a, b).real()) << " " << format_double(rho.matrix(a, b).imag());
    o << "\n";
  }
  return o.str();
}

inline DensityMatrix parse_density(std::string_view text, const std::string& origin = "<memory>") {
  std::istringstream in{std::string(text)};
  std::string line;
  do {
    if (!std::getline(in, line)) throw IoError(origin, "empty file");
  } while (detail::trim(line).empty() || detail::trim(line).front() == '#');
  std::istringstream hs(line);
  std::string ns, es;
  hs >> ns >> es;
  auto n = parse_integer<std::size_t>(ns);
  auto extent = parse_double(es);
  if (!n || !extent) throw IoError(origin, "bad header");
  const GridSpec g(*n, *extent);
  CMatrix m(static_cast<Eigen::Index>(*n), static_cast<Eigen::Index>(*n));
  std::string re, im;
  for (Eigen::Index a = 0; a < m.rows(); ++a)
    for (Eigen::Index b = 0; b < m.cols(); ++b) {
      if (!(in >> re >> im)) throw IoError(origin, "truncated matrix");
      auto r = parse_double(re), i = parse_double(im);
      if (!r || !i) throw IoError(origin, "bad matrix entry");
      m(a, b) = cplx(*r, *i);
    }
  return {g, m};
}

inline void write_density(const DensityMatrix& rho, const std::string& path) {
  detail::write_file(path, format_density(rho));
}

inline DensityMatrix read_density(const std::string& path) { return parse_density(detail::read_file(path), path); }

}  // namespace nwt
