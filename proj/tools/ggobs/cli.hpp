#pragma once

#include <Eigen/Core>
#include <boost/version.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ggobs/design.hpp"
#include "ggobs/version.hpp"

namespace ggobs::cli {

using nlohmann::json;

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"eigen", "frame_sweep", "observe", "localize",
                                          "design", "schedule", "cesaro", "control"};
  return c;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------- config

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

inline double get_number(const json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

inline std::size_t get_count(const json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(where + "." + key + " must be a nonnegative integer");
  return v.get<std::size_t>();
}

inline std::vector<double> get_numbers(const json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(where + "." + key + " must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

struct Times {
  std::optional<double> T;
  std::vector<double> sweep;
  std::optional<double> T0;
  std::size_t m = 1;
  std::size_t N_blocks = 1;
  std::size_t micro = 1000;
  std::size_t samples = 201;
};

struct Outputs {
  bool csv = true;
  bool json = true;
  bool svg = false;
};

struct ExperimentConfig {
  json raw;
  std::string hash;
  std::uint64_t seed = 0;
  GasGiantParams params = GasGiantParams::multidimensional(2.0, 0);
  Manifold manifold = Manifold::sphere2;
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  std::size_t grid = 0;
  std::vector<std::size_t> N{10};
  double Lambda = 0.0;
  std::optional<Region> region;
  Times times;
  Outputs outputs;
  std::vector<double> omegas{0.0};
  std::vector<int> degrees;
  std::size_t draws = 1;
  json candidates = json::object();
  double epsilon = kDefaultDesignEpsilon;
  double delta = 0.1;
  json data = json::object();
  json frequencies = "bessel";
  std::string output_dir = "out";

  std::size_t N_max() const { return *std::max_element(N.begin(), N.end()); }
};

inline Region parse_region(const json& j, Manifold m) {
  check_keys(j, {"type", "center", "radius", "radius_deg", "center_angle", "half_width", "half_width_deg"}, "region");
  const std::string type = j.value("type", m == Manifold::circle ? "arc" : "cap");
  constexpr double deg = std::numbers::pi / 180.0;
  if (type == "full") return Region::full(m);
  if (type == "cap") {
    if (m != Manifold::sphere2) throw ConfigError("region.type 'cap' requires manifold sphere2");
    Vec3 c = Vec3::UnitZ();
    if (j.contains("center")) {
      const auto v = get_numbers(j, "center", "region");
      if (v.size() != 3) throw ConfigError("region.center must have 3 components");
      c = Vec3(v[0], v[1], v[2]);
    }
    if (j.contains("radius") == j.contains("radius_deg"))
      throw ConfigError("region: exactly one of 'radius' or 'radius_deg' is required for a cap");
    const double r = j.contains("radius") ? get_number(j, "radius", "region") : deg * get_number(j, "radius_deg", "region");
    return Region::cap(c, r);
  }
  if (type == "arc") {
    if (m != Manifold::circle) throw ConfigError("region.type 'arc' requires manifold circle");
    if (j.contains("half_width") == j.contains("half_width_deg"))
      throw ConfigError("region: exactly one of 'half_width' or 'half_width_deg' is required for an arc");
    const double w = j.contains("half_width") ? get_number(j, "half_width", "region")
                                              : deg * get_number(j, "half_width_deg", "region");
    return Region::arc(j.contains("center_angle") ? get_number(j, "center_angle", "region") : 0.0, w);
  }
  throw ConfigError("region.type must be 'cap', 'arc' or 'full'");
}

/// Parses and validates the generic part of a config; command-specific requirements are checked at dispatch.
inline ExperimentConfig parse_config(const json& j, std::optional<std::uint64_t> seed_override = std::nullopt) {
  check_keys(j,
             {"params", "manifold", "boundary", "grid", "truncations", "region", "times", "seed", "outputs", "omegas",
              "degrees", "draws", "candidates", "epsilon", "delta", "data", "frequencies", "output_dir"},
             "config");
  ExperimentConfig c;
  if (!j.contains("params")) throw ConfigError("config: 'params' is required");
  c.params = params_from_json(j.at("params"));
  if (j.contains("manifold")) c.manifold = manifold_from_string(j.at("manifold").get<std::string>());
  if (j.contains("boundary")) c.bc = boundary_condition_from_string(j.at("boundary").get<std::string>());
  if (j.contains("grid")) c.grid = get_count(j, "grid", "config");
  if (j.contains("truncations")) {
    const auto& t = j.at("truncations");
    check_keys(t, {"N", "Lambda"}, "truncations");
    if (t.contains("N")) {
      c.N.clear();
      if (t.at("N").is_array()) {
        for (const auto& v : t.at("N")) {
          if (!v.is_number_integer() || v.get<long long>() < 1)
            throw ConfigError("truncations.N entries must be positive integers");
          c.N.push_back(v.get<std::size_t>());
        }
        if (c.N.empty()) throw ConfigError("truncations.N must not be empty");
      } else {
        c.N.push_back(get_count(t, "N", "truncations"));
        if (c.N[0] < 1) throw ConfigError("truncations.N must be >= 1");
      }
    }
    if (t.contains("Lambda")) c.Lambda = get_number(t, "Lambda", "truncations");
    if (!(c.Lambda >= 0.0)) throw ConfigError("truncations.Lambda must be >= 0");
  }
  if (j.contains("region")) c.region = parse_region(j.at("region"), c.manifold);
  if (j.contains("times")) {
    const auto& t = j.at("times");
    check_keys(t, {"T", "sweep", "T0", "m", "N_blocks", "micro", "samples"}, "times");
    if (t.contains("T")) c.times.T = get_number(t, "T", "times");
    if (t.contains("T0")) c.times.T0 = get_number(t, "T0", "times");
    if (t.contains("m")) c.times.m = get_count(t, "m", "times");
    if (t.contains("N_blocks")) c.times.N_blocks = get_count(t, "N_blocks", "times");
    if (t.contains("micro")) c.times.micro = get_count(t, "micro", "times");
    if (t.contains("samples")) c.times.samples = get_count(t, "samples", "times");
    if (t.contains("sweep")) {
      const auto& s = t.at("sweep");
      if (s.is_array()) {
        c.times.sweep = get_numbers(t, "sweep", "times");
      } else {
        check_keys(s, {"from", "to", "count"}, "times.sweep");
        const double a = get_number(s, "from", "times.sweep"), b = get_number(s, "to", "times.sweep");
        const std::size_t n = get_count(s, "count", "times.sweep");
        if (n < 2 || !(b > a)) throw ConfigError("times.sweep needs count >= 2 and to > from");
        for (std::size_t i = 0; i < n; ++i) c.times.sweep.push_back(a + (b - a) * double(i) / double(n - 1));
      }
    }
    if (c.times.samples < 2) throw ConfigError("times.samples must be >= 2");
  }
  if (j.contains("outputs")) {
    const auto& o = j.at("outputs");
    check_keys(o, {"csv", "json", "svg"}, "outputs");
    c.outputs.csv = o.value("csv", true);
    if (!c.outputs.csv) throw ConfigError("outputs.csv: tabular outputs cannot be disabled");
    c.outputs.json = o.value("json", true);
    c.outputs.svg = o.value("svg", false);
  }
  if (j.contains("omegas")) {
    c.omegas = get_numbers(j, "omegas", "config");
    if (c.omegas.empty()) throw ConfigError("config.omegas must not be empty");
  }
  if (j.contains("degrees")) {
    for (const auto& v : j.at("degrees")) {
      if (!v.is_number_integer() || v.get<int>() < 0) throw ConfigError("config.degrees must be nonnegative integers");
      c.degrees.push_back(v.get<int>());
    }
  }
  if (j.contains("draws")) c.draws = get_count(j, "draws", "config");
  if (j.contains("candidates")) c.candidates = j.at("candidates");
  if (j.contains("epsilon")) c.epsilon = get_number(j, "epsilon", "config");
  if (j.contains("delta")) c.delta = get_number(j, "delta", "config");
  if (j.contains("data")) c.data = j.at("data");
  if (j.contains("frequencies")) c.frequencies = j.at("frequencies");
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("seed")) c.seed = get_count(j, "seed", "config");
  if (seed_override) c.seed = *seed_override;
  c.raw = j;
  json canonical = j;
  canonical["seed"] = c.seed;
  canonical.erase("output_dir");
  c.hash = hex(fnv1a(canonical.dump()));
  return c;
}

// ---------------------------------------------------------------- outputs

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Single writer for one command run: every file gets the config hash and units in its header.
class OutputSet {
 public:
  OutputSet(std::filesystem::path dir, std::string command, std::string hash, bool quiet)
      : dir_(std::move(dir)), command_(std::move(command)), hash_(std::move(hash)), quiet_(quiet) {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& dir() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

  void csv(const std::string& name, const std::string& units, const std::function<void(std::ostream&)>& body) {
    std::ostringstream os;
    os << "# ggobs " << command_ << " config_hash=" << hash_ << " units: " << units << "\n";
    body(os);
    emit(name, os.str());
  }

  void json_file(const std::string& name, const json& units, json payload) {
    payload["header"] = {{"command", command_}, {"config_hash", hash_}, {"units", units}};
    emit(name, payload.dump(2) + "\n");
  }

  /// Line plot read back from an already-written CSV; failures only warn.
  void svg_from_csv(const std::string& csv_name, const std::string& svg_name, const std::string& x,
                    const std::vector<std::string>& ys, bool log_y, std::optional<double> vline = std::nullopt,
                    const std::string& group = "") {
    try {
      emit(svg_name, render_svg(dir_ / csv_name, x, ys, log_y, vline, group));
    } catch (const std::exception& e) {
      warn("svg plot '" + svg_name + "' skipped: " + e.what());
    }
  }

  void info(const std::string& msg) const {
    if (!quiet_) std::cout << msg << "\n";
  }
  void warn(const std::string& msg) const { std::cerr << "warning: " << msg << "\n"; }

  void manifest(const ExperimentConfig& cfg) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char ts[32];
    std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", &tm);
    json m{{"command", command_},
           {"config_hash", hash_},
           {"seed", cfg.seed},
           {"timestamp", ts},
           {"versions",
            {{"ggobs", kVersion},
             {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                           std::to_string(EIGEN_MINOR_VERSION)},
             {"boost", BOOST_LIB_VERSION},
             {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                   std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                   std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
             {"cli11", CLI11_VERSION},
             {"compiler", __VERSION__}}},
           {"files", files_},
           {"config", cfg.raw}};
    std::ofstream(dir_ / "manifest.json") << m.dump(2) << "\n";
  }

 private:
  void emit(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    f << content;
    files_.push_back(name);
    info("wrote " + (dir_ / name).string());
  }

  std::string render_svg(const std::filesystem::path& csv_path, const std::string& x, const std::vector<std::string>& ys,
                         bool log_y, std::optional<double> vline, const std::string& group) const {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("missing " + csv_path.string());
    std::string line;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
      if (header.empty()) {
        header = cells;
        continue;
      }
      std::vector<double> r;
      for (const auto& s : cells) r.push_back(std::stod(s));
      rows.push_back(std::move(r));
    }
    auto col = [&](const std::string& name) {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) throw std::runtime_error("column '" + name + "' not found");
      return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t xi = col(x);
    const std::optional<std::size_t> gi = group.empty() ? std::nullopt : std::optional(col(group));
    auto tr = [&](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    std::map<std::pair<std::size_t, double>, std::vector<std::pair<double, double>>> series;
    for (const auto& r : rows) {
      for (std::size_t s = 0; s < ys.size(); ++s) {
        const double yv = tr(r[col(ys[s])]);
        if (!std::isfinite(yv)) continue;
        series[{s, gi ? r[*gi] : 0.0}].push_back({r[xi], yv});
        x0 = std::min(x0, r[xi]);
        x1 = std::max(x1, r[xi]);
        y0 = std::min(y0, yv);
        y1 = std::max(y1, yv);
      }
    }
    if (series.empty()) throw std::runtime_error("no data");
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;
    const double W = 640, H = 400, pad = 50;
    auto px = [&](double v) { return pad + (v - x0) / (x1 - x0) * (W - 2 * pad); };
    auto py = [&](double v) { return H - pad - (v - y0) / (y1 - y0) * (H - 2 * pad); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<!-- ggobs " << command_ << " config_hash=" << hash_ << " units: x=" << x << " y=" << (log_y ? "log10 " : "");
    for (const auto& y : ys) os << y << " ";
    os << "-->\n";
    os << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << W - 2 * pad << "\" height=\"" << H - 2 * pad
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    std::size_t ci = 0;
    for (const auto& [key, pts] : series) {
      os << "<polyline fill=\"none\" stroke=\"" << colors[ci++ % 6] << "\" points=\"";
      for (const auto& [a, b] : pts) os << px(a) << "," << py(b) << " ";
      os << "\"/>\n";
    }
    if (vline && *vline >= x0 && *vline <= x1)
      os << "<line x1=\"" << px(*vline) << "\" y1=\"" << pad << "\" x2=\"" << px(*vline) << "\" y2=\"" << H - pad
         << "\" stroke=\"gray\" stroke-dasharray=\"4\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << x << " [" << x0 << ", " << x1
       << "]</text>\n";
    os << "<text x=\"10\" y=\"" << pad - 10 << "\">" << (log_y ? "log10 " : "") << ys.front() << " [" << y0 << ", " << y1
       << "]</text>\n";
    os << "</svg>\n";
    return os.str();
  }

  std::filesystem::path dir_;
  std::string command_;
  std::string hash_;
  bool quiet_;
  std::vector<std::string> files_;
};

// ---------------------------------------------------------------- shared builders

inline void require_multidimensional(const ExperimentConfig& c, const std::string& cmd) {
  if (c.params.convention() != Convention::multidimensional)
    throw ConfigError(cmd + ": params must give beta and n (multidimensional convention)");
}

inline double require_T(const std::optional<double>& T, const char* name, const std::string& cmd) {
  if (!T) throw ConfigError(cmd + ": times." + name + " is required");
  return *T;
}

inline Region require_region(const ExperimentConfig& c, const std::string& cmd) {
  if (!c.region) throw ConfigError(cmd + ": 'region' is required");
  return *c.region;
}

inline cdouble parse_complex(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw ConfigError(where + " must be a number or [re, im]");
}

/// Data description: {"type": "random", "real"} (default), {"type": "zero"}, or {"type": "modes", "entries": [...]}.
/// Entry: {"mode": k | "degree": l, "order": m, "n": one-based normal index, "f0", "f1", "traveling"}.
inline InitialData make_data(const json& desc, const ModalFamily& family, const TangentialBasis& basis, std::size_t N,
                             std::mt19937_64& rng) {
  check_keys(desc, {"type", "real", "entries"}, "data");
  const std::string type = desc.value("type", "random");
  if (type == "random") return random_data(family, basis.cutoff(), N, rng, desc.value("real", false));
  if (type == "zero") return InitialData::zeros(N, basis.dimension(), basis.cutoff());
  if (type != "modes") throw ConfigError("data.type must be 'random', 'zero' or 'modes'");
  if (!desc.contains("entries") || !desc.at("entries").is_array() || desc.at("entries").empty())
    throw ConfigError("data.entries must be a nonempty array");
  auto d = InitialData::zeros(N, basis.dimension(), 0.0);
  for (const auto& e : desc.at("entries")) {
    check_keys(e, {"mode", "degree", "order", "n", "f0", "f1", "traveling"}, "data.entries[]");
    std::size_t k = 0;
    if (e.contains("mode")) {
      k = get_count(e, "mode", "data.entries[]");
      if (k >= basis.dimension()) throw ConfigError("data.entries[].mode outside the tangential basis");
    } else if (e.contains("degree")) {
      k = basis.index_of(e.at("degree").get<int>(), e.value("order", 0));
    } else {
      throw ConfigError("data.entries[] needs 'mode' or 'degree'");
    }
    const std::size_t n = e.contains("n") ? get_count(e, "n", "data.entries[]") : 1;
    if (n < 1 || n > N) throw ConfigError("data.entries[].n must be in 1..N");
    const auto r = static_cast<Eigen::Index>(n - 1), c = static_cast<Eigen::Index>(k);
    const cdouble f0 = e.contains("f0") ? parse_complex(e.at("f0"), "data.entries[].f0") : cdouble(0.0);
    d.f0(r, c) = f0;
    if (e.value("traveling", false)) {
      if (e.contains("f1")) throw ConfigError("data.entries[]: 'traveling' fixes f1");
      d.f1(r, c) = cdouble(0.0, family.at(k).frequencies[n - 1]) * f0;
    } else if (e.contains("f1")) {
      d.f1(r, c) = parse_complex(e.at("f1"), "data.entries[].f1");
    }
    d.bandwidth = std::max(d.bandwidth, basis.mode(k).eigenvalue);
  }
  return d;
}

inline RotationSet make_candidates(const json& desc, const TangentialBasis& basis) {
  check_keys(desc, {"type", "strength", "J"}, "candidates");
  const std::string type = desc.value("type", "default");
  if (type == "default") return default_candidates(basis);
  if (type == "spherical_design") {
    if (basis.manifold() != Manifold::sphere2) throw ConfigError("candidates 'spherical_design' requires sphere2");
    return spherical_design_rotations(static_cast<int>(get_count(desc, "strength", "candidates")));
  }
  if (type == "circle") {
    if (basis.manifold() != Manifold::circle) throw ConfigError("candidates 'circle' requires manifold circle");
    const auto J = get_count(desc, "J", "candidates");
    if (J < 1) throw ConfigError("candidates.J must be >= 1");
    return circle_rotations(J);
  }
  throw ConfigError("candidates.type must be 'default', 'spherical_design' or 'circle'");
}

inline std::size_t modal_grid(const ExperimentConfig& c) { return c.grid ? c.grid : default_modal_grid(c.N_max()); }

// ---------------------------------------------------------------- commands

inline void cmd_eigen(const ExperimentConfig& c, OutputSet& out) {
  const std::size_t N = c.N_max();
  if (c.params.convention() == Convention::one_dimensional) {
    const auto sys = build_eigensystem_1d(c.params, N);
    out.csv("eigen.csv", "k [index], j_nuk [-], lambda_k [time^-2], mu_k [time^-1], norm_const [-], trace_amp [-]",
            [&](std::ostream& os) { write_eigensystem_csv(os, sys); });
    out.csv("convergence.csv", "k [index], bessel_residual [-] (|J_nu(j_nuk)|)", [&](std::ostream& os) {
      os << "k,bessel_residual\n";
      for (std::size_t k = 0; k < sys.size(); ++k)
        os << k + 1 << "," << format_double(std::abs(bessel_j(c.params.nu(), sys.zeros[k]))) << "\n";
    });
    out.info("eigen: " + std::to_string(N) + " closed-form eigenpairs, nu = " + format_double(c.params.nu()));
    return;
  }
  std::vector<ModalEigenSystem> systems;
  for (double om : c.omegas) systems.push_back(solve_modal(c.params, om, c.bc, N, modal_grid(c)));
  out.csv("eigen.csv", "omega [-], n [index], lambda [time^-2], mu [time^-1], trace_coeff [-]", [&](std::ostream& os) {
    for (std::size_t i = 0; i < systems.size(); ++i) write_modal_csv(os, systems[i], i == 0);
  });
  out.csv("convergence.csv", "omega [-], n [index], error_estimate [relative], observed_order [-], converged [bool]",
          [&](std::ostream& os) {
            os << "omega,n,error_estimate,observed_order,converged\n";
            for (const auto& s : systems)
              for (std::size_t n = 0; n < s.size(); ++n)
                os << format_double(s.omega) << "," << n + 1 << "," << format_double(s.error_estimates[n]) << ","
                   << format_double(s.observed_orders[n]) << "," << (s.converged ? 1 : 0) << "\n";
          });
  out.info("eigen: " + std::to_string(systems.size()) + " modal solves, N = " + std::to_string(N));
}

inline void cmd_frame_sweep(const ExperimentConfig& c, OutputSet& out) {
  if (c.times.sweep.empty()) throw ConfigError("frame_sweep: times.sweep is required");
  std::vector<FrameBounds> rows;
  if (c.frequencies.is_array()) {
    std::vector<double> w;
    for (const auto& v : c.frequencies) {
      if (!v.is_number()) throw ConfigError("frequencies must be numbers");
      w.push_back(v.get<double>());
    }
    if (w.empty()) throw ConfigError("frequencies must not be empty");
    for (double T : c.times.sweep) {
      auto fb = ingham_frame_bounds(w, T);
      fb.N = w.size();
      rows.push_back(fb);
    }
  } else {
    const std::string src = c.frequencies.get<std::string>();
    NormalSpectrum s;
    if (src == "bessel") {
      const auto p1 = c.params.convention() == Convention::one_dimensional ? c.params
                                                                           : GasGiantParams::one_dimensional(c.params.alpha());
      s = NormalSpectrum::from_bessel(build_eigensystem_1d(p1, c.N_max()));
    } else if (src == "modal") {
      require_multidimensional(c, "frame_sweep");
      s = NormalSpectrum::from_modal(solve_modal(c.params, c.omegas.front(), c.bc, c.N_max(), modal_grid(c)), c.N_max());
    } else {
      throw ConfigError("frequencies must be 'bessel', 'modal' or an array of numbers");
    }
    for (std::size_t N : c.N)
      for (double T : c.times.sweep) rows.push_back(ingham_frame_bounds(s, N, T));
  }
  out.csv("frame.csv", "T [time], N [count], c_T [time], C_T [time]",
          [&](std::ostream& os) { write_frame_csv(os, rows); });
  if (c.outputs.svg) out.svg_from_csv("frame.csv", "frame.svg", "T", {"c_T"}, true, c.params.t_star(), "N");
  out.info("frame_sweep: " + std::to_string(rows.size()) + " rows, T* = " + format_double(c.params.t_star()));
}

inline void cmd_observe(const ExperimentConfig& c, OutputSet& out) {
  require_multidimensional(c, "observe");
  const double T = require_T(c.times.T, "T", "observe");
  const auto region = require_region(c, "observe");
  const auto basis = build_basis(c.manifold, c.Lambda);
  const auto family = build_modal_family(c.params, basis, c.N_max(), c.bc, modal_grid(c));
  const auto M = restricted_gram(basis, region);
  std::mt19937_64 rng(c.seed);
  if (c.draws < 1) throw ConfigError("observe: draws must be >= 1");
  std::vector<InitialData> draws;
  for (std::size_t i = 0; i < c.draws; ++i) draws.push_back(make_data(c.data, family, basis, c.N_max(), rng));
  out.csv("observe.csv",
          "draw [index], energy [E_nu], full_ratio [time], region_ratio [time], frame_lower [time], frame_upper [time]",
          [&](std::ostream& os) {
            os << "draw,energy,full_ratio,region_ratio,frame_lower,frame_upper\n";
            for (std::size_t i = 0; i < draws.size(); ++i) {
              const auto sb = frame_sandwich(draws[i], family, T);
              os << i << "," << format_double(anisotropic_energy(draws[i], family).total) << ","
                 << format_double(observability_ratio(draws[i], family, T)) << ","
                 << format_double(observability_ratio(draws[i], family, T, M)) << "," << format_double(sb.lower) << ","
                 << format_double(sb.upper) << "\n";
            }
          });
  std::vector<double> times;
  for (std::size_t i = 0; i < c.times.samples; ++i) times.push_back(T * double(i) / double(c.times.samples - 1));
  const auto full = evaluate_trace(draws[0], family, times, std::nullopt);
  const auto part = evaluate_trace(draws[0], family, times, M);
  out.csv("trace.csv", "t [time], full [trace^2 per time], region [trace^2 per time]",
          [&](std::ostream& os) { write_trace_csv(os, times, {{"full", full}, {"region", part}}); });
  if (c.outputs.svg) out.svg_from_csv("trace.csv", "trace.svg", "t", {"full", "region"}, false);
  out.info("observe: " + std::to_string(draws.size()) + " draws, region fraction " + format_double(region.fraction()));
}

inline void cmd_localize(const ExperimentConfig& c, OutputSet& out) {
  require_multidimensional(c, "localize");
  const double T = require_T(c.times.T, "T", "localize");
  const auto region = require_region(c, "localize");
  std::vector<int> degrees = c.degrees;
  if (degrees.empty())
    for (int l = 2; l <= 12; ++l) degrees.push_back(l);
  const auto rows = localized_failure_demo(c.params, region, degrees, T, c.bc, c.grid ? c.grid : 1000);
  out.csv("localized.csv", "l [degree], cap_mass [-], full_ratio [time], cap_ratio [time]",
          [&](std::ostream& os) { write_localized_csv(os, rows); });
  const int lmax = *std::max_element(degrees.begin(), degrees.end());
  const auto fit = band_limited_constant(region, degree_sweep(Manifold::sphere2, lmax));
  out.csv("band_limited.csv", "Lambda [-], degree [-], dimension [count], lambda_min [-], below_double_floor [bool]",
          [&](std::ostream& os) { write_band_limited_csv(os, fit); });
  if (c.outputs.json)
    out.json_file("band_limited_fit.json", {{"slope", "per sqrt(Lambda)"}, {"intercept", "log lambda_min"}},
                  {{"slope", fit.slope},
                   {"intercept", fit.intercept},
                   {"r_squared", fit.r_squared},
                   {"rms_residual", fit.rms_residual}});
  if (c.outputs.svg) {
    out.svg_from_csv("localized.csv", "localized.svg", "l", {"cap_ratio"}, true);
    out.svg_from_csv("band_limited.csv", "band_limited.svg", "degree", {"lambda_min"}, true);
  }
  out.info("localize: cap_ratio " + format_double(rows.front().cap_ratio) + " -> " +
           format_double(rows.back().cap_ratio) + ", band-limited slope " + format_double(fit.slope));
}

inline ObservationDesign design_from_config(const ExperimentConfig& c, const TangentialBasis& basis,
                                            const std::string& cmd) {
  const auto region = require_region(c, cmd);
  return solve_design(basis, region, make_candidates(c.candidates, basis), c.epsilon);
}

inline json design_units() {
  return {{"angle", "rad"}, {"weight", "-"}, {"residual", "Frobenius norm"}, {"fraction", "-"}};
}

inline void cmd_design(const ExperimentConfig& c, OutputSet& out) {
  const auto basis = build_basis(c.manifold, c.Lambda);
  const auto d = design_from_config(c, basis, "design");
  out.json_file("design.json", design_units(), design_to_json(d));
  if (!d.accepted)
    out.warn("design not accepted: residual " + format_double(d.residual) + " > epsilon L; enlarge the candidate set");
  out.info("design: " + std::to_string(d.rotations.size()) + " candidates, residual " + format_double(d.residual));
}

inline void cmd_schedule(const ExperimentConfig& c, OutputSet& out) {
  require_multidimensional(c, "schedule");
  const double T0 = require_T(c.times.T0, "T0", "schedule");
  const auto basis = build_basis(c.manifold, c.Lambda);
  const auto d = design_from_config(c, basis, "schedule");
  const auto sched = realize_schedule(d, T0, c.times.micro, c.params.t_star());
  out.json_file("design.json", design_units(), design_to_json(d));
  out.csv("schedule.csv", "t_start [time], t_end [time], rotation_index [index]",
          [&](std::ostream& os) { write_schedule_csv(os, sched.slots); });
  out.csv("schedule_one_cycle.csv", "t_start [time], t_end [time], rotation_index [index]",
          [&](std::ostream& os) { write_schedule_csv(os, sched.one_cycle); });
  const auto family = build_modal_family(c.params, basis, c.N_max(), c.bc, modal_grid(c));
  std::mt19937_64 rng(c.seed);
  std::vector<MovingObservation> checks;
  for (std::size_t i = 0; i < std::max<std::size_t>(c.draws, 1); ++i) {
    const auto data = make_data(c.data, family, basis, c.N_max(), rng);
    checks.push_back(moving_observability_check(d, sched, data, family, basis, std::max<std::size_t>(c.times.m, 1)));
  }
  out.csv("moving.csv", "draw [index], period [index], ratio [time], average [time], lower_bound [time], satisfied [bool]",
          [&](std::ostream& os) {
            os << "draw,period,ratio,average,lower_bound,satisfied\n";
            for (std::size_t i = 0; i < checks.size(); ++i)
              for (std::size_t p = 0; p < checks[i].period_ratios.size(); ++p)
                os << i << "," << p + 1 << "," << format_double(checks[i].period_ratios[p]) << ","
                   << format_double(checks[i].average_ratio) << "," << format_double(checks[i].lower_bound) << ","
                   << (checks[i].satisfied ? 1 : 0) << "\n";
          });
  if (c.outputs.json)
    out.json_file("schedule_summary.json", {{"max_deviation", "time"}, {"tolerance", "time"}},
                  {{"period", sched.period},
                   {"micro", sched.micro},
                   {"fractions", sched.fractions},
                   {"max_deviation", sched.max_deviation},
                   {"tolerance", sched.tolerance},
                   {"within_tolerance", sched.within_tolerance}});
  const auto ok = std::count_if(checks.begin(), checks.end(), [](const auto& m) { return m.satisfied; });
  out.info("schedule: " + std::to_string(ok) + "/" + std::to_string(checks.size()) + " draws satisfy the bound");
}

inline void cmd_cesaro(const ExperimentConfig& c, OutputSet& out) {
  require_multidimensional(c, "cesaro");
  const double T0 = require_T(c.times.T0, "T0", "cesaro");
  if (!(T0 > c.params.t_star())) throw ConfigError("cesaro: T0 must exceed T*");
  const auto region = require_region(c, "cesaro");
  const auto basis = build_basis(c.manifold, c.Lambda);
  const auto family = build_modal_family(c.params, basis, c.N_max(), c.bc, modal_grid(c));
  std::mt19937_64 rng(c.seed);
  const auto data = make_data(c.data, family, basis, c.N_max(), rng);
  CesaroOptions opt;
  opt.micro = c.times.micro;
  opt.delta = c.delta;
  const auto res = cesaro_protocol(region, T0, c.times.N_blocks, data, family, basis, opt);
  out.csv("cesaro.csv",
          "N [blocks], running_average [time], lower_bound [time], block_ratio [time], bandwidth [degree], "
          "design_residual [Frobenius norm]",
          [&](std::ostream& os) { write_cesaro_csv(os, res); });
  if (c.outputs.json)
    out.json_file("cesaro_summary.json", {{"c_T0", "time"}, {"min_trace_weight", "-"}},
                  {{"c_T0", res.c_T0},
                   {"min_trace_weight", res.min_trace_weight},
                   {"delta", res.delta},
                   {"N_delta", res.N_delta}});
  if (c.outputs.svg) out.svg_from_csv("cesaro.csv", "cesaro.svg", "N", {"running_average", "lower_bound"}, false);
  out.info("cesaro: N_delta = " + std::to_string(res.N_delta));
}

inline void cmd_control(const ExperimentConfig& c, OutputSet& out) {
  require_multidimensional(c, "control");
  const double T = require_T(c.times.T, "T", "control");
  const auto basis = build_basis(c.manifold, c.Lambda);
  const auto family = build_modal_family(c.params, basis, c.N_max(), c.bc, modal_grid(c));
  std::mt19937_64 rng(c.seed);
  const auto target = make_data(c.data, family, basis, c.N_max(), rng);
  const auto h = hum_control(target, family, T, c.params.t_star());
  auto j = hum_to_json(h);
  j["target_energy"] = anisotropic_energy(target, family).total;
  out.json_file("control.json", {{"T", "time"}, {"control_norm", "L2(0,T)"}, {"frequency", "time^-1"}}, j);
  if (h.ill_posed) out.warn("control Gram ill-conditioned (cond " + format_double(h.max_condition) + ")");
  out.info("control: |g| = " + format_double(h.control_norm) + ", residual " + format_double(h.residual));
}

inline void dispatch(const std::string& command, const ExperimentConfig& c, OutputSet& out) {
  static const std::map<std::string, void (*)(const ExperimentConfig&, OutputSet&)> table{
      {"eigen", cmd_eigen},   {"frame_sweep", cmd_frame_sweep}, {"observe", cmd_observe}, {"localize", cmd_localize},
      {"design", cmd_design}, {"schedule", cmd_schedule},       {"cesaro", cmd_cesaro},   {"control", cmd_control}};
  table.at(command)(c, out);
}

/// Entry point; returns the process exit code (0 ok, 1 numerical failure, 2 config error).
inline int run(int argc, char** argv) {
  CLI::App app{"ggobs: boundary observability experiments for degenerate gas-giant wave models"};
  std::string command, config_path, out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_option("command", command, "experiment command")->required()->check(CLI::IsMember(commands()));
  app.add_option("config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  app.add_option("--seed", seed, "random seed (overrides seed)");
  app.add_flag("--quiet", quiet, "suppress progress output");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    std::ifstream in(config_path);
    const json raw = json::parse(in);
    const auto cfg = parse_config(raw, seed);
    OutputSet out(out_dir.empty() ? cfg.output_dir : out_dir, command, cfg.hash, quiet);
    dispatch(command, cfg, out);
    out.manifest(cfg);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ggobs::cli
