#pragma once

// Run configuration: an INI file read with Boost.PropertyTree.
//
//   seed = 7
//   [domain]          kind = stadium | unit_square | modular | plane, a, r
//   [curve:<name>]    kind = segment (p0, p1) | geodesic_circle (center, radius, inj)
//                          | horocycle (height) | closed_geodesic (element)
//   [symbol:<name>]   kind = one | multiplication | separable | table
//                     knots, values (fractions of L / profile values), periodic,
//                     sigma = gamma | polynomial coefficients, path (table CSV)
//   [dynamics] [flow] [symmetry] [spectral] [restrict] [qer]

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "qerlab/errors.hpp"
#include "qerlab/geometry.hpp"
#include "qerlab/qer.hpp"
#include "qerlab/spectral.hpp"
#include "qerlab/symbols.hpp"
#include "qerlab/symmetry.hpp"

namespace qerlab::cli {

namespace pt = boost::property_tree;

struct CurveSpec {
  std::string name;
  std::string kind;
  std::vector<double> p0, p1, center, element;
  double radius = 0.0;
  double inj = 0.0;
  double height = 0.0;
};

struct SymbolSpec {
  std::string name;
  std::string kind;
  std::vector<double> knots;   // fractions of the curve length
  std::vector<double> values;
  bool periodic = false;
  std::string sigma = "1";     // "gamma" or polynomial coefficients
  std::string path;
};

struct FlowSpec {
  double x = 0.0, y = 0.5, angle = 0.0, t = 10.0, dt = 0.1;
  std::string curve;
  double s = 0.0, sigma = 0.0;
  int side = 1;
  int returns = 10;
};

struct SpectralSpec {
  double h = 1.0 / 64.0;
  int m = 300;
  Stencil stencil = Stencil::Plain;
  int slice_size = 40;
};

struct RunConfig {
  std::filesystem::path source;
  std::uint64_t seed = 0;
  std::string domain_kind;
  double a = 1.0, r = 1.0;
  std::vector<CurveSpec> curves;
  std::vector<SymbolSpec> symbols;
  DynamicsParams dynamics{};
  FlowSpec flow{};
  int j_max = 6;
  double tol_match = 1e-6;
  std::size_t samples = 10000;
  std::vector<std::string> symmetry_curves;
  SpectralSpec spectral{};
  RestrictParams restrict{};
  std::vector<std::string> restrict_curves;
  std::vector<std::string> restrict_symbols;
  std::string qer_symmetric, qer_generic;
  std::vector<int> ladder;
  std::vector<double> theta{0.25, 0.5, 1.0};
  std::string text;  // raw file contents, hashed into the manifest

  Domain domain() const {
    if (domain_kind == "stadium") return Domain::stadium(a, r);
    if (domain_kind == "unit_square") return Domain::unit_square();
    if (domain_kind == "modular") return Domain::modular_surface();
    return Domain::hyperbolic_plane();
  }
  const CurveSpec& curve_spec(const std::string& name) const {
    for (const auto& c : curves) {
      if (c.name == name) return c;
    }
    throw ConfigError("unknown curve '" + name + "'");
  }
  const SymbolSpec& symbol_spec(const std::string& name) const {
    for (const auto& s : symbols) {
      if (s.name == name) return s;
    }
    throw ConfigError("unknown symbol '" + name + "'");
  }
  Hypersurface curve(const std::string& name) const;
  Symbol symbol(const std::string& name, double length) const;
};

namespace detail {

inline std::vector<double> numbers(const std::string& text) {
  std::istringstream is(text);
  std::vector<double> v;
  double x;
  while (is >> x) v.push_back(x);
  if (!is.eof()) throw ConfigError("not a number list: '" + text + "'");
  return v;
}

inline std::vector<std::string> words(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> v;
  std::string w;
  while (is >> w) v.push_back(w);
  return v;
}

// Reads keys from one section and records unknown keys / bad values.
class Section {
 public:
  Section(const pt::ptree& tree, std::string name, std::vector<std::string>& problems)
      : tree_(tree), name_(std::move(name)), problems_(problems) {}

  ~Section() {
    for (const auto& kv : tree_) {
      if (!used_.count(kv.first)) problems_.push_back(name_ + "." + kv.first + ": unknown key");
    }
  }

  template <class T>
  void get(const std::string& key, T& out) {
    used_.insert(key);
    const auto v = tree_.get_optional<std::string>(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, std::string>) {
        out = *v;
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        out = numbers(*v);
      } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
        out = words(*v);
      } else if constexpr (std::is_same_v<T, std::vector<int>>) {
        out.clear();
        for (double x : numbers(*v)) out.push_back(static_cast<int>(x));
      } else if constexpr (std::is_same_v<T, bool>) {
        out = (*v == "true" || *v == "1" || *v == "yes");
      } else {
        out = tree_.get<T>(key);
      }
    } catch (const std::exception&) {
      problems_.push_back(name_ + "." + key + ": cannot parse '" + *v + "'");
    }
  }

  void positive(const std::string& key, double v) {
    if (!(v > 0.0)) problems_.push_back(name_ + "." + key + ": must be positive");
  }
  void require(const std::string& key) {
    used_.insert(key);
    if (!tree_.get_optional<std::string>(key)) problems_.push_back(name_ + "." + key + ": required");
  }
  void fail(const std::string& key, const std::string& why) { problems_.push_back(name_ + "." + key + ": " + why); }

 private:
  const pt::ptree& tree_;
  std::string name_;
  std::vector<std::string>& problems_;
  std::set<std::string> used_;
};

}  // namespace detail

inline RunConfig parse_config(const std::string& text, const std::filesystem::path& source = {}) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  RunConfig c;
  c.source = source;
  c.text = text;
  std::vector<std::string> problems;
  const pt::ptree empty;
  const auto section = [&](const std::string& name) -> const pt::ptree& {
    const auto s = tree.get_child_optional(name);
    return s ? *s : empty;
  };

  if (const auto seed = tree.get_optional<std::string>("seed"); seed && seed->size() > 0) {
    try {
      c.seed = std::stoull(*seed);
    } catch (const std::exception&) {
      problems.push_back("seed: cannot parse '" + *seed + "'");
    }
  } else {
    problems.push_back("seed: required");
  }

  std::set<std::string> known{"seed", "domain", "dynamics", "flow", "symmetry", "spectral", "restrict", "qer"};
  for (const auto& kv : tree) {
    const std::string& key = kv.first;
    if (key.rfind("curve:", 0) == 0 || key.rfind("symbol:", 0) == 0 || known.count(key)) continue;
    problems.push_back(key + ": unknown section");
  }

  {
    detail::Section s(section("domain"), "domain", problems);
    s.require("kind");
    s.get("kind", c.domain_kind);
    s.get("a", c.a);
    s.get("r", c.r);
    if (c.domain_kind == "stadium") {
      s.positive("a", c.a);
      s.positive("r", c.r);
    } else if (!c.domain_kind.empty() && c.domain_kind != "unit_square" && c.domain_kind != "modular" &&
               c.domain_kind != "plane") {
      s.fail("kind", "expected stadium, unit_square, modular or plane");
    }
  }

  for (const auto& kv : tree) {
    if (kv.first.rfind("curve:", 0) == 0) {
      CurveSpec cs;
      cs.name = kv.first.substr(6);
      detail::Section s(kv.second, kv.first, problems);
      s.require("kind");
      s.get("kind", cs.kind);
      s.get("p0", cs.p0);
      s.get("p1", cs.p1);
      s.get("center", cs.center);
      s.get("element", cs.element);
      s.get("radius", cs.radius);
      s.get("inj", cs.inj);
      s.get("height", cs.height);
      if (cs.kind == "segment") {
        if (cs.p0.size() != 2) s.fail("p0", "expected two numbers");
        if (cs.p1.size() != 2) s.fail("p1", "expected two numbers");
      } else if (cs.kind == "geodesic_circle") {
        if (cs.center.size() != 2) s.fail("center", "expected two numbers");
        s.positive("radius", cs.radius);
        s.positive("inj", cs.inj);
      } else if (cs.kind == "horocycle") {
        s.positive("height", cs.height);
      } else if (cs.kind == "closed_geodesic") {
        if (cs.element.size() != 4) s.fail("element", "expected four numbers");
      } else if (!cs.kind.empty()) {
        s.fail("kind", "expected segment, geodesic_circle, horocycle or closed_geodesic");
      }
      c.curves.push_back(cs);
    } else if (kv.first.rfind("symbol:", 0) == 0) {
      SymbolSpec ss;
      ss.name = kv.first.substr(7);
      detail::Section s(kv.second, kv.first, problems);
      s.require("kind");
      s.get("kind", ss.kind);
      s.get("knots", ss.knots);
      s.get("values", ss.values);
      s.get("periodic", ss.periodic);
      s.get("sigma", ss.sigma);
      s.get("path", ss.path);
      if (ss.kind == "multiplication" || ss.kind == "separable") {
        if (ss.values.empty()) s.fail("values", "required");
        if (ss.values.size() > 1 && ss.knots.size() != ss.values.size()) s.fail("knots", "must match values");
      } else if (ss.kind == "table") {
        if (ss.path.empty()) s.fail("path", "required");
      } else if (ss.kind != "one" && !ss.kind.empty()) {
        s.fail("kind", "expected one, multiplication, separable or table");
      }
      c.symbols.push_back(ss);
    }
  }

  {
    detail::Section s(section("dynamics"), "dynamics", problems);
    s.get("t_max", c.dynamics.t_max);
    s.get("sigma_band", c.dynamics.sigma_band);
    s.get("t_sep", c.dynamics.t_sep);
    s.get("j_max", c.j_max);
    s.get("tol_match", c.tol_match);
    s.positive("t_max", c.dynamics.t_max);
    s.positive("sigma_band", c.dynamics.sigma_band);
    s.positive("t_sep", c.dynamics.t_sep);
    s.positive("j_max", c.j_max);
    s.positive("tol_match", c.tol_match);
  }
  {
    detail::Section s(section("flow"), "flow", problems);
    s.get("x", c.flow.x);
    s.get("y", c.flow.y);
    s.get("angle", c.flow.angle);
    s.get("t", c.flow.t);
    s.get("dt", c.flow.dt);
    s.get("curve", c.flow.curve);
    s.get("s", c.flow.s);
    s.get("sigma", c.flow.sigma);
    s.get("side", c.flow.side);
    s.get("returns", c.flow.returns);
    s.positive("t", c.flow.t);
    s.positive("dt", c.flow.dt);
    s.positive("returns", c.flow.returns);
    if (c.flow.side != 1 && c.flow.side != -1) s.fail("side", "must be 1 or -1");
  }
  {
    detail::Section s(section("symmetry"), "symmetry", problems);
    s.get("samples", c.samples);
    s.get("curves", c.symmetry_curves);
    if (c.samples < 100) s.fail("samples", "must be at least 100");
  }
  {
    detail::Section s(section("spectral"), "spectral", problems);
    std::string stencil = "plain";
    s.get("h", c.spectral.h);
    s.get("m", c.spectral.m);
    s.get("stencil", stencil);
    s.get("slice_size", c.spectral.slice_size);
    s.positive("h", c.spectral.h);
    s.positive("m", c.spectral.m);
    s.positive("slice_size", c.spectral.slice_size);
    if (stencil == "plain") c.spectral.stencil = Stencil::Plain;
    else if (stencil == "corrected") c.spectral.stencil = Stencil::Corrected;
    else s.fail("stencil", "expected plain or corrected");
  }
  {
    detail::Section s(section("restrict"), "restrict", problems);
    s.get("n_s", c.restrict.n_s);
    s.get("taper", c.restrict.taper_fraction);
    s.get("eps0", c.restrict.eps0);
    s.get("curves", c.restrict_curves);
    s.get("symbols", c.restrict_symbols);
    s.positive("eps0", c.restrict.eps0);
    if (c.restrict.taper_fraction < 0.0 || c.restrict.taper_fraction >= 0.5) s.fail("taper", "must lie in [0, 0.5)");
  }
  {
    detail::Section s(section("qer"), "qer", problems);
    s.get("symmetric", c.qer_symmetric);
    s.get("generic", c.qer_generic);
    s.get("ladder", c.ladder);
    s.get("theta", c.theta);
    for (double t : c.theta) {
      if (!(t > 0.0)) s.fail("theta", "factors must be positive");
    }
  }

  const auto check_curve = [&](const std::string& where, const std::string& name) {
    for (const auto& cs : c.curves) {
      if (cs.name == name) return;
    }
    problems.push_back(where + ": unknown curve '" + name + "'");
  };
  for (const auto& n : c.symmetry_curves) check_curve("symmetry.curves", n);
  for (const auto& n : c.restrict_curves) check_curve("restrict.curves", n);
  if (!c.flow.curve.empty()) check_curve("flow.curve", c.flow.curve);
  if (!c.qer_symmetric.empty()) check_curve("qer.symmetric", c.qer_symmetric);
  if (!c.qer_generic.empty()) check_curve("qer.generic", c.qer_generic);
  for (const auto& n : c.restrict_symbols) {
    bool found = false;
    for (const auto& ss : c.symbols) found = found || ss.name == n;
    if (!found) problems.push_back("restrict.symbols: unknown symbol '" + n + "'");
  }

  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

inline Hypersurface RunConfig::curve(const std::string& name) const {
  const CurveSpec& c = curve_spec(name);
  const Domain d = domain();
  if (c.kind == "segment") return Hypersurface::segment({c.p0[0], c.p0[1]}, {c.p1[0], c.p1[1]});
  if (c.kind == "geodesic_circle") return Hypersurface::geodesic_circle(d, {c.center[0], c.center[1]}, c.radius, c.inj);
  if (c.kind == "horocycle") return Hypersurface::closed_horocycle(d, c.height);
  return Hypersurface::closed_geodesic(d, {c.element[0], c.element[1], c.element[2], c.element[3]});
}

inline Symbol RunConfig::symbol(const std::string& name, double length) const {
  const SymbolSpec& s = symbol_spec(name);
  if (s.kind == "one") return Symbol(name, MultiplicationSymbol{ArcProfile::constant(1.0)});
  if (s.kind == "table") {
    std::filesystem::path p = s.path;
    if (p.is_relative() && !source.empty()) p = source.parent_path() / p;
    return Symbol(name, TabulatedSymbol{SymbolTable::from_csv(p.string())});
  }
  ArcProfile v = ArcProfile::constant(s.values.front());
  if (s.values.size() > 1) {
    std::vector<double> knots;
    for (double k : s.knots) knots.push_back(k * length);
    v = ArcProfile::spline(knots, s.values, s.periodic);
  }
  if (s.kind == "multiplication") return Symbol::multiplication(name, v);
  SigmaProfile g = s.sigma == "gamma" ? SigmaProfile::gamma_weight() : SigmaProfile::polynomial(detail::numbers(s.sigma));
  return Symbol::separable(name, v, g);
}

}  // namespace qerlab::cli
