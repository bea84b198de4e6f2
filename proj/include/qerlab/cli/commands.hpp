#pragma once

// Subcommands.  Each reads a RunConfig, writes its artifacts into the output
// directory and finishes with a manifest listing every file it wrote.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qerlab/cli/config.hpp"
#include "qerlab/cli/manifest.hpp"
#include "qerlab/cli/report.hpp"
#include "qerlab/dynamics.hpp"
#include "qerlab/qer.hpp"
#include "qerlab/restriction.hpp"
#include "qerlab/spectral_io.hpp"
#include "qerlab/symmetry.hpp"

namespace qerlab::cli {

namespace fs = std::filesystem;

struct Options {
  fs::path config;
  std::optional<std::uint64_t> seed;
  fs::path out = "out";
  unsigned threads = 1;
  bool verbose = false;
};

class Run {
 public:
  Run(std::string command, const Options& opt)
      : opt_(opt),
        cfg_(load_config(opt.config)),
        manifest_(command, cfg_.text, opt.seed.value_or(cfg_.seed), opt.threads) {
    if (opt.seed) cfg_.seed = *opt.seed;
    fs::create_directories(opt.out);
    manifest_.input(opt.config);
  }

  const RunConfig& config() const { return cfg_; }
  const Options& options() const { return opt_; }
  Manifest& manifest() { return manifest_; }

  fs::path path(const std::string& name) const { return opt_.out / name; }

  template <class F>
  void write(const std::string& name, F&& body) {
    const fs::path p = path(name);
    {
      std::ofstream os(p, std::ios::binary);
      if (!os) throw ConfigError("cannot write " + p.string());
      body(os);
    }
    manifest_.output(p);
    log("wrote " + p.string());
  }

  // Declares an artifact of an earlier stage as input, or fails naming the stage.
  fs::path require(const std::string& name, const std::string& stage) {
    const fs::path p = path(name);
    if (!fs::exists(p)) throw DependencyError(name + " not found in " + opt_.out.string() + "; run `" + stage + "` first");
    manifest_.input(p);
    return p;
  }

  void log(const std::string& msg) const {
    if (opt_.verbose) std::cerr << "[qerlab] " << msg << '\n';
  }

  void finish() { manifest_.write(opt_.out); }

 private:
  Options opt_;
  RunConfig cfg_;
  Manifest manifest_;
};

inline SymmetryParams symmetry_params(const RunConfig& c, unsigned threads) {
  SymmetryParams p;
  p.j_max = c.j_max;
  p.dynamics = c.dynamics;
  p.tol_match = c.tol_match;
  p.seed = c.seed;
  p.threads = threads;
  return p;
}

inline std::string artifact(const std::string& stem, const std::string& curve, const std::string& symbol,
                            const std::string& ext) {
  return stem + "_" + curve + "_" + symbol + "." + ext;
}

// ---------------------------------------------------------------------------

inline void cmd_flow_trace(Run& run) {
  const RunConfig& c = run.config();
  const Domain d = c.domain();
  const PhasePoint p0{{c.flow.x, c.flow.y}, Vec2::polar(c.flow.angle), d.model(), std::nullopt};
  if (!d.contains(p0.x)) throw ConfigError("flow.x, flow.y: start point is not inside the domain");
  run.write("flow_trace.csv", [&](std::ostream& os) {
    os << "t[time],x[length],y[length],xi_x[1],xi_y[1]\n" << std::setprecision(17);
    const int steps = static_cast<int>(std::floor(c.flow.t / c.flow.dt + 1e-9));
    for (int k = 0; k <= steps; ++k) {
      const double t = k * c.flow.dt;
      try {
        const PhasePoint q = flow(d, p0, t);
        os << t << ',' << q.x.x << ',' << q.x.y << ',' << q.xi.x << ',' << q.xi.y << '\n';
      } catch (const TrajectoryAbort& e) {
        os << "# aborted at t=" << t << ": " << e.what() << '\n';
        break;
      }
    }
  });
}

inline void cmd_section_orbit(Run& run) {
  const RunConfig& c = run.config();
  if (c.flow.curve.empty()) throw ConfigError("flow.curve: required for section-orbit");
  const Domain d = c.domain();
  const Hypersurface h = c.curve(c.flow.curve);
  const CrossSectionPoint q{c.flow.s, c.flow.sigma, c.flow.side > 0 ? Side::Plus : Side::Minus};
  const OrbitReturns rec = record_returns(d, h, q, c.flow.returns, c.dynamics);
  run.write("section_orbit.csv", [&](std::ostream& os) {
    os << "j,T_j[time],s[length],sigma[1],side\n" << std::setprecision(17);
    os << 0 << ',' << 0.0 << ',' << q.s << ',' << q.sigma << ',' << static_cast<int>(q.side) << '\n';
    for (std::size_t k = 0; k < rec.times.size(); ++k) {
      os << k + 1 << ',' << rec.times[k] << ',' << rec.points[k].s << ',' << rec.points[k].sigma << ','
         << static_cast<int>(rec.points[k].side) << '\n';
    }
    os << "# status=" << to_string(rec.status) << " returns=" << rec.times.size() << '\n';
  });
}

inline void cmd_symmetry(Run& run) {
  const RunConfig& c = run.config();
  if (c.symmetry_curves.empty()) throw ConfigError("symmetry.curves: required");
  const Domain d = c.domain();
  json out = {{"schema", kReportSchema}, {"domain", d.describe()}, {"verdicts", json::object()}};
  for (const auto& name : c.symmetry_curves) {
    const Hypersurface h = c.curve(name);
    run.log("symmetry measure on " + name);
    const SymmetryVerdict v = symmetry_measure(d, h, c.samples, symmetry_params(c, run.options().threads));
    json j = to_json(v);
    j["curve"] = h.describe();
    out["verdicts"][name] = j;
    run.write("symmetry_" + name + ".csv", [&](std::ostream& os) {
      os << "sample,s[length],sigma[1],side,status,symmetric,j,k,distance[1]\n" << std::setprecision(17);
      for (std::size_t i = 0; i < v.outcomes.size(); ++i) {
        const SampleOutcome& o = v.outcomes[i];
        os << i << ',' << o.q.s << ',' << o.q.sigma << ',' << static_cast<int>(o.q.side) << ','
           << to_string(o.result.status) << ',' << (o.result.symmetric ? 1 : 0) << ',' << o.result.witness.j << ','
           << o.result.witness.k << ',' << o.result.witness.distance << '\n';
      }
    });
  }
  run.write("symmetry.json", [&](std::ostream& os) { os << out.dump(2) << '\n'; });
}

inline void cmd_spectrum(Run& run) {
  const RunConfig& c = run.config();
  const Domain d = c.domain();
  EigenParams p;
  p.m = c.spectral.m;
  p.slice_size = c.spectral.slice_size;
  p.seed = c.seed;
  p.threads = run.options().threads;
  run.log("solving for " + std::to_string(p.m) + " modes");
  const SpectralBatch b = compute_spectrum(d, c.spectral.h, p, c.spectral.stencil);
  save_batch(b, run.path("spectrum.bin").string());
  run.manifest().output(run.path("spectrum.bin"));
  run.write("eigenvalues.csv", [&](std::ostream& os) { write_eigenvalue_csv(b, os); });
  json summary = {{"schema", kReportSchema},
                  {"domain", d.describe()},
                  {"h", b.grid.h()},
                  {"stencil", to_string(b.grid.stencil())},
                  {"interior_nodes", b.grid.size()},
                  {"modes", b.size()},
                  {"max_residual", *std::max_element(b.residuals.begin(), b.residuals.end())}};
  if (b.size() >= 20) {
    const WeylReport w = weyl_check(b, d);
    run.write("weyl.csv", [&](std::ostream& os) { write_weyl_csv(w, os); });
    json checks = json::array();
    for (const auto& [s, n] : w.shift_checks) checks.push_back({{"shift", s}, {"count", n}});
    summary["weyl"] = {{"window", {w.window_lo, w.window_hi}},
                       {"max_rel_deviation_upper_half", w.max_rel_deviation},
                       {"shift_checks", checks}};
  } else {
    summary["weyl"] = "insufficient spectrum";
  }
  run.write("spectrum.json", [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
}

inline void cmd_restrict(Run& run) {
  const RunConfig& c = run.config();
  if (c.restrict_curves.empty() || c.restrict_symbols.empty()) throw ConfigError("restrict.curves/symbols: required");
  const fs::path bin = run.require("spectrum.bin", "spectrum");
  const SpectralBatch b = load_batch(bin.string());
  if (b.grid.domain().hash() != c.domain().hash()) throw DependencyError("spectrum.bin was computed for another domain");
  for (const auto& cn : c.restrict_curves) {
    const Hypersurface h = c.curve(cn);
    for (const auto& sn : c.restrict_symbols) {
      const Symbol a = c.symbol(sn, h.length());
      run.log("restricting " + sn + " on " + cn);
      const auto rec = matrix_elements(a, b, h, c.restrict, run.options().threads);
      run.write(artifact("restrict", cn, sn, "csv"), [&](std::ostream& os) { write_restrict_csv(rec, b.parity, os); });
    }
  }
}

inline QerParams qer_params(const RunConfig& c) {
  QerParams p;
  p.ladder = c.ladder;
  p.theta_factors = c.theta;
  return p;
}

inline std::vector<std::string> qer_curves(const RunConfig& c) {
  std::vector<std::string> curves;
  for (const auto& n : {c.qer_symmetric, c.qer_generic}) {
    if (!n.empty()) curves.push_back(n);
  }
  return curves.empty() ? c.restrict_curves : curves;
}

inline void cmd_qer(Run& run) {
  const RunConfig& c = run.config();
  const Domain d = c.domain();
  for (const auto& cn : qer_curves(c)) {
    const Hypersurface h = c.curve(cn);
    for (const auto& sn : c.restrict_symbols) {
      const RestrictTable t = read_restrict_csv(run.require(artifact("restrict", cn, sn, "csv"), "restrict"), sn);
      const QerReport r = qer_report(c.symbol(sn, h.length()), d, h, t.records, t.parity, qer_params(c));
      json j = to_json(r);
      j["schema"] = kReportSchema;
      run.write(artifact("qer", cn, sn, "json"), [&](std::ostream& os) { os << j.dump(2) << '\n'; });
      run.write(artifact("ladder", cn, sn, "csv"), [&](std::ostream& os) { write_ladder_csv(r, os); });
    }
  }
}

inline void cmd_report(Run& run) {
  const RunConfig& c = run.config();
  if (c.qer_symmetric.empty() || c.qer_generic.empty()) throw ConfigError("qer.symmetric/generic: required for report");
  const Domain d = c.domain();
  json out = {{"schema", kReportSchema}, {"domain", d.describe()}, {"pairs", json::array()}};
  std::vector<std::string> restrict_files;
  std::vector<std::string> ladder_files;
  for (const auto& sn : c.restrict_symbols) {
    for (const auto& cn : {c.qer_symmetric, c.qer_generic}) run.require(artifact("restrict", cn, sn, "csv"), "restrict");
  }
  std::map<std::string, json> verdicts;
  for (const auto& cn : {c.qer_symmetric, c.qer_generic}) {
    const Hypersurface h = c.curve(cn);
    verdicts[cn] = to_json(symmetry_measure(d, h, c.samples, symmetry_params(c, run.options().threads)));
  }
  for (const auto& sn : c.restrict_symbols) {
    json pair = {{"symbol", sn}};
    for (const auto& [slot, cn] : {std::pair{"symmetric", c.qer_symmetric}, {"generic", c.qer_generic}}) {
      const Hypersurface h = c.curve(cn);
      const std::string file = artifact("restrict", cn, sn, "csv");
      const RestrictTable t = read_restrict_csv(run.path(file), sn);
      const QerReport r = qer_report(c.symbol(sn, h.length()), d, h, t.records, t.parity, qer_params(c));
      json j = to_json(r);
      j["curve_name"] = cn;
      j["symmetry"] = verdicts[cn];
      pair[slot] = j;
      restrict_files.push_back(file);
      const std::string ladder = artifact("ladder", cn, sn, "csv");
      run.write(ladder, [&](std::ostream& os) { write_ladder_csv(r, os); });
      ladder_files.push_back(ladder);
    }
    out["pairs"].push_back(pair);
  }
  run.write("report.json", [&](std::ostream& os) { os << out.dump(2) << '\n'; });
  run.write("report_plot.py", [&](std::ostream& os) { os << plot_script(restrict_files, ladder_files); });
}

inline const std::map<std::string, std::function<void(Run&)>>& commands() {
  static const std::map<std::string, std::function<void(Run&)>> table{
      {"flow-trace", cmd_flow_trace}, {"section-orbit", cmd_section_orbit}, {"symmetry", cmd_symmetry},
      {"spectrum", cmd_spectrum},     {"restrict", cmd_restrict},           {"qer", cmd_qer},
      {"report", cmd_report}};
  return table;
}

inline void run_command(const std::string& name, const Options& opt) {
  const auto it = commands().find(name);
  if (it == commands().end()) throw ConfigError("unknown subcommand " + name);
  Run run(name, opt);
  it->second(run);
  run.finish();
}

}  // namespace qerlab::cli
