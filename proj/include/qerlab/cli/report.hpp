#pragma once

// JSON and CSV emitters.  CSV headers carry units in brackets.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qerlab/dynamics.hpp"
#include "qerlab/qer.hpp"
#include "qerlab/spectral.hpp"
#include "qerlab/symmetry.hpp"

namespace qerlab::cli {

using nlohmann::json;

inline json to_json(const SymmetryVerdict& v) {
  json hist = json::array();
  for (const auto& [jk, n] : v.histogram) hist.push_back({{"j", jk.first}, {"k", jk.second}, {"count", n}});
  json tol = json::array();
  for (const auto& [t, e] : v.by_tolerance) tol.push_back({{"tol_match", t}, {"estimate", e}});
  return {{"estimate", v.estimate},
          {"stderr", v.stderr_},
          {"samples", v.samples},
          {"valid", v.valid},
          {"censored", v.censored},
          {"censored_fraction", v.censored_fraction},
          {"low_confidence", v.low_confidence},
          {"witness_histogram", hist},
          {"by_tolerance", tol},
          {"params",
           {{"j_max", v.params.j_max},
            {"t_max", v.params.dynamics.t_max},
            {"sigma_band", v.params.dynamics.sigma_band},
            {"tol_match", v.params.tol_match},
            {"seed", v.params.seed}}}};
}

inline json to_json(const QerReport& r) {
  json ladder = json::array();
  for (const auto& l : r.ladder) {
    ladder.push_back({{"N", l.n}, {"lambda", l.lambda}, {"E", l.mean}, {"S", l.variance}});
  }
  json exc = json::array();
  for (const auto& e : r.exceptional) {
    json windows = json::array();
    for (const auto& w : e.windows) {
      windows.push_back({{"lambda_lo", w.lambda_lo}, {"lambda_hi", w.lambda_hi}, {"modes", w.modes},
                         {"flagged", w.flagged}, {"fraction", w.fraction}});
    }
    exc.push_back({{"theta", e.theta}, {"fraction", e.fraction}, {"indices", e.indices}, {"windows", windows}});
  }
  json classes = json::array();
  for (const auto& c : r.classes) {
    classes.push_back({{"parity", c.parity}, {"count", c.count}, {"mean", c.mean}, {"variance", c.variance}});
  }
  json hist = json::array();
  for (const auto& b : r.histogram) {
    hist.push_back({{"lo", b.lo}, {"hi", std::isfinite(b.hi) ? json(b.hi) : json("inf")}, {"count", b.count}});
  }
  return {{"symbol", r.symbol},
          {"curve", r.curve},
          {"omega", r.omega},
          {"omega_cutoff", r.omega_cutoff},
          {"ladder", ladder},
          {"exceptional", exc},
          {"classes", classes},
          {"histogram_value_over_omega", hist},
          {"near_zero_fraction", r.near_zero_fraction},
          {"near_zero_odd_agreement", r.near_zero_odd_agreement},
          {"aliasing_flags", r.aliasing},
          {"modes", r.records.size()}};
}

inline void write_restrict_csv(const std::vector<MatrixElementRecord>& records, const std::vector<int>& parity,
                               std::ostream& os) {
  os << "j,lambda[1/length],norm2[1/length],value[1/length],aliasing_flag,parity\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    os << r.j + 1 << ',' << r.lambda << ',' << r.norm2 << ',' << r.value << ',' << (r.aliasing ? 1 : 0) << ','
       << (i < parity.size() ? parity[i] : 0) << '\n';
  }
}

struct RestrictTable {
  std::vector<MatrixElementRecord> records;
  std::vector<int> parity;
};

inline RestrictTable read_restrict_csv(const std::filesystem::path& p, const std::string& symbol) {
  std::ifstream in(p);
  if (!in) throw DependencyError(p.filename().string() + " missing; run the restrict subcommand first");
  RestrictTable t;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    MatrixElementRecord r;
    int alias = 0;
    int parity = 0;
    if (!(ls >> r.j >> r.lambda >> r.norm2 >> r.value >> alias >> parity)) {
      throw ConfigError("malformed row in " + p.string());
    }
    r.j -= 1;
    r.aliasing = alias != 0;
    r.symbol = symbol;
    t.records.push_back(r);
    t.parity.push_back(parity);
  }
  return t;
}

inline void write_ladder_csv(const QerReport& r, std::ostream& os) {
  os << "N,lambda_N[1/length],E[1/length],S[1/length^2],omega[1/length]\n";
  os << std::setprecision(17);
  for (const auto& l : r.ladder) os << l.n << ',' << l.lambda << ',' << l.mean << ',' << l.variance << ',' << r.omega << '\n';
}

inline void write_weyl_csv(const WeylReport& w, std::ostream& os) {
  os << "lambda[1/length],count,weyl_two_term\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < w.lambda.size(); ++i) os << w.lambda[i] << ',' << w.count[i] << ',' << w.weyl[i] << '\n';
}

// Plot script: value histograms and S(N) decay for each report.
inline std::string plot_script(const std::vector<std::string>& restrict_csvs, const std::vector<std::string>& ladder_csvs) {
  std::ostringstream os;
  os << "# Generated by qerlab report. Requires matplotlib and pandas.\n"
        "import pandas as pd\nimport matplotlib.pyplot as plt\n\n"
        "restrict = [";
  for (const auto& s : restrict_csvs) os << "'" << s << "', ";
  os << "]\nladders = [";
  for (const auto& s : ladder_csvs) os << "'" << s << "', ";
  os << "]\n\n"
        "fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))\n"
        "for path in restrict:\n"
        "    df = pd.read_csv(path)\n"
        "    ax1.hist(df.iloc[:, 3], bins=40, alpha=0.5, label=path)\n"
        "ax1.set_xlabel('matrix element')\nax1.legend(fontsize=7)\n"
        "for path in ladders:\n"
        "    df = pd.read_csv(path)\n"
        "    ax2.loglog(df.iloc[:, 0], df.iloc[:, 3], 'o-', label=path)\n"
        "ax2.set_xlabel('N')\nax2.set_ylabel('S(N)')\nax2.legend(fontsize=7)\n"
        "fig.tight_layout()\nfig.savefig('report.png', dpi=150)\n";
  return os.str();
}

}  // namespace qerlab::cli
