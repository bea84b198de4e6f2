#pragma once

// Run manifest: config hash, seed, versions, wall time and a content hash
// for every file written by the run.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <nlohmann/json.hpp>

#include "qerlab/errors.hpp"

namespace qerlab::cli {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kReportSchema = "qerlab.report/1";

inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DependencyError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Manifest {
 public:
  Manifest(std::string command, const std::string& config_text, std::uint64_t seed, unsigned threads)
      : start_(std::chrono::steady_clock::now()) {
    j_["schema"] = "qerlab.manifest/1";
    j_["command"] = std::move(command);
    j_["config_hash"] = "fnv1a64:" + hex64(fnv1a(config_text));
    j_["seed"] = seed;
    j_["threads"] = threads;
    j_["versions"] = {{"qerlab", kVersion},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                    std::to_string(EIGEN_MINOR_VERSION)},
                      {"boost", BOOST_LIB_VERSION},
                      {"compiler", __VERSION__}};
    j_["outputs"] = nlohmann::json::object();
    j_["inputs"] = nlohmann::json::object();
  }

  void input(const std::filesystem::path& p) { j_["inputs"][p.filename().string()] = "fnv1a64:" + hex64(fnv1a(read_file(p))); }
  void output(const std::filesystem::path& p) { j_["outputs"][p.filename().string()] = "fnv1a64:" + hex64(fnv1a(read_file(p))); }
  void note(const std::string& key, nlohmann::json value) { j_["notes"][key] = std::move(value); }

  std::filesystem::path write(const std::filesystem::path& dir) {
    j_["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const auto path = dir / ("manifest-" + j_["command"].get<std::string>() + ".json");
    std::ofstream os(path);
    os << j_.dump(2) << '\n';
    if (!os) throw ConfigError("cannot write " + path.string());
    return path;
  }

  const nlohmann::json& json() const { return j_; }

 private:
  nlohmann::json j_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace qerlab::cli
