#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roiedge/error.hpp"
#include "roiedge/random.hpp"

namespace roiedge {

inline constexpr double kBytesPerKB = 1000.0;

namespace detail {

template <typename Sample>
const Sample& step_lookup(const std::vector<Sample>& samples, double t, const char* what) {
  if (samples.empty()) throw RangeError(std::string(what) + " trace is empty");
  if (t < samples.front().t) throw RangeError(std::string(what) + " trace starts after t=" + std::to_string(t));
  auto it = std::upper_bound(samples.begin(), samples.end(), t, [](double v, const Sample& s) { return v < s.t; });
  return *std::prev(it);
}

template <typename Sample>
void check_increasing(const std::vector<Sample>& samples, const char* what) {
  if (samples.empty()) throw FormatError(std::string(what) + " trace is empty");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].t > samples[i - 1].t)) throw FormatError(std::string(what) + " trace times must increase");
}

inline std::vector<nlohmann::json> read_json_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace detail

// Step function of available throughput.
struct BandwidthTrace {
  struct Sample {
    double t = 0.0;    // seconds
    double bps = 0.0;  // bits per second
  };
  std::vector<Sample> samples;

  static BandwidthTrace constant(double bps) { return BandwidthTrace{{{0.0, bps}}}; }

  void validate() const {
    detail::check_increasing(samples, "bandwidth");
    for (const auto& s : samples)
      if (!(s.bps >= 0.0)) throw FormatError("bandwidth must be >= 0");
  }
};

inline double bandwidth_at(const BandwidthTrace& trace, double t) {
  return detail::step_lookup(trace.samples, t, "bandwidth").bps;
}

struct EdgeResourceTrace {
  struct Sample {
    double t = 0.0;
    double g_max = 1.0;             // GPU share available to this device per frame
    double base_latency_ms = 10.0;  // fixed per-frame inference overhead
  };
  std::vector<Sample> samples;

  static EdgeResourceTrace constant(double g_max, double base_latency_ms) {
    return EdgeResourceTrace{{{0.0, g_max, base_latency_ms}}};
  }

  void validate() const {
    detail::check_increasing(samples, "edge resource");
    for (const auto& s : samples)
      if (!(s.g_max >= 0.0) || !(s.base_latency_ms >= 0.0)) throw FormatError("edge resource values must be >= 0");
  }
};

inline const EdgeResourceTrace::Sample& edge_resources_at(const EdgeResourceTrace& trace, double t) {
  return detail::step_lookup(trace.samples, t, "edge resource");
}

inline BandwidthTrace load_bandwidth_trace(const std::filesystem::path& path) {
  BandwidthTrace tr;
  for (const auto& j : detail::read_json_lines(path)) {
    try {
      tr.samples.push_back({j.at("t").get<double>(), j.at("bps").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
  tr.validate();
  return tr;
}

inline EdgeResourceTrace load_edge_trace(const std::filesystem::path& path) {
  EdgeResourceTrace tr;
  for (const auto& j : detail::read_json_lines(path)) {
    try {
      tr.samples.push_back({j.at("t").get<double>(), j.at("g_max").get<double>(), j.at("base_latency_ms").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
  tr.validate();
  return tr;
}

inline void save_bandwidth_trace(const BandwidthTrace& tr, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& s : tr.samples) out << nlohmann::json{{"t", s.t}, {"bps", s.bps}}.dump() << '\n';
}

inline void save_edge_trace(const EdgeResourceTrace& tr, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& s : tr.samples)
    out << nlohmann::json{{"t", s.t}, {"g_max", s.g_max}, {"base_latency_ms", s.base_latency_ms}}.dump() << '\n';
}

struct TransmitResult {
  double latency_ms = 0.0;
  bool delivered = false;
  bool stalled = false;  // zero bandwidth
};

// Serialization delay plus a seeded loss draw keyed by (seed, frame, box).
inline TransmitResult transmit(double bytes, double bps, double loss_rate, std::uint64_t seed, std::uint64_t frame,
                               std::uint64_t box) {
  if (!(loss_rate >= 0.0 && loss_rate <= 1.0)) throw ParameterError("loss rate must be in [0, 1]");
  if (!(bps > 0.0)) return TransmitResult{0.0, false, true};
  TransmitResult r;
  r.latency_ms = bytes * 8.0 / bps * 1000.0;
  r.delivered = keyed_uniform(seed, frame, box) >= loss_rate;
  return r;
}

}  // namespace roiedge
