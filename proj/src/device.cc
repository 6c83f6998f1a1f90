#include "timelyfl/device.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <string_view>

#include "timelyfl/errors.h"

namespace timelyfl {

double clamp_disturbance(double x) {
  if (x <= 1.0) return 1.0;
  if (x >= kDisturbanceMax) return kDisturbanceMax;
  return x;
}

double sample_disturbance(RngStream& rng) {
  std::normal_distribution<double> dist(kDisturbanceMean, kDisturbanceStddev);
  return clamp_disturbance(dist(rng));
}

double effective_compute_time(const DeviceProfile& profile, double w) {
  return w * profile.base_compute_s_per_batch;
}

double sample_bandwidth(const DeviceProfile& profile, RngStream& rng) {
  if (profile.bandwidth_samples.empty()) {
    throw StructuralError("device " + std::to_string(profile.client_id) +
                          " has no bandwidth samples");
  }
  return profile.bandwidth_samples[rng.below(profile.bandwidth_samples.size())];
}

RoundCapability round_capability(const DeviceProfile& profile, std::uint64_t seed,
                                 std::uint64_t round, bool disturbance) {
  const auto id = static_cast<std::uint64_t>(profile.client_id);
  RoundCapability cap;
  cap.client_id = profile.client_id;
  cap.round = round;
  if (disturbance) {
    RngStream w_rng(seed, Purpose::kDisturbance, id, round);
    cap.disturbance_w = sample_disturbance(w_rng);
  }
  RngStream bw_rng(seed, Purpose::kBandwidth, id, round);
  cap.bandwidth_bps = sample_bandwidth(profile, bw_rng);
  return cap;
}

double sample_compute_noise(std::uint64_t seed, int client_id, std::uint64_t round,
                            double eta) {
  if (eta <= 0.0) return 1.0;
  RngStream rng(seed, Purpose::kNoise, static_cast<std::uint64_t>(client_id), round);
  return rng.uniform(1.0 - eta, 1.0 + eta);
}

std::vector<DeviceProfile> synth_population(const PopulationSpec& spec) {
  if (spec.heterogeneity_ratio < 1.0) throw ValidationError("heterogeneity_ratio must be >= 1");
  if (spec.bandwidth_spread < 1.0) throw ValidationError("bandwidth_spread must be >= 1");
  if (!(spec.min_compute_s > 0.0) || !(spec.min_bandwidth_bps > 0.0)) {
    throw ValidationError("minimum compute time and bandwidth must be > 0");
  }
  if (spec.bandwidth_samples_per_client == 0) {
    throw ValidationError("need at least one bandwidth sample per client");
  }
  const double log_ratio = std::log(spec.heterogeneity_ratio);
  const double log_spread = std::log(spec.bandwidth_spread);
  const double max_bw = spec.min_bandwidth_bps * spec.bandwidth_spread;

  std::vector<DeviceProfile> out;
  out.reserve(spec.client_count);
  for (std::size_t i = 0; i < spec.client_count; ++i) {
    RngStream rng(spec.seed, Purpose::kPopulation, i);
    DeviceProfile p;
    p.client_id = static_cast<int>(i);
    p.base_compute_s_per_batch =
        spec.heterogeneity_ratio == 1.0
            ? spec.min_compute_s
            : spec.min_compute_s * std::exp(rng.uniform01() * log_ratio);
    const double base_bw = spec.min_bandwidth_bps * std::exp(rng.uniform01() * log_spread);
    for (std::size_t s = 0; s < spec.bandwidth_samples_per_client; ++s) {
      const double jitter = spec.bandwidth_spread == 1.0 ? 1.0 : std::exp(rng.uniform(-0.2, 0.2));
      p.bandwidth_samples.push_back(std::clamp(base_bw * jitter, spec.min_bandwidth_bps, max_bw));
    }
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

double parse_positive(std::string_view cell, const std::string& where) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw ParseError(where + ": '" + std::string(cell) + "' is not a number", 0);
  }
  if (!(v > 0.0)) {
    throw ValidationError(where + ": value " + std::string(cell) + " must be positive");
  }
  return v;
}

}  // namespace

std::vector<DeviceProfile> load_traces(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty trace file", 1);
  std::size_t line_no = 1;
  std::vector<DeviceProfile> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    std::vector<std::string_view> cells;
    std::string_view rest(line);
    while (true) {
      auto pos = rest.find(',');
      cells.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (cells.size() < 3) {
      throw ParseError(where + ": need client_id, compute time and >= 1 bandwidth", line_no);
    }
    DeviceProfile p;
    int id = 0;
    auto [ptr, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), id);
    if (ec != std::errc() || ptr != cells[0].data() + cells[0].size() || id < 0) {
      throw ParseError(where + ": bad client_id '" + std::string(cells[0]) + "'", line_no);
    }
    p.client_id = id;
    try {
      p.base_compute_s_per_batch = parse_positive(cells[1], where);
      for (std::size_t i = 2; i < cells.size(); ++i) {
        p.bandwidth_samples.push_back(parse_positive(cells[i], where));
      }
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
    out.push_back(std::move(p));
  }
  if (out.empty()) throw ParseError(path.string() + ": no device rows", line_no);
  return out;
}

void dump_traces(const std::filesystem::path& path,
                 const std::vector<DeviceProfile>& profiles) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trace file " + path.string());
  std::size_t widest = 0;
  for (const auto& p : profiles) widest = std::max(widest, p.bandwidth_samples.size());
  out << "client_id,base_compute_s_per_batch";
  for (std::size_t i = 0; i < widest; ++i) out << ",bw_" << i;
  out << "\n";
  char buf[40];
  for (const auto& p : profiles) {
    std::snprintf(buf, sizeof buf, "%.17g", p.base_compute_s_per_batch);
    out << p.client_id << "," << buf;
    for (double bw : p.bandwidth_samples) {
      std::snprintf(buf, sizeof buf, "%.17g", bw);
      out << "," << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace timelyfl
