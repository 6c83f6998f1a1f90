#ifndef TIMELYFL_DEVICE_H_
#define TIMELYFL_DEVICE_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "timelyfl/rng.h"

namespace timelyfl {

struct DeviceProfile {
  int client_id = 0;
  double base_compute_s_per_batch = 1.0;  // full model, one batch
  std::vector<double> bandwidth_samples;  // bytes/second

  friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

// What a device can do during one round (or one FedBuff task).
struct RoundCapability {
  int client_id = 0;
  std::uint64_t round = 0;
  double disturbance_w = 1.0;  // in [1, 1.3]
  double bandwidth_bps = 1.0;
};

inline constexpr double kDisturbanceMean = 1.0;
inline constexpr double kDisturbanceStddev = 0.3;
inline constexpr double kDisturbanceMax = 1.3;

// w = 1 for x <= 1, x for 1 < x < 1.3, 1.3 for x >= 1.3.
double clamp_disturbance(double x);
// Draws x ~ N(1, 0.3^2) and clamps it.
double sample_disturbance(RngStream& rng);

double effective_compute_time(const DeviceProfile& profile, double w);

// Uniform pick from profile.bandwidth_samples.
double sample_bandwidth(const DeviceProfile& profile, RngStream& rng);

// Capability of `profile` in `round`, drawn from streams keyed by
// (seed, client, round). With `disturbance` off, w is 1.
RoundCapability round_capability(const DeviceProfile& profile, std::uint64_t seed,
                                 std::uint64_t round, bool disturbance = true);

// Multiplicative factor U[1 - eta, 1 + eta] on actual compute time.
double sample_compute_noise(std::uint64_t seed, int client_id, std::uint64_t round,
                            double eta);

struct PopulationSpec {
  std::size_t client_count = 64;
  double heterogeneity_ratio = 13.3;  // slowest / fastest base compute
  double min_compute_s = 0.5;
  double bandwidth_spread = 200.0;  // best / worst bandwidth
  double min_bandwidth_bps = 1000.0;
  std::size_t bandwidth_samples_per_client = 8;
  std::uint64_t seed = 0;
};

// Base compute log-uniform on [min, min * ratio]. Each client gets a
// log-uniform base bandwidth on [min_bw, min_bw * spread]; its samples
// jitter around that base and stay inside the range.
std::vector<DeviceProfile> synth_population(const PopulationSpec& spec);

// CSV: client_id,base_compute_s_per_batch,bw_0[,bw_1,...]. A header row is
// required; rows may carry different numbers of bandwidth columns.
std::vector<DeviceProfile> load_traces(const std::filesystem::path& path);
void dump_traces(const std::filesystem::path& path,
                 const std::vector<DeviceProfile>& profiles);

}  // namespace timelyfl

#endif  // TIMELYFL_DEVICE_H_
