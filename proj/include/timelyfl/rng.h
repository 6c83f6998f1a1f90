#ifndef TIMELYFL_RNG_H_
#define TIMELYFL_RNG_H_

#include <cstdint>
#include <limits>

namespace timelyfl {

// What a random stream is used for. Part of the stream key so that two
// consumers never share draws.
enum class Purpose : std::uint64_t {
  kModelInit = 1,
  kSyntheticData = 2,
  kPartition = 3,
  kPopulation = 4,
  kCohort = 5,
  kDisturbance = 6,
  kBandwidth = 7,
  kBatchOrder = 8,
  kNoise = 9,
  kReplacement = 10,
  kSplit = 11,
};

// Counter-based generator. Draw i of a stream is a pure function of
// (key, i), so a stream's values do not depend on how many other streams
// were consumed before it. Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, Purpose purpose, std::uint64_t entity = 0,
            std::uint64_t round = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace timelyfl

#endif  // TIMELYFL_RNG_H_
