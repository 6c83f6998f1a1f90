#include "timelyfl/rng.h"

namespace timelyfl {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t master_seed, Purpose purpose,
                     std::uint64_t entity, std::uint64_t round) {
  std::uint64_t k = mix64(master_seed + kGolden);
  k = mix64(k ^ (static_cast<std::uint64_t>(purpose) * kGolden));
  k = mix64(k ^ (entity + 0x632BE59BD9B4E019ULL));
  k = mix64(k ^ (round + 0x8CB92BA72F3D8DD7ULL));
  key_ = k;
}

RngStream::result_type RngStream::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform01() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t n) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t x;
  do {
    x = (*this)();
  } while (x >= limit);
  return x % n;
}

}  // namespace timelyfl
