#include "critpop/noise.hpp"

#include <cmath>
#include <limits>

namespace critpop {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  engine_.seed(seq);
}

NoiseStream NoiseStream::split(std::uint64_t child) const {
  return NoiseStream(splitmix64(seed_ ^ splitmix64(stream_id_)), splitmix64(child + 1));
}

double NoiseStream::gaussian() {
  ++position_;
  return normal_(engine_);
}

double NoiseStream::uniform() {
  ++position_;
  return uniform_(engine_);
}

double NoiseStream::exponential(double rate) {
  if (rate <= 0.0) return std::numeric_limits<double>::infinity();
  // 1 - U lies in (0, 1], so the log is finite.
  return -std::log1p(-uniform()) / rate;
}

} // namespace critpop
