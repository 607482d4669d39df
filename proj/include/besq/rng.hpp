#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace besq {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Mixes (seed, stream) into one engine seed; distinct pairs give unrelated engines.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream_id) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id), engine_(stream_seed(seed, stream_id)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Independent child stream, e.g. one per coordinate of a replica.
  RngStream substream(std::uint64_t k) const {
    return RngStream(stream_seed(seed_, stream_id_), k);
  }

  /// Uniform on the open interval (0,1).
  double uniform() {
    for (;;) {
      double u = std::generate_canonical<double, 53>(engine_);
      if (u > 0.0) return u;
    }
  }

  double normal() { return normal_(engine_); }

  /// Gamma(shape, 1).
  double gamma(double shape) {
    using P = std::gamma_distribution<double>::param_type;
    return gamma_(engine_, P(shape, 1.0));
  }

  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    using P = std::poisson_distribution<std::uint64_t>::param_type;
    return poisson_(engine_, P(mean));
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::gamma_distribution<double> gamma_;
  std::poisson_distribution<std::uint64_t> poisson_;
};

}  // namespace besq
