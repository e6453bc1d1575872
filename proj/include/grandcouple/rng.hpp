#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace grandcouple {

// A seeded random stream. Owns the engine and the distribution objects so
// that cached state (the polar normal pair) stays with the stream.
class RngStream {
 public:
  using Engine = std::mt19937_64;

  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // Independent stream for (seed, experiment, replicate); scheduling-free.
  static RngStream derive(std::uint64_t seed, std::uint64_t experiment,
                          std::uint64_t replicate) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(experiment),
                      static_cast<std::uint32_t>(experiment >> 32),
                      static_cast<std::uint32_t>(replicate),
                      static_cast<std::uint32_t>(replicate >> 32)};
    RngStream out(0);
    out.engine_.seed(seq);
    return out;
  }

  // Child stream keyed by `tag`, drawn from this stream's next output.
  RngStream split(std::uint64_t tag) { return derive(engine_(), tag, 0); }

  // Uniform on [0, 1).
  double uniform() { return unit_(engine_); }
  // Uniform on (0, 1]; safe inside log().
  double uniform_pos() { return 1.0 - unit_(engine_); }
  double normal() { return normal_(engine_); }
  double exponential() { return exp_(engine_); }
  double gamma(double shape) {
    return std::gamma_distribution<double>(shape, 1.0)(engine_);
  }
  double student_t(double df) {
    const double z = normal();
    return z / std::sqrt(2.0 * gamma(0.5 * df) / df);
  }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  bool bernoulli(double p) { return uniform() < p; }

  Engine& engine() { return engine_; }

 private:
  Engine engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::exponential_distribution<double> exp_{1.0};
};

}  // namespace grandcouple
