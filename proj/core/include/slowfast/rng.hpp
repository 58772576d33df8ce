#pragma once

#include <cstdint>
#include <random>

namespace slowfast {

std::uint64_t splitmix64(std::uint64_t x);

// Per-run stream derived from (master seed, run index).
class Rng {
 public:
  explicit Rng(std::uint64_t master_seed, std::uint64_t stream = 0);

  double uniform() { return uniform_(engine_); }
  double normal() { return normal_(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  double exponential(double rate) { return std::exponential_distribution<double>(rate)(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace slowfast
