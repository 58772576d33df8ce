#include "slowfast/rng.hpp"

namespace slowfast {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t master_seed, std::uint64_t stream)
    : engine_(splitmix64(splitmix64(master_seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

}  // namespace slowfast
