#include "cfd/random.hpp"

namespace cfd {

void Rng::reseed(std::uint64_t seed) {
  std::uint64_t z = seed;
  for (auto& s : s_) {
    z += 0x9e3779b97f4a7c15ULL;
    s = mix64(z);
  }
}

}  // namespace cfd
