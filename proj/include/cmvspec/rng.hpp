#pragma once

#include <cstdint>
#include <random>

namespace cmvspec {

inline std::uint64_t splitmix64(std::uint64_t v) {
  v += 0x9e3779b97f4a7c15ULL;
  v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
  v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
  return v ^ (v >> 31);
}

// Independent stream for work item `index` under a run seed.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t index) : eng_(splitmix64(seed ^ splitmix64(index + 1))) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t bits() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace cmvspec
