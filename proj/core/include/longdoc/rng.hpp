#ifndef LONGDOC_RNG_HPP
#define LONGDOC_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace longdoc {

// Stateless 64-bit mixer (splitmix64 finalizer). Used for feature hashing
// and for deriving per-member seeds; never depends on std::hash.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// mt19937_64 with hand-rolled draws. std::uniform_*_distribution and
// std::shuffle are implementation-defined, which would break the
// byte-identical rerun contract across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform in [0, n); n must be positive.
  std::size_t next_index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  // Fisher-Yates, fixed visitation order.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    if (values.size() < 2) return;
    for (std::size_t i = values.size() - 1; i > 0; --i) {
      std::size_t j = next_index(i + 1);
      std::swap(values[i], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace longdoc

#endif  // LONGDOC_RNG_HPP
