#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace prefforge {

// Deterministic, platform-independent randomness. Mock outputs must be a pure
// function of (seed, request contents), so std:: distributions (which differ
// across standard libraries) are not used anywhere.

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

// FNV-1a over heterogeneous fields, with a separator byte between fields so
// ("ab","c") and ("a","bc") hash differently.
class KeyHash {
 public:
  KeyHash& add(std::string_view s) {
    for (unsigned char c : s) step(c);
    step(0x1f);
    return *this;
  }
  KeyHash& add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) step(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
    step(0x1f);
    return *this;
  }
  KeyHash& add(int v) { return add(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))); }
  std::uint64_t value() const { return h_; }

 private:
  void step(unsigned char c) {
    h_ ^= c;
    h_ *= kFnvPrime;
  }
  std::uint64_t h_ = kFnvOffset;
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class DetRng {
 public:
  explicit DetRng(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  // Inclusive bounds.
  int next_int(int lo, int hi) {
    return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  bool chance(double p) { return next_unit() < p; }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[next_below(v.size())];
  }

 private:
  std::uint64_t state_;
};

}  // namespace prefforge
