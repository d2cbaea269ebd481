#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace tagrank {

std::uint64_t fnv1a64(std::string_view bytes);

// One step of the SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x);

// Seeds for sub-streams. Pure functions of their arguments, identical on
// every platform.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Sampling helpers over std::mt19937_64, whose output sequence is fixed by
// the standard. The standard distributions are not, so bounded draws and
// shuffles are done here by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  // Uniform in [lo, hi].
  std::size_t between(std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(below(hi - lo + 1));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // `count` distinct elements of `pool`, keeping pool order.
  template <typename T>
  std::vector<T> subset(const std::vector<T>& pool, std::size_t count) {
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    shuffle(idx);
    idx.resize(count < idx.size() ? count : idx.size());
    std::vector<bool> keep(pool.size(), false);
    for (auto i : idx) keep[i] = true;
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (keep[i]) out.push_back(pool[i]);
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tagrank
