#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace cpf {

/// Deterministic random stream.
///
/// Every stochastic stage (split sampling, weight init, dropout) draws from
/// its own stream derived from a master seed and a fixed label, so changing
/// one stage never perturbs the draws of another. Sampling helpers avoid the
/// implementation-defined std distributions to keep results identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Stream for `label` under `master_seed`.
  static Rng stream(std::uint64_t master_seed, std::string_view label);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// FNV-1a, used to turn stream labels into seed material.
std::uint64_t fnv1a(std::string_view text);

}  // namespace cpf
