#pragma once

#include <cstdint>
#include <span>

namespace cpnlp {

/// SplitMix64 (Steele, Lea & Flood 2014). Every random decision in the
/// project (splits, masking, synthetic data) is drawn from this generator so
/// results reproduce bit-for-bit across platforms and standard libraries.
///
/// State update: s += 0x9e3779b97f4a7c15; output is the finalizer
///   z = (s ^ (s >> 30)) * 0xbf58476d1ce4e5b9
///   z = (z ^ (z >> 27)) * 0x94d049bb133111eb
///   z ^ (z >> 31)
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  /// Uniform integer in [0, bound) by rejection on the top of the range;
  /// unbiased. bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via Box-Muller (no cached second variate).
  double normal();

 private:
  std::uint64_t state_;
};

/// Derive an independent stream seed from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::span<T> items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace cpnlp
