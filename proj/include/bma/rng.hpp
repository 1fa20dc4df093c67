#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace bma {

/// Tags for the last-but-one element of a stream path. Keeping them distinct
/// guarantees that, e.g., resampling and propagation never share draws.
enum class Purpose : std::uint64_t {
  kPrior = 1,
  kInitialState,
  kFilterStep,
  kResample,
  kPropagate,
  kImpute,
  kThetaResample,
  kPmmhProposal,
  kPmmhFilter,
  kPmmhAccept,
  kForecast,
  kScenario,
  kPointFilter,
  kModel,
};

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// A reproducible random stream identified by (master seed, path).
///
/// The key is a hash of the seed and every path element; the generator state
/// (xoshiro256++) is seeded from the key. `split` derives children from the
/// key only, so the draws a parent has already produced never influence a
/// child. Two streams built from identical (seed, path) produce identical
/// sequences, independent of which thread constructs them.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t master_seed) noexcept
      : key_(detail::mix64(master_seed ^ 0x6A09E667F3BCC909ULL)) {
    reseed();
  }

  [[nodiscard]] RngStream split(std::uint64_t tag) const noexcept {
    RngStream child = *this;
    child.key_ = detail::mix64(key_ ^ detail::mix64(tag + 0xD1B54A32D192ED03ULL));
    child.reseed();
    return child;
  }

  [[nodiscard]] RngStream split(Purpose purpose) const noexcept {
    return split(static_cast<std::uint64_t>(purpose));
  }

  template <class... Tags>
  [[nodiscard]] RngStream path(Tags... tags) const noexcept {
    RngStream out = *this;
    ((out = out.split(tags)), ...);
    return out;
  }

  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    const std::uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

 private:
  void reseed() noexcept {
    std::uint64_t x = key_;
    for (auto& word : s_) {
      x += 0x9E3779B97F4A7C15ULL;
      word = detail::mix64(x);
    }
  }

  std::uint64_t key_;
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace bma
