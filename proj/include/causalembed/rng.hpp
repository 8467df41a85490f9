#pragma once

#include <cstdint>
#include <vector>

namespace causalembed {

// Stream tags carving independent substreams out of one base seed. A stream
// tag plus a seed fully determines the generated sequence, so any consumer
// can be re-run in isolation and reproduce its draws bit for bit.
namespace streams {
inline constexpr std::uint64_t kDataset = 1;
inline constexpr std::uint64_t kStage1Shuffle = 2;
inline constexpr std::uint64_t kStage2Shuffle = 3;
inline constexpr std::uint64_t kGroundTruthMc = 4;
inline constexpr std::uint64_t kToySpec = 5;
inline constexpr std::uint64_t kBaselineInit = 6;

// Feature-map initialisation streams are keyed by the factor's role so that
// the same role gets the same initial weights regardless of how many factors
// a model has (see stage1 for why that matters).
inline constexpr std::uint64_t kStage1InitBase = 16;
inline constexpr std::uint64_t kStage2InitBase = 32;
}  // namespace streams

// Philox4x32-10 counter-based generator. Counter-based generation gives
// platform-independent, seekable streams: (seed, stream) identifies a
// sequence and the draw index alone identifies a value within it.
//
// Word layout: key = seed split into two 32-bit words; counter words 2..3
// hold the stream tag; counter words 0..1 count emitted blocks.
class PhiloxRng {
 public:
  PhiloxRng(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller; consumes exactly two 64-bit draws.
  double normal();
  double normal(double mean, double stddev);

  // Fisher-Yates shuffle; draw order is one bounded integer per position.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j =
          static_cast<std::size_t>(next_u64() % static_cast<std::uint64_t>(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  // Raw 4x32 block for the given key/counter; exposed for known-answer tests.
  static void block(const std::uint32_t key[2], const std::uint32_t ctr[4],
                    std::uint32_t out[4]);

 private:
  void refill();

  std::uint32_t key_[2];
  std::uint32_t ctr_[4];
  std::uint32_t buffer_[4];
  int buffered_ = 0;  // unread words remaining in buffer_
};

}  // namespace causalembed
