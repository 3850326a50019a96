#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include <Eigen/Core>

namespace lrll {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Each output
/// block is a pure function of (key, counter), which makes streams
/// reproducible across implementations and trivially splittable.
struct Philox4x32 {
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block generate(Block counter, Key key);
};

inline constexpr std::string_view kRngAlgorithm = "philox4x32-10";

/// A sequential view over one Philox stream. The 64-bit seed is the key; the
/// upper half of the counter holds the stream id and the lower half the block
/// position. Doubles use 53 bits built from two consecutive words; normals use
/// the cosine branch of Box-Muller (one normal per two uniforms).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  /// Independent child stream; depends only on (seed, stream_id, child).
  RandomStream split(std::uint64_t child) const;

  std::uint32_t next_u32();
  double uniform();  // [0, 1)
  double normal();
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t position_ = 0;
  Philox4x32::Block buffer_{};
  int buffered_ = 0;
};

}  // namespace lrll
