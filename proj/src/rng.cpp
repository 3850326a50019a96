#include "lrll/rng.hpp"

#include <cmath>
#include <numbers>

namespace lrll {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t product = std::uint64_t{a} * std::uint64_t{b};
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

Philox4x32::Block Philox4x32::generate(Block ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {}

RandomStream RandomStream::split(std::uint64_t child) const {
  return RandomStream(seed_, splitmix64(splitmix64(stream_id_) ^ child));
}

std::uint32_t RandomStream::next_u32() {
  if (buffered_ == 0) {
    const Philox4x32::Block counter = {
        static_cast<std::uint32_t>(position_),
        static_cast<std::uint32_t>(position_ >> 32),
        static_cast<std::uint32_t>(stream_id_),
        static_cast<std::uint32_t>(stream_id_ >> 32)};
    const Philox4x32::Key key = {static_cast<std::uint32_t>(seed_),
                                 static_cast<std::uint32_t>(seed_ >> 32)};
    buffer_ = Philox4x32::generate(counter, key);
    buffered_ = 4;
    ++position_;
  }
  return buffer_[4 - buffered_--];
}

double RandomStream::uniform() {
  const std::uint64_t hi = next_u32() >> 5;  // 27 bits
  const std::uint64_t lo = next_u32() >> 6;  // 26 bits
  return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
}

double RandomStream::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::MatrixXd RandomStream::normal_matrix(Eigen::Index rows,
                                            Eigen::Index cols) {
  Eigen::MatrixXd out(rows, cols);
  // Row-major fill order so the stream layout does not depend on storage.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal();
  }
  return out;
}

}  // namespace lrll
