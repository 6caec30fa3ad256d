// Copyright 2026 The psde Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace psde {

/// Counter-based random stream (Philox4x32-10).
///
/// A stream is identified by (master_seed, stream_id, substream). The output
/// is a pure function of that identity and the block counter, so any stream
/// can be recreated on any worker and replayed bit-for-bit. Distinct
/// stream ids occupy disjoint counter ranges under the same key; distinct
/// substreams use distinct keys.
///
/// Satisfies UniformRandomBitGenerator with 64-bit output, but the library
/// never relies on std:: distributions (their algorithms are
/// implementation-defined); use the member samplers below.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id,
            std::uint32_t substream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform();
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  /// Exponential with the given rate (> 0).
  double exponential(double rate);
  /// Poisson with the given mean (>= 0).
  std::uint64_t poisson(double mean);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Independent child stream sharing (master_seed, stream_id); used to give
  /// each noise source of a path its own sequence.
  [[nodiscard]] RngStream substream(std::uint32_t purpose) const;

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint32_t substream_index() const { return substream_; }
  /// Number of 64-bit words consumed so far.
  std::uint64_t position() const { return block_ * 2 + (2 - remaining_); }

 private:
  void refill();

  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::uint32_t substream_;
  std::array<std::uint32_t, 2> key_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int remaining_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Substream tags used by the simulator; kept here so every module agrees.
namespace streams {
inline constexpr std::uint32_t kBrownian = 0;
inline constexpr std::uint32_t kSmallJumps = 1;
inline constexpr std::uint32_t kLargeJumps = 2;
inline constexpr std::uint32_t kBridge = 3;
inline constexpr std::uint32_t kAnalysis = 7;
}  // namespace streams

}  // namespace psde
