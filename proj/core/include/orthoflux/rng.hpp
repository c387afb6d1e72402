// Copyright 2026 The OrthoFlux Authors
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

namespace orthoflux {

/// Philox4x32-10 counter-based block cipher. Maps a 128-bit counter and a
/// 64-bit key to 128 pseudo-random bits; no internal state.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key) noexcept;
};

/// Draw domains keep independent uses of one (seed, stream) pair apart.
enum class StreamDomain : std::uint32_t {
  dynamics = 0,
  initial_condition = 1,
  probes = 2,
  models = 3,
};

/// A sequential view over the Philox output for one (seed, stream, domain)
/// triple. Two streams with different stream ids never share counters, so
/// per-path streams are stable when the number of paths changes.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream,
                StreamDomain domain = StreamDomain::dynamics) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept;

  /// Position the stream at an absolute block index.
  void seek(std::uint64_t block) noexcept;
  std::uint64_t block_index() const noexcept { return block_; }

 private:
  void refill() noexcept;

  Philox4x32::Key key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace orthoflux
