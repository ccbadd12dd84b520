// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#ifndef FACTVAE_RNG_HPP
#define FACTVAE_RNG_HPP

#include <cstdint>

#include "factvae/types.hpp"

namespace factvae {

/// Counter-based pseudo-random generator.
///
/// The n-th raw draw is the splitmix64 finalizer applied to
/// seed + n * 0x9E3779B97F4A7C15. The full state is (seed, counter), so a
/// stream is reproducible from the seed alone on any platform, and two
/// generators with the same seed produce identical streams regardless of
/// which helper (uniform, normal, ...) consumed the draws.
///
/// Single-owner: concurrent draws from one instance are not supported.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed) {}

  /// Next raw 64-bit draw; advances the counter by one.
  std::uint64_t next_u64();

  /// Uniform on [0, 1), 53-bit resolution. One raw draw.
  double uniform();

  /// Standard normal via Box-Muller; always consumes exactly two raw draws.
  double normal();

  /// Vector of n independent standard normals.
  Vector normal_vector(Index n);

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Independent stream derived from (seed, stream_id); deterministic.
  static SeededRng derive(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace factvae

#endif  // FACTVAE_RNG_HPP
