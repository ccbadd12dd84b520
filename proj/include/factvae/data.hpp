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

#ifndef FACTVAE_DATA_HPP
#define FACTVAE_DATA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "factvae/model.hpp"
#include "factvae/types.hpp"

namespace factvae {

struct GroupedDataset {
  std::vector<GroupSpec> specs;
  std::vector<GroupedSample> samples;
};

/// Synthetic horizontal-bars images: every row of an size x size image is
/// activated independently, pixel noise is added, and the four quadrants
/// become the groups TL, TR, BL, BR (each possibly removed).
struct BarsConfig {
  int n = 2000;             // number of images
  int size = 8;             // image side, even, >= 4
  double p_row = 0.25;      // row activation probability
  double noise_std = 0.05;  // pixel noise standard deviation
  double p_miss = 0.25;     // per-quadrant removal probability, in [0, 1)
  std::uint64_t seed = 0;
};

/// Deterministic given the seed. Per image the draw order is: size row
/// activations, size*size noise values (row-major), then the four removal
/// flags (TL, TR, BL, BR), resampled as a whole while all four come up
/// missing. Quadrant vectors are row-major within the quadrant.
GroupedDataset generate_bars(const BarsConfig& config);

/// Text format: line 1 `FVD1`; line 2 comma-separated name:dim pairs; then
/// one line per sample with groups separated by `|`, each group either `*`
/// (missing) or comma-separated decimals (17 significant digits). Lossless
/// round trip at 64-bit precision.
void write_dataset(const GroupedDataset& dataset, const std::string& path);
GroupedDataset read_dataset(const std::string& path);

}  // namespace factvae

#endif  // FACTVAE_DATA_HPP
