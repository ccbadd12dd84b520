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

#include "factvae/data.hpp"

#include <fstream>

#include "factvae/rng.hpp"
#include "factvae/textio.hpp"

namespace factvae {

namespace {

constexpr const char* kDatasetMagic = "FVD1";

void validate(const BarsConfig& c) {
  require(c.n >= 1, "generate_bars: n must be >= 1");
  require(c.size >= 4 && c.size % 2 == 0,
          "generate_bars: size must be even and >= 4");
  require(c.p_row >= 0.0 && c.p_row <= 1.0,
          "generate_bars: p_row must be in [0, 1]");
  require(c.noise_std >= 0.0, "generate_bars: noise_std must be >= 0");
  require(c.p_miss >= 0.0 && c.p_miss < 1.0,
          "generate_bars: p_miss must be in [0, 1)");
}

}  // namespace

GroupedDataset generate_bars(const BarsConfig& config) {
  validate(config);
  const Index side = config.size;
  const Index half = side / 2;
  const Index quad_dim = half * half;

  GroupedDataset dataset;
  dataset.specs = {{"TL", quad_dim}, {"TR", quad_dim}, {"BL", quad_dim},
                   {"BR", quad_dim}};

  SeededRng rng(config.seed);
  Matrix image(side, side);
  for (int i = 0; i < config.n; ++i) {
    for (Index r = 0; r < side; ++r) {
      const double bar = rng.uniform() < config.p_row ? 1.0 : 0.0;
      image.row(r).setConstant(bar);
    }
    for (Index r = 0; r < side; ++r) {
      for (Index c = 0; c < side; ++c) {
        image(r, c) += config.noise_std * rng.normal();
      }
    }

    bool miss[4];
    do {
      for (bool& flag : miss) flag = rng.uniform() < config.p_miss;
    } while (miss[0] && miss[1] && miss[2] && miss[3]);

    const Index row0[4] = {0, 0, half, half};
    const Index col0[4] = {0, half, 0, half};
    GroupedSample sample;
    sample.values.resize(4);
    sample.present.resize(4);
    for (int q = 0; q < 4; ++q) {
      sample.present[static_cast<size_t>(q)] = miss[q] ? 0 : 1;
      if (miss[q]) continue;
      Vector v(quad_dim);
      for (Index r = 0; r < half; ++r) {
        for (Index c = 0; c < half; ++c) {
          v[r * half + c] = image(row0[q] + r, col0[q] + c);
        }
      }
      sample.values[static_cast<size_t>(q)] = std::move(v);
    }
    dataset.samples.push_back(std::move(sample));
  }
  return dataset;
}

void write_dataset(const GroupedDataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot open '" + path + "' for writing");
  out << kDatasetMagic << "\n";
  for (size_t g = 0; g < dataset.specs.size(); ++g) {
    if (g > 0) out << ",";
    out << dataset.specs[g].name << ":" << dataset.specs[g].dim;
  }
  out << "\n";
  for (const GroupedSample& sample : dataset.samples) {
    for (size_t g = 0; g < dataset.specs.size(); ++g) {
      if (g > 0) out << "|";
      if (!sample.present[g]) {
        out << "*";
        continue;
      }
      const Vector& v = sample.values[g];
      for (Index i = 0; i < v.size(); ++i) {
        if (i > 0) out << ",";
        out << format_double(v[i], 17);
      }
    }
    out << "\n";
  }
  if (!out) throw FileError("failed writing dataset to '" + path + "'");
}

GroupedDataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open dataset file '" + path + "'");

  GroupedDataset dataset;
  std::string line;
  long line_no = 0;

  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    return true;
  };

  if (!next_line() || line != kDatasetMagic) {
    throw ParseError("line 1: not an FVD1 dataset file: '" + path + "'");
  }
  if (!next_line() || line.empty()) {
    throw ParseError("line 2: expected group spec line");
  }
  for (std::string_view field : split(line, ',')) {
    const auto parts = split(field, ':');
    if (parts.size() != 2 || parts[0].empty()) {
      throw ParseError("line 2: malformed group spec '" + std::string(field) +
                       "'");
    }
    const double dim = parse_double_token(parts[1], 2);
    if (dim < 1 || dim != static_cast<double>(static_cast<Index>(dim))) {
      throw ParseError("line 2: bad group dimension in '" +
                       std::string(field) + "'");
    }
    dataset.specs.push_back(
        GroupSpec{std::string(parts[0]), static_cast<Index>(dim)});
  }

  while (next_line()) {
    if (line.empty()) continue;  // tolerate a trailing blank line
    const auto fields = split(line, '|');
    if (fields.size() != dataset.specs.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(dataset.specs.size()) +
                       " groups, found " + std::to_string(fields.size()));
    }
    GroupedSample sample;
    sample.values.resize(dataset.specs.size());
    sample.present.assign(dataset.specs.size(), 0);
    bool any_present = false;
    for (size_t g = 0; g < fields.size(); ++g) {
      if (fields[g] == "*") continue;
      const auto tokens = split(fields[g], ',');
      if (static_cast<Index>(tokens.size()) != dataset.specs[g].dim) {
        throw ParseError("line " + std::to_string(line_no) + ": group '" +
                         dataset.specs[g].name + "' expects " +
                         std::to_string(dataset.specs[g].dim) +
                         " values, found " + std::to_string(tokens.size()));
      }
      Vector v(dataset.specs[g].dim);
      for (size_t i = 0; i < tokens.size(); ++i) {
        v[static_cast<Index>(i)] = parse_double_token(tokens[i], line_no);
      }
      sample.values[g] = std::move(v);
      sample.present[g] = 1;
      any_present = true;
    }
    if (!any_present) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": sample has no present groups");
    }
    dataset.samples.push_back(std::move(sample));
  }
  return dataset;
}

}  // namespace factvae
