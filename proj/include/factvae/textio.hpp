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

#ifndef FACTVAE_TEXTIO_HPP
#define FACTVAE_TEXTIO_HPP

#include <string>
#include <string_view>
#include <vector>

#include "factvae/types.hpp"

namespace factvae {

/// %.{digits}g rendering; digits = 17 round-trips doubles exactly.
std::string format_double(double value, int significant_digits);

/// Parses a full token as a double; ParseError mentioning `line` otherwise.
double parse_double_token(std::string_view token, long line);

/// Splits on a single-character separator; keeps empty fields.
std::vector<std::string_view> split(std::string_view text, char sep);

}  // namespace factvae

#endif  // FACTVAE_TEXTIO_HPP
