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

#ifndef FACTVAE_CLI_HPP
#define FACTVAE_CLI_HPP

namespace factvae::cli {

/// Dispatches the subcommands genbars, train, reconstruct, sparsity, eval.
/// Exit codes: 0 success, 1 usage error, 2 data/model error, 3 numerical
/// error.
int run(int argc, const char* const* argv);

}  // namespace factvae::cli

#endif  // FACTVAE_CLI_HPP
