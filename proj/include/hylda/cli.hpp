/* Copyright 2026 The HYLDA Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef HYLDA_CLI_HPP_
#define HYLDA_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace hylda::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command; `args` excludes the program name. Returns the exit
/// code: 0 success, 1 runtime failure, 2 usage or config error.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hylda::cli

#endif  // HYLDA_CLI_HPP_
