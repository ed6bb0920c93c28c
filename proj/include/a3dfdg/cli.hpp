/*
 Copyright 2026 the a3dfdg authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

     http://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef A3DFDG_CLI_HPP
#define A3DFDG_CLI_HPP

#include <string>
#include <vector>

namespace a3dfdg::cli {

// Subcommands: gen-data, build-bank, train, report. Exit codes: 0 success,
// 1 runtime failure, 2 usage or configuration error.

int runCli(int argc, const char* const* argv);

/// Test entry point; `args` excludes the program name.
int runCli(const std::vector<std::string>& args);

}  // namespace a3dfdg::cli

#endif
