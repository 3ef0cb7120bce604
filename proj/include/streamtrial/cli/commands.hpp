/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#ifndef STREAMTRIAL_CLI_COMMANDS_HPP_
#define STREAMTRIAL_CLI_COMMANDS_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace streamtrial::cli {

enum ExitCode : int {
    kOk = 0,
    kEnvironment = 1,
    kValidation = 2,
    kVariantFailure = 3,
    kNoWinner = 4,
};

/// Default output root when --out is not given.
inline constexpr const char* kOutEnv = "STREAMTRIAL_OUT";

/// Entry point of the streamtrial tool. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}// namespace streamtrial::cli

#endif// STREAMTRIAL_CLI_COMMANDS_HPP_
