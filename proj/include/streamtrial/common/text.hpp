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

#ifndef STREAMTRIAL_COMMON_TEXT_HPP_
#define STREAMTRIAL_COMMON_TEXT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace streamtrial {

/// Fixed-point rendering ("%.Nf"), used where byte-stable text matters more than precision.
std::string format_fixed(double value, int decimals);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_shortest(double value);

std::optional<std::int64_t> parse_int64(std::string_view text);
std::optional<double> parse_double(std::string_view text);

/// Splits on `sep`, keeping empty fields.
std::vector<std::string_view> split(std::string_view text, char sep);

}// namespace streamtrial

#endif// STREAMTRIAL_COMMON_TEXT_HPP_
