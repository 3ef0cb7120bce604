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

#ifndef STREAMTRIAL_COMMON_ERROR_HPP_
#define STREAMTRIAL_COMMON_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace streamtrial {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or precondition on a setup call (duplicate names, zero partitions, ...).
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Lookup of a topic, group, partition, pipeline or series that does not exist.
class NotFound : public Error {
  public:
    using Error::Error;
};

/// Simulated time moved backwards or skipped a step.
class ClockViolation : public Error {
  public:
    using Error::Error;
};

/// Request outside the valid range of a stateful resource (offset beyond log end, ...).
class RangeError : public Error {
  public:
    using Error::Error;
};

/// Schema validation failure carrying every violation found, each prefixed with its key path.
class ValidationError : public Error {
  public:
    explicit ValidationError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const { return violations_; }

  private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out;
        for (const auto& s : v) {
            if (!out.empty()) {
                out += "; ";
            }
            out += s;
        }
        return out;
    }
    std::vector<std::string> violations_;
};

/// Malformed row in an imported file. `row()` is 1-based and counts the header as row 1.
class ParseError : public Error {
  public:
    ParseError(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const { return row_; }

  private:
    std::size_t row_;
};

}// namespace streamtrial

#endif// STREAMTRIAL_COMMON_ERROR_HPP_
