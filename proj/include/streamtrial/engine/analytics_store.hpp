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

#ifndef STREAMTRIAL_ENGINE_ANALYTICS_STORE_HPP_
#define STREAMTRIAL_ENGINE_ANALYTICS_STORE_HPP_

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace streamtrial::engine {

/// Vehicle count of one type inside one tumbling window.
struct WindowResult {
    std::int64_t window_start_ms = 0;
    std::int64_t window_end_ms = 0;
    std::string vehicle_type;
    std::int64_t count = 0;
    std::int64_t emit_time_ms = 0;
    int sink_index = 0;
    bool operator==(const WindowResult&) const = default;
};

/// Identity used when comparing stores; emit time and sink are delivery details.
using ResultIdentity = std::tuple<std::int64_t, std::int64_t, std::string, std::int64_t>;
ResultIdentity identity_of(const WindowResult& r);

/// window_start_ms,window_end_ms,vehicle_type,count,emit_time_ms,sink_index
std::string to_csv_line(const WindowResult& r);
/// Throws ConfigError when malformed.
WindowResult parse_result_line(std::string_view line);

/// Append-only sink table of one pipeline. Thread-safe.
class AnalyticsStore {
  public:
    void append(WindowResult result);
    std::vector<WindowResult> rows() const;
    std::size_t size() const;
    bool contains(const ResultIdentity& id) const;
    std::set<ResultIdentity> identities() const;

    /// One to_csv_line per row, in insertion order. Returns rows written.
    std::size_t dump(std::ostream& out) const;
    /// Appends every line of a dump. Returns rows read.
    std::size_t load(std::istream& in);

  private:
    mutable std::mutex mutex_;
    std::vector<WindowResult> rows_;
    std::multiset<ResultIdentity> ids_;
};

}// namespace streamtrial::engine

#endif// STREAMTRIAL_ENGINE_ANALYTICS_STORE_HPP_
