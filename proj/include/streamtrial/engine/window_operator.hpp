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

#ifndef STREAMTRIAL_ENGINE_WINDOW_OPERATOR_HPP_
#define STREAMTRIAL_ENGINE_WINDOW_OPERATOR_HPP_

#include <streamtrial/engine/analytics_store.hpp>

#include <cstdint>
#include <limits>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace streamtrial::engine {

/// Window task owning a vehicle type: FNV-1a 64 of the type modulo parallelism.
int task_for_type(std::string_view vehicle_type, int parallelism);

/// Type and event time pulled out of a trace-line payload without parsing the other fields.
struct PayloadKey {
    std::string_view vehicle_type;
    std::int64_t event_time_ms = 0;
};
/// Throws ConfigError when the payload is not a trace line.
PayloadKey extract_payload_key(std::string_view payload);

/// Keyed tumbling count windows over event time, split over `parallelism` tasks.
/// The watermark is the largest event time seen; a window fires once the watermark reaches its end.
class WindowOperator {
  public:
    struct TaskState {
        std::map<std::int64_t, std::map<std::string, std::int64_t, std::less<>>> windows;
        std::int64_t records = 0;
        bool operator==(const TaskState&) const = default;
    };
    struct Snapshot {
        std::vector<TaskState> tasks;
        std::int64_t watermark_ms = std::numeric_limits<std::int64_t>::min();
        std::int64_t late_records = 0;
        bool operator==(const Snapshot&) const = default;
    };

    WindowOperator(int parallelism, std::int64_t window_length_ms);

    /// Adds one record; fired windows are appended to `fired` stamped with `emit_time_ms`.
    void apply(std::string_view vehicle_type, std::int64_t event_time_ms, std::int64_t emit_time_ms,
               std::vector<WindowResult>& fired);
    /// Fires everything still open. Emit time is max(emit_time_ms, window end).
    void close_all(std::int64_t emit_time_ms, std::vector<WindowResult>& fired);

    Snapshot snapshot() const;
    void restore(const Snapshot& snapshot);
    void clear();

    /// Records held in open windows, total and per task.
    std::int64_t state_records() const { return total_records_; }
    std::int64_t state_records(int task) const { return state_.tasks.at(task).records; }
    std::int64_t late_records() const { return state_.late_records; }
    std::int64_t watermark_ms() const { return state_.watermark_ms; }
    int parallelism() const { return parallelism_; }

    /// FNV-1a 64 over the full operator state.
    std::uint64_t digest() const;

    /// task_for_type, memoized.
    int task_of(std::string_view type);

  private:
    void fire_until(std::int64_t watermark, std::int64_t emit_time_ms, std::vector<WindowResult>& fired);

    int parallelism_;
    std::int64_t window_length_ms_;
    Snapshot state_;
    std::int64_t total_records_ = 0;
    std::unordered_map<std::string, int> task_cache_;
};

}// namespace streamtrial::engine

#endif// STREAMTRIAL_ENGINE_WINDOW_OPERATOR_HPP_
