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

#include <streamtrial/common/error.hpp>
#include <streamtrial/common/hash.hpp>
#include <streamtrial/common/text.hpp>
#include <streamtrial/engine/window_operator.hpp>

#include <algorithm>

namespace streamtrial::engine {

int task_for_type(std::string_view vehicle_type, int parallelism) {
    return static_cast<int>(fnv1a64(vehicle_type) % static_cast<std::uint64_t>(parallelism));
}

PayloadKey extract_payload_key(std::string_view payload) {
    const auto first = payload.find(',');
    const auto second = first == std::string_view::npos ? first : payload.find(',', first + 1);
    const auto last = payload.rfind(',');
    if (second == std::string_view::npos || last <= second) {
        throw ConfigError("payload is not a trace line");
    }
    const auto time = parse_int64(payload.substr(last + 1));
    if (!time || second == first + 1) {
        throw ConfigError("payload is not a trace line");
    }
    return {payload.substr(first + 1, second - first - 1), *time};
}

WindowOperator::WindowOperator(int parallelism, std::int64_t window_length_ms)
    : parallelism_(parallelism), window_length_ms_(window_length_ms) {
    if (parallelism < 1 || window_length_ms <= 0) {
        throw ConfigError("window operator: parallelism and window length must be positive");
    }
    state_.tasks.resize(static_cast<std::size_t>(parallelism));
}

int WindowOperator::task_of(std::string_view type) {
    auto it = task_cache_.find(std::string(type));
    if (it == task_cache_.end()) {
        it = task_cache_.emplace(std::string(type), task_for_type(type, parallelism_)).first;
    }
    return it->second;
}

void WindowOperator::apply(std::string_view vehicle_type, std::int64_t event_time_ms, std::int64_t emit_time_ms,
                           std::vector<WindowResult>& fired) {
    const std::int64_t start = event_time_ms - (((event_time_ms % window_length_ms_) + window_length_ms_)
                                                % window_length_ms_);
    if (state_.watermark_ms != std::numeric_limits<std::int64_t>::min()
        && start + window_length_ms_ <= state_.watermark_ms) {
        ++state_.late_records;
        return;
    }
    auto& task = state_.tasks[static_cast<std::size_t>(task_of(vehicle_type))];
    auto& counts = task.windows[start];
    auto it = counts.find(vehicle_type);
    if (it == counts.end()) {
        counts.emplace(std::string(vehicle_type), 1);
    } else {
        ++it->second;
    }
    ++task.records;
    ++total_records_;
    if (event_time_ms > state_.watermark_ms) {
        state_.watermark_ms = event_time_ms;
        fire_until(event_time_ms, emit_time_ms, fired);
    }
}

void WindowOperator::fire_until(std::int64_t watermark, std::int64_t emit_time_ms, std::vector<WindowResult>& fired) {
    for (std::size_t t = 0; t < state_.tasks.size(); ++t) {
        auto& task = state_.tasks[t];
        while (!task.windows.empty() && task.windows.begin()->first + window_length_ms_ <= watermark) {
            const auto& [start, counts] = *task.windows.begin();
            for (const auto& [type, count] : counts) {
                fired.push_back({start, start + window_length_ms_, type, count,
                                 std::max(emit_time_ms, start + window_length_ms_), static_cast<int>(t)});
                task.records -= count;
                total_records_ -= count;
            }
            task.windows.erase(task.windows.begin());
        }
    }
}

void WindowOperator::close_all(std::int64_t emit_time_ms, std::vector<WindowResult>& fired) {
    fire_until(std::numeric_limits<std::int64_t>::max(), emit_time_ms, fired);
}

WindowOperator::Snapshot WindowOperator::snapshot() const { return state_; }

void WindowOperator::restore(const Snapshot& snapshot) {
    if (snapshot.tasks.size() != state_.tasks.size()) {
        throw ConfigError("window operator: snapshot parallelism mismatch");
    }
    state_ = snapshot;
    total_records_ = 0;
    for (const auto& t : state_.tasks) {
        total_records_ += t.records;
    }
}

void WindowOperator::clear() {
    state_ = Snapshot{};
    state_.tasks.resize(static_cast<std::size_t>(parallelism_));
    total_records_ = 0;
}

std::uint64_t WindowOperator::digest() const {
    Fnv1a64 h;
    h.update_u64(static_cast<std::uint64_t>(state_.watermark_ms));
    h.update_u64(static_cast<std::uint64_t>(state_.late_records));
    for (const auto& task : state_.tasks) {
        h.update_u64(task.windows.size());
        for (const auto& [start, counts] : task.windows) {
            h.update_u64(static_cast<std::uint64_t>(start));
            for (const auto& [type, count] : counts) {
                h.update(type);
                h.update_u64(static_cast<std::uint64_t>(count));
            }
        }
    }
    return h.digest();
}

}// namespace streamtrial::engine
