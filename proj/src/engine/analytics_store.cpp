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
#include <streamtrial/common/text.hpp>
#include <streamtrial/engine/analytics_store.hpp>

#include <istream>
#include <ostream>

namespace streamtrial::engine {

ResultIdentity identity_of(const WindowResult& r) {
    return {r.window_start_ms, r.window_end_ms, r.vehicle_type, r.count};
}

std::string to_csv_line(const WindowResult& r) {
    std::string line;
    line.reserve(64);
    line += std::to_string(r.window_start_ms);
    line += ',';
    line += std::to_string(r.window_end_ms);
    line += ',';
    line += r.vehicle_type;
    line += ',';
    line += std::to_string(r.count);
    line += ',';
    line += std::to_string(r.emit_time_ms);
    line += ',';
    line += std::to_string(r.sink_index);
    return line;
}

WindowResult parse_result_line(std::string_view line) {
    const auto fields = split(line, ',');
    if (fields.size() != 6) {
        throw ConfigError("result line: expected 6 fields, got " + std::to_string(fields.size()));
    }
    auto number = [&](std::size_t i) {
        const auto v = parse_int64(fields[i]);
        if (!v) {
            throw ConfigError("result line: field " + std::to_string(i + 1) + " is not an integer");
        }
        return *v;
    };
    WindowResult r;
    r.window_start_ms = number(0);
    r.window_end_ms = number(1);
    r.vehicle_type = std::string(fields[2]);
    r.count = number(3);
    r.emit_time_ms = number(4);
    r.sink_index = static_cast<int>(number(5));
    if (r.vehicle_type.empty() || r.window_end_ms <= r.window_start_ms) {
        throw ConfigError("result line: bad window or type");
    }
    return r;
}

void AnalyticsStore::append(WindowResult result) {
    std::lock_guard lock(mutex_);
    ids_.insert(identity_of(result));
    rows_.push_back(std::move(result));
}

std::vector<WindowResult> AnalyticsStore::rows() const {
    std::lock_guard lock(mutex_);
    return rows_;
}

std::size_t AnalyticsStore::size() const {
    std::lock_guard lock(mutex_);
    return rows_.size();
}

bool AnalyticsStore::contains(const ResultIdentity& id) const {
    std::lock_guard lock(mutex_);
    return ids_.count(id) > 0;
}

std::set<ResultIdentity> AnalyticsStore::identities() const {
    std::lock_guard lock(mutex_);
    return {ids_.begin(), ids_.end()};
}

std::size_t AnalyticsStore::dump(std::ostream& out) const {
    std::lock_guard lock(mutex_);
    for (const auto& r : rows_) {
        out << to_csv_line(r) << '\n';
    }
    return rows_.size();
}

std::size_t AnalyticsStore::load(std::istream& in) {
    std::vector<WindowResult> parsed;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        parsed.push_back(parse_result_line(line));
    }
    std::lock_guard lock(mutex_);
    for (auto& r : parsed) {
        ids_.insert(identity_of(r));
        rows_.push_back(std::move(r));
    }
    return parsed.size();
}

}// namespace streamtrial::engine
