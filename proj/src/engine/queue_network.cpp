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
#include <streamtrial/engine/queue_network.hpp>

#include <algorithm>
#include <cmath>
#include <utility>

namespace streamtrial::engine {

QueueNetwork::QueueNetwork(Params params) : params_(std::move(params)) {
    if (params_.tasks < 1 || static_cast<int>(params_.task_worker.size()) != params_.tasks) {
        throw ConfigError("queue network: task_worker must have one entry per task");
    }
    if (params_.bin_ms <= 0) {
        throw ConfigError("queue network: bin_ms must be positive");
    }
    for (int w : params_.task_worker) {
        if (w < 0 || w >= params_.worker_count) {
            throw ConfigError("queue network: task hosted on unknown worker");
        }
    }
    servers_.resize(static_cast<std::size_t>(2 * params_.tasks));
    for (int s = 0; s < server_count(); ++s) {
        auto& server = servers_[static_cast<std::size_t>(s)];
        server.worker = server_worker(s);
        server.source = s % 2 == 0;
        server.service_ms = server.source ? params_.source_service_ms : params_.window_service_ms;
        server.free_at = static_cast<double>(params_.origin_ms);
    }
    worker_blocks_.resize(static_cast<std::size_t>(params_.worker_count));
    worker_slowdowns_.resize(static_cast<std::size_t>(params_.worker_count));
}

void QueueNetwork::add_merged(std::vector<Interval>& list, double from, double to) {
    if (to <= from) {
        return;
    }
    if (!list.empty() && from < list.back().from) {
        throw ConfigError("queue network: blocks must be added in start order");
    }
    if (!list.empty() && from <= list.back().to) {
        list.back().to = std::max(list.back().to, to);
    } else {
        list.push_back({from, to, 1.0});
    }
}

void QueueNetwork::add_global_block(double from_ms, double to_ms) { add_merged(global_blocks_, from_ms, to_ms); }

void QueueNetwork::add_worker_block(int worker, double from_ms, double to_ms) {
    add_merged(worker_blocks_.at(static_cast<std::size_t>(worker)), from_ms, to_ms);
}

void QueueNetwork::add_worker_slowdown(int worker, double from_ms, double to_ms, double factor) {
    if (factor <= 0.0) {
        throw ConfigError("queue network: slowdown factor must be positive");
    }
    if (to_ms > from_ms) {
        worker_slowdowns_.at(static_cast<std::size_t>(worker)).push_back({from_ms, to_ms, factor});
    }
}

void QueueNetwork::inject_record(double arrival_ms, int source_task, int window_task) {
    events_.push({arrival_ms, seq_++, arrival_ms, 2 * source_task, window_task, Kind::kRecord});
}

void QueueNetwork::inject_marker(double arrival_ms, int source_task) {
    events_.push({arrival_ms, seq_++, arrival_ms, 2 * source_task, source_task, Kind::kMarker});
}

double QueueNetwork::earliest_start(Server& s, double t) const {
    const auto& wblocks = worker_blocks_[static_cast<std::size_t>(s.worker)];
    for (bool moved = true; moved;) {
        moved = false;
        while (s.global_cursor < global_blocks_.size() && global_blocks_[s.global_cursor].to <= t) {
            ++s.global_cursor;
        }
        if (s.global_cursor < global_blocks_.size() && global_blocks_[s.global_cursor].from <= t) {
            t = global_blocks_[s.global_cursor].to;
            moved = true;
        }
        while (s.worker_cursor < wblocks.size() && wblocks[s.worker_cursor].to <= t) {
            ++s.worker_cursor;
        }
        if (s.worker_cursor < wblocks.size() && wblocks[s.worker_cursor].from <= t) {
            t = wblocks[s.worker_cursor].to;
            moved = true;
        }
    }
    return t;
}

double QueueNetwork::slowdown(int worker, double t) const {
    double factor = 1.0;
    for (const auto& iv : worker_slowdowns_[static_cast<std::size_t>(worker)]) {
        if (iv.from <= t && t < iv.to) {
            factor *= iv.factor;
        }
    }
    return factor;
}

TimingBin& QueueNetwork::bin_at(double t) {
    auto index = static_cast<std::int64_t>(std::floor((t - static_cast<double>(params_.origin_ms))
                                                      / static_cast<double>(params_.bin_ms)));
    index = std::max(index, first_bin_);
    while (first_bin_ + static_cast<std::int64_t>(bins_.size()) <= index) {
        TimingBin b;
        const auto tasks = static_cast<std::size_t>(params_.tasks);
        b.latency_sum.assign(tasks, 0.0);
        b.latency_count.assign(tasks, 0);
        b.source_starts.assign(tasks, 0);
        b.worker_services.assign(static_cast<std::size_t>(params_.worker_count), 0);
        b.arrivals.assign(2 * tasks, 0);
        b.starts.assign(2 * tasks, 0);
        bins_.push_back(std::move(b));
    }
    return bins_[static_cast<std::size_t>(index - first_bin_)];
}

bool QueueNetwork::serve(int server, const Item& item, double horizon) {
    auto& s = servers_[static_cast<std::size_t>(server)];
    const double start = earliest_start(s, std::max(item.time, s.free_at));
    if (start >= horizon) {
        return false;
    }
    const bool record = item.kind == Kind::kRecord;
    const double service = record ? s.service_ms * slowdown(s.worker, start) : 0.0;
    s.free_at = start + service;
    const double done = s.free_at + params_.hop_ms;
    if (record) {
        auto& bin = bin_at(start);
        ++bin.starts[static_cast<std::size_t>(server)];
        ++bin.worker_services[static_cast<std::size_t>(s.worker)];
        if (s.source) {
            ++bin.source_starts[static_cast<std::size_t>(server / 2)];
        }
    }
    if (s.source) {
        Item next = item;
        next.time = done;
        next.seq = seq_++;
        next.server = 2 * item.window_task + 1;
        events_.push(next);
    } else if (!record) {
        const double sink_time = done + params_.hop_ms;
        auto& bin = bin_at(sink_time);
        const auto sink = static_cast<std::size_t>(server / 2);
        bin.latency_sum[sink] += sink_time - item.origin;
        ++bin.latency_count[sink];
        if (params_.record_samples) {
            samples_.push_back({item.origin, sink_time, server / 2});
        }
    }
    return true;
}

void QueueNetwork::run_until(double horizon_ms) {
    for (int id = 0; id < server_count(); ++id) {
        auto& waiting = servers_[static_cast<std::size_t>(id)].waiting;
        while (!waiting.empty() && serve(id, waiting.front(), horizon_ms)) {
            waiting.pop_front();
        }
    }
    while (!events_.empty() && events_.top().time < horizon_ms) {
        const Item item = events_.top();
        events_.pop();
        if (item.kind == Kind::kRecord) {
            ++bin_at(item.time).arrivals[static_cast<std::size_t>(item.server)];
        }
        auto& waiting = servers_[static_cast<std::size_t>(item.server)].waiting;
        if (!waiting.empty() || !serve(item.server, item, horizon_ms)) {
            waiting.push_back(item);
        }
    }
}

TimingBin QueueNetwork::take_bin() {
    bin_at(static_cast<double>(params_.origin_ms + first_bin_ * params_.bin_ms));
    TimingBin b = std::move(bins_.front());
    bins_.pop_front();
    ++first_bin_;
    return b;
}

std::vector<LatencySample> QueueNetwork::take_samples() { return std::exchange(samples_, {}); }

}// namespace streamtrial::engine
