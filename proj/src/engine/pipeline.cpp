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
#include <streamtrial/engine/pipeline.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

namespace streamtrial::engine {

namespace {

constexpr double kNever = std::numeric_limits<double>::infinity();
constexpr std::size_t kFetchBatch = 4096;

}// namespace

const char* to_string(PipelineState state) {
    switch (state) {
        case PipelineState::kIdle: return "idle";
        case PipelineState::kRunning: return "running";
        case PipelineState::kRecovering: return "recovering";
        case PipelineState::kFailed: return "failed";
    }
    return "unknown";
}

Pipeline::Pipeline(PipelineSpec spec, bus::StreamBus& bus, metrics::MetricsStore& metrics,
                   std::shared_ptr<AnalyticsStore> store)
    : spec_(std::move(spec)),
      bus_(bus),
      metrics_(metrics, spec_.pipeline_id),
      store_(store ? std::move(store) : std::make_shared<AnalyticsStore>()),
      operator_(spec_.config.parallelism, spec_.config.window_length_ms) {
    spec_.config.validate();
    if (spec_.pipeline_id.empty() || spec_.namespace_id.empty()) {
        throw ConfigError("pipeline: pipeline_id and namespace must be non-empty");
    }
    if (!(spec_.scale_factor > 0.0)) {
        throw ConfigError("pipeline: scale_factor must be positive");
    }
    if (spec_.sample_interval_ms <= 0) {
        throw ConfigError("pipeline: sample_interval_ms must be positive");
    }
    if (bus_.has_topic(spec_.output_topic()) || bus_.has_group(spec_.namespace_id)) {
        throw ConfigError("pipeline: namespace '" + spec_.namespace_id + "' is already in use");
    }
    for (int t = 0; t < spec_.config.parallelism; ++t) {
        task_worker_.push_back(t % spec_.config.worker_count);
    }
    bus_.register_group(spec_.namespace_id);
    bus_.create_topic(spec_.output_topic(), static_cast<std::uint32_t>(spec_.config.parallelism));
}

int Pipeline::task_worker(int task) const { return task_worker_.at(static_cast<std::size_t>(task)); }

void Pipeline::begin_round(RoundContext round) {
    if (state_ == PipelineState::kFailed) {
        throw ConfigError("pipeline '" + spec_.pipeline_id + "' has failed");
    }
    if (round.end_ms <= round.start_ms) {
        throw ConfigError("round: end must be after start");
    }
    const auto& cfg = spec_.config;
    const auto tasks = static_cast<std::size_t>(cfg.parallelism);
    partitions_ = bus_.partition_count(round.input_topic);
    round_ = std::move(round);
    state_ = PipelineState::kRunning;
    clock_ms_ = round_.start_ms;
    now_ms_ = round_.start_ms;
    restarts_ = 0;

    operator_.clear();
    actions_.clear();
    pending_.clear();
    result_seq_ = 0;
    checkpoints_.clear();
    in_flight_.reset();
    next_trigger_ms_ = round_.start_ms;
    missed_checkpoints_ = 0;
    cumulative_stall_ms_ = 0.0;
    stalls_.clear();
    stall_cursor_ = 0;
    recoveries_.clear();
    recovery_end_ms_ = -kNever;
    downtime_.clear();
    downtime_cursor_ = 0;
    worker_down_until_.assign(static_cast<std::size_t>(cfg.worker_count), -kNever);

    position_.assign(partitions_, 0);
    for (std::uint32_t p = 0; p < partitions_; ++p) {
        position_[p] = bus_.committed(spec_.namespace_id, round_.input_topic, p);
    }
    applied_ = position_;
    high_water_ = position_;
    base_offsets_ = position_;
    ingest_times_.assign(partitions_, {});
    input_hash_.assign(partitions_, Fnv1a64{});
    last_completed_ = Snapshot{-1, operator_.snapshot(), base_offsets_, 0, 0};

    next_marker_ms_ = round_.start_ms;
    next_sample_ms_ = round_.start_ms + spec_.sample_interval_ms;
    sampled_state_.clear();
    queue_arrivals_.assign(2 * tasks, 0);
    queue_starts_.assign(2 * tasks, 0);

    QueueNetwork::Params params;
    params.tasks = cfg.parallelism;
    params.task_worker = task_worker_;
    params.worker_count = cfg.worker_count;
    params.source_service_ms = 1000.0 / (cfg.source_capacity_msg_s * spec_.scale_factor);
    params.window_service_ms = 1000.0 / (cfg.window_capacity_msg_s * spec_.scale_factor);
    params.hop_ms = cfg.hop_cost_ms;
    params.bin_ms = spec_.sample_interval_ms;
    params.origin_ms = round_.start_ms;
    params.record_samples = spec_.record_latency_samples;
    network_ = std::make_unique<QueueNetwork>(std::move(params));
}

void Pipeline::schedule_action(std::int64_t at_ms, Action action) {
    if (state_ == PipelineState::kIdle) {
        throw ConfigError("schedule_action before begin_round");
    }
    if (at_ms < clock_ms_ || (in_loop_ && at_ms < now_ms_)) {
        throw ClockViolation("schedule_action: " + std::to_string(at_ms) + " is in the past");
    }
    actions_.emplace(at_ms, std::move(action));
}

std::vector<Pipeline::InputRecord> Pipeline::fetch_until(std::int64_t until_ms) {
    std::vector<InputRecord> out;
    for (std::uint32_t p = 0; p < partitions_; ++p) {
        for (bool more = true; more;) {
            auto batch = bus_.fetch(spec_.namespace_id, round_.input_topic, p, kFetchBatch);
            more = batch.size() == kFetchBatch;
            for (auto& r : batch) {
                if (r.ingest_time_ms >= until_ms) {
                    more = false;
                    break;
                }
                out.push_back({r.ingest_time_ms, p, r.offset, std::move(r.payload)});
                position_[p] = r.offset + 1;
            }
            bus_.commit_offset(spec_.namespace_id, round_.input_topic, p, position_[p]);
        }
    }
    std::sort(out.begin(), out.end(), [](const InputRecord& a, const InputRecord& b) {
        return std::tie(a.ingest_ms, a.partition, a.offset) < std::tie(b.ingest_ms, b.partition, b.offset);
    });
    return out;
}

void Pipeline::apply_record(const InputRecord& rec, bool first_read) {
    const auto key = extract_payload_key(rec.payload);
    fired_.clear();
    operator_.apply(key.vehicle_type, key.event_time_ms, rec.ingest_ms, fired_);
    for (auto& r : fired_) {
        pending_.push_back({std::move(r), result_seq_++});
    }
    applied_[rec.partition] = rec.offset + 1;
    if (first_read) {
        high_water_[rec.partition] = rec.offset + 1;
        ingest_times_[rec.partition].push_back(rec.ingest_ms);
        input_hash_[rec.partition].update(rec.payload).update("\n");
        const int source = static_cast<int>(rec.partition % static_cast<std::uint32_t>(spec_.config.parallelism));
        network_->inject_record(static_cast<double>(rec.ingest_ms), source, operator_.task_of(key.vehicle_type));
    }
}

void Pipeline::advance(std::int64_t until_ms) {
    if (state_ == PipelineState::kIdle) {
        throw ConfigError("advance before begin_round");
    }
    if (until_ms < clock_ms_) {
        throw ClockViolation("advance: " + std::to_string(until_ms) + " is before pipeline clock "
                             + std::to_string(clock_ms_));
    }
    if (until_ms > round_.end_ms) {
        throw RangeError("advance: " + std::to_string(until_ms) + " is past the round end");
    }
    if (until_ms == clock_ms_) {
        return;
    }
    if (state_ == PipelineState::kFailed) {
        clock_ms_ = until_ms;
        return;
    }

    const auto chunk = fetch_until(until_ms);
    const double until = static_cast<double>(until_ms);
    std::size_t next = 0;
    in_loop_ = true;
    while (state_ != PipelineState::kFailed) {
        const double t_done = in_flight_ ? checkpoints_.back().completed_time_ms : kNever;
        const double t_sample = static_cast<double>(next_sample_ms_);
        const double t_trigger = static_cast<double>(next_trigger_ms_);
        const double t_action = actions_.empty() ? kNever : static_cast<double>(actions_.begin()->first);
        const double t_record = next < chunk.size() ? static_cast<double>(chunk[next].ingest_ms) : kNever;
        const double t = std::min({t_done, t_sample, t_trigger, t_action, t_record});
        if (t >= until) {
            break;
        }
        if (state_ == PipelineState::kRecovering && t >= recovery_end_ms_) {
            state_ = PipelineState::kRunning;
        }
        if (t_done == t) {
            on_completion();
        } else if (t_sample == t) {
            on_sample(next_sample_ms_);
            next_sample_ms_ += spec_.sample_interval_ms;
        } else if (t_trigger == t) {
            on_trigger(next_trigger_ms_);
            next_trigger_ms_ += spec_.config.checkpoint_interval_ms;
        } else if (t_action == t) {
            auto node = actions_.extract(actions_.begin());
            now_ms_ = node.key();
            node.mapped()(*this, now_ms_);
        } else {
            apply_record(chunk[next], chunk[next].offset >= high_water_[chunk[next].partition]);
            ++next;
        }
    }
    in_loop_ = false;

    if (state_ != PipelineState::kFailed) {
        if (state_ == PipelineState::kRecovering && until >= recovery_end_ms_) {
            state_ = PipelineState::kRunning;
        }
        while (next_sample_ms_ <= until_ms) {
            on_sample(next_sample_ms_);
            next_sample_ms_ += spec_.sample_interval_ms;
        }
        inject_markers(until_ms);
        network_->run_until(until);
        emit_bins(until_ms);
        if (spec_.record_latency_samples) {
            auto fresh = network_->take_samples();
            latency_samples_.insert(latency_samples_.end(), fresh.begin(), fresh.end());
        }
    }
    clock_ms_ = until_ms;
    if (!batch_.empty()) {
        metrics_.append_batch(std::exchange(batch_, {}));
    }
}

void Pipeline::end_round() {
    if (state_ == PipelineState::kIdle) {
        throw ConfigError("end_round before begin_round");
    }
    if (clock_ms_ < round_.end_ms) {
        advance(round_.end_ms);
    }
    if (state_ != PipelineState::kFailed) {
        fired_.clear();
        operator_.close_all(round_.end_ms, fired_);
        for (auto& r : fired_) {
            pending_.push_back({std::move(r), result_seq_++});
        }
        commit_results(result_seq_, round_.end_ms);
        point(metrics::series::kRoundComplete, {}, round_.end_ms, round_.index);
        state_ = PipelineState::kIdle;
    }
    actions_.clear();
    if (!batch_.empty()) {
        metrics_.append_batch(std::exchange(batch_, {}));
    }
}

void Pipeline::on_trigger(std::int64_t t) {
    if (state_ == PipelineState::kRecovering) {
        return;
    }
    if (in_flight_) {
        ++missed_checkpoints_;
        point(metrics::series::kCheckpointMissed, {}, t, 1.0);
        return;
    }
    const std::int64_t records = operator_.state_records();
    const double stall = checkpoint_stall_ms(spec_.config, records);
    const std::int64_t id = next_checkpoint_id_++;
    in_flight_ = Snapshot{id, operator_.snapshot(), applied_, result_seq_, records};
    const double tt = static_cast<double>(t);
    checkpoints_.push_back({id, t, tt + stall, stall, records, applied_, false, false});
    cumulative_stall_ms_ += stall;
    stalls_.emplace_back(tt, tt + stall);
    network_->add_global_block(tt, tt + stall);
    point(metrics::series::kCheckpointStall, {}, t, stall);
}

void Pipeline::on_completion() {
    auto& info = checkpoints_.back();
    info.completed = true;
    last_completed_ = std::move(*in_flight_);
    in_flight_.reset();
    commit_results(last_completed_.result_cut, static_cast<std::int64_t>(std::ceil(info.completed_time_ms)));
}

void Pipeline::on_sample(std::int64_t tau) {
    if (tau > round_.end_ms) {
        return;
    }
    std::vector<std::int64_t> per_task(static_cast<std::size_t>(spec_.config.parallelism));
    for (int t = 0; t < spec_.config.parallelism; ++t) {
        per_task[static_cast<std::size_t>(t)] = operator_.state_records(t);
    }
    sampled_state_.push_back(std::move(per_task));
}

void Pipeline::commit_results(std::int64_t cut, std::int64_t commit_time_ms) {
    std::size_t n = 0;
    while (n < pending_.size() && pending_[n].seq < cut) {
        publish(pending_[n].result, commit_time_ms);
        ++n;
    }
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(n));
}

void Pipeline::publish(const WindowResult& r, std::int64_t commit_time_ms) {
    bus_.publish(spec_.output_topic(), r.vehicle_type, to_csv_line(r), commit_time_ms);
    store_->append(r);
}

void Pipeline::require_now(std::int64_t now_ms, int worker) const {
    if (!in_loop_ || now_ms != now_ms_) {
        throw ClockViolation("fault injection outside the action at " + std::to_string(now_ms));
    }
    if (worker < 0 || worker >= spec_.config.worker_count) {
        throw ConfigError("unknown worker " + std::to_string(worker));
    }
}

void Pipeline::mark_failed(std::int64_t now_ms) {
    state_ = PipelineState::kFailed;
    actions_.clear();
    in_flight_.reset();
    point(metrics::series::kVariantFailed, {}, now_ms, 1.0);
}

RecoveryReport Pipeline::fail_and_recover(std::int64_t now_ms, int worker) {
    require_now(now_ms, worker);
    RecoveryReport rep;
    rep.worker = worker;
    rep.failure_time_ms = now_ms;
    if (state_ == PipelineState::kFailed) {
        rep.fatal = true;
        return rep;
    }
    const double now = static_cast<double>(now_ms);
    rep.nested = now < recovery_end_ms_;
    if (++restarts_ > spec_.config.max_restarts) {
        rep.fatal = true;
        recoveries_.push_back(rep);
        mark_failed(now_ms);
        return rep;
    }

    const std::uint64_t before = operator_.digest();
    if (in_flight_) {
        checkpoints_.back().aborted = true;
        in_flight_.reset();
    }
    rep.discarded_results = static_cast<std::int64_t>(pending_.size());
    pending_.clear();

    const Snapshot& from = last_completed_;
    operator_.restore(from.state);
    result_seq_ = from.result_cut;

    std::vector<InputRecord> replay;
    for (std::uint32_t p = 0; p < partitions_; ++p) {
        const std::int64_t target = applied_[p];
        if (target > from.offsets[p]) {
            bus_.commit_offset(spec_.namespace_id, round_.input_topic, p, from.offsets[p]);
            std::int64_t at = from.offsets[p];
            while (at < target) {
                const auto want = static_cast<std::size_t>(std::min<std::int64_t>(target - at, kFetchBatch));
                auto batch = bus_.fetch(spec_.namespace_id, round_.input_topic, p, want);
                if (batch.empty()) {
                    throw Error("replay: input log shorter than applied offsets");
                }
                for (auto& r : batch) {
                    replay.push_back({r.ingest_time_ms, p, r.offset, std::move(r.payload)});
                }
                at += static_cast<std::int64_t>(batch.size());
                bus_.commit_offset(spec_.namespace_id, round_.input_topic, p, at);
            }
            bus_.commit_offset(spec_.namespace_id, round_.input_topic, p, position_[p]);
        }
        rep.backlog_records += target - from.offsets[p];
    }
    std::sort(replay.begin(), replay.end(), [](const InputRecord& a, const InputRecord& b) {
        return std::tie(a.ingest_ms, a.partition, a.offset) < std::tie(b.ingest_ms, b.partition, b.offset);
    });
    for (const auto& r : replay) {
        apply_record(r, false);
    }
    rep.state_consistent = operator_.digest() == before;
    rep.checkpoint_id = from.checkpoint_id;
    rep.restored_records = from.state_records;
    rep.recovery_time_ms =
        recovery_time_ms(spec_.config, rep.restored_records, rep.backlog_records, spec_.scale_factor);

    const double end = now + rep.recovery_time_ms;
    recovery_end_ms_ = std::max(recovery_end_ms_, end);
    state_ = PipelineState::kRecovering;
    network_->add_global_block(now, end);
    if (!downtime_.empty() && now <= downtime_.back().second) {
        downtime_.back().second = std::max(downtime_.back().second, end);
    } else {
        downtime_.emplace_back(now, end);
    }
    worker_down_until_[static_cast<std::size_t>(worker)] = now + spec_.config.restart_delay_ms;

    const metrics::Tags tags{{"worker", std::to_string(worker)}};
    point(metrics::series::kRecoveryTime, tags, now_ms, rep.recovery_time_ms);
    point(metrics::series::kBacklog, tags, now_ms, static_cast<double>(rep.backlog_records));
    recoveries_.push_back(rep);
    return rep;
}

void Pipeline::pause_worker(std::int64_t now_ms, int worker, std::int64_t duration_ms) {
    require_now(now_ms, worker);
    network_->add_worker_block(worker, static_cast<double>(now_ms), static_cast<double>(now_ms + duration_ms));
}

void Pipeline::slow_worker(std::int64_t now_ms, int worker, std::int64_t duration_ms, double factor) {
    require_now(now_ms, worker);
    network_->add_worker_slowdown(worker, static_cast<double>(now_ms), static_cast<double>(now_ms + duration_ms),
                                  factor);
}

bool Pipeline::worker_down(int worker, std::int64_t t_ms) const {
    if (worker < 0 || worker >= static_cast<int>(worker_down_until_.size())) {
        return false;
    }
    return static_cast<double>(t_ms) < worker_down_until_[static_cast<std::size_t>(worker)];
}

void Pipeline::inject_markers(std::int64_t until_ms) {
    const std::int64_t step = spec_.config.marker_interval_ms;
    for (; next_marker_ms_ < until_ms; next_marker_ms_ += step) {
        const double m = static_cast<double>(next_marker_ms_);
        while (downtime_cursor_ < downtime_.size() && downtime_[downtime_cursor_].second <= m) {
            ++downtime_cursor_;
        }
        if (downtime_cursor_ < downtime_.size() && downtime_[downtime_cursor_].first <= m) {
            continue;
        }
        for (int i = 0; i < spec_.config.parallelism; ++i) {
            network_->inject_marker(m, i);
        }
    }
}

double Pipeline::checkpoint_fraction(double from, double to) {
    while (stall_cursor_ < stalls_.size() && stalls_[stall_cursor_].second <= from) {
        ++stall_cursor_;
    }
    double covered = 0.0;
    for (std::size_t i = stall_cursor_; i < stalls_.size() && stalls_[i].first < to; ++i) {
        covered += std::min(to, stalls_[i].second) - std::max(from, stalls_[i].first);
    }
    return std::clamp(covered / (to - from), 0.0, 1.0);
}

void Pipeline::emit_bins(std::int64_t until_ms) {
    const auto& cfg = spec_.config;
    const std::int64_t step = spec_.sample_interval_ms;
    const double seconds = static_cast<double>(step) / 1000.0;
    const double per_kmsg = 1.0 / (seconds * spec_.scale_factor * 1000.0);
    while (round_.start_ms + (network_->first_bin() + 1) * step <= until_ms) {
        const std::int64_t k = network_->first_bin();
        const TimingBin bin = network_->take_bin();
        for (std::size_t s = 0; s < queue_arrivals_.size(); ++s) {
            queue_arrivals_[s] += bin.arrivals[s];
            queue_starts_[s] += bin.starts[s];
        }
        const std::int64_t b0 = round_.start_ms + k * step;
        if (b0 < round_.metrics_from_ms) {
            continue;
        }
        for (int i = 0; i < cfg.parallelism; ++i) {
            const auto si = static_cast<std::size_t>(i);
            if (bin.latency_count[si] > 0) {
                point(metrics::series::kLatency, {{"sink_index", std::to_string(i)}}, b0,
                      bin.latency_sum[si] / static_cast<double>(bin.latency_count[si]));
            }
        }
        std::int64_t entered = 0;
        for (auto n : bin.source_starts) {
            entered += n;
        }
        point(metrics::series::kInputThroughput, {}, b0, static_cast<double>(entered) / seconds);

        const double fraction = checkpoint_fraction(static_cast<double>(b0), static_cast<double>(b0 + step));
        const auto& state = sampled_state_.at(static_cast<std::size_t>(k));
        for (int w = 0; w < cfg.worker_count; ++w) {
            bool hosts = false;
            double records = 0.0;
            for (int t = 0; t < cfg.parallelism; ++t) {
                if (task_worker_[static_cast<std::size_t>(t)] == w) {
                    hosts = true;
                    records += static_cast<double>(state[static_cast<std::size_t>(t)]);
                }
            }
            const double kmsg = static_cast<double>(bin.worker_services[static_cast<std::size_t>(w)]) * per_kmsg;
            const metrics::Tags tags{{"role", "worker"}, {"instance", "worker-" + std::to_string(w)}};
            point(metrics::series::kCpu, tags, b0, worker_cpu_pct(cfg, kmsg, hosts ? fraction : 0.0));
            point(metrics::series::kHeap, tags, b0, worker_heap_pct(cfg, kmsg, records / spec_.scale_factor));
        }
        const double total_kmsg = static_cast<double>(entered) * per_kmsg;
        for (int c = 0; c < cfg.coordinator_count; ++c) {
            const metrics::Tags tags{{"role", "coordinator"}, {"instance", "coordinator-" + std::to_string(c)}};
            point(metrics::series::kCpu, tags, b0, coordinator_cpu_pct(cfg, total_kmsg, fraction));
            point(metrics::series::kHeap, tags, b0, coordinator_heap_pct(cfg, total_kmsg));
        }
        for (std::size_t s = 0; s < queue_arrivals_.size(); ++s) {
            const std::string name = (s % 2 == 0 ? "source-" : "window-") + std::to_string(s / 2);
            point(metrics::series::kQueueLength, {{"server", name}}, b0,
                  static_cast<double>(queue_arrivals_[s] - queue_starts_[s]));
        }
    }
}

void Pipeline::point(const char* series, metrics::Tags tags, std::int64_t ts, double value) {
    tags.emplace("round", std::to_string(round_.index));
    batch_.push_back({series, std::move(tags), ts, value});
}

std::int64_t Pipeline::backlog_if_failed_at(std::int64_t t_ms) const {
    const double t = static_cast<double>(t_ms);
    const std::vector<std::int64_t>* offsets = &base_offsets_;
    for (auto it = checkpoints_.rbegin(); it != checkpoints_.rend(); ++it) {
        if (it->completed && it->completed_time_ms <= t) {
            offsets = &it->offsets;
            break;
        }
    }
    std::int64_t backlog = 0;
    for (std::uint32_t p = 0; p < partitions_; ++p) {
        const auto& times = ingest_times_[p];
        const auto consumed = std::lower_bound(times.begin(), times.end(), t_ms) - times.begin();
        backlog += std::max<std::int64_t>(0, base_offsets_[p] + consumed - (*offsets)[p]);
    }
    return backlog;
}

std::uint64_t Pipeline::round_input_hash() const {
    Fnv1a64 h;
    for (const auto& part : input_hash_) {
        h.update_u64(part.digest());
    }
    return h.digest();
}

std::int64_t Pipeline::round_records() const {
    std::int64_t n = 0;
    for (std::size_t p = 0; p < high_water_.size(); ++p) {
        n += high_water_[p] - base_offsets_[p];
    }
    return n;
}

std::vector<LatencySample> Pipeline::take_latency_samples() { return std::exchange(latency_samples_, {}); }

}// namespace streamtrial::engine
