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

#ifndef STREAMTRIAL_ENGINE_PIPELINE_HPP_
#define STREAMTRIAL_ENGINE_PIPELINE_HPP_

#include <streamtrial/bus/stream_bus.hpp>
#include <streamtrial/common/hash.hpp>
#include <streamtrial/engine/analytics_store.hpp>
#include <streamtrial/engine/config_set.hpp>
#include <streamtrial/engine/queue_network.hpp>
#include <streamtrial/engine/window_operator.hpp>
#include <streamtrial/metrics/metrics_store.hpp>

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace streamtrial::engine {

struct PipelineSpec {
    std::string pipeline_id;
    /// Consumer group and output topic prefix; must be unique per pipeline.
    std::string namespace_id;
    ConfigSet config;
    double scale_factor = 1.0;
    std::int64_t sample_interval_ms = 1'000;
    bool record_latency_samples = false;

    std::string output_topic() const { return namespace_id + ".analytics"; }
};

enum class PipelineState { kIdle, kRunning, kRecovering, kFailed };
const char* to_string(PipelineState state);

struct RoundContext {
    int index = 0;
    std::string input_topic;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    /// Metric samples from bins starting before this instant are dropped (warm-up).
    std::int64_t metrics_from_ms = 0;
};

struct CheckpointInfo {
    std::int64_t checkpoint_id = 0;
    std::int64_t trigger_time_ms = 0;
    double completed_time_ms = 0.0;
    double stall_ms = 0.0;
    std::int64_t state_records = 0;
    std::vector<std::int64_t> offsets;// absolute, per input partition
    bool completed = false;
    bool aborted = false;
};

struct RecoveryReport {
    int worker = 0;
    std::int64_t failure_time_ms = 0;
    std::int64_t checkpoint_id = -1;// -1: replay from the round's first offset
    std::int64_t restored_records = 0;
    std::int64_t backlog_records = 0;
    double recovery_time_ms = 0.0;
    std::int64_t discarded_results = 0;
    bool state_consistent = false;
    bool nested = false;
    bool fatal = false;
};

/// One deployed analytics pipeline: consumes vehicle updates from the bus, counts vehicle types in
/// keyed tumbling windows, writes results through a two-phase-commit sink to its output topic and
/// analytics store, and models latency and resource use with a queueing network.
///
/// The pipeline is driven by `advance`; everything up to (excluding) the target instant is
/// processed. At one instant checkpoint completions come first, then metric sampling, checkpoint
/// triggers, scheduled actions and finally records. Not thread-safe; one driver thread per pipeline.
class Pipeline {
  public:
    using Action = std::function<void(Pipeline&, std::int64_t now_ms)>;

    /// Validates the config, registers the consumer group and creates the output topic.
    Pipeline(PipelineSpec spec, bus::StreamBus& bus, metrics::MetricsStore& metrics,
             std::shared_ptr<AnalyticsStore> store);

    void begin_round(RoundContext round);
    /// Throws ClockViolation when `until_ms` is before the pipeline clock.
    void advance(std::int64_t until_ms);
    /// Advances to the round end, fires every open window and commits all pending results.
    void end_round();

    /// Runs `action` at `at_ms` inside the event loop. `at_ms` must not be in the past.
    void schedule_action(std::int64_t at_ms, Action action);

    /// Only valid from inside an action (`now_ms` must be the action's instant).
    RecoveryReport fail_and_recover(std::int64_t now_ms, int worker);
    void pause_worker(std::int64_t now_ms, int worker, std::int64_t duration_ms);
    void slow_worker(std::int64_t now_ms, int worker, std::int64_t duration_ms, double factor);
    /// A killed worker is down for the restart delay.
    bool worker_down(int worker, std::int64_t t_ms) const;

    /// Records the failure-free run would have to replay if it failed at `t_ms` (current round).
    std::int64_t backlog_if_failed_at(std::int64_t t_ms) const;

    const PipelineSpec& spec() const { return spec_; }
    const ConfigSet& config() const { return spec_.config; }
    PipelineState state() const { return state_; }
    std::int64_t clock_ms() const { return clock_ms_; }
    const std::shared_ptr<AnalyticsStore>& store() const { return store_; }
    const std::vector<CheckpointInfo>& checkpoints() const { return checkpoints_; }
    const std::vector<RecoveryReport>& recoveries() const { return recoveries_; }
    std::int64_t missed_checkpoints() const { return missed_checkpoints_; }
    double cumulative_stall_ms() const { return cumulative_stall_ms_; }
    int restarts() const { return restarts_; }
    std::uint64_t state_digest() const { return operator_.digest(); }
    std::int64_t state_records() const { return operator_.state_records(); }
    /// FNV-1a 64 of the input this pipeline consumed in the current round (first reads only).
    std::uint64_t round_input_hash() const;
    std::int64_t round_records() const;
    std::size_t pending_results() const { return pending_.size(); }
    /// Worker hosting task i (source and window task share a slot).
    int task_worker(int task) const;
    std::vector<LatencySample> take_latency_samples();

  private:
    struct InputRecord {
        std::int64_t ingest_ms = 0;
        std::uint32_t partition = 0;
        std::int64_t offset = 0;
        std::string payload;
    };
    struct Pending {
        WindowResult result;
        std::int64_t seq = 0;
    };
    struct Snapshot {
        std::int64_t checkpoint_id = -1;
        WindowOperator::Snapshot state;
        std::vector<std::int64_t> offsets;
        std::int64_t result_cut = 0;
        std::int64_t state_records = 0;
    };

    std::vector<InputRecord> fetch_until(std::int64_t until_ms);
    void apply_record(const InputRecord& rec, bool first_read);
    void on_trigger(std::int64_t t);
    void on_completion();
    void on_sample(std::int64_t tau);
    void commit_results(std::int64_t cut, std::int64_t commit_time_ms);
    void publish(const WindowResult& r, std::int64_t commit_time_ms);
    void inject_markers(std::int64_t until_ms);
    void emit_bins(std::int64_t until_ms);
    void require_now(std::int64_t now_ms, int worker) const;
    void mark_failed(std::int64_t now_ms);
    double checkpoint_fraction(double from, double to);
    void point(const char* series, metrics::Tags tags, std::int64_t ts, double value);

    PipelineSpec spec_;
    bus::StreamBus& bus_;
    metrics::MetricsView metrics_;
    std::shared_ptr<AnalyticsStore> store_;
    WindowOperator operator_;
    std::vector<int> task_worker_;
    std::uint32_t partitions_ = 0;

    PipelineState state_ = PipelineState::kIdle;
    RoundContext round_;
    std::int64_t clock_ms_ = 0;
    std::int64_t now_ms_ = 0;
    bool in_loop_ = false;
    int restarts_ = 0;

    std::unique_ptr<QueueNetwork> network_;
    std::multimap<std::int64_t, Action> actions_;
    std::vector<std::int64_t> position_;// next offset to fetch per partition
    std::vector<std::int64_t> applied_; // next offset to apply per partition
    std::vector<std::int64_t> high_water_;// first offset never read before
    std::vector<std::int64_t> base_offsets_;
    std::vector<std::vector<std::int64_t>> ingest_times_;
    std::vector<Fnv1a64> input_hash_;

    std::vector<Pending> pending_;
    std::int64_t result_seq_ = 0;
    std::vector<WindowResult> fired_;

    std::vector<CheckpointInfo> checkpoints_;
    Snapshot last_completed_;
    std::optional<Snapshot> in_flight_;
    std::int64_t next_checkpoint_id_ = 1;
    std::int64_t next_trigger_ms_ = 0;
    std::int64_t missed_checkpoints_ = 0;
    double cumulative_stall_ms_ = 0.0;
    std::vector<std::pair<double, double>> stalls_;
    std::size_t stall_cursor_ = 0;
    std::size_t downtime_cursor_ = 0;

    std::vector<RecoveryReport> recoveries_;
    double recovery_end_ms_ = -std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> downtime_;
    std::vector<double> worker_down_until_;

    std::int64_t next_marker_ms_ = 0;
    std::int64_t next_sample_ms_ = 0;
    std::vector<std::vector<std::int64_t>> sampled_state_;// per bin, per task, at the bin's end
    std::vector<std::int64_t> queue_arrivals_;
    std::vector<std::int64_t> queue_starts_;
    std::vector<LatencySample> latency_samples_;
    std::vector<metrics::MetricPoint> batch_;
};

}// namespace streamtrial::engine

#endif// STREAMTRIAL_ENGINE_PIPELINE_HPP_
