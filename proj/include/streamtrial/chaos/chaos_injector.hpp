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

#ifndef STREAMTRIAL_CHAOS_CHAOS_INJECTOR_HPP_
#define STREAMTRIAL_CHAOS_CHAOS_INJECTOR_HPP_

#include <streamtrial/engine/pipeline.hpp>
#include <streamtrial/metrics/metrics_store.hpp>

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace streamtrial::chaos {

enum class FaultKind { kWorkerKill, kWorkerSlowdown, kPauseResume };

/// "worker_kill", "worker_slowdown", "pause_resume".
const char* to_string(FaultKind kind);
/// Throws ConfigError on an unknown name.
FaultKind parse_fault_kind(std::string_view name);

struct FailureEvent {
    /// Offset from the start of each round.
    std::int64_t at_ms = 0;
    FaultKind kind = FaultKind::kWorkerKill;
    /// Worker index; empty means a seeded random pick.
    std::optional<int> target;
    std::int64_t duration_ms = 0;
    double slowdown_factor = 1.0;
    bool operator==(const FailureEvent&) const = default;
};

struct FailureScenario {
    std::string name = "none";
    std::vector<FailureEvent> events;
    /// Variant names the scenario applies to; empty means every testing variant.
    std::vector<std::string> apply_to;
    bool include_production = false;

    /// Every violation, prefixed "scenario.events[i]"; throws ValidationError when any.
    void validate(std::int64_t round_duration_ms) const;
    bool applies_to(const std::string& variant, bool is_production) const;
    bool operator==(const FailureScenario&) const = default;
};

/// Event with its target worker and absolute firing time resolved.
struct ArmedEvent {
    int index = 0;
    FailureEvent event;
    int worker = 0;
    std::int64_t fire_at_ms = 0;
};

struct InjectionRecord {
    std::string pipeline_id;
    int round = 0;
    int event_index = 0;
    FaultKind kind = FaultKind::kWorkerKill;
    int worker = 0;
    std::int64_t at_ms = 0;
    bool skipped = false;
    std::string reason;
    std::optional<engine::RecoveryReport> recovery;
};

/// Random targets are drawn per event index from the seed, so every round and every variant with
/// the same worker count sees the same worker.
std::vector<ArmedEvent> resolve(const FailureScenario& scenario, std::uint64_t seed, int worker_count,
                                std::int64_t round_start_ms);

/// Applies one event to a pipeline from inside its event loop (now_ms == event.fire_at_ms) and
/// writes one annotation point tagged with the outcome.
InjectionRecord fire(const ArmedEvent& event, engine::Pipeline& pipeline, int round, metrics::MetricsStore& metrics);

/// Arms scenarios on pipelines and collects what happened. Safe to use from several pipeline threads.
class ChaosInjector {
  public:
    ChaosInjector(FailureScenario scenario, std::uint64_t seed, metrics::MetricsStore& metrics)
        : scenario_(std::move(scenario)), seed_(seed), metrics_(metrics) {}

    /// Schedules every event on the pipeline for the round starting at `round_start_ms`. Returns the count.
    std::size_t arm(engine::Pipeline& pipeline, int round, std::int64_t round_start_ms);

    std::vector<InjectionRecord> records() const;
    const FailureScenario& scenario() const { return scenario_; }

  private:
    FailureScenario scenario_;
    std::uint64_t seed_;
    metrics::MetricsStore& metrics_;
    mutable std::mutex mutex_;
    std::vector<InjectionRecord> records_;
};

}// namespace streamtrial::chaos

#endif// STREAMTRIAL_CHAOS_CHAOS_INJECTOR_HPP_
