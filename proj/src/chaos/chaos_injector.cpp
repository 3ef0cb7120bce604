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

#include <streamtrial/chaos/chaos_injector.hpp>
#include <streamtrial/common/error.hpp>
#include <streamtrial/common/random.hpp>

#include <algorithm>

namespace streamtrial::chaos {

namespace {
constexpr std::uint64_t kTargetSalt = 0x7a4e9c31;
}

const char* to_string(FaultKind kind) {
    switch (kind) {
        case FaultKind::kWorkerKill: return "worker_kill";
        case FaultKind::kWorkerSlowdown: return "worker_slowdown";
        case FaultKind::kPauseResume: return "pause_resume";
    }
    return "unknown";
}

FaultKind parse_fault_kind(std::string_view name) {
    for (auto k : {FaultKind::kWorkerKill, FaultKind::kWorkerSlowdown, FaultKind::kPauseResume}) {
        if (name == to_string(k)) {
            return k;
        }
    }
    throw ConfigError("unknown failure kind '" + std::string(name) + "'");
}

void FailureScenario::validate(std::int64_t round_duration_ms) const {
    std::vector<std::string> v;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        const std::string at = "scenario.events[" + std::to_string(i) + "]";
        if (e.at_ms < 0 || e.at_ms >= round_duration_ms) {
            v.push_back(at + ".at_ms: " + std::to_string(e.at_ms) + " is outside the round [0, "
                        + std::to_string(round_duration_ms) + ")");
        }
        if (i > 0 && e.at_ms < events[i - 1].at_ms) {
            v.push_back(at + ".at_ms: events must be sorted by time");
        }
        if (e.target && *e.target < 0) {
            v.push_back(at + ".target: worker index must be >= 0");
        }
        if (e.kind != FaultKind::kWorkerKill && e.duration_ms <= 0) {
            v.push_back(at + ".duration_ms: must be > 0");
        }
        if (e.kind == FaultKind::kWorkerSlowdown && !(e.slowdown_factor > 1.0)) {
            v.push_back(at + ".slowdown_factor: must be > 1");
        }
    }
    if (!v.empty()) {
        throw ValidationError(std::move(v));
    }
}

bool FailureScenario::applies_to(const std::string& variant, bool is_production) const {
    if (is_production) {
        return include_production;
    }
    return apply_to.empty() || std::find(apply_to.begin(), apply_to.end(), variant) != apply_to.end();
}

std::vector<ArmedEvent> resolve(const FailureScenario& scenario, std::uint64_t seed, int worker_count,
                                std::int64_t round_start_ms) {
    std::vector<ArmedEvent> out;
    for (std::size_t i = 0; i < scenario.events.size(); ++i) {
        const auto& e = scenario.events[i];
        int worker = 0;
        if (e.target) {
            worker = *e.target;
        } else {
            DeterministicRng rng(mix_seed(seed, kTargetSalt + i));
            worker = static_cast<int>(rng.below(static_cast<std::uint64_t>(worker_count)));
        }
        out.push_back({static_cast<int>(i), e, worker, round_start_ms + e.at_ms});
    }
    return out;
}

InjectionRecord fire(const ArmedEvent& armed, engine::Pipeline& pipeline, int round, metrics::MetricsStore& metrics) {
    InjectionRecord rec;
    rec.pipeline_id = pipeline.spec().pipeline_id;
    rec.round = round;
    rec.event_index = armed.index;
    rec.kind = armed.event.kind;
    rec.worker = armed.worker;
    rec.at_ms = armed.fire_at_ms;
    if (armed.worker >= pipeline.config().worker_count) {
        rec.skipped = true;
        rec.reason = "no such worker";
    } else if (pipeline.state() == engine::PipelineState::kFailed) {
        rec.skipped = true;
        rec.reason = "pipeline failed";
    } else if (pipeline.worker_down(armed.worker, armed.fire_at_ms)) {
        rec.skipped = true;
        rec.reason = "worker down";
    } else {
        switch (armed.event.kind) {
            case FaultKind::kWorkerKill:
                rec.recovery = pipeline.fail_and_recover(armed.fire_at_ms, armed.worker);
                break;
            case FaultKind::kWorkerSlowdown:
                pipeline.slow_worker(armed.fire_at_ms, armed.worker, armed.event.duration_ms,
                                     armed.event.slowdown_factor);
                break;
            case FaultKind::kPauseResume:
                pipeline.pause_worker(armed.fire_at_ms, armed.worker, armed.event.duration_ms);
                break;
        }
    }
    metrics.append({metrics::series::kAnnotation,
                    {{"pipeline_id", rec.pipeline_id},
                     {"round", std::to_string(round)},
                     {"event", std::to_string(armed.index)},
                     {"kind", to_string(rec.kind)},
                     {"worker", std::to_string(rec.worker)},
                     {"status", rec.skipped ? "skipped" : "fired"}},
                    rec.at_ms,
                    1.0});
    return rec;
}

std::size_t ChaosInjector::arm(engine::Pipeline& pipeline, int round, std::int64_t round_start_ms) {
    const auto events = resolve(scenario_, seed_, pipeline.config().worker_count, round_start_ms);
    for (const auto& armed : events) {
        pipeline.schedule_action(armed.fire_at_ms, [this, armed, round](engine::Pipeline& p, std::int64_t) {
            auto rec = fire(armed, p, round, metrics_);
            std::lock_guard lock(mutex_);
            records_.push_back(std::move(rec));
        });
    }
    return events.size();
}

std::vector<InjectionRecord> ChaosInjector::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

}// namespace streamtrial::chaos
