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

#ifndef STREAMTRIAL_ORCHESTRATOR_PLAN_HPP_
#define STREAMTRIAL_ORCHESTRATOR_PLAN_HPP_

#include <streamtrial/analysis/compare.hpp>
#include <streamtrial/chaos/chaos_injector.hpp>
#include <streamtrial/engine/config_set.hpp>
#include <streamtrial/workload/generator.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace streamtrial::orchestrator {

struct VariantSpec {
    std::string name;
    engine::ConfigSet config;
    bool operator==(const VariantSpec&) const = default;
};

/// The running pipeline the variants challenge. `history_s` seconds of traffic are processed
/// before the first round so its store holds records that predate the experiment.
struct ProductionSpec {
    std::string name = "production";
    engine::ConfigSet config;
    std::int64_t history_s = 0;
    bool operator==(const ProductionSpec&) const = default;
};

struct ExperimentPlan {
    int version = 1;
    std::string experiment_id = "experiment";
    std::uint64_t seed = 1;
    double scale_factor = 1.0;
    int rounds = 5;
    std::int64_t round_duration_s = 21'600;
    std::int64_t warmup_s = 0;
    std::int64_t sample_interval_ms = 10'000;
    std::int64_t epoch_s = 60;
    bool identical_round_traces = false;
    int input_partitions = 8;
    int slot_budget = 1'000;
    double provisioning_ms_per_instance = 500.0;
    /// Full-scale counts; `start_s` is the time of day every round starts at.
    workload::WorkloadSpec workload;
    std::int64_t start_s = 0;
    ProductionSpec production;
    std::vector<VariantSpec> variants;
    chaos::FailureScenario scenario;
    analysis::QosTarget qos;
    analysis::AnalysisOptions analysis;

    /// Every violation with its key path; throws ValidationError when any.
    void validate() const;
    bool operator==(const ExperimentPlan&) const = default;
};

/// Strict: unknown keys, wrong types and out-of-range values are reported with their key paths
/// (for example "variants[1].config.checkpont_interval_ms: unknown key"). Throws ValidationError.
ExperimentPlan parse_plan(std::string_view text);

/// Canonical JSON with every field spelled out; parse_plan(plan_to_json(p)) == p.
std::string plan_to_json(const ExperimentPlan& plan);

/// Names accepted under any "config" object.
std::vector<std::string> config_keys();

/// Round start on the experiment clock for round 1..rounds. Rounds sit whole load periods apart so
/// each covers the same time of day; the production history occupies the slot before round 1.
std::int64_t round_start_ms(const ExperimentPlan& plan, int round);
std::int64_t round_stride_ms(const ExperimentPlan& plan);
/// [start, end) of the production history, or an empty range when history_s is 0.
std::pair<std::int64_t, std::int64_t> history_range_ms(const ExperimentPlan& plan);

/// seed, or seed xor round unless identical_round_traces.
std::uint64_t trace_seed(const ExperimentPlan& plan, int round);

/// The workload with vehicle counts multiplied by the scale factor.
workload::WorkloadSpec scaled_workload(const ExperimentPlan& plan);

}// namespace streamtrial::orchestrator

#endif// STREAMTRIAL_ORCHESTRATOR_PLAN_HPP_
