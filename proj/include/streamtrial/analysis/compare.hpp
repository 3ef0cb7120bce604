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

#ifndef STREAMTRIAL_ANALYSIS_COMPARE_HPP_
#define STREAMTRIAL_ANALYSIS_COMPARE_HPP_

#include <streamtrial/analysis/aggregate.hpp>
#include <streamtrial/metrics/metrics_store.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace streamtrial::analysis {

/// Unset thresholds are not evaluated. Throughput is in measured (scaled) messages per second.
/// The evaluation window is given as offsets from each round's start.
struct QosTarget {
    std::optional<double> max_latency_ms;
    double latency_percentile = 50.0;
    std::optional<double> min_throughput_msg_s;
    std::optional<double> max_recovery_time_ms;
    std::int64_t eval_from_ms = 0;
    std::optional<std::int64_t> eval_to_ms;

    /// Every violation, prefixed "qos."; throws ValidationError when any.
    void validate() const;
    bool operator==(const QosTarget&) const = default;
};

enum class Objective { kLatency, kThroughput, kRecovery };
const char* to_string(Objective o);
Objective parse_objective(std::string_view name);

struct AnalysisOptions {
    double ewma_span_s = 1000.0;
    double alpha = 0.05;
    Objective objective = Objective::kLatency;
    bool operator==(const AnalysisOptions&) const = default;
};

struct VariantLayout {
    std::string name;
    std::string pipeline_id;
    bool baseline = false;
    bool failed = false;
    bool production = false;
};

/// Where each variant's metrics live and how rounds are laid out on the experiment clock.
struct ExperimentLayout {
    std::string experiment_id;
    std::vector<std::int64_t> round_starts_ms;
    std::int64_t round_duration_ms = 0;
    std::int64_t warmup_ms = 0;
    std::int64_t sample_interval_ms = 1000;
    std::vector<VariantLayout> variants;
};

/// Everything the comparison needs about one variant. Series timestamps are round offsets.
struct VariantSeries {
    VariantLayout layout;
    AggregatedSeries latency_rounds;// round_median
    AggregatedSeries latency;       // ewma
    AggregatedSeries throughput_rounds;
    AggregatedSeries throughput;
    AggregatedSeries cpu;
    AggregatedSeries heap;
    std::vector<double> latency_per_round;// per round: percentile of its own smoothed sink-median series
    std::vector<double> recovery_times_ms;
    std::optional<double> cumulative_cpu_pct_s;
};

struct VariantSummary {
    std::string name;
    bool baseline = false;
    bool failed = false;
    std::optional<double> latency_ms;
    std::vector<double> latency_per_round;
    std::optional<double> latency_round_iqr;
    std::optional<double> throughput_msg_s;
    std::optional<double> cpu_pct;
    std::optional<double> heap_pct;
    std::optional<double> cumulative_cpu_pct_s;
    std::optional<double> recovery_time_ms;// median of observed recoveries
    std::optional<double> max_recovery_time_ms;
    int recovery_count = 0;
    std::string qos_latency = "not_evaluated";
    std::string qos_throughput = "not_evaluated";
    std::string qos_recovery = "not_evaluated";
    bool eligible = false;
    std::optional<int> rank;
    std::optional<double> p_value_vs_baseline;
    bool significantly_better = false;
    bool operator==(const VariantSummary&) const = default;
};

struct ComparisonReport {
    int schema_version = 1;
    std::string experiment_id;
    std::string objective = "latency";
    double alpha = 0.05;
    double ewma_span_s = 1000.0;
    double latency_percentile = 50.0;
    std::int64_t eval_from_ms = 0;
    std::int64_t eval_to_ms = 0;
    std::string baseline;
    std::vector<VariantSummary> variants;
    std::map<std::string, std::map<std::string, double>> p_values;
    std::vector<std::string> ranking;
    std::optional<std::string> winner;
    std::string tradeoff_note;
    bool operator==(const ComparisonReport&) const = default;

    const VariantSummary& variant(const std::string& name) const;
};

/// Raw -> sink_median -> round_median -> ewma for latency, throughput, worker cpu and heap.
VariantSeries aggregate_variant(const metrics::MetricsStore& store, const ExperimentLayout& layout,
                                const VariantLayout& variant, const QosTarget& qos, const AnalysisOptions& options);

/// Summaries, QoS elimination, pairwise Mann-Whitney on round-median latency, ranking and winner.
ComparisonReport compare(const std::vector<VariantSeries>& variants, const ExperimentLayout& layout,
                         const QosTarget& qos, const AnalysisOptions& options);

struct Analysis {
    ComparisonReport report;
    std::vector<VariantSeries> series;
};
Analysis analyze(const metrics::MetricsStore& store, const ExperimentLayout& layout, const QosTarget& qos,
                 const AnalysisOptions& options);

}// namespace streamtrial::analysis

#endif// STREAMTRIAL_ANALYSIS_COMPARE_HPP_
