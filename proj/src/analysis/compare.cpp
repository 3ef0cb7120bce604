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

#include <streamtrial/analysis/compare.hpp>
#include <streamtrial/analysis/stats.hpp>
#include <streamtrial/common/error.hpp>
#include <streamtrial/common/text.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace streamtrial::analysis {

namespace {

const char* kPass = "pass";
const char* kFail = "fail";

bool positive(const std::optional<double>& v) { return !v || (std::isfinite(*v) && *v > 0.0); }

std::int64_t eval_end(const QosTarget& qos, const ExperimentLayout& layout) {
    return qos.eval_to_ms ? *qos.eval_to_ms : layout.round_duration_ms;
}

std::vector<std::int64_t> grid_of(const ExperimentLayout& layout) {
    std::vector<std::int64_t> grid;
    const std::int64_t step = layout.sample_interval_ms;
    for (std::int64_t t = (layout.warmup_ms + step - 1) / step * step; t < layout.round_duration_ms; t += step) {
        grid.push_back(t);
    }
    return grid;
}

std::vector<AggregatedSeries> per_round(const metrics::MetricsStore& store, const ExperimentLayout& layout,
                                        const VariantLayout& variant, const char* series, metrics::Tags filter) {
    filter["pipeline_id"] = variant.pipeline_id;
    std::vector<AggregatedSeries> rounds;
    for (auto start : layout.round_starts_ms) {
        metrics::RangeQuery q{series, filter, start + layout.warmup_ms, start + layout.round_duration_ms};
        rounds.push_back(sink_median(store.query_range(q), series, variant.name, start));
    }
    return rounds;
}

AggregatedSeries smooth(const AggregatedSeries& s, const AnalysisOptions& options, std::int64_t step_ms,
                        bool allow_any = false) {
    if (s.points.empty()) {
        AggregatedSeries out = s;
        out.provenance.push_back(Provenance::kEwma);
        return out;
    }
    return ewma(s, options.ewma_span_s, step_ms, allow_any);
}

std::optional<double> mean_of(const std::vector<double>& v) {
    if (v.empty()) {
        return std::nullopt;
    }
    return mean(v);
}

double objective_value(const VariantSummary& s, Objective o) {
    const double inf = std::numeric_limits<double>::infinity();
    switch (o) {
        case Objective::kLatency: return s.latency_ms.value_or(inf);
        case Objective::kThroughput: return -s.throughput_msg_s.value_or(-inf);
        case Objective::kRecovery: return s.recovery_time_ms.value_or(0.0);
    }
    return inf;
}

std::string num(const std::optional<double>& v) { return v ? format_fixed(*v, 1) : std::string("n/a"); }

}// namespace

void QosTarget::validate() const {
    std::vector<std::string> v;
    if (!positive(max_latency_ms)) {
        v.push_back("qos.max_latency_ms: must be > 0");
    }
    if (!(latency_percentile > 0.0 && latency_percentile <= 100.0)) {
        v.push_back("qos.latency_percentile: must be in (0, 100]");
    }
    if (!positive(min_throughput_msg_s)) {
        v.push_back("qos.min_throughput_msg_s: must be > 0");
    }
    if (!positive(max_recovery_time_ms)) {
        v.push_back("qos.max_recovery_time_ms: must be > 0");
    }
    if (eval_from_ms < 0) {
        v.push_back("qos.eval_from_ms: must be >= 0");
    }
    if (eval_to_ms && *eval_to_ms <= eval_from_ms) {
        v.push_back("qos.eval_to_ms: must be greater than eval_from_ms");
    }
    if (!v.empty()) {
        throw ValidationError(std::move(v));
    }
}

const char* to_string(Objective o) {
    switch (o) {
        case Objective::kLatency: return "latency";
        case Objective::kThroughput: return "throughput";
        case Objective::kRecovery: return "recovery";
    }
    return "unknown";
}

Objective parse_objective(std::string_view name) {
    for (auto o : {Objective::kLatency, Objective::kThroughput, Objective::kRecovery}) {
        if (name == to_string(o)) {
            return o;
        }
    }
    throw ConfigError("unknown objective '" + std::string(name) + "'");
}

const VariantSummary& ComparisonReport::variant(const std::string& name) const {
    for (const auto& v : variants) {
        if (v.name == name) {
            return v;
        }
    }
    throw NotFound("no variant '" + name + "' in report");
}

VariantSeries aggregate_variant(const metrics::MetricsStore& store, const ExperimentLayout& layout,
                                const VariantLayout& variant, const QosTarget& qos, const AnalysisOptions& options) {
    if (layout.sample_interval_ms <= 0 || layout.round_duration_ms <= 0) {
        throw ConfigError("experiment layout needs a positive sample interval and round duration");
    }
    const auto grid = grid_of(layout);
    const std::int64_t step = layout.sample_interval_ms;
    const std::int64_t from = qos.eval_from_ms;
    const std::int64_t to = eval_end(qos, layout);

    VariantSeries out;
    out.layout = variant;

    const auto latency = per_round(store, layout, variant, metrics::series::kLatency, {});
    out.latency_rounds = round_median(latency, grid);
    out.latency = smooth(out.latency_rounds, options, step);
    for (const auto& r : latency) {
        if (r.points.empty()) {
            continue;
        }
        const auto w = smooth(r, options, step, true).window(from, to);
        if (!w.points.empty()) {
            out.latency_per_round.push_back(percentile(w.values(), qos.latency_percentile));
        }
    }

    out.throughput_rounds = round_median(per_round(store, layout, variant, metrics::series::kInputThroughput, {}), grid);
    out.throughput = smooth(out.throughput_rounds, options, step);

    const metrics::Tags workers{{"role", "worker"}};
    out.cpu = smooth(round_median(per_round(store, layout, variant, metrics::series::kCpu, workers), grid), options, step);
    out.heap = smooth(round_median(per_round(store, layout, variant, metrics::series::kHeap, workers), grid), options,
                      step);

    std::vector<double> cumulative;
    for (auto start : layout.round_starts_ms) {
        metrics::Tags filter = workers;
        filter["pipeline_id"] = variant.pipeline_id;
        const auto pts = store.query_range({metrics::series::kCpu, filter, start + from, start + to});
        if (pts.empty()) {
            continue;
        }
        double sum = 0.0;
        for (const auto& p : pts) {
            sum += p.value * static_cast<double>(step) / 1000.0;
        }
        cumulative.push_back(sum);
    }
    if (!cumulative.empty()) {
        out.cumulative_cpu_pct_s = median(cumulative);
    }

    for (auto start : layout.round_starts_ms) {
        const auto pts = store.query_range(
                {metrics::series::kRecoveryTime, {{"pipeline_id", variant.pipeline_id}}, start,
                 start + layout.round_duration_ms});
        for (const auto& p : pts) {
            out.recovery_times_ms.push_back(p.value);
        }
    }
    return out;
}

ComparisonReport compare(const std::vector<VariantSeries>& variants, const ExperimentLayout& layout,
                         const QosTarget& qos, const AnalysisOptions& options) {
    qos.validate();
    if (!(options.alpha > 0.0 && options.alpha < 1.0)) {
        throw ConfigError("alpha must be in (0, 1)");
    }
    const std::int64_t from = qos.eval_from_ms;
    const std::int64_t to = eval_end(qos, layout);

    ComparisonReport report;
    report.experiment_id = layout.experiment_id;
    report.objective = to_string(options.objective);
    report.alpha = options.alpha;
    report.ewma_span_s = options.ewma_span_s;
    report.latency_percentile = qos.latency_percentile;
    report.eval_from_ms = from;
    report.eval_to_ms = to;

    int baselines = 0;
    std::map<std::string, std::vector<double>> latency_samples;
    std::map<std::string, std::vector<double>> throughput_samples;
    for (const auto& vs : variants) {
        VariantSummary s;
        s.name = vs.layout.name;
        s.baseline = vs.layout.baseline;
        s.failed = vs.layout.failed;
        if (s.baseline) {
            ++baselines;
            report.baseline = s.name;
        }
        const auto lat = vs.latency.window(from, to).values();
        if (!lat.empty()) {
            s.latency_ms = percentile(lat, qos.latency_percentile);
        }
        s.latency_per_round = vs.latency_per_round;
        if (!s.latency_per_round.empty()) {
            s.latency_round_iqr = iqr(s.latency_per_round);
        }
        s.throughput_msg_s = mean_of(vs.throughput.window(from, to).values());
        s.cpu_pct = mean_of(vs.cpu.window(from, to).values());
        s.heap_pct = mean_of(vs.heap.window(from, to).values());
        s.cumulative_cpu_pct_s = vs.cumulative_cpu_pct_s;
        s.recovery_count = static_cast<int>(vs.recovery_times_ms.size());
        if (!vs.recovery_times_ms.empty()) {
            s.recovery_time_ms = median(vs.recovery_times_ms);
            s.max_recovery_time_ms = *std::max_element(vs.recovery_times_ms.begin(), vs.recovery_times_ms.end());
        }

        if (qos.max_latency_ms) {
            s.qos_latency = s.latency_ms && *s.latency_ms <= *qos.max_latency_ms ? kPass : kFail;
        }
        if (qos.min_throughput_msg_s) {
            s.qos_throughput = s.throughput_msg_s && *s.throughput_msg_s >= *qos.min_throughput_msg_s ? kPass : kFail;
        }
        if (qos.max_recovery_time_ms) {
            s.qos_recovery = !s.max_recovery_time_ms || *s.max_recovery_time_ms <= *qos.max_recovery_time_ms ? kPass
                                                                                                            : kFail;
        }
        s.eligible = !s.failed && s.latency_ms && s.qos_latency != kFail && s.qos_throughput != kFail
                     && s.qos_recovery != kFail;
        latency_samples[s.name] = vs.latency_rounds.window(from, to).values();
        throughput_samples[s.name] = vs.throughput_rounds.window(from, to).values();
        report.variants.push_back(std::move(s));
    }
    if (baselines != 1) {
        throw ConfigError("exactly one baseline variant is required, got " + std::to_string(baselines));
    }

    for (const auto& a : report.variants) {
        for (const auto& b : report.variants) {
            const auto& xa = latency_samples[a.name];
            const auto& xb = latency_samples[b.name];
            report.p_values[a.name][b.name] = xa.empty() || xb.empty() ? 1.0 : mann_whitney(xa, xb).p_value;
        }
    }

    const auto& base = report.variant(report.baseline);
    const auto base_index = static_cast<std::size_t>(&base - report.variants.data());
    const auto& base_series = variants[base_index];
    for (std::size_t i = 0; i < report.variants.size(); ++i) {
        auto& s = report.variants[i];
        if (s.baseline) {
            continue;
        }
        switch (options.objective) {
            case Objective::kLatency: {
                const auto& x = latency_samples[s.name];
                const auto& y = latency_samples[base.name];
                if (!x.empty() && !y.empty()) {
                    s.p_value_vs_baseline = report.p_values[s.name][base.name];
                    s.significantly_better = *s.p_value_vs_baseline < options.alpha && median(x) < median(y);
                }
                break;
            }
            case Objective::kThroughput: {
                const auto& x = throughput_samples[s.name];
                const auto& y = throughput_samples[base.name];
                if (!x.empty() && !y.empty()) {
                    s.p_value_vs_baseline = mann_whitney(x, y).p_value;
                    s.significantly_better = *s.p_value_vs_baseline < options.alpha && median(x) > median(y);
                }
                break;
            }
            case Objective::kRecovery: {
                const auto& x = variants[i].recovery_times_ms;
                const auto& y = base_series.recovery_times_ms;
                if (!x.empty() && !y.empty()) {
                    s.p_value_vs_baseline = mann_whitney(x, y).p_value;
                    s.significantly_better = *s.p_value_vs_baseline < options.alpha && median(x) < median(y);
                }
                break;
            }
        }
    }

    std::vector<const VariantSummary*> survivors;
    for (const auto& s : report.variants) {
        if (s.eligible) {
            survivors.push_back(&s);
        }
    }
    std::sort(survivors.begin(), survivors.end(), [&](const VariantSummary* a, const VariantSummary* b) {
        const double inf = std::numeric_limits<double>::infinity();
        const auto ka = std::make_tuple(objective_value(*a, options.objective), a->recovery_time_ms.value_or(0.0),
                                        a->cpu_pct.value_or(inf), a->name);
        const auto kb = std::make_tuple(objective_value(*b, options.objective), b->recovery_time_ms.value_or(0.0),
                                        b->cpu_pct.value_or(inf), b->name);
        return ka < kb;
    });
    for (std::size_t r = 0; r < survivors.size(); ++r) {
        report.ranking.push_back(survivors[r]->name);
    }
    for (auto& s : report.variants) {
        const auto it = std::find(report.ranking.begin(), report.ranking.end(), s.name);
        if (it != report.ranking.end()) {
            s.rank = static_cast<int>(it - report.ranking.begin()) + 1;
        }
    }
    if (!report.ranking.empty()) {
        const auto& top = report.variant(report.ranking.front());
        if (!top.baseline && top.significantly_better) {
            report.winner = top.name;
        }
    }

    const VariantSummary* fastest = nullptr;
    const VariantSummary* quickest = nullptr;
    for (const auto& s : report.variants) {
        if (s.latency_ms && (!fastest || *s.latency_ms < *fastest->latency_ms)) {
            fastest = &s;
        }
        if (s.recovery_time_ms && (!quickest || *s.recovery_time_ms < *quickest->recovery_time_ms)) {
            quickest = &s;
        }
    }
    if (!fastest) {
        report.tradeoff_note = "no latency data";
    } else if (!quickest) {
        report.tradeoff_note = "lowest latency: " + fastest->name + " (" + num(fastest->latency_ms)
                               + " ms); no recoveries observed";
    } else if (fastest == quickest) {
        report.tradeoff_note = fastest->name + " has both the lowest latency (" + num(fastest->latency_ms)
                               + " ms) and the fastest recovery (" + num(quickest->recovery_time_ms) + " ms)";
    } else {
        report.tradeoff_note = "lowest latency: " + fastest->name + " (" + num(fastest->latency_ms)
                               + " ms, recovery " + num(fastest->recovery_time_ms) + " ms); fastest recovery: "
                               + quickest->name + " (" + num(quickest->recovery_time_ms) + " ms, latency "
                               + num(quickest->latency_ms) + " ms)";
    }
    return report;
}

Analysis analyze(const metrics::MetricsStore& store, const ExperimentLayout& layout, const QosTarget& qos,
                 const AnalysisOptions& options) {
    Analysis out;
    for (const auto& v : layout.variants) {
        out.series.push_back(aggregate_variant(store, layout, v, qos, options));
    }
    out.report = compare(out.series, layout, qos, options);
    return out;
}

}// namespace streamtrial::analysis
