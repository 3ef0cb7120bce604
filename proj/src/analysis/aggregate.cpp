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

#include <streamtrial/analysis/aggregate.hpp>
#include <streamtrial/analysis/stats.hpp>
#include <streamtrial/common/error.hpp>

#include <algorithm>
#include <map>

namespace streamtrial::analysis {

const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::kRaw: return "raw";
        case Provenance::kSinkMedian: return "sink_median";
        case Provenance::kRoundMedian: return "round_median";
        case Provenance::kEwma: return "ewma";
    }
    return "unknown";
}

Provenance parse_provenance(std::string_view name) {
    for (auto p : {Provenance::kRaw, Provenance::kSinkMedian, Provenance::kRoundMedian, Provenance::kEwma}) {
        if (name == to_string(p)) {
            return p;
        }
    }
    throw ConfigError("unknown provenance '" + std::string(name) + "'");
}

std::vector<double> AggregatedSeries::values() const {
    std::vector<double> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        out.push_back(p.value);
    }
    return out;
}

AggregatedSeries AggregatedSeries::window(std::int64_t from_ms, std::int64_t to_ms) const {
    AggregatedSeries out{metric, variant, {}, provenance, {}};
    for (const auto& p : points) {
        if (p.timestamp_ms >= from_ms && p.timestamp_ms < to_ms) {
            out.points.push_back(p);
        }
    }
    for (auto g : gaps) {
        if (g >= from_ms && g < to_ms) {
            out.gaps.push_back(g);
        }
    }
    return out;
}

double median_across_replicas(const std::vector<double>& values) { return median(values); }

AggregatedSeries sink_median(const std::vector<metrics::MetricPoint>& raw, std::string metric, std::string variant,
                             std::int64_t origin_ms) {
    std::map<std::int64_t, std::vector<double>> groups;
    for (const auto& p : raw) {
        groups[p.timestamp_ms - origin_ms].push_back(p.value);
    }
    AggregatedSeries out{std::move(metric), std::move(variant), {}, {Provenance::kRaw, Provenance::kSinkMedian}, {}};
    out.points.reserve(groups.size());
    for (const auto& [ts, values] : groups) {
        out.points.push_back({ts, median_across_replicas(values), static_cast<int>(values.size())});
    }
    return out;
}

AggregatedSeries round_median(const std::vector<AggregatedSeries>& rounds, const std::vector<std::int64_t>& grid) {
    const std::vector<Provenance> expected{Provenance::kRaw, Provenance::kSinkMedian};
    AggregatedSeries out;
    for (const auto& r : rounds) {
        if (r.provenance != expected) {
            throw ConfigError("round_median expects sink_median series (raw -> sink_median), got another chain");
        }
    }
    if (!rounds.empty()) {
        out.metric = rounds.front().metric;
        out.variant = rounds.front().variant;
    }
    out.provenance = {Provenance::kRaw, Provenance::kSinkMedian, Provenance::kRoundMedian};
    std::map<std::int64_t, std::vector<double>> at;
    for (auto ts : grid) {
        at[ts];
    }
    for (const auto& r : rounds) {
        for (const auto& p : r.points) {
            if (grid.empty() || at.count(p.timestamp_ms)) {
                at[p.timestamp_ms].push_back(p.value);
            }
        }
    }
    for (const auto& [ts, values] : at) {
        if (values.empty()) {
            out.gaps.push_back(ts);
        } else {
            out.points.push_back({ts, median(values), static_cast<int>(values.size())});
        }
    }
    return out;
}

double ewma_alpha(double span_s, std::int64_t step_ms) {
    if (!(span_s >= 1.0) || step_ms <= 0) {
        throw RangeError("ewma span must be >= 1 and the step positive");
    }
    return 2.0 / (span_s * 1000.0 / static_cast<double>(step_ms) + 1.0);
}

AggregatedSeries ewma(const AggregatedSeries& series, double span_s, std::int64_t step_ms, bool allow_any) {
    if (series.points.empty()) {
        throw RangeError("ewma of an empty series");
    }
    if (!allow_any && (series.provenance.empty() || series.provenance.back() != Provenance::kRoundMedian)) {
        throw ConfigError("ewma expects a round_median series");
    }
    const double alpha = std::min(1.0, ewma_alpha(span_s, step_ms));
    AggregatedSeries out = series;
    out.provenance.push_back(Provenance::kEwma);
    double y = series.points.front().value;
    for (auto& p : out.points) {
        const double x = p.value;
        y = std::clamp(y + alpha * (x - y), std::min(x, y), std::max(x, y));
        p.value = y;
    }
    return out;
}

}// namespace streamtrial::analysis
