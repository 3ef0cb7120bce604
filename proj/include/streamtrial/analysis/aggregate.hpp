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

#ifndef STREAMTRIAL_ANALYSIS_AGGREGATE_HPP_
#define STREAMTRIAL_ANALYSIS_AGGREGATE_HPP_

#include <streamtrial/metrics/metrics_store.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace streamtrial::analysis {

enum class Provenance { kRaw, kSinkMedian, kRoundMedian, kEwma };
const char* to_string(Provenance p);
/// Throws ConfigError on an unknown name.
Provenance parse_provenance(std::string_view name);

struct SeriesPoint {
    std::int64_t timestamp_ms = 0;
    double value = 0.0;
    int contributors = 1;// replicas or rounds behind the value
    bool operator==(const SeriesPoint&) const = default;
};

struct AggregatedSeries {
    std::string metric;
    std::string variant;
    std::vector<SeriesPoint> points;// strictly increasing timestamps
    std::vector<Provenance> provenance;
    std::vector<std::int64_t> gaps;// grid timestamps where no round had a value

    std::vector<double> values() const;
    /// Points with from_ms <= timestamp < to_ms.
    AggregatedSeries window(std::int64_t from_ms, std::int64_t to_ms) const;
    bool operator==(const AggregatedSeries&) const = default;
};

/// Median of the replica values at one timestamp.
double median_across_replicas(const std::vector<double>& values);

/// Groups raw points by timestamp (one value per replica) and takes the median of each group.
/// Timestamps are shifted by -origin_ms. Provenance becomes raw -> sink_median.
AggregatedSeries sink_median(const std::vector<metrics::MetricPoint>& raw, std::string metric, std::string variant,
                             std::int64_t origin_ms = 0);

/// Per-timestep median over rounds already reduced by sink_median and aligned to round offsets.
/// With a non-empty `grid` every grid timestamp without values becomes a gap; otherwise the grid
/// is the union of round timestamps. Throws ConfigError when an input is not a sink_median series.
AggregatedSeries round_median(const std::vector<AggregatedSeries>& rounds, const std::vector<std::int64_t>& grid = {});

/// alpha for a span given in seconds over samples `step_ms` apart: 2 / (span_s * 1000 / step_ms + 1).
double ewma_alpha(double span_s, std::int64_t step_ms);

/// y0 = x0, yi = alpha*xi + (1-alpha)*y(i-1). Requires a round_median input unless `allow_any` is set
/// (used for per-round diagnostics). Throws RangeError on an empty series or span < 1.
AggregatedSeries ewma(const AggregatedSeries& series, double span_s, std::int64_t step_ms, bool allow_any = false);

}// namespace streamtrial::analysis

#endif// STREAMTRIAL_ANALYSIS_AGGREGATE_HPP_
