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

#ifndef STREAMTRIAL_METRICS_METRICS_STORE_HPP_
#define STREAMTRIAL_METRICS_METRICS_STORE_HPP_

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace streamtrial::metrics {

using Tags = std::map<std::string, std::string>;

/// Well-known series names.
namespace series {
inline constexpr const char* kLatency = "latency_ms";
inline constexpr const char* kInputThroughput = "input_throughput_msg_s";
inline constexpr const char* kCpu = "cpu_pct";
inline constexpr const char* kHeap = "heap_pct";
inline constexpr const char* kQueueLength = "queue_length";
inline constexpr const char* kRecoveryTime = "recovery_time_ms";
inline constexpr const char* kBacklog = "backlog_records";
inline constexpr const char* kCheckpointStall = "checkpoint_stall_ms";
inline constexpr const char* kCheckpointMissed = "checkpoint_missed";
inline constexpr const char* kAnnotation = "annotation";
inline constexpr const char* kRoundComplete = "round_complete";
inline constexpr const char* kVariantFailed = "variant_failed";
inline constexpr const char* kProvisioning = "provisioning_ms";
}// namespace series

struct MetricPoint {
    std::string series;
    Tags tags;
    std::int64_t timestamp_ms = 0;
    double value = 0.0;
    bool operator==(const MetricPoint&) const = default;
};

/// Exact-match tag subset filter over a half-open time range [from_ms, to_ms).
struct RangeQuery {
    std::string series;
    Tags filter;
    std::int64_t from_ms = std::numeric_limits<std::int64_t>::min();
    std::int64_t to_ms = std::numeric_limits<std::int64_t>::max();
};

/// "k=v;k=v" with keys in lexicographic order.
std::string canonical_tags(const Tags& tags);

/// Embedded time-series store. Appends and queries may run concurrently; a query sees every
/// append that completed before it started. Points with equal (series, tags, timestamp)
/// resolve last-write-wins.
class MetricsStore {
  public:
    MetricsStore() = default;
    MetricsStore(const MetricsStore&) = delete;
    MetricsStore& operator=(const MetricsStore&) = delete;

    void append(MetricPoint point);
    void append_batch(std::vector<MetricPoint> points);

    /// Ascending by timestamp, ties by canonical tag string. Throws ConfigError if from > to.
    std::vector<MetricPoint> query_range(const RangeQuery& query) const;

    /// Distinct points after last-write-wins resolution.
    std::size_t size() const;
    std::vector<std::string> series_names() const;

    /// Header "series,timestamp_ms,value,tags". An empty `series` matches every series.
    /// Rows are ordered by series, tags, timestamp. Returns the number of data rows.
    std::size_t export_csv(std::ostream& out, const std::string& series = {}, const Tags& filter = {}) const;
    /// Appends every row; throws ParseError naming the row on malformed input (nothing is appended then).
    std::size_t import_csv(std::istream& in);

    /// Order-independent digest of the resolved point set.
    std::uint64_t content_hash() const;

  private:
    struct Sample {
        std::int64_t timestamp_ms;
        std::uint64_t seq;
        double value;
    };
    struct Series {
        std::string name;
        Tags tags;
        std::string tag_string;
        std::vector<Sample> samples;
        bool normalized = true;
    };

    void append_locked(MetricPoint&& point);
    void normalize_locked() const;

    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, Series> series_;
    std::map<std::string, std::vector<std::string>> by_name_;
    std::uint64_t next_seq_ = 0;
    mutable bool dirty_ = false;
};

/// Tag-scoped view: every append carries pipeline_id, every query is restricted to it.
class MetricsView {
  public:
    MetricsView(MetricsStore& store, std::string pipeline_id) : store_(&store), pipeline_id_(std::move(pipeline_id)) {}

    void append(MetricPoint point) const;
    void append_batch(std::vector<MetricPoint> points) const;
    std::vector<MetricPoint> query_range(RangeQuery query) const;
    const std::string& pipeline_id() const { return pipeline_id_; }
    MetricsStore& store() const { return *store_; }

  private:
    MetricsStore* store_;
    std::string pipeline_id_;
};

}// namespace streamtrial::metrics

#endif// STREAMTRIAL_METRICS_METRICS_STORE_HPP_
