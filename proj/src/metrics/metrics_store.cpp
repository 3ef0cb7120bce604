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
#include <streamtrial/common/hash.hpp>
#include <streamtrial/common/text.hpp>
#include <streamtrial/metrics/metrics_store.hpp>

#include <algorithm>
#include <bit>
#include <istream>
#include <ostream>

namespace streamtrial::metrics {

namespace {

std::string series_key(const std::string& name, const std::string& tag_string) { return name + '\x1f' + tag_string; }

bool matches(const Tags& tags, const Tags& filter) {
    for (const auto& [k, v] : filter) {
        auto it = tags.find(k);
        if (it == tags.end() || it->second != v) {
            return false;
        }
    }
    return true;
}

void check_csv_safe(const std::string& s, const char* what) {
    if (s.find_first_of(",;=\n\r") != std::string::npos) {
        throw ConfigError(std::string("metrics export: ") + what + " '" + s + "' contains a reserved character");
    }
}

}// namespace

std::string canonical_tags(const Tags& tags) {
    std::string out;
    for (const auto& [k, v] : tags) {
        if (!out.empty()) {
            out += ';';
        }
        out += k;
        out += '=';
        out += v;
    }
    return out;
}

void MetricsStore::append(MetricPoint point) {
    std::lock_guard lock(mutex_);
    append_locked(std::move(point));
}

void MetricsStore::append_batch(std::vector<MetricPoint> points) {
    std::lock_guard lock(mutex_);
    for (auto& p : points) {
        append_locked(std::move(p));
    }
}

void MetricsStore::append_locked(MetricPoint&& point) {
    auto tag_string = canonical_tags(point.tags);
    auto key = series_key(point.series, tag_string);
    auto it = series_.find(key);
    if (it == series_.end()) {
        by_name_[point.series].push_back(key);
        Series s{point.series, std::move(point.tags), std::move(tag_string), {}, true};
        it = series_.emplace(std::move(key), std::move(s)).first;
    }
    auto& samples = it->second.samples;
    if (!samples.empty() && samples.back().timestamp_ms >= point.timestamp_ms) {
        it->second.normalized = false;
        dirty_ = true;
    }
    samples.push_back(Sample{point.timestamp_ms, next_seq_++, point.value});
}

void MetricsStore::normalize_locked() const {
    if (!dirty_) {
        return;
    }
    for (auto& [_, s] : series_) {
        if (s.normalized) {
            continue;
        }
        std::stable_sort(s.samples.begin(), s.samples.end(), [](const Sample& a, const Sample& b) {
            return a.timestamp_ms < b.timestamp_ms || (a.timestamp_ms == b.timestamp_ms && a.seq < b.seq);
        });
        std::vector<Sample> dedup;
        dedup.reserve(s.samples.size());
        for (const auto& sample : s.samples) {
            if (!dedup.empty() && dedup.back().timestamp_ms == sample.timestamp_ms) {
                dedup.back() = sample;// last write wins
            } else {
                dedup.push_back(sample);
            }
        }
        s.samples = std::move(dedup);
        s.normalized = true;
    }
    dirty_ = false;
}

std::vector<MetricPoint> MetricsStore::query_range(const RangeQuery& query) const {
    if (query.from_ms > query.to_ms) {
        throw ConfigError("query_range: from_ms must not exceed to_ms");
    }
    std::lock_guard lock(mutex_);
    normalize_locked();
    struct Hit {
        std::int64_t ts;
        const Series* series;
        double value;
    };
    std::vector<Hit> hits;
    auto names = by_name_.find(query.series);
    if (names == by_name_.end()) {
        return {};
    }
    for (const auto& key : names->second) {
        const auto& s = series_.at(key);
        if (!matches(s.tags, query.filter)) {
            continue;
        }
        auto lo = std::lower_bound(s.samples.begin(), s.samples.end(), query.from_ms,
                                   [](const Sample& a, std::int64_t t) { return a.timestamp_ms < t; });
        for (auto it = lo; it != s.samples.end() && it->timestamp_ms < query.to_ms; ++it) {
            hits.push_back(Hit{it->timestamp_ms, &s, it->value});
        }
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.ts != b.ts) {
            return a.ts < b.ts;
        }
        return a.series->tag_string < b.series->tag_string;
    });
    std::vector<MetricPoint> out;
    out.reserve(hits.size());
    for (const auto& h : hits) {
        out.push_back(MetricPoint{h.series->name, h.series->tags, h.ts, h.value});
    }
    return out;
}

std::size_t MetricsStore::size() const {
    std::lock_guard lock(mutex_);
    normalize_locked();
    std::size_t n = 0;
    for (const auto& [_, s] : series_) {
        n += s.samples.size();
    }
    return n;
}

std::vector<std::string> MetricsStore::series_names() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [name, _] : by_name_) {
        out.push_back(name);
    }
    return out;
}

std::size_t MetricsStore::export_csv(std::ostream& out, const std::string& series, const Tags& filter) const {
    std::lock_guard lock(mutex_);
    normalize_locked();
    out << "series,timestamp_ms,value,tags\n";
    std::size_t rows = 0;
    for (const auto& [name, keys] : by_name_) {
        if (!series.empty() && name != series) {
            continue;
        }
        std::vector<const Series*> selected;
        for (const auto& key : keys) {
            const auto& s = series_.at(key);
            if (matches(s.tags, filter)) {
                selected.push_back(&s);
            }
        }
        std::sort(selected.begin(), selected.end(),
                  [](const Series* a, const Series* b) { return a->tag_string < b->tag_string; });
        for (const auto* s : selected) {
            check_csv_safe(s->name, "series");
            for (const auto& [k, v] : s->tags) {
                check_csv_safe(k, "tag key");
                check_csv_safe(v, "tag value");
            }
            for (const auto& sample : s->samples) {
                out << s->name << ',' << sample.timestamp_ms << ',' << format_shortest(sample.value) << ','
                    << s->tag_string << '\n';
                ++rows;
            }
        }
    }
    return rows;
}

std::size_t MetricsStore::import_csv(std::istream& in) {
    std::string line;
    std::size_t row = 0;
    std::vector<MetricPoint> points;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (row == 1) {
            if (line != "series,timestamp_ms,value,tags") {
                throw ParseError(row, "missing or unexpected header");
            }
            continue;
        }
        if (line.empty()) {
            continue;
        }
        auto fields = split(line, ',');
        if (fields.size() != 4) {
            throw ParseError(row, "expected 4 fields, got " + std::to_string(fields.size()));
        }
        if (fields[0].empty()) {
            throw ParseError(row, "empty series name");
        }
        auto ts = parse_int64(fields[1]);
        if (!ts) {
            throw ParseError(row, "malformed timestamp_ms '" + std::string(fields[1]) + "'");
        }
        auto value = parse_double(fields[2]);
        if (!value) {
            throw ParseError(row, "malformed value '" + std::string(fields[2]) + "'");
        }
        Tags tags;
        if (!fields[3].empty()) {
            for (auto kv : split(fields[3], ';')) {
                auto eq = kv.find('=');
                if (eq == std::string_view::npos || eq == 0) {
                    throw ParseError(row, "malformed tag '" + std::string(kv) + "'");
                }
                tags.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
            }
        }
        points.push_back(MetricPoint{std::string(fields[0]), std::move(tags), *ts, *value});
    }
    if (row == 0) {
        throw ParseError(1, "missing header");
    }
    const auto n = points.size();
    append_batch(std::move(points));
    return n;
}

std::uint64_t MetricsStore::content_hash() const {
    std::lock_guard lock(mutex_);
    normalize_locked();
    std::vector<const Series*> all;
    for (const auto& [_, s] : series_) {
        all.push_back(&s);
    }
    std::sort(all.begin(), all.end(), [](const Series* a, const Series* b) {
        return a->name != b->name ? a->name < b->name : a->tag_string < b->tag_string;
    });
    Fnv1a64 h;
    for (const auto* s : all) {
        h.update(s->name).update("\x1f").update(s->tag_string).update("\x1e");
        for (const auto& sample : s->samples) {
            h.update_u64(static_cast<std::uint64_t>(sample.timestamp_ms));
            h.update_u64(std::bit_cast<std::uint64_t>(sample.value));
        }
    }
    return h.digest();
}

void MetricsView::append(MetricPoint point) const {
    point.tags["pipeline_id"] = pipeline_id_;
    store_->append(std::move(point));
}

void MetricsView::append_batch(std::vector<MetricPoint> points) const {
    for (auto& p : points) {
        p.tags["pipeline_id"] = pipeline_id_;
    }
    store_->append_batch(std::move(points));
}

std::vector<MetricPoint> MetricsView::query_range(RangeQuery query) const {
    query.filter["pipeline_id"] = pipeline_id_;
    return store_->query_range(query);
}

}// namespace streamtrial::metrics
