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
#include <streamtrial/common/random.hpp>
#include <streamtrial/metrics/metrics_store.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <thread>

namespace streamtrial::metrics {
namespace {

TEST(MetricsStore, ReadYourWriteAndLastWriteWins) {
    MetricsStore s;
    EXPECT_TRUE(s.query_range({"latency_ms"}).empty());
    s.append({"latency_ms", {{"pipeline_id", "A"}}, 100, 1.0});
    s.append({"latency_ms", {{"pipeline_id", "A"}}, 100, 2.0});
    const auto got = s.query_range({"latency_ms", {}, 100, 101});
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].value, 2.0);
    EXPECT_EQ(s.size(), 1u);
}

TEST(MetricsStore, HalfOpenRangeAndOrdering) {
    MetricsStore s;
    s.append({"x", {{"k", "b"}}, 20, 1});
    s.append({"x", {{"k", "a"}}, 20, 2});
    s.append({"x", {{"k", "a"}}, 10, 3});
    s.append({"x", {{"k", "a"}}, 30, 4});
    const auto got = s.query_range({"x", {}, 10, 30});
    ASSERT_EQ(got.size(), 3u);
    EXPECT_EQ(got[0].timestamp_ms, 10);
    EXPECT_EQ(got[1].tags.at("k"), "a");
    EXPECT_EQ(got[2].tags.at("k"), "b");
    EXPECT_THROW(s.query_range({"x", {}, 30, 10}), ConfigError);
}

TEST(MetricsStore, TagIsolationThroughViews) {
    MetricsStore s;
    MetricsView a(s, "A"), b(s, "B");
    a.append({"cpu_pct", {{"worker", "1"}}, 0, 10});
    b.append({"cpu_pct", {{"worker", "1"}}, 0, 20});
    const auto got = a.query_range({"cpu_pct"});
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].value, 10);
    EXPECT_EQ(s.query_range({"cpu_pct", {{"pipeline_id", "B"}}}).size(), 1u);
}

TEST(MetricsStore, ConcurrentAppendsReconcile) {
    MetricsStore s;
    std::vector<std::thread> threads;
    for (int p = 0; p < 3; ++p) {
        threads.emplace_back([&s, p] {
            MetricsView v(s, "p" + std::to_string(p));
            const int n = p == 0 ? 33'334 : 33'333;
            for (int i = 0; i < n; ++i) {
                if (i % 1000 == 0) v.append_batch({{"m", {}, i, 1.0}});
                else v.append({"m", {}, i, 1.0});
            }
        });
    }
    threads.emplace_back([&s] {
        for (int i = 0; i < 50; ++i) (void)s.query_range({"m"});
    });
    for (auto& t : threads) t.join();
    EXPECT_EQ(s.query_range({"m"}).size(), 100'000u);
}

TEST(MetricsStore, ResultIndependentOfAppendOrder) {
    std::vector<MetricPoint> pts;
    DeterministicRng rng(5);
    for (int i = 0; i < 500; ++i) {
        pts.push_back({i % 2 ? "a" : "b", {{"w", std::to_string(rng.below(4))}}, static_cast<std::int64_t>(i),
                       rng.uniform01()});
    }
    MetricsStore s1, s2;
    for (const auto& p : pts) s1.append(p);
    auto shuffled = pts;
    std::reverse(shuffled.begin(), shuffled.end());
    s2.append_batch(shuffled);
    EXPECT_EQ(s1.content_hash(), s2.content_hash());
    EXPECT_EQ(s1.query_range({"a"}), s2.query_range({"a"}));
}

TEST(MetricsStore, CsvRoundTripIsLossless) {
    MetricsStore s;
    DeterministicRng rng(9);
    for (int i = 0; i < 300; ++i) {
        s.append({"latency_ms", {{"pipeline_id", "p" + std::to_string(i % 3)}, {"sink_index", std::to_string(i % 8)}},
                  static_cast<std::int64_t>(i) * 1000 - 5000, rng.uniform(-1e6, 1e6) / 3.0});
    }
    s.append({"annotation", {}, 7, 1.0 / 3.0});
    std::stringstream csv;
    EXPECT_EQ(s.export_csv(csv), 301u);
    MetricsStore back;
    EXPECT_EQ(back.import_csv(csv), 301u);
    EXPECT_EQ(back.content_hash(), s.content_hash());
    EXPECT_EQ(back.query_range({"latency_ms"}), s.query_range({"latency_ms"}));
}

TEST(MetricsStore, EmptyFilterExportsHeaderOnly) {
    MetricsStore s;
    s.append({"x", {}, 1, 1});
    std::ostringstream out;
    EXPECT_EQ(s.export_csv(out, "nothing"), 0u);
    EXPECT_EQ(out.str(), "series,timestamp_ms,value,tags\n");
}

TEST(MetricsStore, MalformedRowNamesRowAndAppendsNothing) {
    std::string csv = "series,timestamp_ms,value,tags\n";
    for (int i = 0; i < 5; ++i) csv += "x," + std::to_string(i) + ",1.5,k=v\n";
    csv += "x,6,not-a-number,k=v\n";
    std::istringstream in(csv);
    MetricsStore s;
    try {
        s.import_csv(in);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row(), 7u);
    }
    EXPECT_EQ(s.size(), 0u);
}

TEST(MetricsStore, RejectsReservedCharactersOnExport) {
    MetricsStore s;
    s.append({"x", {{"k", "a;b"}}, 1, 1});
    std::ostringstream out;
    EXPECT_THROW(s.export_csv(out), ConfigError);
}

}// namespace
}// namespace streamtrial::metrics
