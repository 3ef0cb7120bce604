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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

#include <streamtrial/analysis/aggregate.hpp>
#include <streamtrial/analysis/compare.hpp>
#include <streamtrial/analysis/stats.hpp>
#include <streamtrial/common/hash.hpp>
#include <streamtrial/common/random.hpp>
#include <streamtrial/engine/pipeline.hpp>
#include <streamtrial/orchestrator/artifacts.hpp>
#include <streamtrial/orchestrator/deployment.hpp>
#include <streamtrial/orchestrator/experiment.hpp>
#include <streamtrial/orchestrator/plan.hpp>
#include <streamtrial/workload/generator.hpp>
#include <streamtrial/workload/load_model.hpp>

#include <harness.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace streamtrial;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

orchestrator::ExperimentPlan checkpoint_plan() {
    return orchestrator::parse_plan(slurp(fs::path(STREAMTRIAL_SOURCE_DIR) / "plans" / "checkpoint_interval.json"));
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("streamtrial_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Independent oracles.
double naive_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::vector<double> naive_ewma(const std::vector<double>& x, double alpha) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = i == 0 ? x[0] : alpha * x[i] + (1.0 - alpha) * y[i - 1];
    }
    return y;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

// Shared runs of the checkpoint plan.
struct ReferenceRuns {
    orchestrator::ExperimentPlan plan;
    fs::path root;
    orchestrator::RunResult first;
    orchestrator::RunResult second;
    double first_wall_s = 0.0;
};

ReferenceRuns& reference_runs() {
    static ReferenceRuns runs = [] {
        ReferenceRuns r;
        r.plan = checkpoint_plan();
        r.root = scratch("reference");
        const auto t0 = std::chrono::steady_clock::now();
        r.first = orchestrator::run_experiment(r.plan, r.root / "first");
        r.first_wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        r.second = orchestrator::run_experiment(r.plan, r.root / "second");
        return r;
    }();
    return runs;
}

// 1 -------------------------------------------------------------------------

Verdict latency_trend() {
    auto& runs = reference_runs();
    const auto& report = runs.first.analysis.report;
    const auto& s = report.variant("short");
    const auto& m = report.variant("medium");
    const auto& l = report.variant("long");
    if (!s.latency_ms || !m.latency_ms || !l.latency_ms) {
        return {false, "missing latency"};
    }
    auto iqr = [](const analysis::VariantSummary& v) { return v.latency_round_iqr.value_or(INFINITY); };
    const double gap1 = *s.latency_ms - *m.latency_ms;
    const double gap2 = *m.latency_ms - *l.latency_ms;
    const double bound1 = 2.0 * std::max(iqr(s), iqr(m));
    const double bound2 = 2.0 * std::max(iqr(m), iqr(l));
    const bool pass = gap1 > bound1 && gap2 > bound2 && runs.first_wall_s < 300.0;
    return {pass, "L(1000)=" + fmt(*s.latency_ms) + " L(20000)=" + fmt(*m.latency_ms) + " L(120000)="
                      + fmt(*l.latency_ms) + " ms; gaps " + fmt(gap1) + " > " + fmt(bound1) + ", " + fmt(gap2)
                      + " > " + fmt(bound2) + "; wall-clock " + fmt(runs.first_wall_s, 1) + " s < 300 s"};
}

// 2 -------------------------------------------------------------------------

orchestrator::ExperimentPlan tradeoff_plan() {
    auto p = checkpoint_plan();
    p.experiment_id = "tradeoff";
    p.rounds = 1;
    p.round_duration_s = 10'800;
    return p;
}

Verdict recovery_tradeoff() {
    // 5,510,500 ms is 500, 10,500 and 110,500 ms past the last checkpoint trigger of each interval.
    auto p = tradeoff_plan();
    p.scenario.name = "fixed-kill";
    p.scenario.events.push_back({5'510'500, chaos::FaultKind::kWorkerKill, 0, 0, 1.0});
    orchestrator::Experiment kill(p);
    kill.run();
    std::map<std::string, double> recovery;
    for (const auto& r : kill.injections()) {
        if (r.recovery) {
            recovery[r.pipeline_id] = r.recovery->recovery_time_ms;
        }
    }
    const bool measured = recovery.size() == 3 && recovery["long"] > recovery["medium"]
                          && recovery["medium"] > recovery["short"];

    auto q = tradeoff_plan();
    orchestrator::Experiment quiet(q);
    quiet.run();
    const auto start = orchestrator::round_start_ms(q, 1);
    const auto end = start + q.round_duration_s * 1000;
    DeterministicRng rng(2021);
    std::vector<std::int64_t> times;
    for (int i = 0; i < 1000; ++i) {
        times.push_back(start + 120'000 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(end - start - 120'000))));
    }
    std::map<std::string, double> expected;
    std::map<std::string, double> stderr_of;
    for (const auto* id : {"short", "medium", "long"}) {
        std::vector<double> b;
        for (auto t : times) {
            b.push_back(static_cast<double>(quiet.pipeline(id).backlog_if_failed_at(t)));
        }
        expected[id] = mean(b);
        double var = 0.0;
        for (double x : b) {
            var += (x - expected[id]) * (x - expected[id]);
        }
        stderr_of[id] = std::sqrt(var / static_cast<double>(b.size() - 1) / static_cast<double>(b.size()));
    }
    const bool monotone = expected["short"] < expected["medium"] && expected["medium"] < expected["long"];
    return {measured && monotone,
            "recovery ms 120000:" + fmt(recovery["long"], 1) + " > 20000:" + fmt(recovery["medium"], 1)
                + " > 1000:" + fmt(recovery["short"], 1) + "; E[backlog] over 1000 failure times 1000:"
                + fmt(expected["short"]) + "+-" + fmt(stderr_of["short"]) + " < 20000:" + fmt(expected["medium"])
                + "+-" + fmt(stderr_of["medium"]) + " < 120000:" + fmt(expected["long"]) + "+-"
                + fmt(stderr_of["long"]) + " records"};
}

// 3 -------------------------------------------------------------------------

Verdict resource_trend() {
    auto& runs = reference_runs();
    const auto layout = orchestrator::layout_for(runs.plan);
    const auto step = layout.sample_interval_ms;
    std::vector<std::int64_t> grid;
    for (std::int64_t t = (layout.warmup_ms + step - 1) / step * step; t < layout.round_duration_ms; t += step) {
        grid.push_back(t);
    }
    const double span = runs.plan.analysis.ewma_span_s;

    double worst_smoothed = 1.0;
    double worst_raw = 1.0;
    std::string worst_at;
    int series_checked = 0;
    for (const auto& v : layout.variants) {
        metrics::MetricsStore store;
        std::istringstream in(slurp(runs.first.dir / "metrics" / (v.pipeline_id + ".csv")));
        store.import_csv(in);
        auto aggregate = [&](const std::string& metric, const metrics::Tags& extra) {
            std::vector<analysis::AggregatedSeries> rounds;
            for (std::size_t r = 0; r < layout.round_starts_ms.size(); ++r) {
                metrics::Tags filter = extra;
                filter["pipeline_id"] = v.pipeline_id;
                filter["round"] = std::to_string(r + 1);
                const auto start = layout.round_starts_ms[r];
                rounds.push_back(analysis::sink_median(
                    store.query_range({metric, filter, start, start + layout.round_duration_ms}), metric, v.name, start));
            }
            const auto rm = analysis::round_median(rounds, grid);
            return std::pair{rm.values(), analysis::ewma(rm, span, step).values()};
        };
        const auto [thr_raw, thr] = aggregate(metrics::series::kInputThroughput, {});
        for (const auto* metric : {metrics::series::kCpu, metrics::series::kHeap}) {
            for (int w = 0; w < runs.plan.production.config.worker_count; ++w) {
                const auto [raw, smooth] =
                    aggregate(metric, {{"role", "worker"}, {"instance", "worker-" + std::to_string(w)}});
                const double rho = analysis::spearman(smooth, thr);
                worst_raw = std::min(worst_raw, analysis::spearman(raw, thr_raw));
                ++series_checked;
                if (rho < worst_smoothed) {
                    worst_smoothed = rho;
                    worst_at = v.name + "/" + metric + "/worker-" + std::to_string(w);
                }
            }
        }
    }
    const auto& report = runs.first.analysis.report;
    const double s = report.variant("short").cumulative_cpu_pct_s.value_or(0);
    const double m = report.variant("medium").cumulative_cpu_pct_s.value_or(0);
    const double l = report.variant("long").cumulative_cpu_pct_s.value_or(0);
    const bool pass = worst_smoothed > 0.8 && s > m && m > l;
    return {pass, "min Spearman over " + std::to_string(series_checked) + " per-worker series " + fmt(worst_smoothed, 3)
                      + " (" + worst_at + ") > 0.8, unsmoothed min " + fmt(worst_raw, 3)
                      + "; cumulative cpu %s 1000:" + fmt(s, 0) + " > 20000:" + fmt(m, 0) + " > 120000:" + fmt(l, 0)};
}

// 4 -------------------------------------------------------------------------

Verdict load_model() {
    const workload::LoadModel day;// 25,000..75,000 over 24 h, trough at t = 0
    const auto plan = checkpoint_plan();
    const auto& half = plan.workload.load;
    bool extrema = workload::target_vehicle_count(day, 0.0) == 25'000
                   && workload::target_vehicle_count(day, 43'200.0) == 75'000
                   && workload::target_vehicle_count(half, 0.0) == 25'000
                   && workload::target_vehicle_count(half, half.period_s / 2.0) == 75'000;
    std::int64_t lo = INT64_MAX, hi = INT64_MIN;
    for (int t = 0; t <= 86'400; ++t) {
        const auto c = workload::target_vehicle_count(day, t);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    extrema = extrema && lo == 25'000 && hi == 75'000;

    const auto scaled = orchestrator::scaled_workload(plan);
    workload::TrafficGenerator gen(scaled, plan.seed);
    std::int64_t min_count = INT64_MAX, max_count = INT64_MIN, steps = 0;
    bool inside = true;
    for (std::int64_t t = 0; t < plan.round_duration_s; ++t, ++steps) {
        const auto n = static_cast<std::int64_t>(gen.step(t).size());
        min_count = std::min(min_count, n);
        max_count = std::max(max_count, n);
        inside = inside && n >= scaled.load.v_min && n <= scaled.load.v_max;
    }
    return {extrema && inside, "full-scale extrema " + std::to_string(lo) + "/" + std::to_string(hi)
                                   + "; " + std::to_string(steps) + " scaled steps in [" + std::to_string(min_count)
                                   + ", " + std::to_string(max_count) + "] within [" + std::to_string(scaled.load.v_min)
                                   + ", " + std::to_string(scaled.load.v_max) + "]"};
}

// 5 -------------------------------------------------------------------------

Verdict same_input() {
    auto& runs = reference_runs();
    bool equal = true;
    std::size_t compared = 0;
    for (const auto& r : runs.first.rounds) {
        for (const auto& p : r.pipelines) {
            equal = equal && p.input_hash == r.pipelines.front().input_hash && p.records == r.pipelines.front().records;
            ++compared;
        }
    }
    const auto manifest = slurp(runs.first.dir / "manifest.json");
    const bool listed = manifest.find("input_hashes") != std::string::npos;
    return {equal && listed && runs.first.rounds.size() == static_cast<std::size_t>(runs.plan.rounds),
            std::to_string(compared) + " (round, pipeline) input hashes over " + std::to_string(runs.first.rounds.size())
                + " rounds, all equal within each round"};
}

// 6 -------------------------------------------------------------------------

Verdict correctness_oracle() {
    int cases = 0, failures = 0, kills = 0;
    std::size_t max_messages = 0;
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        DeterministicRng rng(seed * 104'729);
        const auto msgs = testing::random_trace(200 + rng.below(801), 600, seed);
        max_messages = std::max(max_messages, msgs.size());
        engine::ConfigSet c;
        c.parallelism = 4;
        c.worker_count = 4;
        c.checkpoint_interval_ms = 1'000 + static_cast<std::int64_t>(rng.below(120'000));
        c.window_length_ms = 60'000;
        c.max_restarts = 1'000;
        bus::StreamBus bus;
        metrics::MetricsStore store;
        bus.create_topic("in", 8);
        testing::feed(bus, "in", msgs);
        engine::PipelineSpec spec{"p", "ns", c};
        engine::Pipeline pipeline(spec, bus, store, nullptr);
        pipeline.begin_round({1, "in", 0, 600'000, 0});
        // Seed 1 is failure-free; the rest schedule up to 8 kills, some during recovery.
        const int n = seed == 1 ? 0 : 1 + static_cast<int>(rng.below(8));
        std::int64_t at = 0;
        for (int k = 0; k < n; ++k) {
            at = std::min<std::int64_t>(599'999, at + 1 + static_cast<std::int64_t>(rng.below(k % 3 == 2 ? 1'500 : 150'000)));
            const int worker = static_cast<int>(rng.below(4));
            pipeline.schedule_action(at, [worker](engine::Pipeline& p, std::int64_t now) {
                if (!p.worker_down(worker, now)) {
                    p.fail_and_recover(now, worker);
                }
            });
        }
        pipeline.advance(600'000);
        pipeline.end_round();
        kills += static_cast<int>(pipeline.recoveries().size());
        const auto rows = pipeline.store()->rows();
        const bool ok = testing::identities(rows) == testing::brute_force_counts(msgs, c.window_length_ms)
                        && rows.size() == testing::identities(rows).size();
        failures += ok ? 0 : 1;
        ++cases;
    }
    return {failures == 0, std::to_string(cases) + " traces of <= " + std::to_string(max_messages)
                               + " messages over 10 min, " + std::to_string(kills) + " recoveries, "
                               + std::to_string(failures) + " mismatches against brute-force group-by"};
}

// 7 -------------------------------------------------------------------------

Verdict aggregation_oracles() {
    DeterministicRng rng(77);
    int sink_checks = 0, round_checks = 0;
    bool sink_ok = true, round_ok = true;
    const std::int64_t step = 1'000;
    const int steps = 500;
    std::vector<analysis::AggregatedSeries> rounds;
    std::map<std::int64_t, std::vector<double>> per_time_round_values;
    for (int r = 0; r < 5; ++r) {
        const std::int64_t origin = 10'000'000LL * (r + 1);
        std::vector<metrics::MetricPoint> raw;
        std::map<std::int64_t, std::vector<double>> by_time;
        for (int k = 0; k < steps; ++k) {
            if (rng.below(20) == 0) {
                continue;// missing sample
            }
            const int replicas = 1 + static_cast<int>(rng.below(8));
            for (int s = 0; s < replicas; ++s) {
                const double value = std::round(rng.uniform(10.0, 500.0) * 8.0) / 8.0;
                raw.push_back({"latency_ms", {{"sink_index", std::to_string(s)}}, origin + k * step, value});
                by_time[k * step].push_back(value);
            }
        }
        const auto series = analysis::sink_median(raw, "latency_ms", "v", origin);
        for (const auto& pt : series.points) {
            const double expect = naive_median(by_time.at(pt.timestamp_ms));
            sink_ok = sink_ok && pt.value == expect;
            per_time_round_values[pt.timestamp_ms].push_back(expect);
            ++sink_checks;
        }
        sink_ok = sink_ok && series.points.size() == by_time.size();
        rounds.push_back(series);
    }
    std::vector<std::int64_t> grid;
    for (int k = 0; k < steps; ++k) {
        grid.push_back(k * step);
    }
    const auto rm = analysis::round_median(rounds, grid);
    for (const auto& pt : rm.points) {
        round_ok = round_ok && pt.value == naive_median(per_time_round_values.at(pt.timestamp_ms));
        ++round_checks;
    }
    round_ok = round_ok && rm.points.size() == per_time_round_values.size();

    const double span = 37.0;
    const auto smoothed = analysis::ewma(rm, span, step).values();
    const auto expect = naive_ewma(rm.values(), 2.0 / (span + 1.0));
    double worst_rel = 0.0;
    for (std::size_t i = 0; i < expect.size(); ++i) {
        worst_rel = std::max(worst_rel, std::abs(smoothed[i] - expect[i]) / std::abs(expect[i]));
    }
    const bool identity = analysis::ewma(rm, 1.0, step).values() == rm.values();
    auto constant = rm;
    for (auto& pt : constant.points) {
        pt.value = 42.5;
    }
    const auto fixed = analysis::ewma(constant, span, step).values();
    const bool fixed_point = std::all_of(fixed.begin(), fixed.end(), [](double v) { return v == 42.5; });
    const bool pass = sink_ok && round_ok && worst_rel <= 1e-9 && identity && fixed_point;
    return {pass, std::to_string(sink_checks) + " sink medians and " + std::to_string(round_checks)
                      + " round medians exact; EWMA max relative error " + fmt(worst_rel * 1e12, 3)
                      + "e-12 <= 1e-9; span 1 identity " + (identity ? "yes" : "no") + "; constant fixed point "
                      + (fixed_point ? "yes" : "no")};
}

// 8 -------------------------------------------------------------------------

orchestrator::ExperimentPlan promotion_plan() {
    auto p = checkpoint_plan();
    p.experiment_id = "promotion";
    p.rounds = 2;
    p.round_duration_s = 900;
    p.production.history_s = 600;
    for (auto* c : {&p.production.config, &p.variants[0].config, &p.variants[1].config, &p.variants[2].config}) {
        c->window_length_ms = 60'000;
    }
    return p;
}

Verdict promotion_safety() {
    orchestrator::Experiment e(promotion_plan());
    e.run();
    auto& d = e.deployment();
    const std::string winner = "medium";
    auto expected = d.store("production")->identities();
    const auto winner_before = d.store(winner)->identities();
    const auto production_only = expected.size();
    expected.insert(winner_before.begin(), winner_before.end());
    const auto plan = orchestrator::plan_promotion(d, winner);
    const auto outcome = orchestrator::execute_promotion(d, plan, {}, [&](const std::string&) {
        for (int i = 0; i < 25; ++i) {
            d.read();
        }
    });
    const bool merged = outcome.completed && d.store(winner)->identities() == expected;

    std::set<std::string> gone;
    bool routed_to_gone = false;
    std::vector<std::string> phases;
    for (const auto& ev : d.events()) {
        if (ev.kind == "decommission") {
            gone.insert(ev.pipeline);
        }
        if (ev.kind == "route" && gone.count(ev.pipeline)) {
            routed_to_gone = true;
        }
        if (ev.kind != "route" && (phases.empty() || phases.back() != ev.kind)) {
            phases.push_back(ev.kind);
        }
    }
    const bool ordered = phases == std::vector<std::string>{"migrate", "switch", "decommission"};
    const bool switched = d.production() == winner && d.routes() == std::map<std::string, double>{{winner, 1.0}};

    orchestrator::Experiment f(promotion_plan());
    f.run();
    auto& fd = f.deployment();
    const auto routes_before = fd.routes();
    const auto fplan = orchestrator::plan_promotion(fd, winner);
    const auto aborted = orchestrator::execute_promotion(fd, fplan, {fplan.estimated_migration_records / 2});
    bool reads_ok = true;
    for (int i = 0; i < 50; ++i) {
        reads_ok = reads_ok && fd.read() == "production";
    }
    const bool unchanged = aborted.aborted && fd.routes() == routes_before && fd.production() == "production" && reads_ok;
    return {merged && !routed_to_gone && ordered && switched && unchanged && plan.estimated_migration_records > 0,
            "winner store " + std::to_string(d.store(winner)->size()) + " = |production " + std::to_string(production_only)
                + " u winner " + std::to_string(winner_before.size()) + "| after migrating "
                + std::to_string(outcome.migrated_records) + "; phases migrate>switch>decommission "
                + (ordered ? "in order" : "out of order") + "; reads to decommissioned: "
                + (routed_to_gone ? "yes" : "none") + "; aborted migration kept routing: " + (unchanged ? "yes" : "no")};
}

// 9 -------------------------------------------------------------------------

Verdict determinism() {
    auto& runs = reference_runs();
    const auto a = runs.first.dir;
    const auto b = runs.second.dir;
    const bool report = slurp(a / "report" / "report.json") == slurp(b / "report" / "report.json");
    int files = 0, same = 0;
    for (const auto& entry : fs::directory_iterator(a / "metrics")) {
        const auto name = entry.path().filename();
        ++files;
        same += fnv1a64(slurp(entry.path())) == fnv1a64(slurp(b / "metrics" / name)) ? 1 : 0;
    }
    return {report && files > 0 && same == files,
            std::string("report.json ") + (report ? "byte-identical" : "differs") + "; " + std::to_string(same) + "/"
                + std::to_string(files) + " metric CSV hashes equal"};
}

// 10 ------------------------------------------------------------------------

// Two pipelines with one configuration, each driven by its own seeded input trace (statistically
// identical load), compared by the analysis as baseline "a" and candidate "b".
Verdict statistical_gate() {
    auto plan = checkpoint_plan();
    plan.experiment_id = "gate";
    plan.rounds = 3;
    plan.round_duration_s = 1'800;
    plan.variants = {{"twin", plan.production.config}};
    auto layout = orchestrator::layout_for(plan);
    layout.variants = {{"a", "a", true, false, false}, {"b", "b", false, false, false}};

    std::vector<std::vector<metrics::MetricPoint>> runs;
    for (int i = 0; i <= 50; ++i) {
        plan.seed = 5'000 + static_cast<std::uint64_t>(i);
        orchestrator::Experiment e(plan);
        e.run();
        std::vector<metrics::MetricPoint> pts;
        for (const auto& series : e.metrics().series_names()) {
            for (auto& pt : e.metrics().query_range({series, {{"pipeline_id", i % 2 == 0 ? "production" : "twin"}}})) {
                pts.push_back(std::move(pt));
            }
        }
        runs.push_back(std::move(pts));
    }
    auto compare = [&](const std::vector<metrics::MetricPoint>& x, const std::vector<metrics::MetricPoint>& y,
                       double offset) {
        metrics::MetricsStore store;
        for (auto pt : x) {
            pt.tags["pipeline_id"] = "a";
            store.append(std::move(pt));
        }
        for (auto pt : y) {
            pt.tags["pipeline_id"] = "b";
            if (pt.series == metrics::series::kLatency) {
                pt.value *= offset;
            }
            store.append(std::move(pt));
        }
        return analysis::analyze(store, layout, plan.qos, plan.analysis).report;
    };
    int quiet = 0, detected = 0;
    double min_p = 1.0, max_p_offset = 0.0;
    for (int i = 0; i < 50; ++i) {
        const auto same = compare(runs[i], runs[i + 1], 1.0);
        const double p = same.variant("b").p_value_vs_baseline.value_or(0.0);
        quiet += p > plan.analysis.alpha ? 1 : 0;
        min_p = std::min(min_p, p);

        const auto worse = compare(runs[i], runs[i + 1], 1.5);
        const auto& b = worse.variant("b");
        const auto& a = worse.variant("a");
        const double q = b.p_value_vs_baseline.value_or(1.0);
        detected += (q <= plan.analysis.alpha && b.latency_ms && a.latency_ms && *b.latency_ms > *a.latency_ms
                     && !b.significantly_better)
                        ? 1
                        : 0;
        max_p_offset = std::max(max_p_offset, q);
    }
    return {quiet >= 45 && detected == 50,
            std::to_string(quiet) + "/50 identical-configuration pairs with p > 0.05 (min p " + fmt(min_p, 3)
                + ", need >= 45); +50% latency offset detected as worse in " + std::to_string(detected)
                + "/50 (max p " + fmt(max_p_offset, 6) + ")"};
}

}// namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"checkpoint-interval latency trend", latency_trend},
        {"latency/recovery trade-off", recovery_tradeoff},
        {"resource trend", resource_trend},
        {"load model", load_model},
        {"same-input guarantee", same_input},
        {"correctness oracle", correctness_oracle},
        {"aggregation oracles", aggregation_oracles},
        {"promotion safety", promotion_safety},
        {"determinism", determinism},
        {"statistical gate", statistical_gate},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += v.pass ? 0 : 1;
        std::cout << "AC" << i + 1 << " " << (v.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": " << v.detail
                  << std::endl;
    }
    fs::remove_all(fs::temp_directory_path() / "streamtrial_acceptance_reference");
    return failed == 0 ? 0 : 1;
}
