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
#include <streamtrial/orchestrator/artifacts.hpp>
#include <streamtrial/orchestrator/deployment.hpp>
#include <streamtrial/orchestrator/experiment.hpp>
#include <streamtrial/orchestrator/plan.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

namespace streamtrial::orchestrator {
namespace {

namespace fs = std::filesystem;

ExperimentPlan small_plan() {
    ExperimentPlan p;
    p.experiment_id = "small";
    p.seed = 11;
    p.scale_factor = 0.001;
    p.rounds = 2;
    p.round_duration_s = 600;
    p.sample_interval_ms = 10'000;
    p.workload.load = workload::LoadModel::trough_at_zero(25'000, 75'000, 43'200);
    engine::ConfigSet base;
    base.parallelism = 4;
    base.worker_count = 4;
    base.window_length_ms = 60'000;
    p.production.config = base;
    p.production.config.checkpoint_interval_ms = 60'000;
    for (auto [name, interval] : {std::pair{"a", 5'000}, std::pair{"b", 30'000}}) {
        VariantSpec v{name, base};
        v.config.checkpoint_interval_ms = interval;
        p.variants.push_back(v);
    }
    return p;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("streamtrial_orch_" + std::to_string(::getpid()) + "_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<std::string> violations_of(const std::string& text) {
    try {
        parse_plan(text);
    } catch (const ValidationError& e) {
        return e.violations();
    }
    return {};
}

bool mentions(const std::vector<std::string>& vs, const std::string& needle) {
    return std::any_of(vs.begin(), vs.end(), [&](const auto& v) { return v.find(needle) != std::string::npos; });
}

// --- plan ------------------------------------------------------------------

TEST(Plan, CanonicalJsonRoundTrips) {
    auto p = small_plan();
    p.scenario.name = "kill";
    p.scenario.events.push_back({120'000, chaos::FaultKind::kWorkerKill, 1, 0, 1.0});
    p.qos.max_latency_ms = 250.0;
    p.production.history_s = 120;
    const auto text = plan_to_json(p);
    EXPECT_EQ(parse_plan(text), p);
    EXPECT_EQ(plan_to_json(parse_plan(text)), text);
}

TEST(Plan, UnknownConfigKeyNamesItsPath) {
    const auto vs = violations_of(R"({"variants":[{"name":"x","config":{"checkpont_interval_ms":1000}}]})");
    EXPECT_TRUE(mentions(vs, "variants[0].config.checkpont_interval_ms")) << ::testing::PrintToString(vs);
}

TEST(Plan, RejectsZeroRoundsAndDuplicateNames) {
    EXPECT_TRUE(mentions(violations_of(R"({"rounds":0,"variants":[{"name":"x"}]})"), "rounds"));
    const auto vs = violations_of(R"({"variants":[{"name":"x"},{"name":"x"}]})");
    EXPECT_TRUE(mentions(vs, "variants[1].name"));
}

TEST(Plan, CollectsEveryViolation) {
    const auto vs = violations_of(R"({"rounds":0,"scale_factor":2,"variants":[]})");
    EXPECT_GE(vs.size(), 3u);
}

TEST(Plan, WrongTypeIsReported) {
    EXPECT_TRUE(mentions(violations_of(R"({"rounds":"five","variants":[{"name":"x"}]})"), "rounds"));
}

TEST(Plan, ConfigKeysCoverTheCheckpointInterval) {
    const auto keys = config_keys();
    EXPECT_NE(std::find(keys.begin(), keys.end(), "checkpoint_interval_ms"), keys.end());
}

TEST(Plan, RoundsSitWholePeriodsApart) {
    auto p = small_plan();
    const auto period = 43'200'000;
    EXPECT_EQ(round_stride_ms(p), period);
    EXPECT_EQ(round_start_ms(p, 1), 0);
    EXPECT_EQ(round_start_ms(p, 2), period);
    EXPECT_THROW(round_start_ms(p, 3), Error);
    p.production.history_s = 300;
    EXPECT_EQ(round_start_ms(p, 1), period);
    const auto [from, to] = history_range_ms(p);
    EXPECT_EQ(to - from, 300'000);
    EXPECT_LE(to, round_start_ms(p, 1));
}

TEST(Plan, TraceSeedVariesPerRoundUnlessIdentical) {
    auto p = small_plan();
    EXPECT_NE(trace_seed(p, 1), trace_seed(p, 2));
    p.identical_round_traces = true;
    EXPECT_EQ(trace_seed(p, 1), trace_seed(p, 2));
}

// --- deployment ------------------------------------------------------------

engine::WindowResult row(std::int64_t i) {
    return {i * 60'000, (i + 1) * 60'000, "car", 1 + i % 7, (i + 1) * 60'000, 0};
}

struct Fixture {
    bus::StreamBus bus;
    Deployment dep{bus, 100};
    std::shared_ptr<engine::AnalyticsStore> prod = std::make_shared<engine::AnalyticsStore>();
    std::shared_ptr<engine::AnalyticsStore> win = std::make_shared<engine::AnalyticsStore>();
    std::shared_ptr<engine::AnalyticsStore> other = std::make_shared<engine::AnalyticsStore>();

    Fixture() {
        dep.reserve({11, 11, 11});
        for (auto [id, store, role] : {std::tuple{"prod", prod, Role::kProduction}, std::tuple{"win", win, Role::kTesting},
                                       std::tuple{"other", other, Role::kTesting}}) {
            const std::string topic = std::string("out.") + id;
            bus.create_topic(topic, 1);
            dep.add({id, id, namespace_of(id), role, HandleState::kRunning, topic, 11}, store);
        }
    }
};

TEST(Deployment, ProductionTakesEveryRead) {
    Fixture f;
    EXPECT_EQ(f.dep.production(), "prod");
    EXPECT_EQ(f.dep.routes(), (std::map<std::string, double>{{"prod", 1.0}}));
    for (int i = 0; i < 20; ++i) {
        EXPECT_EQ(f.dep.read(), "prod");
    }
}

TEST(Deployment, RejectsDuplicatesAndSecondProduction) {
    Fixture f;
    auto s = std::make_shared<engine::AnalyticsStore>();
    EXPECT_THROW(f.dep.add({"win", "w2", "ns.w2", Role::kTesting, HandleState::kRunning, "t", 1}, s), ConfigError);
    EXPECT_THROW(f.dep.add({"x", "x", namespace_of("win"), Role::kTesting, HandleState::kRunning, "t", 1}, s),
                 ConfigError);
    EXPECT_THROW(f.dep.add({"p2", "p2", "ns.p2", Role::kProduction, HandleState::kRunning, "t", 1}, s), ConfigError);
}

TEST(Deployment, ReservationIsAllOrNothing) {
    Fixture f;
    EXPECT_EQ(f.dep.slots_used(), 33);
    EXPECT_THROW(f.dep.reserve({60, 10}), ResourceError);
    EXPECT_EQ(f.dep.slots_used(), 33);
    f.dep.reserve({60, 7});
    EXPECT_EQ(f.dep.slots_available(), 0);
}

TEST(Deployment, GatewayRejectsBadFractions) {
    ClientGateway g;
    EXPECT_THROW(g.set_routes({{"a", 0.5}}), ConfigError);
    EXPECT_THROW(g.set_routes({{"a", 1.5}, {"b", -0.5}}), ConfigError);
    g.set_routes({{"a", 0.25}, {"b", 0.75}});
    int a = 0;
    for (std::uint64_t i = 0; i < 4000; ++i) {
        a += g.target(i) == "a";
        EXPECT_EQ(g.target(i), g.target(i));
    }
    EXPECT_NEAR(a / 4000.0, 0.25, 0.03);
}

TEST(Deployment, DecommissionRefusesRoutedPipelineAndIsIdempotent) {
    Fixture f;
    EXPECT_THROW(f.dep.decommission("prod"), Error);
    f.dep.decommission("other");
    f.dep.decommission("other");
    EXPECT_EQ(f.dep.handle("other").state, HandleState::kDecommissioned);
    EXPECT_FALSE(f.bus.has_topic("out.other"));
    EXPECT_EQ(f.dep.slots_used(), 22);
}

TEST(Promotion, EmptyDeltaNeedsNoMigration) {
    Fixture f;
    for (int i = 0; i < 50; ++i) {
        f.prod->append(row(i));
        f.win->append(row(i));
    }
    const auto plan = plan_promotion(f.dep, "win");
    EXPECT_TRUE(plan.migrations.empty());
    EXPECT_EQ(plan.estimated_migration_records, 0);
    EXPECT_TRUE(plan.switch_gateway);
    EXPECT_EQ(plan.decommission, (std::vector<std::string>{"other", "prod"}));
}

TEST(Promotion, EstimateMatchesSetDifference) {
    Fixture f;
    for (int i = 0; i < 1000; ++i) {
        f.prod->append(row(i));
    }
    for (int i = 700; i < 1100; ++i) {
        f.win->append(row(i));
    }
    // Output records production emitted but never stored.
    for (int i = 2000; i < 2010; ++i) {
        f.bus.publish("out.prod", "k", engine::to_csv_line(row(i)), i);
    }
    f.bus.publish("out.prod", "k", engine::to_csv_line(row(5)), 1);

    std::set<engine::ResultIdentity> expected;
    const auto have = f.win->identities();
    for (const auto& id : f.prod->identities()) {
        if (!have.count(id)) {
            expected.insert(id);
        }
    }
    for (int i = 2000; i < 2010; ++i) {
        expected.insert(engine::identity_of(row(i)));
    }
    const auto plan = plan_promotion(f.dep, "win");
    EXPECT_EQ(plan.estimated_migration_records, static_cast<std::int64_t>(expected.size()));
    EXPECT_EQ(plan.estimated_migration_records, 1000 - 300 + 10);
    std::set<engine::ResultIdentity> planned;
    for (const auto& step : plan.migrations) {
        for (const auto& r : step.records) {
            planned.insert(engine::identity_of(r));
        }
    }
    EXPECT_EQ(planned, expected);
}

TEST(Promotion, WinnerEqualToProductionIsNoop) {
    Fixture f;
    f.prod->append(row(1));
    const auto plan = plan_promotion(f.dep, "prod");
    EXPECT_TRUE(plan.noop());
    EXPECT_TRUE(plan.migrations.empty());
    EXPECT_TRUE(plan.decommission.empty());
    EXPECT_THROW(plan_promotion(f.dep, "nope"), NotFound);
}

TEST(Promotion, ExecuteMergesSwitchesAndNeverRoutesToDecommissioned) {
    Fixture f;
    for (int i = 0; i < 300; ++i) {
        f.prod->append(row(i));
    }
    for (int i = 200; i < 400; ++i) {
        f.win->append(row(i));
    }
    auto expected = f.prod->identities();
    for (const auto& id : f.win->identities()) {
        expected.insert(id);
    }
    std::vector<std::string> phases;
    const auto outcome = execute_promotion(f.dep, plan_promotion(f.dep, "win"), {}, [&](const std::string& phase) {
        phases.push_back(phase);
        for (int i = 0; i < 5; ++i) {
            f.dep.read();
        }
    });
    EXPECT_TRUE(outcome.completed);
    EXPECT_EQ(outcome.migrated_records, 200);
    EXPECT_EQ(phases, (std::vector<std::string>{"migrate", "switch", "decommission"}));
    EXPECT_EQ(f.win->identities(), expected);
    EXPECT_EQ(f.dep.production(), "win");
    EXPECT_EQ(f.dep.routes(), (std::map<std::string, double>{{"win", 1.0}}));

    std::set<std::string> gone;
    for (const auto& e : f.dep.events()) {
        if (e.kind == "decommission") {
            gone.insert(e.pipeline);
        }
        if (e.kind == "route") {
            EXPECT_FALSE(gone.count(e.pipeline)) << "read routed to decommissioned " << e.pipeline;
        }
    }
    EXPECT_EQ(gone, (std::set<std::string>{"other", "prod"}));
}

TEST(Promotion, AbortedMigrationLeavesRoutingUnchanged) {
    Fixture f;
    for (int i = 0; i < 100; ++i) {
        f.prod->append(row(i));
    }
    const auto routes = f.dep.routes();
    const auto outcome = execute_promotion(f.dep, plan_promotion(f.dep, "win"), PromotionFaults{40});
    EXPECT_TRUE(outcome.aborted);
    EXPECT_FALSE(outcome.completed);
    EXPECT_EQ(f.dep.routes(), routes);
    EXPECT_EQ(f.dep.production(), "prod");
    EXPECT_EQ(f.dep.handle("other").state, HandleState::kRunning);
    for (int i = 0; i < 10; ++i) {
        EXPECT_EQ(f.dep.read(), "prod");
    }
    const auto events = f.dep.events();
    EXPECT_TRUE(std::any_of(events.begin(), events.end(), [](const auto& e) { return e.kind == "migration_aborted"; }));
    EXPECT_FALSE(std::any_of(events.begin(), events.end(), [](const auto& e) { return e.kind == "switch"; }));
}

// --- experiment ------------------------------------------------------------

TEST(Experiment, ProvisionsIsolatedNamespaces) {
    Experiment e(small_plan());
    const auto handles = e.provision();
    ASSERT_EQ(handles.size(), 3u);
    std::set<std::string> ns;
    std::set<std::string> topics;
    for (const auto& h : handles) {
        ns.insert(h.namespace_id);
        topics.insert(h.output_topic);
    }
    EXPECT_EQ(ns.size(), 3u);
    EXPECT_EQ(topics.size(), 3u);
    EXPECT_EQ(e.deployment().production(), "production");
    EXPECT_EQ(e.deployment().slots_used(), 3 * 5);
}

TEST(Experiment, BudgetRejectionCreatesNothing) {
    auto p = small_plan();
    p.slot_budget = 14;
    Experiment e(p);
    EXPECT_THROW(e.provision(), ResourceError);
    EXPECT_TRUE(e.deployment().handles().empty());
    EXPECT_TRUE(e.pipeline_ids().empty());
    EXPECT_EQ(e.deployment().slots_used(), 0);
}

class SmallRun : public ::testing::Test {
  protected:
    static void SetUpTestSuite() {
        auto p = small_plan();
        p.production.history_s = 300;
        experiment_ = new Experiment(p);
        rounds_ = experiment_->run();
    }
    static void TearDownTestSuite() {
        delete experiment_;
        experiment_ = nullptr;
    }
    static Experiment* experiment_;
    static std::vector<RoundSummary> rounds_;
};
Experiment* SmallRun::experiment_ = nullptr;
std::vector<RoundSummary> SmallRun::rounds_;

TEST_F(SmallRun, EveryVariantSeesTheSameInput) {
    ASSERT_EQ(rounds_.size(), 2u);
    std::set<std::uint64_t> per_round;
    for (const auto& r : rounds_) {
        ASSERT_EQ(r.pipelines.size(), 3u);
        for (const auto& p : r.pipelines) {
            EXPECT_EQ(p.input_hash, r.pipelines.front().input_hash) << p.pipeline_id;
            EXPECT_GT(p.records, 0);
        }
        per_round.insert(r.pipelines.front().input_hash);
        EXPECT_GT(r.published, 0);
    }
    EXPECT_EQ(per_round.size(), 2u);
}

TEST_F(SmallRun, MetricsCarryRoundTags) {
    for (const auto& id : {"a", "b"}) {
        std::set<std::string> seen;
        for (const auto& pt : experiment_->metrics().query_range({metrics::series::kLatency, {{"pipeline_id", id}}})) {
            seen.insert(pt.tags.at("round"));
        }
        EXPECT_EQ(seen, (std::set<std::string>{"1", "2"})) << id;
    }
    std::set<std::string> prod;
    for (const auto& pt :
         experiment_->metrics().query_range({metrics::series::kLatency, {{"pipeline_id", "production"}}})) {
        prod.insert(pt.tags.at("round"));
    }
    EXPECT_EQ(prod, (std::set<std::string>{"1", "2"}));
}

TEST_F(SmallRun, RoundsCoverTheirOwnTimeRange) {
    for (const auto& r : rounds_) {
        EXPECT_EQ(r.start_ms, round_start_ms(experiment_->plan(), r.round));
        EXPECT_EQ(r.end_ms - r.start_ms, 600'000);
        const auto pts = experiment_->metrics().query_range(
            {metrics::series::kInputThroughput, {{"pipeline_id", "a"}, {"round", std::to_string(r.round)}}});
        ASSERT_FALSE(pts.empty());
        EXPECT_GE(pts.front().timestamp_ms, r.start_ms);
        EXPECT_LT(pts.back().timestamp_ms, r.end_ms);
    }
}

TEST_F(SmallRun, ProductionStorePredatesTheExperiment) {
    const auto first = round_start_ms(experiment_->plan(), 1);
    const auto rows = experiment_->deployment().store("production")->rows();
    EXPECT_TRUE(std::any_of(rows.begin(), rows.end(), [&](const auto& r) { return r.window_end_ms <= first; }));
    const auto a = experiment_->deployment().store("a")->rows();
    EXPECT_TRUE(std::none_of(a.begin(), a.end(), [&](const auto& r) { return r.window_start_ms < first; }));
}

TEST_F(SmallRun, AnalysisCoversEveryPipeline) {
    const auto analysis = experiment_->analyze();
    ASSERT_EQ(analysis.report.variants.size(), 3u);
    EXPECT_EQ(analysis.report.baseline, "production");
    for (const auto& v : analysis.report.variants) {
        EXPECT_TRUE(v.latency_ms.has_value()) << v.name;
    }
}

TEST_F(SmallRun, TeardownExportsAndReleases) {
    const auto dir = scratch("teardown");
    const auto files = experiment_->teardown(dir);
    EXPECT_FALSE(files.empty());
    for (const auto& id : {"production", "a", "b"}) {
        const auto store = slurp(dir / "stores" / (std::string(id) + ".csv"));
        EXPECT_EQ(count_lines(store), experiment_->deployment().store(id)->size()) << id;
        EXPECT_TRUE(fs::exists(dir / "metrics" / (std::string(id) + ".csv")));
        EXPECT_TRUE(fs::exists(dir / "topics" / (std::string(id) + ".csv")));
    }
    EXPECT_EQ(experiment_->deployment().handle("a").state, HandleState::kDecommissioned);
    EXPECT_EQ(experiment_->deployment().handle("b").state, HandleState::kDecommissioned);
    EXPECT_EQ(experiment_->deployment().slots_used(), 5);
    EXPECT_TRUE(experiment_->teardown(dir).empty());
    EXPECT_EQ(experiment_->deployment().slots_used(), 5);
    fs::remove_all(dir);
}

TEST(Experiment, FatalVariantDoesNotStopTheOthers) {
    auto p = small_plan();
    p.variants[0].config.max_restarts = 0;
    p.scenario.name = "kill";
    p.scenario.events.push_back({200'000, chaos::FaultKind::kWorkerKill, 0, 0, 1.0});
    Experiment e(p);
    const auto rounds = e.run();
    EXPECT_EQ(e.failed(), (std::set<std::string>{"a"}));
    ASSERT_EQ(rounds.size(), 2u);
    for (const auto& s : rounds.back().pipelines) {
        if (s.pipeline_id == "b" || s.pipeline_id == "production") {
            EXPECT_FALSE(s.failed);
            EXPECT_GT(s.records, 0);
        }
    }
    const auto layout = e.layout();
    for (const auto& v : layout.variants) {
        EXPECT_EQ(v.failed, v.name == "a") << v.name;
    }
    const auto report = e.analyze().report;
    EXPECT_FALSE(report.variant("a").eligible);
}

TEST(Experiment, ChaosSkipsProductionByDefault) {
    auto p = small_plan();
    p.rounds = 1;
    p.scenario.name = "kill";
    p.scenario.events.push_back({200'000, chaos::FaultKind::kWorkerKill, 1, 0, 1.0});
    Experiment e(p);
    e.run();
    std::set<std::string> hit;
    for (const auto& r : e.injections()) {
        hit.insert(r.pipeline_id);
    }
    EXPECT_EQ(hit, (std::set<std::string>{"a", "b"}));
}

TEST(Experiment, SameSeedSameMetrics) {
    auto p = small_plan();
    p.rounds = 1;
    Experiment x(p);
    Experiment y(p);
    x.run();
    y.run();
    EXPECT_EQ(x.metrics().content_hash(), y.metrics().content_hash());
    EXPECT_EQ(x.analyze().report, y.analyze().report);
    p.seed = 12;
    Experiment z(p);
    z.run();
    EXPECT_NE(x.metrics().content_hash(), z.metrics().content_hash());
}

// --- artifacts -------------------------------------------------------------

TEST(Artifacts, LockIsExclusive) {
    const auto dir = scratch("lock");
    {
        DirectoryLock lock(dir);
        EXPECT_TRUE(fs::exists(dir / ".lock"));
        EXPECT_THROW(DirectoryLock again(dir), Error);
    }
    EXPECT_FALSE(fs::exists(dir / ".lock"));
    fs::remove_all(dir);
}

TEST(Artifacts, ProvisioningListingNamesEveryPipeline) {
    const auto text = describe_provisioning(small_plan());
    for (const auto& id : {"production", "a", "b"}) {
        EXPECT_NE(text.find(id), std::string::npos) << id;
    }
}

}// namespace
}// namespace streamtrial::orchestrator
