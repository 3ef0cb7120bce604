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

#include <streamtrial/cli/commands.hpp>
#include <streamtrial/common/hash.hpp>

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace streamtrial::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("streamtrial_cli_" + std::to_string(::getpid()) + "_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Production checkpoints every second, so the calmer variant wins on latency.
std::string plan_text(const std::string& id, std::int64_t production_interval_ms) {
    return R"({
  "experiment_id": ")" + id + R"(",
  "seed": 5,
  "scale_factor": 0.001,
  "rounds": 2,
  "round_duration_s": 900,
  "sample_interval_ms": 10000,
  "workload": {"v_min": 25000, "v_max": 75000, "period_s": 43200},
  "defaults": {"parallelism": 4, "worker_count": 4, "window_length_ms": 60000},
  "production": {"config": {"checkpoint_interval_ms": )"
           + std::to_string(production_interval_ms) + R"(}, "history_s": 300},
  "variants": [{"name": "calm", "config": {"checkpoint_interval_ms": 60000}}],
  "analysis": {"ewma_span_s": 300}
}
)";
}

TEST(Cli, ValidateAcceptsAGoodPlan) {
    const auto dir = scratch("validate");
    spit(dir / "plan.json", plan_text("v", 1000));
    const auto r = invoke({"validate", (dir / "plan.json").string()});
    EXPECT_EQ(r.code, kOk) << r.err;
    EXPECT_EQ(invoke({"validate", "--plan", (dir / "plan.json").string()}).code, kOk);
    fs::remove_all(dir);
}

TEST(Cli, ValidateNamesTheBadKey) {
    const auto dir = scratch("badkey");
    spit(dir / "plan.json", R"({"variants":[{"name":"x","config":{"checkpont_interval_ms":1000}}]})");
    const auto r = invoke({"validate", (dir / "plan.json").string()});
    EXPECT_EQ(r.code, kValidation);
    EXPECT_NE((r.out + r.err).find("variants[0].config.checkpont_interval_ms"), std::string::npos) << r.err;
    spit(dir / "zero.json", R"({"rounds":0,"variants":[{"name":"x"}]})");
    EXPECT_EQ(invoke({"validate", (dir / "zero.json").string()}).code, kValidation);
    fs::remove_all(dir);
}

TEST(Cli, MissingPlanIsAnEnvironmentError) {
    EXPECT_EQ(invoke({"validate", "/nonexistent/plan.json"}).code, kEnvironment);
}

TEST(Cli, UnknownSubcommandOrFlagIsAUsageError) {
    EXPECT_EQ(invoke({"frobnicate"}).code, kValidation);
    EXPECT_EQ(invoke({"run", "--bogus"}).code, kValidation);
    EXPECT_EQ(invoke({"--help"}).code, kOk);
    const auto v = invoke({"--version"});
    EXPECT_EQ(v.code, kOk);
    EXPECT_FALSE(v.out.empty());
}

TEST(Cli, DryRunExecutesNothing) {
    const auto dir = scratch("dry");
    spit(dir / "plan.json", plan_text("dry", 1000));
    const auto r = invoke({"run", (dir / "plan.json").string(), "--out", (dir / "out").string(), "--dry-run"});
    EXPECT_EQ(r.code, kOk) << r.err;
    EXPECT_NE(r.out.find("calm"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "out" / "dry" / "metrics"));
    fs::remove_all(dir);
}

TEST(Cli, BudgetRejectionIsAValidationError) {
    const auto dir = scratch("budget");
    auto text = plan_text("budget", 1000);
    text.insert(1, "\"slot_budget\": 3,");
    spit(dir / "plan.json", text);
    const auto r = invoke({"run", (dir / "plan.json").string(), "--out", (dir / "out").string()});
    EXPECT_EQ(r.code, kValidation) << r.err;
    fs::remove_all(dir);
}

TEST(Cli, OutputRootFallsBackToEnvironment) {
    const auto dir = scratch("env");
    spit(dir / "plan.json", plan_text("env", 1000));
    ::setenv(kOutEnv, (dir / "fromenv").string().c_str(), 1);
    const auto r = invoke({"run", (dir / "plan.json").string()});
    ::unsetenv(kOutEnv);
    EXPECT_EQ(r.code, kOk) << r.err;
    EXPECT_TRUE(fs::exists(dir / "fromenv" / "env" / "manifest.json"));
    fs::remove_all(dir);
}

class CliRun : public ::testing::Test {
  protected:
    static void SetUpTestSuite() {
        root_ = new fs::path(scratch("run"));
        spit(*root_ / "plan.json", plan_text("winner", 1000));
        const auto r = invoke({"run", (*root_ / "plan.json").string(), "--out", (*root_ / "out").string()});
        ASSERT_EQ(r.code, kOk) << r.err;
    }
    static void TearDownTestSuite() {
        fs::remove_all(*root_);
        delete root_;
    }
    static fs::path dir() { return *root_ / "out" / "winner"; }
    static fs::path* root_;
};
fs::path* CliRun::root_ = nullptr;

TEST_F(CliRun, ManifestListsEveryArtifactWithItsChecksum) {
    const auto manifest = nlohmann::json::parse(slurp(dir() / "manifest.json"));
    EXPECT_EQ(manifest.at("seed"), 5);
    EXPECT_EQ(manifest.at("plan_hash"), to_hex(fnv1a64(slurp(dir() / "plan.json"))));
    const auto& artifacts = manifest.at("artifacts");
    for (const auto* f : {"plan.json", "metrics/production.csv", "metrics/calm.csv", "stores/production.csv",
                          "stores/calm.csv", "report/report.json", "report/summary.md"}) {
        ASSERT_TRUE(artifacts.contains(f)) << f;
    }
    for (const auto& [path, hex] : artifacts.items()) {
        EXPECT_EQ(hex.get<std::string>(), to_hex(fnv1a64(slurp(dir() / path)))) << path;
    }
    EXPECT_FALSE(fs::exists(dir() / ".lock"));
}

TEST_F(CliRun, AnalyzeReproducesTheReport) {
    const auto before = slurp(dir() / "report" / "report.json");
    const auto r = invoke({"analyze", dir().string()});
    EXPECT_EQ(r.code, kOk) << r.err;
    EXPECT_EQ(slurp(dir() / "report" / "report.json"), before);
    EXPECT_TRUE(fs::exists(dir() / "report" / "series" / "calm__latency_ms.csv"));
    EXPECT_TRUE(fs::exists(dir() / "report" / "series" / "production__latency_ms.csv"));
    const auto rep = invoke({"report", "--run", dir().string()});
    EXPECT_EQ(rep.code, kOk);
    EXPECT_NE(rep.out.find("Winner: calm"), std::string::npos) << rep.out;
}

TEST_F(CliRun, LockedRunDirectoryIsRefused) {
    spit(dir() / ".lock", "");
    const auto r = invoke({"run", (*root_ / "plan.json").string(), "--out", (*root_ / "out").string()});
    fs::remove(dir() / ".lock");
    EXPECT_EQ(r.code, kEnvironment);
    EXPECT_NE(r.err.find("lock"), std::string::npos);
}

TEST_F(CliRun, AnalyzeNamesAMissingExport) {
    const auto copy = *root_ / "copy";
    fs::copy(dir(), copy, fs::copy_options::recursive);
    fs::remove(copy / "metrics" / "calm.csv");
    const auto r = invoke({"analyze", copy.string()});
    EXPECT_EQ(r.code, kEnvironment);
    EXPECT_NE(r.err.find("calm.csv"), std::string::npos) << r.err;
    spit(copy / "metrics" / "calm.csv", "series,timestamp_ms,value,tags\nlatency_ms,zero,1,\n");
    const auto c = invoke({"analyze", copy.string()});
    EXPECT_EQ(c.code, kEnvironment);
    EXPECT_NE(c.err.find("calm.csv"), std::string::npos) << c.err;
}

TEST_F(CliRun, PromoteDryRunThenExecuteOnce) {
    const auto store_before = slurp(dir() / "stores" / "calm.csv");
    const auto dry = invoke({"promote", dir().string(), "--dry-run"});
    EXPECT_EQ(dry.code, kOk) << dry.err;
    const auto m = dry.out.find("1. migrate");
    const auto s = dry.out.find("2. switch");
    const auto d = dry.out.find("3. decommission");
    ASSERT_NE(m, std::string::npos) << dry.out;
    EXPECT_LT(m, s);
    EXPECT_LT(s, d);
    EXPECT_NE(dry.out.find("estimated_migration_records:"), std::string::npos);
    EXPECT_EQ(slurp(dir() / "stores" / "calm.csv"), store_before);

    const auto first = invoke({"promote", dir().string(), "--execute"});
    EXPECT_EQ(first.code, kOk) << first.err;
    const auto state = nlohmann::json::parse(slurp(dir() / "promotion_state.json"));
    EXPECT_EQ(state.at("production"), "calm");
    EXPECT_EQ(state.at("previous_production"), "production");
    const auto after = slurp(dir() / "stores" / "calm.csv");
    EXPECT_GE(after.size(), store_before.size());

    const auto second = invoke({"promote", dir().string(), "--execute"});
    EXPECT_EQ(second.code, kOk);
    EXPECT_NE(second.out.find("already promoted"), std::string::npos) << second.out;
    EXPECT_EQ(slurp(dir() / "stores" / "calm.csv"), after);
    EXPECT_EQ(invoke({"promote", dir().string(), "--execute", "--dry-run"}).code, kValidation);
}

TEST(Cli, PromoteWithoutWinnerExitsFour) {
    const auto dir = scratch("nowinner");
    spit(dir / "plan.json", plan_text("nowinner", 60000));
    ASSERT_EQ(invoke({"run", (dir / "plan.json").string(), "--out", (dir / "out").string()}).code, kOk);
    const auto r = invoke({"promote", (dir / "out" / "nowinner").string(), "--dry-run"});
    EXPECT_EQ(r.code, kNoWinner) << r.out;
    fs::remove_all(dir);
}

TEST(Cli, FatalVariantExitsThreeAndStillReports) {
    const auto dir = scratch("fatal");
    auto text = plan_text("fatal", 60000);
    const std::string needle = "\"checkpoint_interval_ms\": 60000}}]";
    text.replace(text.find(needle), needle.size(), "\"checkpoint_interval_ms\": 60000, \"max_restarts\": 0}}]");
    text.insert(1, R"("scenario": {"events": [{"at_ms": 300000, "kind": "worker_kill", "target": 0}]},)");
    spit(dir / "plan.json", text);
    const auto r = invoke({"run", (dir / "plan.json").string(), "--out", (dir / "out").string()});
    EXPECT_EQ(r.code, kVariantFailure) << r.err;
    EXPECT_TRUE(fs::exists(dir / "out" / "fatal" / "report" / "report.json"));
    fs::remove_all(dir);
}

TEST(Cli, GenerateWritesATrace) {
    const auto dir = scratch("generate");
    spit(dir / "plan.json", plan_text("gen", 1000));
    const auto r = invoke({"generate", (dir / "plan.json").string(), "--seconds", "30", "--out",
                           (dir / "trace.csv").string()});
    EXPECT_EQ(r.code, kOk) << r.err;
    EXPECT_GT(slurp(dir / "trace.csv").size(), 0u);
    fs::remove_all(dir);
}

}// namespace
}// namespace streamtrial::cli
