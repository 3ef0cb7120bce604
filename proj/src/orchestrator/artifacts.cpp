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

#include <streamtrial/analysis/report.hpp>
#include <streamtrial/common/hash.hpp>
#include <streamtrial/common/text.hpp>
#include <streamtrial/orchestrator/artifacts.hpp>

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#ifndef STREAMTRIAL_VERSION
#define STREAMTRIAL_VERSION "0.0.0"
#endif

namespace streamtrial::orchestrator {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const char* kPlanFile = "plan.json";
const char* kManifestFile = "manifest.json";
const char* kReportFile = "report/report.json";
const char* kStateFile = "promotion_state.json";

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArtifactError(path, "cannot read file");
    }
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content) || !out.flush()) {
        throw Error("cannot write " + path.string());
    }
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string rounds_csv(const std::vector<RoundSummary>& rounds) {
    std::string out = "round,pipeline_id,start_ms,end_ms,published,input_hash,records,checkpoints,missed_checkpoints,"
                      "stall_ms,restarts,recoveries,failed\n";
    for (const auto& r : rounds) {
        for (const auto& p : r.pipelines) {
            out += std::to_string(r.round) + "," + p.pipeline_id + "," + std::to_string(r.start_ms) + ","
                   + std::to_string(r.end_ms) + "," + std::to_string(r.published) + "," + to_hex(p.input_hash) + ","
                   + std::to_string(p.records) + "," + std::to_string(p.checkpoints) + ","
                   + std::to_string(p.missed_checkpoints) + "," + format_shortest(p.stall_ms) + ","
                   + std::to_string(p.restarts) + "," + std::to_string(p.recoveries) + ","
                   + (p.failed ? "true" : "false") + "\n";
        }
    }
    return out;
}

std::string injections_csv(const std::vector<chaos::InjectionRecord>& records) {
    std::string out = "pipeline_id,round,event,kind,worker,at_ms,status,reason,recovery_time_ms,backlog_records\n";
    for (const auto& r : records) {
        out += r.pipeline_id + "," + std::to_string(r.round) + "," + std::to_string(r.event_index) + ","
               + chaos::to_string(r.kind) + "," + std::to_string(r.worker) + "," + std::to_string(r.at_ms) + ","
               + (r.skipped ? "skipped" : "applied") + "," + r.reason + ","
               + (r.recovery ? format_shortest(r.recovery->recovery_time_ms) : std::string()) + ","
               + (r.recovery ? std::to_string(r.recovery->backlog_records) : std::string()) + "\n";
    }
    return out;
}

json load_state(const fs::path& run_dir) {
    const auto path = run_dir / kStateFile;
    if (!fs::exists(path)) {
        return json::object();
    }
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ArtifactError(path, std::string("malformed: ") + e.what());
    }
}

ExperimentPlan load_plan(const fs::path& run_dir) {
    const auto path = run_dir / kPlanFile;
    try {
        return parse_plan(read_file(path));
    } catch (const ValidationError& e) {
        throw ArtifactError(path, e.what());
    }
}

}// namespace

const char* version() { return STREAMTRIAL_VERSION; }

DirectoryLock::DirectoryLock(const fs::path& dir) : path_(dir / ".lock") {
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) {
        throw Error("output directory " + dir.string() + " is locked by another invocation (" + path_.string() + ")");
    }
    std::fclose(f);
}

DirectoryLock::~DirectoryLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

fs::path run_directory(const ExperimentPlan& plan, const fs::path& out_root) { return out_root / plan.experiment_id; }

std::vector<std::string> write_run_report(const fs::path& run_dir, const analysis::Analysis& a) {
    std::error_code ec;
    fs::remove_all(run_dir / "report", ec);
    std::vector<std::string> out;
    for (const auto& f : analysis::write_report(run_dir / "report", a)) {
        out.push_back("report/" + f);
    }
    return out;
}

RunResult run_experiment(const ExperimentPlan& plan, const fs::path& out_root, const Experiment::Log& log) {
    plan.validate();
    const auto dir = run_directory(plan, out_root);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error("cannot create " + dir.string() + ": " + ec.message());
    }
    DirectoryLock lock(dir);
    for (const char* stale : {"metrics", "stores", "topics", "report", kPlanFile, kManifestFile, "rounds.csv",
                              "injections.csv", kStateFile}) {
        fs::remove_all(dir / stale, ec);
    }
    const std::string started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<std::string> files{kPlanFile};
    const std::string plan_text = plan_to_json(plan);
    write_file(dir / kPlanFile, plan_text);

    RunResult result;
    result.dir = dir;
    Experiment experiment(plan, log);
    result.rounds = experiment.run();
    result.failed = experiment.failed();
    result.analysis = experiment.analyze();
    for (auto& f : experiment.teardown(dir)) {
        files.push_back(std::move(f));
    }
    write_file(dir / "rounds.csv", rounds_csv(result.rounds));
    write_file(dir / "injections.csv", injections_csv(experiment.injections()));
    files.emplace_back("rounds.csv");
    files.emplace_back("injections.csv");
    for (auto& f : write_run_report(dir, result.analysis)) {
        files.push_back(std::move(f));
    }

    json input_hashes = json::object();
    for (const auto& r : result.rounds) {
        json per = json::object();
        for (const auto& p : r.pipelines) {
            per[p.pipeline_id] = to_hex(p.input_hash);
        }
        input_hashes[std::to_string(r.round)] = per;
    }
    json artifacts = json::object();
    for (const auto& f : files) {
        artifacts[f] = to_hex(fnv1a64(read_file(dir / f)));
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const json manifest{{"schema_version", 1},
                        {"tool", "streamtrial"},
                        {"version", version()},
                        {"experiment_id", plan.experiment_id},
                        {"plan_hash", to_hex(fnv1a64(plan_text))},
                        {"seed", plan.seed},
                        {"scale_factor", plan.scale_factor},
                        {"started_at", started},
                        {"wall_clock_s", wall},
                        {"input_hashes", input_hashes},
                        {"failed", result.failed},
                        {"winner", result.analysis.report.winner ? json(*result.analysis.report.winner) : json(nullptr)},
                        {"artifacts", artifacts}};
    write_file(dir / kManifestFile, manifest.dump(2) + "\n");
    return result;
}

analysis::Analysis analyze_directory(const fs::path& run_dir) {
    const auto plan = load_plan(run_dir);
    metrics::MetricsStore store;
    std::set<std::string> failed;
    for (const auto& v : layout_for(plan).variants) {
        const auto path = run_dir / "metrics" / (v.pipeline_id + ".csv");
        if (!fs::exists(path)) {
            throw ArtifactError(path, "missing metrics export");
        }
        std::istringstream in(read_file(path));
        try {
            store.import_csv(in);
        } catch (const ParseError& e) {
            throw ArtifactError(path, e.what());
        }
        if (!store.query_range({metrics::series::kVariantFailed, {{"pipeline_id", v.pipeline_id}}}).empty()) {
            failed.insert(v.pipeline_id);
        }
    }
    return analysis::analyze(store, layout_for(plan, failed), plan.qos, plan.analysis);
}

std::unique_ptr<RestoredDeployment> restore_deployment(const fs::path& run_dir) {
    const auto plan = load_plan(run_dir);
    const auto state = load_state(run_dir);
    std::set<std::string> gone;
    std::string production = plan.production.name;
    if (state.value("promoted", false)) {
        production = state.at("production").get<std::string>();
        for (const auto& id : state.at("decommissioned")) {
            gone.insert(id.get<std::string>());
        }
    }
    auto out = std::make_unique<RestoredDeployment>();
    out->deployment = std::make_unique<Deployment>(out->bus, plan.slot_budget);
    std::vector<std::pair<std::string, engine::ConfigSet>> members{{plan.production.name, plan.production.config}};
    for (const auto& v : plan.variants) {
        members.emplace_back(v.name, v.config);
    }
    std::vector<int> slots;
    for (const auto& [id, config] : members) {
        const std::string ns = namespace_of(id);
        PipelineHandle h{id, id, ns, id == production ? Role::kProduction : Role::kTesting, HandleState::kStopped,
                         ns + ".analytics", config.instance_count()};
        auto store = std::make_shared<engine::AnalyticsStore>();
        const auto store_path = run_dir / "stores" / (id + ".csv");
        std::istringstream store_in(read_file(store_path));
        try {
            store->load(store_in);
        } catch (const Error& e) {
            throw ArtifactError(store_path, e.what());
        }
        if (gone.count(id)) {
            h.state = HandleState::kDecommissioned;
        } else {
            const auto topic_path = run_dir / "topics" / (id + ".csv");
            std::istringstream topic_in(read_file(topic_path));
            try {
                out->bus.load_dump(h.output_topic, static_cast<std::uint32_t>(config.parallelism), topic_in);
            } catch (const Error& e) {
                throw ArtifactError(topic_path, e.what());
            }
            slots.push_back(h.instances);
        }
        out->deployment->add(h, store);
    }
    out->deployment->reserve(slots);
    return out;
}

std::string describe_plan(const PromotionPlan& plan) {
    std::ostringstream out;
    if (plan.noop()) {
        out << "winner " << plan.winner << " is already production; nothing to do\n";
        return out.str();
    }
    out << "promote " << plan.winner << " replacing " << plan.production << "\n";
    out << "1. migrate\n";
    if (plan.migrations.empty()) {
        out << "   nothing to migrate\n";
    }
    for (const auto& m : plan.migrations) {
        out << "   " << m.kind << " " << m.from << " -> " << m.to << ": " << m.records.size() << " records\n";
    }
    out << "2. switch gateway " << plan.production << " -> " << plan.winner << "\n";
    out << "3. decommission";
    for (const auto& d : plan.decommission) {
        out << " " << d;
    }
    out << "\nestimated_migration_records: " << plan.estimated_migration_records << "\n";
    return out.str();
}

PromoteResult promote_directory(const fs::path& run_dir, bool execute, const PromotionFaults& faults) {
    PromoteResult result;
    const auto report = analysis::parse_report(read_file(run_dir / kReportFile));
    if (!report.winner) {
        result.status = PromoteStatus::kNoWinner;
        result.text = "report has no winner; nothing to promote\n";
        return result;
    }
    const auto state = load_state(run_dir);
    if (state.value("promoted", false)) {
        result.status = PromoteStatus::kAlreadyPromoted;
        result.text = "already promoted: production is " + state.at("production").get<std::string>() + "\n";
        return result;
    }
    auto restored = restore_deployment(run_dir);
    auto& d = *restored->deployment;
    result.plan = plan_promotion(d, *report.winner);
    result.text = describe_plan(result.plan);
    if (!execute) {
        result.status = PromoteStatus::kPlanned;
        return result;
    }
    auto reads = [&](const std::string&) {
        for (int i = 0; i < 3; ++i) {
            d.read();
        }
    };
    reads("start");
    result.outcome = execute_promotion(d, result.plan, faults, reads);
    result.events = d.events();
    if (result.outcome.aborted) {
        result.status = PromoteStatus::kAborted;
        result.text += "aborted: " + result.outcome.reason + "; gateway unchanged\n";
        return result;
    }
    const auto winner = d.handle(result.plan.winner);
    std::ostringstream store_csv, topic_csv;
    d.store(winner.pipeline_id)->dump(store_csv);
    restored->bus.dump(winner.output_topic, topic_csv);
    write_file(run_dir / "stores" / (winner.pipeline_id + ".csv"), store_csv.str());
    write_file(run_dir / "topics" / (winner.pipeline_id + ".csv"), topic_csv.str());

    json events = json::array();
    for (const auto& e : result.events) {
        events.push_back({{"seq", e.seq}, {"kind", e.kind}, {"pipeline", e.pipeline}, {"detail", e.detail}});
    }
    json decommissioned = json::array();
    for (const auto& h : d.handles()) {
        if (h.state == HandleState::kDecommissioned) {
            decommissioned.push_back(h.pipeline_id);
        }
    }
    const json doc{{"promoted", true},
                   {"production", result.plan.winner},
                   {"previous_production", result.plan.production},
                   {"decommissioned", decommissioned},
                   {"routes", d.routes()},
                   {"migrated_records", result.outcome.migrated_records},
                   {"events", events}};
    write_file(run_dir / kStateFile, doc.dump(2) + "\n");
    result.status = PromoteStatus::kPromoted;
    result.text += "promoted " + result.plan.winner + ": " + std::to_string(result.outcome.migrated_records)
                   + " records migrated\n";
    return result;
}

std::string describe_provisioning(const ExperimentPlan& plan) {
    std::ostringstream out;
    int slots = plan.production.config.instance_count();
    for (const auto& v : plan.variants) {
        slots += v.config.instance_count();
    }
    out << "experiment " << plan.experiment_id << ": " << plan.variants.size() + 1 << " pipelines, " << slots
        << " of " << plan.slot_budget << " slots" << (slots > plan.slot_budget ? " (exceeds budget)" : "") << "\n";
    auto line = [&](const std::string& name, const engine::ConfigSet& c, const char* role) {
        out << "  " << name << "  namespace " << namespace_of(name) << "  role " << role << "  instances "
            << c.instance_count() << "  checkpoint_interval_ms " << c.checkpoint_interval_ms << "  parallelism "
            << c.parallelism << "\n";
    };
    line(plan.production.name, plan.production.config, "production");
    for (const auto& v : plan.variants) {
        line(v.name, v.config, "testing");
    }
    out << "rounds " << plan.rounds << " x " << plan.round_duration_s << " s, stride " << round_stride_ms(plan) / 1000
        << " s, scale_factor " << format_shortest(plan.scale_factor) << ", seed " << plan.seed << "\n";
    out << "scenario " << plan.scenario.name << " with " << plan.scenario.events.size() << " events\n";
    return out.str();
}

}// namespace streamtrial::orchestrator
