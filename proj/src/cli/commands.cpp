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
#include <streamtrial/cli/commands.hpp>
#include <streamtrial/common/error.hpp>
#include <streamtrial/common/hash.hpp>
#include <streamtrial/orchestrator/artifacts.hpp>
#include <streamtrial/workload/generator.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace streamtrial::cli {

namespace {

namespace fs = std::filesystem;
using orchestrator::ArtifactError;

struct Options {
    std::string plan;
    std::string out;
    std::string run_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> scale;
    bool dry_run = false;
    bool execute = false;
    bool verbose = false;
    int round = 1;
    std::int64_t seconds = 0;
};

std::string read_plan_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArtifactError(path, "cannot read plan");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

orchestrator::ExperimentPlan load_plan(const Options& o) {
    auto plan = orchestrator::parse_plan(read_plan_file(o.plan));
    if (o.seed) {
        plan.seed = *o.seed;
    }
    if (o.scale) {
        plan.scale_factor = *o.scale;
    }
    plan.validate();
    return plan;
}

fs::path out_root(const Options& o) {
    if (!o.out.empty()) {
        return o.out;
    }
    if (const char* env = std::getenv(kOutEnv); env && *env) {
        return env;
    }
    return "runs";
}

int report_violations(const ValidationError& e, std::ostream& err) {
    err << "invalid plan:\n";
    for (const auto& v : e.violations()) {
        err << "  " << v << "\n";
    }
    return kValidation;
}

int cmd_validate(const Options& o, std::ostream& out) {
    const auto plan = load_plan(o);
    out << "plan " << plan.experiment_id << " is valid: " << plan.variants.size() << " variants, " << plan.rounds
        << " rounds of " << plan.round_duration_s << " s\n";
    return kOk;
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
    const auto plan = load_plan(o);
    if (o.dry_run) {
        out << orchestrator::describe_provisioning(plan);
        out << "run directory " << orchestrator::run_directory(plan, out_root(o)).string() << " (dry run, nothing executed)\n";
        return kOk;
    }
    orchestrator::Experiment::Log log;
    if (o.verbose) {
        log = [&err](const std::string& line) { err << line << "\n"; };
    }
    const auto result = orchestrator::run_experiment(plan, out_root(o), log);
    out << analysis::summary_markdown(result.analysis.report);
    out << "run directory " << result.dir.string() << "\n";
    if (!result.failed.empty()) {
        err << "failed variants:";
        for (const auto& f : result.failed) {
            err << " " << f;
        }
        err << "\n";
        return kVariantFailure;
    }
    return kOk;
}

int cmd_analyze(const Options& o, std::ostream& out, bool print_summary) {
    const auto a = orchestrator::analyze_directory(o.run_dir);
    const auto files = orchestrator::write_run_report(o.run_dir, a);
    if (print_summary) {
        out << analysis::summary_markdown(a.report);
    }
    out << "wrote " << files.size() << " report files under " << (fs::path(o.run_dir) / "report").string() << "\n";
    return kOk;
}

int cmd_promote(const Options& o, std::ostream& out, std::ostream& err) {
    const auto r = orchestrator::promote_directory(o.run_dir, o.execute && !o.dry_run);
    out << r.text;
    switch (r.status) {
        case orchestrator::PromoteStatus::kNoWinner: return kNoWinner;
        case orchestrator::PromoteStatus::kAborted: err << "promotion aborted\n"; return kEnvironment;
        default: return kOk;
    }
}

int cmd_generate(const Options& o, std::ostream& out) {
    const auto plan = load_plan(o);
    const std::int64_t seconds = o.seconds > 0 ? o.seconds : plan.round_duration_s;
    const std::int64_t start_s = orchestrator::round_start_ms(plan, o.round) / 1000;
    const auto msgs = workload::generate_trace(orchestrator::scaled_workload(plan), start_s, seconds,
                                               orchestrator::trace_seed(plan, o.round));
    std::uint64_t hash = 0;
    if (o.out.empty() || o.out == "-") {
        hash = workload::write_trace(out, msgs);
    } else {
        std::ofstream file(o.out, std::ios::binary | std::ios::trunc);
        if (!file) {
            throw ArtifactError(o.out, "cannot write trace");
        }
        hash = workload::write_trace(file, msgs);
        out << "wrote " << msgs.size() << " messages to " << o.out << " (fnv1a64 " << to_hex(hash) << ")\n";
    }
    return kOk;
}

}// namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"streamtrial: A/B testing harness for IoT stream-pipeline configurations", "streamtrial"};
    app.require_subcommand(1);
    app.set_version_flag("--version", orchestrator::version());
    Options o;

    auto* validate = app.add_subcommand("validate", "Check a plan against the strict schema");
    validate->add_option("--plan,plan", o.plan, "Plan file")->required();

    auto* run_cmd = app.add_subcommand("run", "Run an experiment plan");
    run_cmd->add_option("--plan,plan", o.plan, "Plan file")->required();
    run_cmd->add_option("--out", o.out, std::string("Output root (default $") + kOutEnv + " or ./runs)");
    run_cmd->add_option("--seed", o.seed, "Override the plan seed");
    run_cmd->add_option("--scale", o.scale, "Override the plan scale_factor");
    run_cmd->add_flag("--dry-run", o.dry_run, "Print the provisioning plan and stop");
    run_cmd->add_flag("-v,--verbose", o.verbose, "Progress on stderr");

    auto* analyze = app.add_subcommand("analyze", "Recompute the report from a run directory's exports");
    analyze->add_option("--run,run_dir", o.run_dir, "Run directory")->required();
    auto* report = app.add_subcommand("report", "Recompute the report and print the summary table");
    report->add_option("--run,run_dir", o.run_dir, "Run directory")->required();

    auto* promote = app.add_subcommand("promote", "Plan or execute promotion of the winner");
    promote->add_option("--run,run_dir", o.run_dir, "Run directory")->required();
    auto* exec_flag = promote->add_flag("--execute", o.execute, "Perform migrate, switch and decommission");
    promote->add_flag("--dry-run", o.dry_run, "Print the promotion plan only (default)")->excludes(exec_flag);

    auto* generate = app.add_subcommand("generate", "Write the input trace of one round");
    generate->add_option("--plan,plan", o.plan, "Plan file")->required();
    generate->add_option("--round", o.round, "Round number")->check(CLI::PositiveNumber);
    generate->add_option("--seconds", o.seconds, "Trace length (default: round duration)");
    generate->add_option("--out", o.out, "Trace file (default stdout)");
    generate->add_option("--seed", o.seed, "Override the plan seed");
    generate->add_option("--scale", o.scale, "Override the plan scale_factor");

    std::vector<std::string> storage{"streamtrial"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) {
        argv.push_back(s.data());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (*validate) return cmd_validate(o, out);
        if (*run_cmd) return cmd_run(o, out, err);
        if (*analyze) return cmd_analyze(o, out, false);
        if (*report) return cmd_analyze(o, out, true);
        if (*promote) return cmd_promote(o, out, err);
        if (*generate) return cmd_generate(o, out);
    } catch (const ValidationError& e) {
        return report_violations(e, err);
    } catch (const orchestrator::ResourceError& e) {
        err << "provisioning rejected: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kEnvironment;
    }
    return kValidation;
}

}// namespace streamtrial::cli
