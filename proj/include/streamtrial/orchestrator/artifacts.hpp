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

#ifndef STREAMTRIAL_ORCHESTRATOR_ARTIFACTS_HPP_
#define STREAMTRIAL_ORCHESTRATOR_ARTIFACTS_HPP_

#include <streamtrial/analysis/compare.hpp>
#include <streamtrial/common/error.hpp>
#include <streamtrial/orchestrator/deployment.hpp>
#include <streamtrial/orchestrator/experiment.hpp>
#include <streamtrial/orchestrator/plan.hpp>

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace streamtrial::orchestrator {

/// A run directory file is missing or unreadable. `file()` names it.
class ArtifactError : public Error {
  public:
    ArtifactError(std::filesystem::path file, const std::string& what)
        : Error(file.string() + ": " + what), file_(std::move(file)) {}
    const std::filesystem::path& file() const { return file_; }

  private:
    std::filesystem::path file_;
};

const char* version();

/// Exclusive lock file "<dir>/.lock", removed on destruction. Throws Error when already held.
class DirectoryLock {
  public:
    explicit DirectoryLock(const std::filesystem::path& dir);
    ~DirectoryLock();
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

  private:
    std::filesystem::path path_;
};

struct RunResult {
    std::filesystem::path dir;
    analysis::Analysis analysis;
    std::vector<RoundSummary> rounds;
    std::set<std::string> failed;
};

/// `out_root/<experiment_id>`.
std::filesystem::path run_directory(const ExperimentPlan& plan, const std::filesystem::path& out_root);

/// Runs the plan and writes the run directory: plan.json, metrics/, stores/, topics/, rounds.csv,
/// injections.csv, report/ and manifest.json (checksums of every other file).
RunResult run_experiment(const ExperimentPlan& plan, const std::filesystem::path& out_root,
                         const Experiment::Log& log = {});

/// Recomputes the analysis from plan.json and metrics/*.csv alone.
analysis::Analysis analyze_directory(const std::filesystem::path& run_dir);

/// Writes report/ under `run_dir`; returns the files written relative to run_dir.
std::vector<std::string> write_run_report(const std::filesystem::path& run_dir, const analysis::Analysis& analysis);

/// Rebuilds the deployment (stores and output topics) a run directory describes. Pipelines already
/// decommissioned by an earlier promotion come back decommissioned.
struct RestoredDeployment {
    bus::StreamBus bus;
    std::unique_ptr<Deployment> deployment;
};
std::unique_ptr<RestoredDeployment> restore_deployment(const std::filesystem::path& run_dir);

enum class PromoteStatus { kPlanned, kPromoted, kAlreadyPromoted, kNoWinner, kAborted };

struct PromoteResult {
    PromoteStatus status = PromoteStatus::kNoWinner;
    PromotionPlan plan;
    PromotionOutcome outcome;
    std::vector<GatewayEvent> events;
    std::string text;// human-readable plan or outcome
};

/// Plans (and with `execute` performs) promotion of the report's winner. Execution rewrites the
/// winner's store and topic dumps and records promotion_state.json; a second execution is a no-op.
PromoteResult promote_directory(const std::filesystem::path& run_dir, bool execute, const PromotionFaults& faults = {});

std::string describe_plan(const PromotionPlan& plan);

/// Text listing of what provisioning would create.
std::string describe_provisioning(const ExperimentPlan& plan);

}// namespace streamtrial::orchestrator

#endif// STREAMTRIAL_ORCHESTRATOR_ARTIFACTS_HPP_
