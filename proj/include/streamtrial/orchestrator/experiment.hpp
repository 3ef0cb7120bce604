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

#ifndef STREAMTRIAL_ORCHESTRATOR_EXPERIMENT_HPP_
#define STREAMTRIAL_ORCHESTRATOR_EXPERIMENT_HPP_

#include <streamtrial/analysis/compare.hpp>
#include <streamtrial/bus/stream_bus.hpp>
#include <streamtrial/chaos/chaos_injector.hpp>
#include <streamtrial/engine/pipeline.hpp>
#include <streamtrial/metrics/metrics_store.hpp>
#include <streamtrial/orchestrator/deployment.hpp>
#include <streamtrial/orchestrator/plan.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace streamtrial::orchestrator {

struct PipelineRoundStats {
    std::string pipeline_id;
    std::uint64_t input_hash = 0;
    std::int64_t records = 0;
    std::int64_t checkpoints = 0;// completed
    std::int64_t missed_checkpoints = 0;
    double stall_ms = 0.0;
    int restarts = 0;
    std::int64_t recoveries = 0;
    bool failed = false;
};

struct RoundSummary {
    int round = 0;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    std::int64_t published = 0;
    std::vector<PipelineRoundStats> pipelines;
};

/// Input topic of a round; round 0 is the production history.
std::string input_topic(int round);
std::string namespace_of(const std::string& pipeline_id);

/// Production first (the baseline), then the testing variants in plan order.
analysis::ExperimentLayout layout_for(const ExperimentPlan& plan, const std::set<std::string>& failed = {});

/// One experiment context: the production pipeline plus one isolated pipeline per variant, all
/// reading the same per-round input topic on one bus and writing to one metrics store.
/// Pipelines advance on their own threads between epoch barriers.
class Experiment {
  public:
    using Log = std::function<void(const std::string&)>;

    explicit Experiment(ExperimentPlan plan, Log log = {});
    ~Experiment();
    Experiment(const Experiment&) = delete;
    Experiment& operator=(const Experiment&) = delete;

    const ExperimentPlan& plan() const { return plan_; }

    /// Creates every pipeline not yet provisioned, production first (including its history).
    /// All or nothing against the slot budget: throws ResourceError and creates nothing otherwise.
    std::vector<PipelineHandle> provision();

    /// Provisions if needed, then drives every round. A variant that fails fatally is skipped in
    /// later rounds; the others continue.
    std::vector<RoundSummary> run();

    analysis::ExperimentLayout layout() const;
    analysis::Analysis analyze() const;

    /// Exports metrics/<id>.csv, stores/<id>.csv and topics/<id>.csv for every pipeline, then
    /// decommissions all testing pipelines. Returns the files written; a second call writes nothing.
    std::vector<std::string> teardown(const std::filesystem::path& dir);

    Deployment& deployment() { return deployment_; }
    const Deployment& deployment() const { return deployment_; }
    metrics::MetricsStore& metrics() { return metrics_; }
    const metrics::MetricsStore& metrics() const { return metrics_; }
    bus::StreamBus& bus() { return bus_; }
    engine::Pipeline& pipeline(const std::string& pipeline_id);
    std::vector<std::string> pipeline_ids() const;
    std::vector<chaos::InjectionRecord> injections() const;
    std::set<std::string> failed() const;
    const std::vector<RoundSummary>& rounds() const { return rounds_; }

  private:
    struct Member {
        std::string id;
        bool production = false;
        std::unique_ptr<engine::Pipeline> pipeline;
    };

    Member make_member(const std::string& name, const engine::ConfigSet& config, bool production);
    RoundSummary run_interval(int round, std::int64_t start_ms, std::int64_t end_ms, std::vector<Member*> members,
                              bool arm_chaos);
    void say(const std::string& line) const;

    ExperimentPlan plan_;
    Log log_;
    bus::StreamBus bus_;
    metrics::MetricsStore metrics_;
    Deployment deployment_;
    chaos::ChaosInjector chaos_;
    std::vector<Member> members_;
    std::vector<RoundSummary> rounds_;
    bool provisioned_ = false;
    bool torn_down_ = false;
};

}// namespace streamtrial::orchestrator

#endif// STREAMTRIAL_ORCHESTRATOR_EXPERIMENT_HPP_
