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

#ifndef STREAMTRIAL_ORCHESTRATOR_DEPLOYMENT_HPP_
#define STREAMTRIAL_ORCHESTRATOR_DEPLOYMENT_HPP_

#include <streamtrial/bus/stream_bus.hpp>
#include <streamtrial/common/error.hpp>
#include <streamtrial/engine/analytics_store.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace streamtrial::orchestrator {

enum class Role { kProduction, kTesting };
enum class HandleState { kProvisioning, kRunning, kRecovering, kStopped, kDecommissioned };
const char* to_string(Role role);
const char* to_string(HandleState state);

struct PipelineHandle {
    std::string pipeline_id;
    std::string variant;
    std::string namespace_id;
    Role role = Role::kTesting;
    HandleState state = HandleState::kProvisioning;
    std::string output_topic;
    int instances = 0;
};

/// Thrown when a provisioning request does not fit the slot budget.
class ResourceError : public Error {
  public:
    using Error::Error;
};

/// Simulated worker-slot accounting.
class ResourcePool {
  public:
    explicit ResourcePool(int capacity) : capacity_(capacity) {}

    /// All or nothing: either every request is granted or none is.
    void reserve_all(const std::vector<int>& requests);
    void release(int slots);
    int capacity() const { return capacity_; }
    int used() const { return used_; }
    int available() const { return capacity_ - used_; }

  private:
    int capacity_;
    int used_ = 0;
};

struct GatewayEvent {
    std::int64_t seq = 0;
    std::string kind;// route, migrate, migration_aborted, switch, decommission
    std::string pipeline;
    std::string detail;
};

/// Routing table for client reads. Every change is a single swap of the whole table.
class ClientGateway {
  public:
    /// Fractions must be positive and sum to 1.
    void set_routes(std::map<std::string, double> routes);
    const std::map<std::string, double>& routes() const { return routes_; }
    /// The pipeline that serves read number `read_id`.
    std::string target(std::uint64_t read_id) const;

  private:
    std::map<std::string, double> routes_;
};

struct MigrationStep {
    std::string kind;// "store" or "topic"
    std::string from;
    std::string to;
    std::vector<engine::WindowResult> records;
};

struct PromotionPlan {
    std::string winner;
    std::string production;
    std::vector<MigrationStep> migrations;
    bool switch_gateway = false;
    std::vector<std::string> decommission;
    std::int64_t estimated_migration_records = 0;

    bool noop() const { return winner == production; }
};

struct PromotionFaults {
    /// Fail the migration after this many records were copied.
    std::optional<std::int64_t> fail_after_records;
};

struct PromotionOutcome {
    bool completed = false;
    bool aborted = false;
    std::string reason;
    std::int64_t migrated_records = 0;
};

/// The pipelines of one experiment context and what serves the clients. Thread-safe.
class Deployment {
  public:
    Deployment(bus::StreamBus& bus, int slot_budget) : bus_(bus), pool_(slot_budget) {}

    /// Registers already provisioned pipelines; the production one takes every client read.
    /// Throws ConfigError on a duplicate id or namespace, or a second production pipeline.
    void add(PipelineHandle handle, std::shared_ptr<engine::AnalyticsStore> store);
    /// Reserves slots for every request at once; throws ResourceError and changes nothing if they don't fit.
    void reserve(const std::vector<int>& instances);

    PipelineHandle handle(const std::string& pipeline_id) const;
    std::vector<PipelineHandle> handles() const;
    std::shared_ptr<engine::AnalyticsStore> store(const std::string& pipeline_id) const;
    std::string production() const;
    void set_state(const std::string& pipeline_id, HandleState state);

    /// Serves one client read through the gateway and logs it. Throws Error if the route points at a
    /// decommissioned pipeline.
    std::string read();
    /// Releases the pipeline's slots, deletes its output topic and marks it decommissioned. Idempotent.
    void decommission(const std::string& pipeline_id);

    std::map<std::string, double> routes() const;
    std::vector<GatewayEvent> events() const;
    int slots_available() const;
    int slots_used() const;

    bus::StreamBus& bus() { return bus_; }

  private:
    friend PromotionOutcome execute_promotion(Deployment&, const PromotionPlan&, const PromotionFaults&,
                                              const std::function<void(const std::string&)>&);
    void log(std::string kind, std::string pipeline, std::string detail = {});
    struct Entry {
        PipelineHandle handle;
        std::shared_ptr<engine::AnalyticsStore> store;
    };

    bus::StreamBus& bus_;
    mutable std::mutex mutex_;
    ResourcePool pool_;
    ClientGateway gateway_;
    std::map<std::string, Entry> entries_;
    std::vector<GatewayEvent> events_;
    std::uint64_t reads_ = 0;
};

/// Delta between production and winner (store rows whose identity the winner lacks, plus output
/// records production never stored), then the gateway switch, then every other pipeline.
/// Winner equal to production gives an empty plan. Throws NotFound for unknown ids.
PromotionPlan plan_promotion(const Deployment& deployment, const std::string& winner);

/// Migrate, switch, decommission, in that order. A migration failure stops before the switch and
/// leaves routing unchanged. `between_steps` runs after each phase ("migrate", "switch", "decommission").
PromotionOutcome execute_promotion(Deployment& deployment, const PromotionPlan& plan, const PromotionFaults& faults = {},
                                   const std::function<void(const std::string&)>& between_steps = {});

}// namespace streamtrial::orchestrator

#endif// STREAMTRIAL_ORCHESTRATOR_DEPLOYMENT_HPP_
