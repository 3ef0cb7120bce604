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

#include <streamtrial/common/random.hpp>
#include <streamtrial/orchestrator/deployment.hpp>

#include <cmath>
#include <set>
#include <sstream>

namespace streamtrial::orchestrator {

const char* to_string(Role role) { return role == Role::kProduction ? "production" : "testing"; }

const char* to_string(HandleState state) {
    switch (state) {
        case HandleState::kProvisioning: return "provisioning";
        case HandleState::kRunning: return "running";
        case HandleState::kRecovering: return "recovering";
        case HandleState::kStopped: return "stopped";
        case HandleState::kDecommissioned: return "decommissioned";
    }
    return "unknown";
}

void ResourcePool::reserve_all(const std::vector<int>& requests) {
    long long total = 0;
    for (int r : requests) {
        if (r < 0) {
            throw ConfigError("negative slot request");
        }
        total += r;
    }
    if (total > available()) {
        throw ResourceError("resource budget exceeded: " + std::to_string(total) + " slots requested, "
                            + std::to_string(available()) + " of " + std::to_string(capacity_) + " available");
    }
    used_ += static_cast<int>(total);
}

void ResourcePool::release(int slots) { used_ = std::max(0, used_ - slots); }

void ClientGateway::set_routes(std::map<std::string, double> routes) {
    double sum = 0.0;
    for (const auto& [name, f] : routes) {
        if (!(f > 0.0)) {
            throw ConfigError("gateway route to '" + name + "' must have a positive fraction");
        }
        sum += f;
    }
    if (routes.empty() || std::fabs(sum - 1.0) > 1e-9) {
        throw ConfigError("gateway fractions must sum to 1");
    }
    routes_ = std::move(routes);
}

std::string ClientGateway::target(std::uint64_t read_id) const {
    if (routes_.empty()) {
        throw Error("gateway has no routes");
    }
    const double u = static_cast<double>(mix_seed(read_id, 0x6a7e) >> 11) * 0x1.0p-53;
    double acc = 0.0;
    for (const auto& [name, f] : routes_) {
        acc += f;
        if (u < acc) {
            return name;
        }
    }
    return routes_.rbegin()->first;
}

void Deployment::log(std::string kind, std::string pipeline, std::string detail) {
    events_.push_back({static_cast<std::int64_t>(events_.size()), std::move(kind), std::move(pipeline),
                       std::move(detail)});
}

void Deployment::add(PipelineHandle handle, std::shared_ptr<engine::AnalyticsStore> store) {
    std::lock_guard lock(mutex_);
    if (entries_.count(handle.pipeline_id)) {
        throw ConfigError("duplicate pipeline '" + handle.pipeline_id + "'");
    }
    for (const auto& [id, e] : entries_) {
        if (e.handle.namespace_id == handle.namespace_id) {
            throw ConfigError("duplicate namespace '" + handle.namespace_id + "'");
        }
        if (handle.role == Role::kProduction && e.handle.role == Role::kProduction) {
            throw ConfigError("a production pipeline is already registered");
        }
    }
    if (handle.role == Role::kProduction) {
        gateway_.set_routes({{handle.pipeline_id, 1.0}});
    }
    const std::string id = handle.pipeline_id;
    entries_.emplace(id, Entry{std::move(handle), std::move(store)});
}

void Deployment::reserve(const std::vector<int>& instances) {
    std::lock_guard lock(mutex_);
    pool_.reserve_all(instances);
}

PipelineHandle Deployment::handle(const std::string& pipeline_id) const {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(pipeline_id);
    if (it == entries_.end()) {
        throw NotFound("no pipeline '" + pipeline_id + "'");
    }
    return it->second.handle;
}

std::vector<PipelineHandle> Deployment::handles() const {
    std::lock_guard lock(mutex_);
    std::vector<PipelineHandle> out;
    for (const auto& [id, e] : entries_) {
        out.push_back(e.handle);
    }
    return out;
}

std::shared_ptr<engine::AnalyticsStore> Deployment::store(const std::string& pipeline_id) const {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(pipeline_id);
    if (it == entries_.end()) {
        throw NotFound("no pipeline '" + pipeline_id + "'");
    }
    return it->second.store;
}

std::string Deployment::production() const {
    std::lock_guard lock(mutex_);
    for (const auto& [id, e] : entries_) {
        if (e.handle.role == Role::kProduction) {
            return id;
        }
    }
    throw NotFound("no production pipeline");
}

void Deployment::set_state(const std::string& pipeline_id, HandleState state) {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(pipeline_id);
    if (it == entries_.end()) {
        throw NotFound("no pipeline '" + pipeline_id + "'");
    }
    if (it->second.handle.state == HandleState::kDecommissioned) {
        throw ConfigError("pipeline '" + pipeline_id + "' is decommissioned");
    }
    it->second.handle.state = state;
}

std::string Deployment::read() {
    std::lock_guard lock(mutex_);
    const std::string target = gateway_.target(reads_++);
    const auto it = entries_.find(target);
    if (it == entries_.end() || it->second.handle.state == HandleState::kDecommissioned) {
        throw Error("gateway routed a read to unavailable pipeline '" + target + "'");
    }
    log("route", target);
    return target;
}

void Deployment::decommission(const std::string& pipeline_id) {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(pipeline_id);
    if (it == entries_.end()) {
        throw NotFound("no pipeline '" + pipeline_id + "'");
    }
    auto& h = it->second.handle;
    if (h.state == HandleState::kDecommissioned) {
        return;
    }
    if (gateway_.routes().count(pipeline_id)) {
        throw ConfigError("cannot decommission '" + pipeline_id + "' while the gateway routes to it");
    }
    pool_.release(h.instances);
    bus_.delete_topic(h.output_topic);
    h.state = HandleState::kDecommissioned;
    log("decommission", pipeline_id);
}

std::map<std::string, double> Deployment::routes() const {
    std::lock_guard lock(mutex_);
    return gateway_.routes();
}

std::vector<GatewayEvent> Deployment::events() const {
    std::lock_guard lock(mutex_);
    return events_;
}

int Deployment::slots_available() const {
    std::lock_guard lock(mutex_);
    return pool_.available();
}

int Deployment::slots_used() const {
    std::lock_guard lock(mutex_);
    return pool_.used();
}

PromotionPlan plan_promotion(const Deployment& deployment, const std::string& winner) {
    PromotionPlan plan;
    plan.winner = winner;
    plan.production = deployment.production();
    const auto winner_handle = deployment.handle(winner);
    if (winner_handle.state == HandleState::kDecommissioned) {
        throw ConfigError("winner '" + winner + "' is decommissioned");
    }
    if (plan.noop()) {
        return plan;
    }
    const auto prod_store = deployment.store(plan.production);
    const auto win_store = deployment.store(winner);
    const auto prod_ids = prod_store->identities();
    auto have = win_store->identities();

    MigrationStep store_step{"store", plan.production, winner, {}};
    for (const auto& row : prod_store->rows()) {
        if (have.insert(engine::identity_of(row)).second) {
            store_step.records.push_back(row);
        }
    }
    MigrationStep topic_step{"topic", plan.production, winner, {}};
    const auto prod_handle = deployment.handle(plan.production);
    auto& bus = const_cast<Deployment&>(deployment).bus();
    if (bus.has_topic(prod_handle.output_topic)) {
        std::ostringstream dump;
        bus.dump(prod_handle.output_topic, dump);
        std::istringstream in(dump.str());
        std::string line;
        while (std::getline(in, line)) {
            // partition,offset,ingest_time_ms,key,payload
            std::size_t pos = std::string::npos;
            for (int i = 0; i < 4; ++i) {
                pos = line.find(',', pos + 1);
                if (pos == std::string::npos) {
                    throw ConfigError("malformed record in topic " + prod_handle.output_topic);
                }
            }
            const auto row = engine::parse_result_line(std::string_view(line).substr(pos + 1));
            const auto id = engine::identity_of(row);
            if (!prod_ids.count(id) && have.insert(id).second) {
                topic_step.records.push_back(row);
            }
        }
    }
    for (auto* step : {&store_step, &topic_step}) {
        plan.estimated_migration_records += static_cast<std::int64_t>(step->records.size());
        if (!step->records.empty()) {
            plan.migrations.push_back(std::move(*step));
        }
    }
    plan.switch_gateway = true;
    for (const auto& h : deployment.handles()) {
        if (h.pipeline_id != winner && h.state != HandleState::kDecommissioned) {
            plan.decommission.push_back(h.pipeline_id);
        }
    }
    return plan;
}

PromotionOutcome execute_promotion(Deployment& d, const PromotionPlan& plan, const PromotionFaults& faults,
                                   const std::function<void(const std::string&)>& between_steps) {
    PromotionOutcome out;
    if (plan.noop()) {
        out.completed = true;
        return out;
    }
    if (d.production() != plan.production) {
        throw ConfigError("stale promotion plan: production is now '" + d.production() + "'");
    }
    const auto winner = d.handle(plan.winner);
    for (const auto& step : plan.migrations) {
        const auto target = d.store(step.to);
        for (const auto& row : step.records) {
            if (faults.fail_after_records && out.migrated_records >= *faults.fail_after_records) {
                std::lock_guard lock(d.mutex_);
                out.aborted = true;
                out.reason = "migration failed after " + std::to_string(out.migrated_records) + " records";
                d.log("migration_aborted", step.to, out.reason);
                return out;
            }
            if (step.kind == "topic") {
                d.bus().publish(winner.output_topic, row.vehicle_type, engine::to_csv_line(row), row.emit_time_ms);
            }
            target->append(row);
            ++out.migrated_records;
        }
        std::lock_guard lock(d.mutex_);
        d.log("migrate", step.to, step.kind + " " + std::to_string(step.records.size()) + " records from " + step.from);
    }
    if (between_steps) {
        between_steps("migrate");
    }
    {
        std::lock_guard lock(d.mutex_);
        d.gateway_.set_routes({{plan.winner, 1.0}});
        d.entries_.at(plan.production).handle.role = Role::kTesting;
        d.entries_.at(plan.winner).handle.role = Role::kProduction;
        d.log("switch", plan.winner, "from " + plan.production);
    }
    if (between_steps) {
        between_steps("switch");
    }
    for (const auto& id : plan.decommission) {
        d.decommission(id);
    }
    if (between_steps) {
        between_steps("decommission");
    }
    out.completed = true;
    return out;
}

}// namespace streamtrial::orchestrator
