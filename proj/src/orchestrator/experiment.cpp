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
#include <streamtrial/orchestrator/experiment.hpp>
#include <streamtrial/workload/generator.hpp>

#include <algorithm>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

namespace streamtrial::orchestrator {

namespace {

template <typename Fn>
void parallel_for(const std::vector<engine::Pipeline*>& pipelines, Fn fn) {
    std::vector<std::exception_ptr> errors(pipelines.size());
    std::vector<std::thread> threads;
    threads.reserve(pipelines.size());
    for (std::size_t i = 0; i < pipelines.size(); ++i) {
        threads.emplace_back([&, i] {
            try {
                fn(*pipelines[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content) || !out.flush()) {
        throw Error("cannot write " + path.string());
    }
}

}// namespace

std::string input_topic(int round) { return "traffic.input.r" + std::to_string(round); }

std::string namespace_of(const std::string& pipeline_id) { return "ns." + pipeline_id; }

analysis::ExperimentLayout layout_for(const ExperimentPlan& plan, const std::set<std::string>& failed) {
    analysis::ExperimentLayout layout;
    layout.experiment_id = plan.experiment_id;
    for (int r = 1; r <= plan.rounds; ++r) {
        layout.round_starts_ms.push_back(round_start_ms(plan, r));
    }
    layout.round_duration_ms = plan.round_duration_s * 1000;
    layout.warmup_ms = plan.warmup_s * 1000;
    layout.sample_interval_ms = plan.sample_interval_ms;
    const auto& prod = plan.production.name;
    layout.variants.push_back({prod, prod, true, failed.count(prod) > 0, true});
    for (const auto& v : plan.variants) {
        layout.variants.push_back({v.name, v.name, false, failed.count(v.name) > 0, false});
    }
    return layout;
}

Experiment::Experiment(ExperimentPlan plan, Log log)
    : plan_(std::move(plan)),
      log_(std::move(log)),
      deployment_(bus_, plan_.slot_budget),
      chaos_(plan_.scenario, plan_.seed, metrics_) {
    plan_.validate();
}

Experiment::~Experiment() = default;

void Experiment::say(const std::string& line) const {
    if (log_) {
        log_(line);
    }
}

Experiment::Member Experiment::make_member(const std::string& name, const engine::ConfigSet& config,
                                           bool production) {
    engine::PipelineSpec spec;
    spec.pipeline_id = name;
    spec.namespace_id = namespace_of(name);
    spec.config = config;
    spec.scale_factor = plan_.scale_factor;
    spec.sample_interval_ms = plan_.sample_interval_ms;
    auto store = std::make_shared<engine::AnalyticsStore>();
    auto pipeline = std::make_unique<engine::Pipeline>(spec, bus_, metrics_, store);
    PipelineHandle handle{name,
                          name,
                          spec.namespace_id,
                          production ? Role::kProduction : Role::kTesting,
                          HandleState::kRunning,
                          spec.output_topic(),
                          config.instance_count()};
    deployment_.add(handle, store);
    metrics_.append({metrics::series::kProvisioning, {{"pipeline_id", name}}, plan_.start_s * 1000,
                     plan_.provisioning_ms_per_instance * config.instance_count()});
    return Member{name, production, std::move(pipeline)};
}

std::vector<PipelineHandle> Experiment::provision() {
    if (torn_down_) {
        throw ConfigError("experiment already torn down");
    }
    if (!provisioned_) {
        std::vector<int> requests{plan_.production.config.instance_count()};
        for (const auto& v : plan_.variants) {
            requests.push_back(v.config.instance_count());
        }
        deployment_.reserve(requests);
        members_.push_back(make_member(plan_.production.name, plan_.production.config, true));
        for (const auto& v : plan_.variants) {
            members_.push_back(make_member(v.name, v.config, false));
        }
        provisioned_ = true;
        say("provisioned " + std::to_string(members_.size()) + " pipelines, "
            + std::to_string(deployment_.slots_used()) + " slots in use");
        const auto [h0, h1] = history_range_ms(plan_);
        if (h1 > h0) {
            say("production history [" + std::to_string(h0) + ", " + std::to_string(h1) + ")");
            run_interval(0, h0, h1, {&members_.front()}, false);
        }
    }
    return deployment_.handles();
}

RoundSummary Experiment::run_interval(int round, std::int64_t start_ms, std::int64_t end_ms,
                                      std::vector<Member*> members, bool arm_chaos) {
    const std::string topic = input_topic(round);
    bus_.create_topic(topic, static_cast<std::uint32_t>(plan_.input_partitions));
    workload::TrafficGenerator generator(scaled_workload(plan_), trace_seed(plan_, round));
    const std::int64_t metrics_from = round == 0 ? end_ms : start_ms + plan_.warmup_s * 1000;

    RoundSummary summary{round, start_ms, end_ms, 0, {}};
    std::vector<engine::Pipeline*> active;
    for (auto* m : members) {
        if (m->pipeline->state() == engine::PipelineState::kFailed) {
            continue;
        }
        m->pipeline->begin_round({round, topic, start_ms, end_ms, metrics_from});
        if (arm_chaos && plan_.scenario.applies_to(m->id, m->production)) {
            chaos_.arm(*m->pipeline, round, start_ms);
        }
        active.push_back(m->pipeline.get());
    }

    std::int64_t second = start_ms / 1000;
    for (std::int64_t t = start_ms; t < end_ms;) {
        const std::int64_t next = std::min(t + plan_.epoch_s * 1000, end_ms);
        for (; second * 1000 < next; ++second) {
            for (const auto& msg : generator.step(second)) {
                bus_.publish(topic, msg.vehicle_id, workload::to_trace_line(msg), msg.event_time_ms);
                ++summary.published;
            }
        }
        parallel_for(active, [next](engine::Pipeline& p) { p.advance(next); });
        for (auto* p : active) {
            const auto& id = p->spec().pipeline_id;
            switch (p->state()) {
                case engine::PipelineState::kRecovering: deployment_.set_state(id, HandleState::kRecovering); break;
                case engine::PipelineState::kFailed: deployment_.set_state(id, HandleState::kStopped); break;
                default: deployment_.set_state(id, HandleState::kRunning); break;
            }
        }
        t = next;
    }
    parallel_for(active, [](engine::Pipeline& p) { p.end_round(); });

    for (auto* p : active) {
        PipelineRoundStats s;
        s.pipeline_id = p->spec().pipeline_id;
        s.input_hash = p->round_input_hash();
        s.records = p->round_records();
        for (const auto& c : p->checkpoints()) {
            s.checkpoints += c.completed ? 1 : 0;
        }
        s.missed_checkpoints = p->missed_checkpoints();
        s.stall_ms = p->cumulative_stall_ms();
        s.restarts = p->restarts();
        s.recoveries = static_cast<std::int64_t>(p->recoveries().size());
        s.failed = p->state() == engine::PipelineState::kFailed;
        if (s.failed) {
            say("pipeline " + s.pipeline_id + " failed in round " + std::to_string(round));
        }
        summary.pipelines.push_back(s);
    }
    bus_.delete_topic(topic);
    return summary;
}

std::vector<RoundSummary> Experiment::run() {
    provision();
    for (int r = static_cast<int>(rounds_.size()) + 1; r <= plan_.rounds; ++r) {
        const std::int64_t start = round_start_ms(plan_, r);
        std::vector<Member*> all;
        for (auto& m : members_) {
            all.push_back(&m);
        }
        say("round " + std::to_string(r) + "/" + std::to_string(plan_.rounds) + " [" + std::to_string(start) + ", "
            + std::to_string(start + plan_.round_duration_s * 1000) + ")");
        rounds_.push_back(run_interval(r, start, start + plan_.round_duration_s * 1000, all, true));
    }
    return rounds_;
}

analysis::ExperimentLayout Experiment::layout() const { return layout_for(plan_, failed()); }

analysis::Analysis Experiment::analyze() const {
    return analysis::analyze(metrics_, layout(), plan_.qos, plan_.analysis);
}

std::vector<std::string> Experiment::teardown(const std::filesystem::path& dir) {
    if (torn_down_) {
        return {};
    }
    std::vector<std::string> written;
    for (const char* sub : {"metrics", "stores", "topics"}) {
        std::error_code ec;
        std::filesystem::create_directories(dir / sub, ec);
        if (ec) {
            throw Error("cannot create " + (dir / sub).string() + ": " + ec.message());
        }
    }
    for (const auto& m : members_) {
        const auto handle = deployment_.handle(m.id);
        std::ostringstream metrics_csv, store_csv, topic_csv;
        metrics_.export_csv(metrics_csv, {}, {{"pipeline_id", m.id}});
        deployment_.store(m.id)->dump(store_csv);
        if (bus_.has_topic(handle.output_topic)) {
            bus_.dump(handle.output_topic, topic_csv);
        }
        for (const auto& [sub, text] : {std::pair{"metrics", metrics_csv.str()}, std::pair{"stores", store_csv.str()},
                                        std::pair{"topics", topic_csv.str()}}) {
            const std::string name = std::string(sub) + "/" + m.id + ".csv";
            write_file(dir / name, text);
            written.push_back(name);
        }
    }
    for (const auto& h : deployment_.handles()) {
        if (h.role == Role::kTesting) {
            deployment_.decommission(h.pipeline_id);
        }
    }
    torn_down_ = true;
    return written;
}

engine::Pipeline& Experiment::pipeline(const std::string& pipeline_id) {
    for (auto& m : members_) {
        if (m.id == pipeline_id) {
            return *m.pipeline;
        }
    }
    throw NotFound("no pipeline '" + pipeline_id + "'");
}

std::vector<std::string> Experiment::pipeline_ids() const {
    std::vector<std::string> out;
    for (const auto& m : members_) {
        out.push_back(m.id);
    }
    return out;
}

std::vector<chaos::InjectionRecord> Experiment::injections() const {
    auto out = chaos_.records();
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::tie(a.round, a.pipeline_id, a.event_index) < std::tie(b.round, b.pipeline_id, b.event_index);
    });
    return out;
}

std::set<std::string> Experiment::failed() const {
    std::set<std::string> out;
    for (const auto& m : members_) {
        if (m.pipeline->state() == engine::PipelineState::kFailed) {
            out.insert(m.id);
        }
    }
    return out;
}

}// namespace streamtrial::orchestrator
