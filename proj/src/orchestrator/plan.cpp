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
#include <streamtrial/orchestrator/plan.hpp>

#include <json.hpp>

#include <cmath>
#include <limits>
#include <set>
#include <variant>

namespace streamtrial::orchestrator {

namespace {

using nlohmann::json;

using Member = std::variant<std::int64_t engine::ConfigSet::*, int engine::ConfigSet::*, double engine::ConfigSet::*>;

struct ConfigField {
    const char* name;
    Member member;
};

const std::vector<ConfigField>& config_fields() {
    using C = engine::ConfigSet;
    static const std::vector<ConfigField> fields{
            {"checkpoint_interval_ms", &C::checkpoint_interval_ms},
            {"window_length_ms", &C::window_length_ms},
            {"parallelism", &C::parallelism},
            {"worker_count", &C::worker_count},
            {"coordinator_count", &C::coordinator_count},
            {"slots_per_worker", &C::slots_per_worker},
            {"heap_per_worker_mb", &C::heap_per_worker_mb},
            {"max_restarts", &C::max_restarts},
            {"marker_interval_ms", &C::marker_interval_ms},
            {"checkpoint_base_ms", &C::checkpoint_base_ms},
            {"checkpoint_per_record_ms", &C::checkpoint_per_record_ms},
            {"restart_delay_ms", &C::restart_delay_ms},
            {"restore_per_record_ms", &C::restore_per_record_ms},
            {"max_processing_rate_msg_s", &C::max_processing_rate_msg_s},
            {"source_capacity_msg_s", &C::source_capacity_msg_s},
            {"window_capacity_msg_s", &C::window_capacity_msg_s},
            {"hop_cost_ms", &C::hop_cost_ms},
            {"cpu_base_pct", &C::cpu_base_pct},
            {"cpu_per_kmsg_pct", &C::cpu_per_kmsg_pct},
            {"cpu_checkpoint_pct", &C::cpu_checkpoint_pct},
            {"heap_overhead_mb", &C::heap_overhead_mb},
            {"heap_buffer_mb_per_kmsg", &C::heap_buffer_mb_per_kmsg},
            {"heap_bytes_per_state_record", &C::heap_bytes_per_state_record},
            {"coordinator_cpu_base_pct", &C::coordinator_cpu_base_pct},
            {"coordinator_cpu_per_kmsg_pct", &C::coordinator_cpu_per_kmsg_pct},
            {"coordinator_cpu_checkpoint_pct", &C::coordinator_cpu_checkpoint_pct},
            {"coordinator_heap_base_pct", &C::coordinator_heap_base_pct},
            {"coordinator_heap_per_kmsg_pct", &C::coordinator_heap_per_kmsg_pct},
    };
    return fields;
}

std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

/// Collects type and key violations while walking the document.
class Reader {
  public:
    std::vector<std::string> violations;

    bool object(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
        if (!j.is_object()) {
            violations.push_back((path.empty() ? std::string("plan") : path) + ": expected an object");
            return false;
        }
        for (const auto& [key, value] : j.items()) {
            bool known = false;
            for (auto a : allowed) {
                known = known || a == key;
            }
            if (!known) {
                violations.push_back(join(path, key) + ": unknown key");
            }
        }
        return true;
    }

    bool array(const json& j, const std::string& path) {
        if (!j.is_array()) {
            violations.push_back(path + ": expected an array");
            return false;
        }
        return true;
    }

    template <typename T>
    void get(const json& obj, const std::string& path, const char* key, T& out) {
        const auto it = obj.find(key);
        if (it == obj.end()) {
            return;
        }
        read(*it, join(path, key), out);
    }

    template <typename T>
    void get(const json& obj, const std::string& path, const char* key, std::optional<T>& out) {
        const auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) {
            return;
        }
        T value{};
        if (read(*it, join(path, key), value)) {
            out = value;
        }
    }

    bool read(const json& j, const std::string& path, std::int64_t& out) {
        if (!j.is_number_integer() || (j.is_number_unsigned() && j.get<std::uint64_t>() > INT64_MAX)) {
            return fail(path, "expected an integer");
        }
        out = j.get<std::int64_t>();
        return true;
    }

    bool read(const json& j, const std::string& path, int& out) {
        std::int64_t wide = 0;
        if (!read(j, path, wide)) {
            return false;
        }
        if (wide < std::numeric_limits<int>::min() || wide > std::numeric_limits<int>::max()) {
            return fail(path, "integer out of range");
        }
        out = static_cast<int>(wide);
        return true;
    }

    bool read(const json& j, const std::string& path, std::uint64_t& out) {
        if (!j.is_number_unsigned()) {
            return fail(path, "expected a non-negative integer");
        }
        out = j.get<std::uint64_t>();
        return true;
    }

    bool read(const json& j, const std::string& path, double& out) {
        if (!j.is_number()) {
            return fail(path, "expected a number");
        }
        out = j.get<double>();
        return true;
    }

    bool read(const json& j, const std::string& path, bool& out) {
        if (!j.is_boolean()) {
            return fail(path, "expected true or false");
        }
        out = j.get<bool>();
        return true;
    }

    bool read(const json& j, const std::string& path, std::string& out) {
        if (!j.is_string()) {
            return fail(path, "expected a string");
        }
        out = j.get<std::string>();
        return true;
    }

    void config(const json& j, const std::string& path, engine::ConfigSet& out) {
        if (!j.is_object()) {
            fail(path, "expected an object");
            return;
        }
        for (const auto& [key, value] : j.items()) {
            const ConfigField* field = nullptr;
            for (const auto& f : config_fields()) {
                if (key == f.name) {
                    field = &f;
                }
            }
            if (!field) {
                violations.push_back(join(path, key) + ": unknown key");
                continue;
            }
            std::visit([&](auto member) { read(value, join(path, key), out.*member); }, field->member);
        }
    }

  private:
    bool fail(const std::string& path, const char* what) {
        violations.push_back(path + ": " + what);
        return false;
    }
};

bool valid_name(const std::string& name) {
    if (name.empty() || name.size() > 64) {
        return false;
    }
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_'
                        || c == '-' || c == '.';
        if (!ok) {
            return false;
        }
    }
    return name != "." && name != "..";
}

void check_config(const engine::ConfigSet& config, const std::string& path, std::vector<std::string>& v) {
    try {
        config.validate();
    } catch (const ConfigError& e) {
        std::string what = e.what();
        if (what.rfind("config: ", 0) == 0) {
            what = what.substr(8);
        }
        v.push_back(path + ": " + what);
    }
}

json config_json(const engine::ConfigSet& config) {
    json out = json::object();
    for (const auto& f : config_fields()) {
        std::visit([&](auto member) { out[f.name] = config.*member; }, f.member);
    }
    return out;
}

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}// namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& f : config_fields()) {
        out.emplace_back(f.name);
    }
    return out;
}

void ExperimentPlan::validate() const {
    std::vector<std::string> v;
    auto require = [&](bool ok, const std::string& what) {
        if (!ok) {
            v.push_back(what);
        }
    };
    require(version == 1, "version: only version 1 is supported");
    require(valid_name(experiment_id), "experiment_id: must be 1-64 characters of [A-Za-z0-9_.-]");
    require(scale_factor > 0.0 && scale_factor <= 1.0, "scale_factor: must be in (0, 1]");
    require(rounds >= 1, "rounds: must be >= 1");
    require(round_duration_s >= 1, "round_duration_s: must be >= 1");
    require(warmup_s >= 0 && warmup_s < round_duration_s, "warmup_s: must be in [0, round_duration_s)");
    require(sample_interval_ms >= 1, "sample_interval_ms: must be >= 1");
    require(epoch_s >= 1, "epoch_s: must be >= 1");
    require(input_partitions >= 1, "input_partitions: must be >= 1");
    require(slot_budget >= 1, "slot_budget: must be >= 1");
    require(provisioning_ms_per_instance >= 0.0, "provisioning_ms_per_instance: must be >= 0");
    require(start_s >= 0, "workload.start_s: must be >= 0");
    try {
        workload.validate();
    } catch (const ConfigError& e) {
        v.push_back(std::string("workload: ") + e.what());
    }
    const double period = workload.load.period_s;
    require(period >= 1.0 && period == std::floor(period), "workload.period_s: must be a whole number of seconds");

    std::set<std::string> names;
    require(valid_name(production.name), "production.name: must be 1-64 characters of [A-Za-z0-9_.-]");
    names.insert(production.name);
    require(production.history_s >= 0, "production.history_s: must be >= 0");
    check_config(production.config, "production.config", v);
    require(!variants.empty(), "variants: at least one variant is required");
    for (std::size_t i = 0; i < variants.size(); ++i) {
        const auto path = index("variants", i);
        require(valid_name(variants[i].name), path + ".name: must be 1-64 characters of [A-Za-z0-9_.-]");
        require(names.insert(variants[i].name).second, path + ".name: duplicate name '" + variants[i].name + "'");
        check_config(variants[i].config, path + ".config", v);
    }

    try {
        scenario.validate(round_duration_s * 1000);
    } catch (const ValidationError& e) {
        v.insert(v.end(), e.violations().begin(), e.violations().end());
    }
    for (std::size_t i = 0; i < scenario.apply_to.size(); ++i) {
        const auto& n = scenario.apply_to[i];
        const bool known = std::any_of(variants.begin(), variants.end(), [&](const auto& x) { return x.name == n; });
        require(known, index("scenario.apply_to", i) + ": unknown variant '" + n + "'");
    }
    try {
        qos.validate();
    } catch (const ValidationError& e) {
        v.insert(v.end(), e.violations().begin(), e.violations().end());
    }
    require(qos.eval_from_ms < round_duration_s * 1000, "qos.eval_from_s: must be inside the round");
    require(!qos.eval_to_ms || *qos.eval_to_ms <= round_duration_s * 1000, "qos.eval_to_s: must be inside the round");
    require(analysis.ewma_span_s >= 1.0, "analysis.ewma_span_s: must be >= 1");
    require(analysis.alpha > 0.0 && analysis.alpha < 1.0, "analysis.alpha: must be in (0, 1)");
    if (!v.empty()) {
        throw ValidationError(std::move(v));
    }
}

ExperimentPlan parse_plan(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError({std::string("plan: not valid JSON: ") + e.what()});
    }
    Reader r;
    ExperimentPlan plan;
    if (!r.object(doc, "",
                  {"version", "experiment_id", "seed", "scale_factor", "rounds", "round_duration_s", "warmup_s",
                   "sample_interval_ms", "epoch_s", "identical_round_traces", "input_partitions", "slot_budget",
                   "provisioning_ms_per_instance", "workload", "defaults", "production", "variants", "scenario",
                   "qos", "analysis"})) {
        throw ValidationError(r.violations);
    }
    r.get(doc, "", "version", plan.version);
    r.get(doc, "", "experiment_id", plan.experiment_id);
    r.get(doc, "", "seed", plan.seed);
    r.get(doc, "", "scale_factor", plan.scale_factor);
    r.get(doc, "", "rounds", plan.rounds);
    r.get(doc, "", "round_duration_s", plan.round_duration_s);
    r.get(doc, "", "warmup_s", plan.warmup_s);
    r.get(doc, "", "sample_interval_ms", plan.sample_interval_ms);
    r.get(doc, "", "epoch_s", plan.epoch_s);
    r.get(doc, "", "identical_round_traces", plan.identical_round_traces);
    r.get(doc, "", "input_partitions", plan.input_partitions);
    r.get(doc, "", "slot_budget", plan.slot_budget);
    r.get(doc, "", "provisioning_ms_per_instance", plan.provisioning_ms_per_instance);

    if (doc.contains("workload")) {
        const auto& w = doc["workload"];
        if (r.object(w, "workload",
                     {"v_min", "v_max", "period_s", "phase_s", "start_s", "center", "radius_m", "waypoint_count",
                      "vehicle_types"})) {
            r.get(w, "workload", "v_min", plan.workload.load.v_min);
            r.get(w, "workload", "v_max", plan.workload.load.v_max);
            r.get(w, "workload", "period_s", plan.workload.load.period_s);
            plan.workload.load.phase_s = plan.workload.load.period_s / 4.0;
            r.get(w, "workload", "phase_s", plan.workload.load.phase_s);
            r.get(w, "workload", "start_s", plan.start_s);
            r.get(w, "workload", "radius_m", plan.workload.radius_m);
            r.get(w, "workload", "waypoint_count", plan.workload.waypoint_count);
            if (w.contains("center") && r.object(w["center"], "workload.center", {"latitude", "longitude"})) {
                r.get(w["center"], "workload.center", "latitude", plan.workload.center.latitude);
                r.get(w["center"], "workload.center", "longitude", plan.workload.center.longitude);
            }
            if (w.contains("vehicle_types") && r.array(w["vehicle_types"], "workload.vehicle_types")) {
                plan.workload.types.clear();
                for (std::size_t i = 0; i < w["vehicle_types"].size(); ++i) {
                    const auto& t = w["vehicle_types"][i];
                    const auto path = index("workload.vehicle_types", i);
                    workload::VehicleTypeSpec spec;
                    if (r.object(t, path, {"name", "weight", "max_speed_mps"})) {
                        r.get(t, path, "name", spec.name);
                        r.get(t, path, "weight", spec.weight);
                        r.get(t, path, "max_speed_mps", spec.max_speed_mps);
                    }
                    plan.workload.types.push_back(spec);
                }
            }
        }
    }

    engine::ConfigSet defaults;
    if (doc.contains("defaults")) {
        r.config(doc["defaults"], "defaults", defaults);
    }
    plan.production.config = defaults;
    if (doc.contains("production")) {
        const auto& p = doc["production"];
        if (r.object(p, "production", {"name", "config", "history_s"})) {
            r.get(p, "production", "name", plan.production.name);
            r.get(p, "production", "history_s", plan.production.history_s);
            if (p.contains("config")) {
                r.config(p["config"], "production.config", plan.production.config);
            }
        }
    }
    if (doc.contains("variants") && r.array(doc["variants"], "variants")) {
        for (std::size_t i = 0; i < doc["variants"].size(); ++i) {
            const auto& v = doc["variants"][i];
            const auto path = index("variants", i);
            VariantSpec spec{"", defaults};
            if (r.object(v, path, {"name", "config"})) {
                r.get(v, path, "name", spec.name);
                if (v.contains("config")) {
                    r.config(v["config"], path + ".config", spec.config);
                }
            }
            plan.variants.push_back(std::move(spec));
        }
    }

    if (doc.contains("scenario")) {
        const auto& s = doc["scenario"];
        if (r.object(s, "scenario", {"name", "events", "apply_to", "include_production"})) {
            r.get(s, "scenario", "name", plan.scenario.name);
            r.get(s, "scenario", "include_production", plan.scenario.include_production);
            if (s.contains("apply_to") && r.array(s["apply_to"], "scenario.apply_to")) {
                for (std::size_t i = 0; i < s["apply_to"].size(); ++i) {
                    std::string name;
                    r.read(s["apply_to"][i], index("scenario.apply_to", i), name);
                    plan.scenario.apply_to.push_back(name);
                }
            }
            if (s.contains("events") && r.array(s["events"], "scenario.events")) {
                for (std::size_t i = 0; i < s["events"].size(); ++i) {
                    const auto& e = s["events"][i];
                    const auto path = index("scenario.events", i);
                    chaos::FailureEvent ev;
                    if (r.object(e, path, {"at_ms", "kind", "target", "duration_ms", "slowdown_factor"})) {
                        r.get(e, path, "at_ms", ev.at_ms);
                        std::string kind = chaos::to_string(ev.kind);
                        r.get(e, path, "kind", kind);
                        try {
                            ev.kind = chaos::parse_fault_kind(kind);
                        } catch (const ConfigError&) {
                            r.violations.push_back(path + ".kind: unknown fault kind '" + kind + "'");
                        }
                        r.get(e, path, "target", ev.target);
                        r.get(e, path, "duration_ms", ev.duration_ms);
                        r.get(e, path, "slowdown_factor", ev.slowdown_factor);
                    }
                    plan.scenario.events.push_back(ev);
                }
            }
        }
    }

    if (doc.contains("qos")) {
        const auto& q = doc["qos"];
        if (r.object(q, "qos",
                     {"max_latency_ms", "latency_percentile", "min_throughput_msg_s", "max_recovery_time_ms",
                      "eval_from_s", "eval_to_s"})) {
            r.get(q, "qos", "max_latency_ms", plan.qos.max_latency_ms);
            r.get(q, "qos", "latency_percentile", plan.qos.latency_percentile);
            r.get(q, "qos", "min_throughput_msg_s", plan.qos.min_throughput_msg_s);
            r.get(q, "qos", "max_recovery_time_ms", plan.qos.max_recovery_time_ms);
            std::int64_t from_s = 0;
            r.get(q, "qos", "eval_from_s", from_s);
            plan.qos.eval_from_ms = from_s * 1000;
            std::optional<std::int64_t> to_s;
            r.get(q, "qos", "eval_to_s", to_s);
            if (to_s) {
                plan.qos.eval_to_ms = *to_s * 1000;
            }
        }
    }
    if (doc.contains("analysis")) {
        const auto& a = doc["analysis"];
        if (r.object(a, "analysis", {"ewma_span_s", "alpha", "objective"})) {
            r.get(a, "analysis", "ewma_span_s", plan.analysis.ewma_span_s);
            r.get(a, "analysis", "alpha", plan.analysis.alpha);
            std::string objective = analysis::to_string(plan.analysis.objective);
            r.get(a, "analysis", "objective", objective);
            try {
                plan.analysis.objective = analysis::parse_objective(objective);
            } catch (const ConfigError&) {
                r.violations.push_back("analysis.objective: unknown objective '" + objective + "'");
            }
        }
    }

    auto violations = std::move(r.violations);
    if (violations.empty()) {
        try {
            plan.validate();
        } catch (const ValidationError& e) {
            violations = e.violations();
        }
    }
    if (!violations.empty()) {
        throw ValidationError(std::move(violations));
    }
    return plan;
}

std::string plan_to_json(const ExperimentPlan& p) {
    json types = json::array();
    for (const auto& t : p.workload.types) {
        types.push_back({{"name", t.name}, {"weight", t.weight}, {"max_speed_mps", t.max_speed_mps}});
    }
    json variants = json::array();
    for (const auto& v : p.variants) {
        variants.push_back({{"name", v.name}, {"config", config_json(v.config)}});
    }
    json events = json::array();
    for (const auto& e : p.scenario.events) {
        events.push_back({{"at_ms", e.at_ms},
                          {"kind", chaos::to_string(e.kind)},
                          {"target", opt(e.target)},
                          {"duration_ms", e.duration_ms},
                          {"slowdown_factor", e.slowdown_factor}});
    }
    const json doc{
            {"version", p.version},
            {"experiment_id", p.experiment_id},
            {"seed", p.seed},
            {"scale_factor", p.scale_factor},
            {"rounds", p.rounds},
            {"round_duration_s", p.round_duration_s},
            {"warmup_s", p.warmup_s},
            {"sample_interval_ms", p.sample_interval_ms},
            {"epoch_s", p.epoch_s},
            {"identical_round_traces", p.identical_round_traces},
            {"input_partitions", p.input_partitions},
            {"slot_budget", p.slot_budget},
            {"provisioning_ms_per_instance", p.provisioning_ms_per_instance},
            {"workload",
             {{"v_min", p.workload.load.v_min},
              {"v_max", p.workload.load.v_max},
              {"period_s", p.workload.load.period_s},
              {"phase_s", p.workload.load.phase_s},
              {"start_s", p.start_s},
              {"center", {{"latitude", p.workload.center.latitude}, {"longitude", p.workload.center.longitude}}},
              {"radius_m", p.workload.radius_m},
              {"waypoint_count", p.workload.waypoint_count},
              {"vehicle_types", types}}},
            {"production",
             {{"name", p.production.name},
              {"history_s", p.production.history_s},
              {"config", config_json(p.production.config)}}},
            {"variants", variants},
            {"scenario",
             {{"name", p.scenario.name},
              {"events", events},
              {"apply_to", p.scenario.apply_to},
              {"include_production", p.scenario.include_production}}},
            {"qos",
             {{"max_latency_ms", opt(p.qos.max_latency_ms)},
              {"latency_percentile", p.qos.latency_percentile},
              {"min_throughput_msg_s", opt(p.qos.min_throughput_msg_s)},
              {"max_recovery_time_ms", opt(p.qos.max_recovery_time_ms)},
              {"eval_from_s", p.qos.eval_from_ms / 1000},
              {"eval_to_s", p.qos.eval_to_ms ? json(*p.qos.eval_to_ms / 1000) : json(nullptr)}}},
            {"analysis",
             {{"ewma_span_s", p.analysis.ewma_span_s},
              {"alpha", p.analysis.alpha},
              {"objective", analysis::to_string(p.analysis.objective)}}},
    };
    return doc.dump(2) + "\n";
}

std::int64_t round_stride_ms(const ExperimentPlan& plan) {
    const auto period = static_cast<std::int64_t>(std::llround(plan.workload.load.period_s) * 1000);
    const std::int64_t span = std::max(plan.round_duration_s, plan.production.history_s) * 1000;
    return (span + period - 1) / period * period;
}

std::int64_t round_start_ms(const ExperimentPlan& plan, int round) {
    if (round < 1 || round > plan.rounds) {
        throw RangeError("round " + std::to_string(round) + " outside 1.." + std::to_string(plan.rounds));
    }
    const int slot = plan.production.history_s > 0 ? round : round - 1;
    return plan.start_s * 1000 + slot * round_stride_ms(plan);
}

std::pair<std::int64_t, std::int64_t> history_range_ms(const ExperimentPlan& plan) {
    const std::int64_t end = plan.start_s * 1000 + (plan.production.history_s > 0 ? round_stride_ms(plan) : 0);
    return {end - plan.production.history_s * 1000, end};
}

std::uint64_t trace_seed(const ExperimentPlan& plan, int round) {
    return plan.identical_round_traces ? plan.seed : plan.seed ^ static_cast<std::uint64_t>(round);
}

workload::WorkloadSpec scaled_workload(const ExperimentPlan& plan) {
    auto spec = plan.workload;
    spec.load = spec.load.scaled(plan.scale_factor);
    return spec;
}

}// namespace streamtrial::orchestrator
