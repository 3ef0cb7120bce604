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
#include <streamtrial/common/error.hpp>
#include <streamtrial/common/text.hpp>

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace streamtrial::analysis {

namespace {

using nlohmann::json;

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_null()) {
        return std::nullopt;
    }
    return v.get<T>();
}

json variant_json(const VariantSummary& s) {
    return json{{"name", s.name},
                {"baseline", s.baseline},
                {"failed", s.failed},
                {"latency_ms", opt(s.latency_ms)},
                {"latency_per_round", s.latency_per_round},
                {"latency_round_iqr", opt(s.latency_round_iqr)},
                {"throughput_msg_s", opt(s.throughput_msg_s)},
                {"cpu_pct", opt(s.cpu_pct)},
                {"heap_pct", opt(s.heap_pct)},
                {"cumulative_cpu_pct_s", opt(s.cumulative_cpu_pct_s)},
                {"recovery_time_ms", opt(s.recovery_time_ms)},
                {"max_recovery_time_ms", opt(s.max_recovery_time_ms)},
                {"recovery_count", s.recovery_count},
                {"qos", {{"latency", s.qos_latency}, {"throughput", s.qos_throughput}, {"recovery", s.qos_recovery}}},
                {"eligible", s.eligible},
                {"rank", opt(s.rank)},
                {"p_value_vs_baseline", opt(s.p_value_vs_baseline)},
                {"significantly_better", s.significantly_better}};
}

VariantSummary variant_from(const json& j) {
    VariantSummary s;
    s.name = j.at("name").get<std::string>();
    s.baseline = j.at("baseline").get<bool>();
    s.failed = j.at("failed").get<bool>();
    s.latency_ms = get_opt<double>(j, "latency_ms");
    s.latency_per_round = j.at("latency_per_round").get<std::vector<double>>();
    s.latency_round_iqr = get_opt<double>(j, "latency_round_iqr");
    s.throughput_msg_s = get_opt<double>(j, "throughput_msg_s");
    s.cpu_pct = get_opt<double>(j, "cpu_pct");
    s.heap_pct = get_opt<double>(j, "heap_pct");
    s.cumulative_cpu_pct_s = get_opt<double>(j, "cumulative_cpu_pct_s");
    s.recovery_time_ms = get_opt<double>(j, "recovery_time_ms");
    s.max_recovery_time_ms = get_opt<double>(j, "max_recovery_time_ms");
    s.recovery_count = j.at("recovery_count").get<int>();
    const auto& q = j.at("qos");
    s.qos_latency = q.at("latency").get<std::string>();
    s.qos_throughput = q.at("throughput").get<std::string>();
    s.qos_recovery = q.at("recovery").get<std::string>();
    s.eligible = j.at("eligible").get<bool>();
    s.rank = get_opt<int>(j, "rank");
    s.p_value_vs_baseline = get_opt<double>(j, "p_value_vs_baseline");
    s.significantly_better = j.at("significantly_better").get<bool>();
    return s;
}

std::string cell(const std::optional<double>& v, int decimals = 1) {
    return v ? format_fixed(*v, decimals) : std::string("-");
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << content;
    if (!out.flush()) {
        throw Error("cannot write " + path.string());
    }
}

}// namespace

std::string to_json(const ComparisonReport& r) {
    json variants = json::array();
    for (const auto& v : r.variants) {
        variants.push_back(variant_json(v));
    }
    const json doc{{"schema_version", r.schema_version},
                   {"experiment_id", r.experiment_id},
                   {"objective", r.objective},
                   {"alpha", r.alpha},
                   {"ewma_span_s", r.ewma_span_s},
                   {"latency_percentile", r.latency_percentile},
                   {"eval_from_ms", r.eval_from_ms},
                   {"eval_to_ms", r.eval_to_ms},
                   {"baseline", r.baseline},
                   {"variants", variants},
                   {"p_values", r.p_values},
                   {"ranking", r.ranking},
                   {"winner", opt(r.winner)},
                   {"tradeoff_note", r.tradeoff_note}};
    return doc.dump(2) + "\n";
}

ComparisonReport parse_report(std::string_view text) {
    try {
        const json doc = json::parse(text);
        ComparisonReport r;
        r.schema_version = doc.at("schema_version").get<int>();
        if (r.schema_version != 1) {
            throw ConfigError("unsupported report schema_version " + std::to_string(r.schema_version));
        }
        r.experiment_id = doc.at("experiment_id").get<std::string>();
        r.objective = doc.at("objective").get<std::string>();
        r.alpha = doc.at("alpha").get<double>();
        r.ewma_span_s = doc.at("ewma_span_s").get<double>();
        r.latency_percentile = doc.at("latency_percentile").get<double>();
        r.eval_from_ms = doc.at("eval_from_ms").get<std::int64_t>();
        r.eval_to_ms = doc.at("eval_to_ms").get<std::int64_t>();
        r.baseline = doc.at("baseline").get<std::string>();
        for (const auto& v : doc.at("variants")) {
            r.variants.push_back(variant_from(v));
        }
        r.p_values = doc.at("p_values").get<std::map<std::string, std::map<std::string, double>>>();
        r.ranking = doc.at("ranking").get<std::vector<std::string>>();
        r.winner = get_opt<std::string>(doc, "winner");
        r.tradeoff_note = doc.at("tradeoff_note").get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed report: ") + e.what());
    }
}

std::string summary_markdown(const ComparisonReport& r) {
    std::ostringstream out;
    out << "# Experiment " << r.experiment_id << "\n\n";
    out << "Objective: " << r.objective << ", alpha " << format_shortest(r.alpha) << ", EWMA span "
        << format_shortest(r.ewma_span_s) << " s, latency p" << format_shortest(r.latency_percentile)
        << ", evaluation window [" << r.eval_from_ms << ", " << r.eval_to_ms << ") ms.\n\n";
    out << "| variant | latency ms | round IQR | throughput msg/s | cpu % | heap % | cumulative cpu %s | "
           "recovery ms | recoveries | QoS lat/thr/rec | p vs baseline | rank |\n";
    out << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& v : r.variants) {
        out << "| " << v.name << (v.baseline ? " (baseline)" : "") << (v.failed ? " (failed)" : "") << " | "
            << cell(v.latency_ms, 2) << " | " << cell(v.latency_round_iqr, 2) << " | " << cell(v.throughput_msg_s, 2)
            << " | " << cell(v.cpu_pct) << " | " << cell(v.heap_pct) << " | " << cell(v.cumulative_cpu_pct_s, 0)
            << " | " << cell(v.recovery_time_ms) << " | " << v.recovery_count << " | " << v.qos_latency << "/"
            << v.qos_throughput << "/" << v.qos_recovery << " | " << cell(v.p_value_vs_baseline, 4) << " | "
            << (v.rank ? std::to_string(*v.rank) : std::string("-")) << " |\n";
    }
    out << "\nWinner: " << (r.winner ? *r.winner : std::string("none")) << "\n\n";
    out << "Trade-off: " << r.tradeoff_note << "\n";
    return out.str();
}

std::string series_csv(const AggregatedSeries& s) {
    std::string prov;
    for (auto p : s.provenance) {
        if (!prov.empty()) {
            prov += ">";
        }
        prov += to_string(p);
    }
    std::string out = "timestamp_ms,value,variant,metric,provenance\n";
    for (const auto& p : s.points) {
        out += std::to_string(p.timestamp_ms) + "," + format_shortest(p.value) + "," + s.variant + "," + s.metric + ","
               + prov + "\n";
    }
    return out;
}

std::vector<std::string> write_report(const std::filesystem::path& dir, const Analysis& analysis) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "series", ec);
    if (ec) {
        throw Error("cannot create " + (dir / "series").string() + ": " + ec.message());
    }
    std::vector<std::string> written;
    write_file(dir / "report.json", to_json(analysis.report));
    written.push_back("report.json");
    write_file(dir / "summary.md", summary_markdown(analysis.report));
    written.push_back("summary.md");
    for (const auto& v : analysis.series) {
        for (const auto* s : {&v.latency, &v.throughput, &v.cpu, &v.heap}) {
            const std::string name = "series/" + v.layout.name + "__" + s->metric + ".csv";
            write_file(dir / name, series_csv(*s));
            written.push_back(name);
        }
    }
    return written;
}

}// namespace streamtrial::analysis
