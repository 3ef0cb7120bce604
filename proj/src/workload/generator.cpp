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
#include <streamtrial/common/hash.hpp>
#include <streamtrial/common/text.hpp>
#include <streamtrial/workload/generator.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace streamtrial::workload {

namespace {

// Waypoints stay slightly inside the radius so that the tangent-plane projection error
// can never push a rendered position outside it.
constexpr double kWaypointRadiusFraction = 0.98;
constexpr std::size_t kRouteLookahead = 4;

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}// namespace

std::vector<VehicleTypeSpec> default_vehicle_types() {
    return {
        {"car", 0.70, 13.9},
        {"truck", 0.10, 11.1},
        {"bus", 0.05, 11.1},
        {"motorcycle", 0.15, 13.9},
    };
}

void WorkloadSpec::validate() const {
    load.validate();
    if (!(radius_m > 0.0)) {
        throw ConfigError("workload: radius_m must be > 0");
    }
    if (types.empty()) {
        throw ConfigError("workload: at least one vehicle type is required");
    }
    double total = 0.0;
    for (const auto& t : types) {
        if (t.name.empty() || t.name.find_first_of(",;=\n") != std::string::npos) {
            throw ConfigError("workload: invalid vehicle type name '" + t.name + "'");
        }
        if (!(t.weight >= 0.0) || !(t.max_speed_mps > 0.0)) {
            throw ConfigError("workload: type '" + t.name + "' needs weight >= 0 and max_speed_mps > 0");
        }
        total += t.weight;
    }
    if (!(total > 0.0)) {
        throw ConfigError("workload: type weights sum to zero");
    }
    if (waypoint_count < 2) {
        throw ConfigError("workload: waypoint_count must be >= 2");
    }
}

std::string to_trace_line(const UpdateMessage& msg) {
    double heading = round2(msg.heading_deg);
    if (heading >= 360.0) {
        heading -= 360.0;
    }
    std::string line;
    line.reserve(80);
    line += msg.vehicle_id;
    line += ',';
    line += msg.vehicle_type;
    line += ',';
    line += format_fixed(msg.location.latitude, 6);
    line += ',';
    line += format_fixed(msg.location.longitude, 6);
    line += ',';
    line += format_fixed(msg.speed_mps, 2);
    line += ',';
    line += format_fixed(heading, 2);
    line += ',';
    line += std::to_string(msg.event_time_ms);
    return line;
}

UpdateMessage parse_trace_line(std::string_view line) {
    auto fields = split(line, ',');
    if (fields.size() != 7) {
        throw ConfigError("trace line: expected 7 fields, got " + std::to_string(fields.size()));
    }
    auto lat = parse_double(fields[2]);
    auto lon = parse_double(fields[3]);
    auto speed = parse_double(fields[4]);
    auto heading = parse_double(fields[5]);
    auto t = parse_int64(fields[6]);
    if (!lat || !lon || !speed || !heading || !t) {
        throw ConfigError("trace line: malformed numeric field");
    }
    return UpdateMessage{std::string(fields[0]), std::string(fields[1]), {*lat, *lon}, *speed, *heading, *t};
}

TrafficGenerator::TrafficGenerator(WorkloadSpec spec, std::uint64_t seed) : spec_(std::move(spec)), rng_(seed) {
    spec_.validate();
    const double r_max = spec_.radius_m * kWaypointRadiusFraction;
    waypoints_.reserve(static_cast<std::size_t>(spec_.waypoint_count));
    for (int i = 0; i < spec_.waypoint_count; ++i) {
        // Uniform over the disk.
        const double r = r_max * std::sqrt(rng_.uniform01());
        const double theta = 2.0 * std::numbers::pi * rng_.uniform01();
        waypoints_.emplace_back(r * std::sin(theta), r * std::cos(theta));
    }
    double acc = 0.0;
    for (const auto& t : spec_.types) {
        acc += t.weight;
        cumulative_weights_.push_back(acc);
    }
}

std::vector<UpdateMessage> TrafficGenerator::step(std::int64_t t_s) {
    if (t_s < 0) {
        throw ClockViolation("generator: negative time " + std::to_string(t_s));
    }
    if (last_t_ && t_s != *last_t_ + 1) {
        throw ClockViolation("generator: expected t=" + std::to_string(*last_t_ + 1) + ", got " + std::to_string(t_s));
    }
    if (last_t_) {
        for (auto& v : vehicles_) {
            move(v, 1.0);
        }
    }
    last_t_ = t_s;

    const auto target = static_cast<std::size_t>(target_vehicle_count(spec_.load, static_cast<double>(t_s)));
    while (vehicles_.size() > target) {
        vehicles_.pop_front();// longest-active first
    }
    while (vehicles_.size() < target) {
        spawn();
    }

    std::vector<UpdateMessage> out;
    out.reserve(vehicles_.size());
    for (const auto& v : vehicles_) {
        out.push_back(snapshot(v, t_s));
    }
    return out;
}

void TrafficGenerator::spawn() {
    Vehicle v;
    v.vehicle_id = "v" + std::to_string(next_id_++);
    const double pick = rng_.uniform01() * cumulative_weights_.back();
    v.type_index = static_cast<std::size_t>(
        std::upper_bound(cumulative_weights_.begin(), cumulative_weights_.end(), pick) - cumulative_weights_.begin());
    v.type_index = std::min(v.type_index, spec_.types.size() - 1);
    const auto start = static_cast<std::size_t>(rng_.below(waypoints_.size()));
    v.east_m = waypoints_[start].first;
    v.north_m = waypoints_[start].second;
    v.speed_mps = spec_.types[v.type_index].max_speed_mps * rng_.uniform(0.5, 1.0);
    extend_route(v);
    const auto& [ex, ny] = waypoints_[v.route.front()];
    v.heading_deg = std::fmod(std::atan2(ex - v.east_m, ny - v.north_m) * 180.0 / std::numbers::pi + 360.0, 360.0);
    vehicles_.push_back(std::move(v));
}

void TrafficGenerator::extend_route(Vehicle& v) {
    while (v.route.size() < kRouteLookahead) {
        auto next = static_cast<std::size_t>(rng_.below(waypoints_.size()));
        const std::size_t prev = v.route.empty() ? waypoints_.size() : v.route.back();
        if (next == prev) {
            next = (next + 1) % waypoints_.size();
        }
        v.route.push_back(next);
    }
}

void TrafficGenerator::move(Vehicle& v, double dt_s) {
    double budget = v.speed_mps * dt_s;
    while (budget > 0.0) {
        const auto& [tx, ty] = waypoints_[v.route.front()];
        const double dx = tx - v.east_m;
        const double dy = ty - v.north_m;
        const double dist = std::hypot(dx, dy);
        if (dist > 0.0) {
            v.heading_deg = std::fmod(std::atan2(dx, dy) * 180.0 / std::numbers::pi + 360.0, 360.0);
        }
        if (dist <= budget) {
            v.east_m = tx;
            v.north_m = ty;
            budget -= dist;
            v.route.pop_front();
            extend_route(v);
        } else {
            v.east_m += dx / dist * budget;
            v.north_m += dy / dist * budget;
            budget = 0.0;
        }
    }
}

UpdateMessage TrafficGenerator::snapshot(const Vehicle& v, std::int64_t t_s) const {
    return UpdateMessage{v.vehicle_id,
                         spec_.types[v.type_index].name,
                         offset_to_geo(spec_.center, v.east_m, v.north_m),
                         v.speed_mps,
                         v.heading_deg,
                         t_s * 1000};
}

std::vector<UpdateMessage> generate_trace(const WorkloadSpec& spec, std::int64_t start_s, std::int64_t duration_s,
                                          std::uint64_t seed) {
    if (duration_s <= 0) {
        throw ConfigError("generate_trace: duration_s must be > 0");
    }
    TrafficGenerator gen(spec, seed);
    std::vector<UpdateMessage> out;
    for (std::int64_t t = start_s; t < start_s + duration_s; ++t) {
        auto batch = gen.step(t);
        out.insert(out.end(), std::make_move_iterator(batch.begin()), std::make_move_iterator(batch.end()));
    }
    return out;
}

std::uint64_t write_trace(std::ostream& out, const std::vector<UpdateMessage>& messages) {
    Fnv1a64 hash;
    for (const auto& m : messages) {
        auto line = to_trace_line(m);
        line += '\n';
        hash.update(line);
        out << line;
    }
    return hash.digest();
}

}// namespace streamtrial::workload
