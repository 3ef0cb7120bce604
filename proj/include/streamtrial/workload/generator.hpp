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

#ifndef STREAMTRIAL_WORKLOAD_GENERATOR_HPP_
#define STREAMTRIAL_WORKLOAD_GENERATOR_HPP_

#include <streamtrial/common/random.hpp>
#include <streamtrial/workload/geo.hpp>
#include <streamtrial/workload/load_model.hpp>

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace streamtrial::workload {

struct VehicleTypeSpec {
    std::string name;
    double weight = 1.0;
    double max_speed_mps = 13.9;
    bool operator==(const VehicleTypeSpec&) const = default;
};

/// car, truck, bus, motorcycle with urban speed limits.
std::vector<VehicleTypeSpec> default_vehicle_types();

struct WorkloadSpec {
    LoadModel load;
    GeoPoint center = kBerlinCenter;
    double radius_m = 1000.0;
    std::vector<VehicleTypeSpec> types = default_vehicle_types();
    int waypoint_count = 64;

    void validate() const;
    bool operator==(const WorkloadSpec&) const = default;
};

struct UpdateMessage {
    std::string vehicle_id;
    std::string vehicle_type;
    GeoPoint location;
    double speed_mps = 0.0;
    double heading_deg = 0.0;
    std::int64_t event_time_ms = 0;
    bool operator==(const UpdateMessage&) const = default;
};

/// One trace line: id,type,lat,lon,speed,heading,event_time_ms with 6/6/2/2 fixed decimals.
std::string to_trace_line(const UpdateMessage& msg);
/// Inverse of to_trace_line (values carry the line's rounding). Throws ConfigError when malformed.
UpdateMessage parse_trace_line(std::string_view line);

struct Vehicle {
    std::string vehicle_id;
    std::size_t type_index = 0;
    double east_m = 0.0;
    double north_m = 0.0;
    double speed_mps = 0.0;
    double heading_deg = 0.0;
    std::deque<std::size_t> route;
};

/// Vehicle population on a synthetic waypoint graph inside the configured radius.
/// Not thread-safe; one instance per thread.
class TrafficGenerator {
  public:
    TrafficGenerator(WorkloadSpec spec, std::uint64_t seed);

    /// Advances to second `t_s` and returns one message per active vehicle, stamped t_s * 1000.
    /// Successive calls must use t_s, t_s + 1, ...; anything else throws ClockViolation.
    std::vector<UpdateMessage> step(std::int64_t t_s);

    const std::deque<Vehicle>& vehicles() const { return vehicles_; }
    const WorkloadSpec& spec() const { return spec_; }

  private:
    void spawn();
    void move(Vehicle& v, double dt_s);
    void extend_route(Vehicle& v);
    UpdateMessage snapshot(const Vehicle& v, std::int64_t t_s) const;

    WorkloadSpec spec_;
    DeterministicRng rng_;
    std::vector<std::pair<double, double>> waypoints_;
    std::vector<double> cumulative_weights_;
    std::deque<Vehicle> vehicles_;
    std::uint64_t next_id_ = 0;
    std::optional<std::int64_t> last_t_;
};

/// Concatenated step output for t = start_s .. start_s + duration_s - 1. duration_s must be positive.
std::vector<UpdateMessage> generate_trace(const WorkloadSpec& spec, std::int64_t start_s, std::int64_t duration_s,
                                          std::uint64_t seed);

/// Writes one trace line per message; returns the FNV-1a 64 hash of the written bytes.
std::uint64_t write_trace(std::ostream& out, const std::vector<UpdateMessage>& messages);

}// namespace streamtrial::workload

#endif// STREAMTRIAL_WORKLOAD_GENERATOR_HPP_
