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

#ifndef STREAMTRIAL_WORKLOAD_LOAD_MODEL_HPP_
#define STREAMTRIAL_WORKLOAD_LOAD_MODEL_HPP_

#include <cstdint>

namespace streamtrial::workload {

/// Sinusoidal time-of-day traffic model. The active vehicle count oscillates between
/// `v_min` and `v_max` with period `period_s`; `phase_s` shifts the zero crossing.
struct LoadModel {
    std::int64_t v_min = 25'000;
    std::int64_t v_max = 75'000;
    double period_s = 86'400.0;
    double phase_s = 21'600.0;

    /// Phase that puts the trough at t = 0 and the peak at t = period / 2.
    static LoadModel trough_at_zero(std::int64_t v_min, std::int64_t v_max, double period_s) {
        return LoadModel{v_min, v_max, period_s, period_s / 4.0};
    }

    /// Counts multiplied by `factor` and rounded; period and phase unchanged.
    LoadModel scaled(double factor) const;

    /// Throws ConfigError when v_min > v_max, v_min < 0 or period_s <= 0.
    void validate() const;

    bool operator==(const LoadModel&) const = default;
};

/// round(mid + amp * sin(2*pi*(t - phase)/period)), always within [v_min, v_max].
std::int64_t target_vehicle_count(const LoadModel& model, double t_s);

}// namespace streamtrial::workload

#endif// STREAMTRIAL_WORKLOAD_LOAD_MODEL_HPP_
