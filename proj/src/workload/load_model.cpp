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
#include <streamtrial/workload/load_model.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace streamtrial::workload {

LoadModel LoadModel::scaled(double factor) const {
    LoadModel out = *this;
    out.v_min = std::llround(static_cast<double>(v_min) * factor);
    out.v_max = std::llround(static_cast<double>(v_max) * factor);
    return out;
}

void LoadModel::validate() const {
    if (v_min < 0) {
        throw ConfigError("load model: v_min must be >= 0");
    }
    if (v_min > v_max) {
        throw ConfigError("load model: v_min must not exceed v_max");
    }
    if (!(period_s > 0.0)) {
        throw ConfigError("load model: period_s must be > 0");
    }
}

std::int64_t target_vehicle_count(const LoadModel& model, double t_s) {
    const double mid = 0.5 * static_cast<double>(model.v_min + model.v_max);
    const double amp = 0.5 * static_cast<double>(model.v_max - model.v_min);
    const double angle = 2.0 * std::numbers::pi * (t_s - model.phase_s) / model.period_s;
    const auto count = std::llround(mid + amp * std::sin(angle));
    return std::clamp<std::int64_t>(count, model.v_min, model.v_max);
}

}// namespace streamtrial::workload
