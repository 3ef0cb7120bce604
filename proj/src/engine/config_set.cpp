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
#include <streamtrial/engine/config_set.hpp>

#include <algorithm>
#include <string>

namespace streamtrial::engine {

void ConfigSet::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw ConfigError(std::string("config: ") + what);
        }
    };
    require(checkpoint_interval_ms > 0, "checkpoint_interval_ms must be > 0");
    require(window_length_ms > 0, "window_length_ms must be > 0");
    require(parallelism >= 1, "parallelism must be >= 1");
    require(worker_count >= 1, "worker_count must be >= 1");
    require(coordinator_count >= 1, "coordinator_count must be >= 1");
    require(slots_per_worker >= 1, "slots_per_worker must be >= 1");
    require(parallelism <= worker_count * slots_per_worker, "parallelism exceeds worker_count * slots_per_worker");
    require(heap_per_worker_mb >= 1, "heap_per_worker_mb must be >= 1");
    require(max_restarts >= 0, "max_restarts must be >= 0");
    require(marker_interval_ms > 0, "marker_interval_ms must be > 0");
    require(checkpoint_base_ms >= 0 && checkpoint_per_record_ms >= 0, "checkpoint cost coefficients must be >= 0");
    require(restart_delay_ms >= 0 && restore_per_record_ms >= 0, "recovery cost coefficients must be >= 0");
    require(max_processing_rate_msg_s > 0, "max_processing_rate_msg_s must be > 0");
    require(source_capacity_msg_s > 0 && window_capacity_msg_s > 0, "task capacities must be > 0");
    require(hop_cost_ms >= 0, "hop_cost_ms must be >= 0");
    require(cpu_base_pct >= 0 && cpu_per_kmsg_pct >= 0 && cpu_checkpoint_pct >= 0, "cpu coefficients must be >= 0");
    require(heap_overhead_mb >= 0 && heap_buffer_mb_per_kmsg >= 0 && heap_bytes_per_state_record >= 0,
            "heap coefficients must be >= 0");
    require(coordinator_cpu_base_pct >= 0 && coordinator_cpu_per_kmsg_pct >= 0 && coordinator_cpu_checkpoint_pct >= 0
                && coordinator_heap_base_pct >= 0 && coordinator_heap_per_kmsg_pct >= 0,
            "coordinator coefficients must be >= 0");
}

double checkpoint_stall_ms(const ConfigSet& config, std::int64_t state_records) {
    return config.checkpoint_base_ms + config.checkpoint_per_record_ms * static_cast<double>(state_records);
}

double recovery_time_ms(const ConfigSet& config, std::int64_t restored_records, std::int64_t backlog_records,
                        double scale_factor) {
    const double rate_per_ms = config.max_processing_rate_msg_s * scale_factor / 1000.0;
    return config.restart_delay_ms + config.restore_per_record_ms * static_cast<double>(restored_records)
        + static_cast<double>(backlog_records) / rate_per_ms;
}

double worker_cpu_pct(const ConfigSet& config, double rate_kmsg_s, double checkpoint_fraction) {
    return std::clamp(
        config.cpu_base_pct + config.cpu_per_kmsg_pct * rate_kmsg_s + config.cpu_checkpoint_pct * checkpoint_fraction,
        0.0, 100.0);
}

double worker_heap_pct(const ConfigSet& config, double rate_kmsg_s, double state_records) {
    const double state_mb = state_records * config.heap_bytes_per_state_record / (1024.0 * 1024.0);
    const double used_mb = config.heap_overhead_mb + config.heap_buffer_mb_per_kmsg * rate_kmsg_s + state_mb;
    return std::clamp(100.0 * used_mb / config.heap_per_worker_mb, 0.0, 100.0);
}

double coordinator_cpu_pct(const ConfigSet& config, double total_rate_kmsg_s, double checkpoint_fraction) {
    return std::clamp(config.coordinator_cpu_base_pct + config.coordinator_cpu_per_kmsg_pct * total_rate_kmsg_s
                          + config.coordinator_cpu_checkpoint_pct * checkpoint_fraction,
                      0.0, 100.0);
}

double coordinator_heap_pct(const ConfigSet& config, double total_rate_kmsg_s) {
    return std::clamp(config.coordinator_heap_base_pct + config.coordinator_heap_per_kmsg_pct * total_rate_kmsg_s, 0.0,
                      100.0);
}

}// namespace streamtrial::engine
