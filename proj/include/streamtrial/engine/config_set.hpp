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

#ifndef STREAMTRIAL_ENGINE_CONFIG_SET_HPP_
#define STREAMTRIAL_ENGINE_CONFIG_SET_HPP_

#include <cstdint>

namespace streamtrial::engine {

/// Tunable parameters of one pipeline variant plus the coefficients of its cost model.
/// Rates and capacities are expressed at full scale (messages per second before the
/// experiment's scale factor is applied); durations in milliseconds.
struct ConfigSet {
    std::int64_t checkpoint_interval_ms = 60'000;
    std::int64_t window_length_ms = 300'000;
    int parallelism = 8;
    int worker_count = 10;
    int coordinator_count = 1;
    int slots_per_worker = 1;
    int heap_per_worker_mb = 1024;
    int max_restarts = 10;
    std::int64_t marker_interval_ms = 100;

    // checkpoint stall = checkpoint_base_ms + checkpoint_per_record_ms * state records
    double checkpoint_base_ms = 50.0;
    double checkpoint_per_record_ms = 0.01;
    // recovery = restart_delay_ms + restore_per_record_ms * restored records + backlog / max_processing_rate
    double restart_delay_ms = 2'000.0;
    double restore_per_record_ms = 0.02;
    double max_processing_rate_msg_s = 120'000.0;

    // queueing network
    double source_capacity_msg_s = 15'000.0;
    double window_capacity_msg_s = 80'000.0;
    double hop_cost_ms = 2.0;

    // resource model
    double cpu_base_pct = 5.0;
    double cpu_per_kmsg_pct = 0.5;
    double cpu_checkpoint_pct = 30.0;
    double heap_overhead_mb = 200.0;
    double heap_buffer_mb_per_kmsg = 2.0;
    double heap_bytes_per_state_record = 16.0;
    double coordinator_cpu_base_pct = 2.0;
    double coordinator_cpu_per_kmsg_pct = 0.02;
    double coordinator_cpu_checkpoint_pct = 10.0;
    double coordinator_heap_base_pct = 10.0;
    double coordinator_heap_per_kmsg_pct = 0.05;

    /// Throws ConfigError naming the first violated constraint.
    void validate() const;

    /// Workers plus coordinators; the unit of the provisioning budget.
    int instance_count() const { return worker_count + coordinator_count; }

    bool operator==(const ConfigSet&) const = default;
};

double checkpoint_stall_ms(const ConfigSet& config, std::int64_t state_records);

double recovery_time_ms(const ConfigSet& config, std::int64_t restored_records, std::int64_t backlog_records,
                        double scale_factor);

/// `rate_kmsg_s` is the worker's processed rate in thousands of full-scale messages per second;
/// `checkpoint_fraction` the share of the sample interval spent in a checkpoint.
double worker_cpu_pct(const ConfigSet& config, double rate_kmsg_s, double checkpoint_fraction);
/// `state_records` counts full-scale records held in the worker's open windows.
double worker_heap_pct(const ConfigSet& config, double rate_kmsg_s, double state_records);
double coordinator_cpu_pct(const ConfigSet& config, double total_rate_kmsg_s, double checkpoint_fraction);
double coordinator_heap_pct(const ConfigSet& config, double total_rate_kmsg_s);

}// namespace streamtrial::engine

#endif// STREAMTRIAL_ENGINE_CONFIG_SET_HPP_
