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

#ifndef STREAMTRIAL_ENGINE_QUEUE_NETWORK_HPP_
#define STREAMTRIAL_ENGINE_QUEUE_NETWORK_HPP_

#include <cstdint>
#include <deque>
#include <queue>
#include <vector>

namespace streamtrial::engine {

/// Per-bin counters of the timing model. Arrays are indexed by task, worker or server.
struct TimingBin {
    std::vector<double> latency_sum;      // per sink (= task)
    std::vector<std::int64_t> latency_count;
    std::vector<std::int64_t> source_starts;// records entering service at each source
    std::vector<std::int64_t> worker_services;// record services (source + window) per worker
    std::vector<std::int64_t> arrivals;   // per server
    std::vector<std::int64_t> starts;     // per server
};

struct LatencySample {
    double source_time_ms = 0.0;
    double sink_time_ms = 0.0;
    int sink = 0;
    double latency_ms() const { return sink_time_ms - source_time_ms; }
};

/// FIFO single-server queues with deterministic service times, two per task:
/// server 2i is source task i, server 2i+1 window task i. Records travel source i -> window w
/// -> sink; latency markers travel source i -> window i -> sink i. Every hop adds a fixed cost.
///
/// Blocks are non-preemptive: an item whose start would fall inside a block starts at the block's
/// end, an item already in service finishes. Items are served in order of (arrival time, injection
/// sequence); `run_until(h)` serves everything that can start before `h` and defers the rest.
class QueueNetwork {
  public:
    struct Params {
        int tasks = 1;
        std::vector<int> task_worker;// worker hosting each task
        int worker_count = 1;
        double source_service_ms = 1.0;
        double window_service_ms = 1.0;
        double hop_ms = 0.0;
        std::int64_t bin_ms = 1000;
        std::int64_t origin_ms = 0;
        bool record_samples = false;
    };

    explicit QueueNetwork(Params params);

    void add_global_block(double from_ms, double to_ms);
    void add_worker_block(int worker, double from_ms, double to_ms);
    void add_worker_slowdown(int worker, double from_ms, double to_ms, double factor);

    void inject_record(double arrival_ms, int source_task, int window_task);
    void inject_marker(double arrival_ms, int source_task);

    void run_until(double horizon_ms);

    int server_count() const { return 2 * params_.tasks; }
    int server_worker(int server) const { return params_.task_worker[static_cast<std::size_t>(server / 2)]; }

    /// Index of the first bin not yet taken.
    std::int64_t first_bin() const { return first_bin_; }
    /// Removes and returns the oldest bin (creating an empty one if nothing landed there).
    TimingBin take_bin();

    std::vector<LatencySample> take_samples();

  private:
    enum class Kind : std::uint8_t { kRecord, kMarker };
    struct Item {
        double time = 0.0;
        std::uint64_t seq = 0;
        double origin = 0.0;
        int server = 0;
        int window_task = 0;
        Kind kind = Kind::kRecord;
    };
    struct Later {
        bool operator()(const Item& a, const Item& b) const {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };
    struct Interval {
        double from = 0.0;
        double to = 0.0;
        double factor = 1.0;
    };
    struct Server {
        int worker = 0;
        bool source = true;
        double service_ms = 0.0;
        double free_at = 0.0;
        std::deque<Item> waiting;
        std::size_t global_cursor = 0;
        std::size_t worker_cursor = 0;
    };

    static void add_merged(std::vector<Interval>& list, double from, double to);
    double earliest_start(Server& s, double t) const;
    double slowdown(int worker, double t) const;
    bool serve(int server, const Item& item, double horizon);
    TimingBin& bin_at(double t);

    Params params_;
    std::vector<Server> servers_;
    std::vector<Interval> global_blocks_;
    std::vector<std::vector<Interval>> worker_blocks_;
    std::vector<std::vector<Interval>> worker_slowdowns_;
    std::priority_queue<Item, std::vector<Item>, Later> events_;
    std::uint64_t seq_ = 0;
    std::deque<TimingBin> bins_;
    std::int64_t first_bin_ = 0;
    std::vector<LatencySample> samples_;
};

}// namespace streamtrial::engine

#endif// STREAMTRIAL_ENGINE_QUEUE_NETWORK_HPP_
