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

#ifndef STREAMTRIAL_BUS_STREAM_BUS_HPP_
#define STREAMTRIAL_BUS_STREAM_BUS_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace streamtrial::bus {

struct Record {
    std::string key;
    std::string payload;
    std::int64_t offset = 0;
    std::int64_t ingest_time_ms = 0;
    bool operator==(const Record&) const = default;
};

struct RecordCoordinates {
    std::uint32_t partition = 0;
    std::int64_t offset = 0;
    bool operator==(const RecordCoordinates&) const = default;
};

/// FNV-1a 64 of the key, modulo the partition count.
std::uint32_t partition_for(std::string_view key, std::uint32_t partition_count);

/// In-process partitioned log with consumer groups. All operations are safe to call
/// concurrently; appends to one partition are serialized, commits are atomic per call.
class StreamBus {
  public:
    StreamBus() = default;
    StreamBus(const StreamBus&) = delete;
    StreamBus& operator=(const StreamBus&) = delete;

    /// Throws ConfigError on a duplicate name or zero partitions.
    void create_topic(const std::string& name, std::uint32_t partition_count);
    /// Drops the topic and every group's committed offsets on it. Unknown names are ignored.
    void delete_topic(const std::string& name);
    bool has_topic(const std::string& name) const;
    std::uint32_t partition_count(const std::string& topic) const;
    std::vector<std::string> topics() const;

    RecordCoordinates publish(const std::string& topic, std::string key, std::string payload,
                              std::int64_t ingest_time_ms);

    /// Idempotent.
    void register_group(const std::string& group_id);
    bool has_group(const std::string& group_id) const;

    /// Up to `max_records` starting at the group's committed offset. Does not move the commit.
    std::vector<Record> fetch(const std::string& group_id, const std::string& topic, std::uint32_t partition,
                              std::size_t max_records) const;

    /// Moves the committed offset anywhere in [0, log end], including backwards.
    void commit_offset(const std::string& group_id, const std::string& topic, std::uint32_t partition,
                       std::int64_t offset);
    std::int64_t committed(const std::string& group_id, const std::string& topic, std::uint32_t partition) const;

    std::int64_t log_end(const std::string& topic, std::uint32_t partition) const;

    /// Every record of the topic as "partition,offset,ingest_time_ms,key,payload" lines, by partition then offset.
    std::size_t dump(const std::string& topic, std::ostream& out) const;
    /// Re-creates a topic from a dump. Offsets must be contiguous per partition.
    std::size_t load_dump(const std::string& topic, std::uint32_t partition_count, std::istream& in);

  private:
    struct Partition {
        mutable std::shared_mutex mutex;
        std::vector<Record> log;
    };
    struct Topic {
        std::vector<std::unique_ptr<Partition>> partitions;
    };
    using OffsetKey = std::tuple<std::string, std::string, std::uint32_t>;

    std::shared_ptr<Topic> topic_or_throw(const std::string& name) const;
    Partition& partition_or_throw(const Topic& topic, const std::string& name, std::uint32_t partition) const;

    mutable std::shared_mutex topics_mutex_;
    std::map<std::string, std::shared_ptr<Topic>> topics_;

    mutable std::mutex groups_mutex_;
    std::map<std::string, std::map<std::pair<std::string, std::uint32_t>, std::int64_t>> groups_;
};

}// namespace streamtrial::bus

#endif// STREAMTRIAL_BUS_STREAM_BUS_HPP_
