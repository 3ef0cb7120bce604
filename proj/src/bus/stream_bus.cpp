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

#include <streamtrial/bus/stream_bus.hpp>
#include <streamtrial/common/error.hpp>
#include <streamtrial/common/hash.hpp>
#include <streamtrial/common/text.hpp>

#include <istream>
#include <ostream>

namespace streamtrial::bus {

std::uint32_t partition_for(std::string_view key, std::uint32_t partition_count) {
    return static_cast<std::uint32_t>(fnv1a64(key) % partition_count);
}

void StreamBus::create_topic(const std::string& name, std::uint32_t partition_count) {
    if (partition_count == 0) {
        throw ConfigError("topic '" + name + "': partition_count must be >= 1");
    }
    auto topic = std::make_shared<Topic>();
    for (std::uint32_t i = 0; i < partition_count; ++i) {
        topic->partitions.push_back(std::make_unique<Partition>());
    }
    std::unique_lock lock(topics_mutex_);
    if (!topics_.emplace(name, std::move(topic)).second) {
        throw ConfigError("topic '" + name + "' already exists");
    }
}

void StreamBus::delete_topic(const std::string& name) {
    {
        std::unique_lock lock(topics_mutex_);
        topics_.erase(name);
    }
    std::lock_guard lock(groups_mutex_);
    for (auto& [group, offsets] : groups_) {
        std::erase_if(offsets, [&](const auto& entry) { return entry.first.first == name; });
    }
}

bool StreamBus::has_topic(const std::string& name) const {
    std::shared_lock lock(topics_mutex_);
    return topics_.contains(name);
}

std::uint32_t StreamBus::partition_count(const std::string& topic) const {
    return static_cast<std::uint32_t>(topic_or_throw(topic)->partitions.size());
}

std::vector<std::string> StreamBus::topics() const {
    std::shared_lock lock(topics_mutex_);
    std::vector<std::string> out;
    for (const auto& [name, _] : topics_) {
        out.push_back(name);
    }
    return out;
}

std::shared_ptr<StreamBus::Topic> StreamBus::topic_or_throw(const std::string& name) const {
    std::shared_lock lock(topics_mutex_);
    auto it = topics_.find(name);
    if (it == topics_.end()) {
        throw NotFound("unknown topic '" + name + "'");
    }
    return it->second;
}

StreamBus::Partition& StreamBus::partition_or_throw(const Topic& topic, const std::string& name,
                                                    std::uint32_t partition) const {
    if (partition >= topic.partitions.size()) {
        throw NotFound("topic '" + name + "' has no partition " + std::to_string(partition));
    }
    return *topic.partitions[partition];
}

RecordCoordinates StreamBus::publish(const std::string& topic, std::string key, std::string payload,
                                     std::int64_t ingest_time_ms) {
    auto t = topic_or_throw(topic);
    const auto p = partition_for(key, static_cast<std::uint32_t>(t->partitions.size()));
    auto& part = *t->partitions[p];
    std::unique_lock lock(part.mutex);
    const auto offset = static_cast<std::int64_t>(part.log.size());
    part.log.push_back(Record{std::move(key), std::move(payload), offset, ingest_time_ms});
    return {p, offset};
}

void StreamBus::register_group(const std::string& group_id) {
    std::lock_guard lock(groups_mutex_);
    groups_.try_emplace(group_id);
}

bool StreamBus::has_group(const std::string& group_id) const {
    std::lock_guard lock(groups_mutex_);
    return groups_.contains(group_id);
}

std::int64_t StreamBus::committed(const std::string& group_id, const std::string& topic,
                                  std::uint32_t partition) const {
    std::lock_guard lock(groups_mutex_);
    auto g = groups_.find(group_id);
    if (g == groups_.end()) {
        throw NotFound("unknown consumer group '" + group_id + "'");
    }
    auto it = g->second.find({topic, partition});
    return it == g->second.end() ? 0 : it->second;
}

std::vector<Record> StreamBus::fetch(const std::string& group_id, const std::string& topic, std::uint32_t partition,
                                     std::size_t max_records) const {
    auto t = topic_or_throw(topic);
    auto& part = partition_or_throw(*t, topic, partition);
    const auto from = committed(group_id, topic, partition);
    std::shared_lock lock(part.mutex);
    std::vector<Record> out;
    const auto end = static_cast<std::int64_t>(part.log.size());
    for (auto i = from; i < end && out.size() < max_records; ++i) {
        out.push_back(part.log[static_cast<std::size_t>(i)]);
    }
    return out;
}

void StreamBus::commit_offset(const std::string& group_id, const std::string& topic, std::uint32_t partition,
                              std::int64_t offset) {
    const auto end = log_end(topic, partition);
    if (offset < 0 || offset > end) {
        throw RangeError("commit offset " + std::to_string(offset) + " outside [0, " + std::to_string(end) + "] for "
                         + topic + "/" + std::to_string(partition));
    }
    std::lock_guard lock(groups_mutex_);
    auto g = groups_.find(group_id);
    if (g == groups_.end()) {
        throw NotFound("unknown consumer group '" + group_id + "'");
    }
    g->second[{topic, partition}] = offset;
}

std::int64_t StreamBus::log_end(const std::string& topic, std::uint32_t partition) const {
    auto t = topic_or_throw(topic);
    auto& part = partition_or_throw(*t, topic, partition);
    std::shared_lock lock(part.mutex);
    return static_cast<std::int64_t>(part.log.size());
}

std::size_t StreamBus::dump(const std::string& topic, std::ostream& out) const {
    auto t = topic_or_throw(topic);
    std::size_t n = 0;
    for (std::uint32_t p = 0; p < t->partitions.size(); ++p) {
        auto& part = *t->partitions[p];
        std::shared_lock lock(part.mutex);
        for (const auto& r : part.log) {
            out << p << ',' << r.offset << ',' << r.ingest_time_ms << ',' << r.key << ',' << r.payload << '\n';
            ++n;
        }
    }
    return n;
}

std::size_t StreamBus::load_dump(const std::string& topic, std::uint32_t partition_count, std::istream& in) {
    create_topic(topic, partition_count);
    auto t = topic_or_throw(topic);
    std::string line;
    std::size_t row = 0;
    std::size_t loaded = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) {
            continue;
        }
        // payload may itself contain commas; only the first four separators are structural
        std::size_t pos[4];
        std::size_t from = 0;
        for (auto& p : pos) {
            p = line.find(',', from);
            if (p == std::string::npos) {
                throw ParseError(row, "expected at least 5 fields");
            }
            from = p + 1;
        }
        auto part = parse_int64(std::string_view(line).substr(0, pos[0]));
        auto offset = parse_int64(std::string_view(line).substr(pos[0] + 1, pos[1] - pos[0] - 1));
        auto ingest = parse_int64(std::string_view(line).substr(pos[1] + 1, pos[2] - pos[1] - 1));
        if (!part || !offset || !ingest || *part < 0 || *part >= partition_count) {
            throw ParseError(row, "malformed partition/offset/ingest_time");
        }
        auto& log = t->partitions[static_cast<std::size_t>(*part)]->log;
        if (*offset != static_cast<std::int64_t>(log.size())) {
            throw ParseError(row, "non-contiguous offset");
        }
        log.push_back(Record{line.substr(pos[2] + 1, pos[3] - pos[2] - 1), line.substr(pos[3] + 1), *offset, *ingest});
        ++loaded;
    }
    return loaded;
}

}// namespace streamtrial::bus
