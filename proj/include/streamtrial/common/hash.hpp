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

#ifndef STREAMTRIAL_COMMON_HASH_HPP_
#define STREAMTRIAL_COMMON_HASH_HPP_

#include <cstdint>
#include <string>
#include <string_view>

namespace streamtrial {

/// Incremental FNV-1a 64-bit. Used for partition assignment, keyed routing and content hashes,
/// so its output must stay identical across platforms and implementations.
class Fnv1a64 {
  public:
    static constexpr std::uint64_t kOffsetBasis = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

    constexpr Fnv1a64& update(std::string_view bytes) {
        for (unsigned char c : bytes) {
            state_ ^= c;
            state_ *= kPrime;
        }
        return *this;
    }

    Fnv1a64& update_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            state_ ^= static_cast<unsigned char>(v >> (8 * i));
            state_ *= kPrime;
        }
        return *this;
    }

    constexpr std::uint64_t digest() const { return state_; }

  private:
    std::uint64_t state_ = kOffsetBasis;
};

constexpr std::uint64_t fnv1a64(std::string_view bytes) { return Fnv1a64{}.update(bytes).digest(); }

/// 16 lowercase hex digits.
std::string to_hex(std::uint64_t v);

}// namespace streamtrial

#endif// STREAMTRIAL_COMMON_HASH_HPP_
