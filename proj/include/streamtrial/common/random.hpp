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

#ifndef STREAMTRIAL_COMMON_RANDOM_HPP_
#define STREAMTRIAL_COMMON_RANDOM_HPP_

#include <cstdint>
#include <random>

namespace streamtrial {

/// SplitMix64 finalizer; derives well-spread sub-seeds from (seed, salt) pairs.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt = 0) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seeded generator whose derived values are bit-identical on every conforming platform.
/// std::mt19937_64 output is fully specified by the standard; the <random> distributions are not,
/// so the conversions below are done by hand.
class DeterministicRng {
  public:
    explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) {
        // Lemire's multiply-shift; the residual bias is far below anything a simulation can observe.
        return static_cast<std::uint64_t>((static_cast<Wide>(engine_()) * n) >> 64);
    }

  private:
    __extension__ using Wide = unsigned __int128;
    std::mt19937_64 engine_;
};

}// namespace streamtrial

#endif// STREAMTRIAL_COMMON_RANDOM_HPP_
