/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * This file is part of psvclab, a supply-voltage side-channel laboratory.
 */

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

namespace psvc {

// SplitMix64 step; used to derive independent sub-stream seeds.
inline std::uint64_t splitmix64(std::uint64_t &state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for an independent stream identified by (root, tag, index).
/// Parallel workers using per-index streams reproduce serial output.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag,
                                 std::uint64_t index = 0) {
    std::uint64_t s = root;
    std::uint64_t a = splitmix64(s);
    s ^= tag * 0xd1342543de82ef95ULL;
    std::uint64_t b = splitmix64(s);
    s ^= index * 0x2545f4914f6cdd1dULL;
    std::uint64_t c = splitmix64(s);
    return a ^ (b << 1) ^ c;
}

/// Deterministic random source. The engine (mt19937_64) is pinned by the
/// standard; the variate mappings below are implemented here because the
/// standard-library distributions are implementation-defined, and trace
/// files must be byte-identical across platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [lo, hi], unbiased via rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        if (range == 0) // full 64-bit span
            return static_cast<std::int64_t>(next_u64());
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
        std::uint64_t x = next_u64();
        while (x >= limit)
            x = next_u64();
        return lo + static_cast<std::int64_t>(x % range);
    }

    std::uint8_t byte() { return static_cast<std::uint8_t>(next_u64() >> 56); }

    std::array<std::uint8_t, 16> block() {
        std::array<std::uint8_t, 16> out{};
        for (auto &b : out)
            b = byte();
        return out;
    }

    /// Standard normal via Box-Muller (no cached spare, so the draw count
    /// per call is fixed and streams stay aligned).
    double gaussian() {
        const double u1 =
            static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; // (0,1]
        const double u2 = uniform();                                 // [0,1)
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    double gaussian(double sigma) { return sigma == 0.0 ? 0.0 : sigma * gaussian(); }

  private:
    std::mt19937_64 engine_;
};

} // namespace psvc
