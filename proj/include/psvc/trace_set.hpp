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

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "psvc/aes.hpp"
#include "psvc/errors.hpp"

namespace psvc {

/// Snap a sample to the binary32 grid used by the container format, so any
/// set a producer hands out survives write/read bit-identically.
inline double quantize_sample(double v) {
    return static_cast<double>(static_cast<float>(v));
}

/// The pipeline's universal currency: a T x S matrix of voltage samples
/// plus per-trace plaintext/ciphertext and free-form metadata.
struct TraceSet {
    std::size_t trace_count = 0;
    std::size_t sample_count = 0;
    std::vector<double> samples; // row-major, trace_count x sample_count
    std::vector<AesBlock> plaintexts;
    std::vector<AesBlock> ciphertexts;
    bool key_known = false;
    AesKey key{};
    std::map<std::string, std::string> meta;

    std::span<double> trace(std::size_t i) {
        return {samples.data() + i * sample_count, sample_count};
    }
    std::span<const double> trace(std::size_t i) const {
        return {samples.data() + i * sample_count, sample_count};
    }

    double &at(std::size_t t, std::size_t s) {
        return samples[t * sample_count + s];
    }
    double at(std::size_t t, std::size_t s) const {
        return samples[t * sample_count + s];
    }

    /// Structural invariants; ciphertext consistency is checked when the
    /// key is recorded.
    void validate() const {
        if (samples.size() != trace_count * sample_count)
            throw Error(Errc::bad_config, "sample matrix size mismatch");
        if (plaintexts.size() != trace_count || ciphertexts.size() != trace_count)
            throw Error(Errc::bad_config, "plaintext/ciphertext row count mismatch");
        if (key_known) {
            for (std::size_t i = 0; i < trace_count; ++i)
                if (encrypt_block(key, plaintexts[i]).ciphertext != ciphertexts[i])
                    throw Error(Errc::bad_config,
                                "ciphertext row " + std::to_string(i) +
                                    " does not match AES(key, plaintext)");
        }
    }
};

} // namespace psvc
