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

#include <stdexcept>
#include <string>

namespace psvc {

enum class Errc {
    bad_config,
    insufficient_samples,
    window_too_large,
    empty_set,
    group_mismatch,
    mixed_plaintext_group,
    zero_noise,
    zero_variance,
    missing_prev_state,
    insufficient_traces,
    empty_summary,
    out_of_operating_range,
    bad_magic,
    unsupported_version,
    unsupported_format,
    truncated_file,
    length_mismatch,
    bad_meta,
    io_error,
};

inline const char *errc_name(Errc c) {
    switch (c) {
    case Errc::bad_config: return "BadConfig";
    case Errc::insufficient_samples: return "InsufficientSamples";
    case Errc::window_too_large: return "WindowTooLarge";
    case Errc::empty_set: return "EmptySet";
    case Errc::group_mismatch: return "GroupMismatch";
    case Errc::mixed_plaintext_group: return "MixedPlaintextGroup";
    case Errc::zero_noise: return "ZeroNoise";
    case Errc::zero_variance: return "ZeroVariance";
    case Errc::missing_prev_state: return "MissingPrevState";
    case Errc::insufficient_traces: return "InsufficientTraces";
    case Errc::empty_summary: return "EmptySummary";
    case Errc::out_of_operating_range: return "OutOfOperatingRange";
    case Errc::bad_magic: return "BadMagic";
    case Errc::unsupported_version: return "UnsupportedVersion";
    case Errc::unsupported_format: return "UnsupportedFormat";
    case Errc::truncated_file: return "TruncatedFile";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::bad_meta: return "BadMeta";
    case Errc::io_error: return "IoError";
    }
    return "UnknownError";
}

/// Exception carrying a stable error code so callers (and tests) can
/// distinguish failure modes without parsing messages.
class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string &what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what),
          code_(code) {}

    Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

} // namespace psvc
