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
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "psvc/aes.hpp"
#include "psvc/dsp.hpp"
#include "psvc/errors.hpp"
#include "psvc/rng.hpp"
#include "psvc/trace_set.hpp"

namespace psvc {

/// Victim model: how one AES execution turns into a rail-voltage signature.
///
/// Each of the 40 intermediate states gets samples_per_op samples, split
/// into 16 equal per-byte slices (the victim cores here are byte-serial);
/// slice value = op_baseline * (Vin/Vref) + leak_gain * (Vin/Vref) * HW(byte),
/// so a whole segment averages to op_baseline + leak_gain * mean-HW(state).
struct LeakageConfig {
    std::size_t samples_per_op = 96; // divisible by 16
    double leak_gain = 0.002;        // volts per Hamming-weight unit
    // indexed by AesOp
    std::array<double, 4> op_baseline = {0.006, 0.016, 0.012, 0.009};
    double supply_voltage = 5.0;   // Vin
    double reference_voltage = 5.0; // Vref (nominal)
    double noise_sigma = 0.0025;      // white Gaussian, volts
    double drift_slope_sigma = 0.0;   // volts/sample
    double dc_shift_sigma = 0.0;      // volts
    std::size_t jitter_max = 0;       // samples, uniform circular shift
    std::uint64_t rng_seed = 1;

    double baseline(AesOp op) const {
        return op_baseline[static_cast<std::size_t>(op)];
    }
    std::size_t samples() const {
        return samples_per_op * RoundTrace::state_count;
    }

    void validate() const {
        if (samples_per_op < 16 || samples_per_op % 16 != 0)
            throw Error(Errc::bad_config,
                        "samples_per_op must be a positive multiple of 16");
        if (supply_voltage <= 0.0)
            throw Error(Errc::bad_config, "supply voltage must be positive");
        if (reference_voltage <= 0.0)
            throw Error(Errc::bad_config, "reference voltage must be positive");
        if (noise_sigma < 0.0 || drift_slope_sigma < 0.0 || dc_shift_sigma < 0.0)
            throw Error(Errc::bad_config, "noise sigmas must be non-negative");
    }
};

/// Transformation from the victim power signature to the observed trace.
struct ChannelConfig {
    enum class Kind { direct, vrm, rf_am };
    Kind kind = Kind::direct;
    // vrm
    double vrm_attenuation = 0.5; // alpha, in (0, 1]
    double vrm_noise_sigma = 0.001;
    // rf_am
    double carrier_freq_fraction = 0.25; // cycles per sample, in (0, 0.5)
    double modulation_depth = 0.5;       // m, in (0, 1]
    double receiver_noise_sigma = 0.0005;

    const char *name() const {
        switch (kind) {
        case Kind::direct: return "direct";
        case Kind::vrm: return "vrm";
        case Kind::rf_am: return "rf";
        }
        return "?";
    }

    void validate() const {
        switch (kind) {
        case Kind::direct:
            break;
        case Kind::vrm:
            if (!(vrm_attenuation > 0.0 && vrm_attenuation <= 1.0))
                throw Error(Errc::bad_config, "vrm attenuation must be in (0,1]");
            if (vrm_noise_sigma < 0.0)
                throw Error(Errc::bad_config, "vrm noise sigma must be >= 0");
            break;
        case Kind::rf_am:
            if (carrier_freq_fraction >= 0.5)
                throw Error(Errc::bad_config,
                            "carrier at or above Nyquist (fraction must be < 0.5)");
            if (carrier_freq_fraction <= 0.0)
                throw Error(Errc::bad_config, "carrier fraction must be > 0");
            if (!(modulation_depth > 0.0 && modulation_depth <= 1.0))
                throw Error(Errc::bad_config, "modulation depth must be in (0,1]");
            if (receiver_noise_sigma < 0.0)
                throw Error(Errc::bad_config, "receiver noise sigma must be >= 0");
            break;
        }
    }
};

/// Noise-free rail signature of one encryption.
inline std::vector<double> render_power_signature(const AesKey &key,
                                                  const AesBlock &pt,
                                                  const LeakageConfig &cfg) {
    cfg.validate();
    const auto enc = encrypt_block(key, pt);
    const double scale = cfg.supply_voltage / cfg.reference_voltage;
    const std::size_t slice = cfg.samples_per_op / 16;

    std::vector<double> sig(cfg.samples());
    std::size_t pos = 0;
    for (std::size_t j = 0; j < RoundTrace::state_count; ++j) {
        const double base = cfg.baseline(RoundTrace::op_at(j)) * scale;
        const AesBlock &state = enc.rounds.states[j];
        for (std::size_t b = 0; b < 16; ++b) {
            const double v =
                base + cfg.leak_gain * scale * hamming_weight(state[b]);
            for (std::size_t s = 0; s < slice; ++s)
                sig[pos++] = v;
        }
    }
    return sig;
}

namespace sim_detail {

inline std::size_t envelope_window(double carrier_freq_fraction,
                                   std::size_t len) {
    // one carrier period, rounded down to an odd width
    auto w = static_cast<std::size_t>(1.0 / carrier_freq_fraction);
    if (w % 2 == 0)
        --w;
    if (w < 3)
        w = 3;
    while (w > len)
        w -= 2;
    return w == 0 ? 1 : w;
}

} // namespace sim_detail

/// Push a signature through the physical channel. Direct is the identity;
/// VRM attenuates and adds regulator noise; RF-AM amplitude-modulates a
/// carrier, envelope-detects it (rectify, then smooth over one carrier
/// period) and rescales back to baseband volts. The rectified bare carrier
/// is smoothed identically and divided out, which cancels both the 2/pi
/// rectification gain and the edge-window shrinkage.
inline std::vector<double> apply_channel(std::span<const double> signature,
                                         const ChannelConfig &ch, Rng &rng) {
    ch.validate();
    if (signature.empty())
        throw Error(Errc::empty_set, "empty signature");

    const std::size_t n = signature.size();
    std::vector<double> out(signature.begin(), signature.end());

    switch (ch.kind) {
    case ChannelConfig::Kind::direct:
        return out;

    case ChannelConfig::Kind::vrm:
        for (double &v : out)
            v = ch.vrm_attenuation * v + rng.gaussian(ch.vrm_noise_sigma);
        return out;

    case ChannelConfig::Kind::rf_am: {
        const double center = dsp_detail::mean(signature);
        double half = 0.0;
        for (double v : signature)
            half = std::max(half, std::abs(v - center));

        constexpr double two_pi = 6.283185307179586476925286766559;
        const double m = ch.modulation_depth;
        std::vector<double> rect(n), rect_carrier(n);
        for (std::size_t t = 0; t < n; ++t) {
            const double x = half > 0.0 ? (signature[t] - center) / half : 0.0;
            const double c =
                std::cos(two_pi * ch.carrier_freq_fraction * static_cast<double>(t));
            rect[t] = std::abs((1.0 + m * x) * c);
            rect_carrier[t] = std::abs(c);
        }
        const std::size_t w =
            sim_detail::envelope_window(ch.carrier_freq_fraction, n);
        const std::vector<double> env = moving_average(rect, w);
        const std::vector<double> env0 = moving_average(rect_carrier, w);
        for (std::size_t t = 0; t < n; ++t) {
            // env0 can only vanish on degenerate few-sample inputs where the
            // window catches a lone carrier zero; no information there
            const double y =
                env0[t] > 0.0 ? (env[t] / env0[t] - 1.0) / m : 0.0;
            out[t] = center + half * y + rng.gaussian(ch.receiver_noise_sigma);
        }
        return out;
    }
    }
    return out;
}

struct Simulation {
    TraceSet traces;
    // noise-free channel output per trace (pre-jitter); filled on request
    std::vector<std::vector<double>> clean;
};

namespace sim_detail {

constexpr std::uint64_t kPlaintextTag = 0x70746578; // "ptex"
constexpr std::uint64_t kTraceTag = 0x74726163;     // "trac"
constexpr std::uint64_t kProbeTag = 0x70726f62;     // "prob"
constexpr std::uint64_t kKeyTag = 0x6b657921;       // "key!"

} // namespace sim_detail

/// The key a seed implies when the caller asks for a random one.
inline AesKey random_key(std::uint64_t seed) {
    Rng rng(derive_seed(seed, sim_detail::kKeyTag));
    return rng.block();
}

/// Generate n traces with the fixed key and randomized plaintexts; each
/// plaintext is repeated `repeat` times in consecutive rows so Avg(N) can
/// collapse the groups later. Every trace draws from its own RNG stream
/// derived from (rng_seed, index), so any trace-level parallelism yields
/// output identical to a serial run.
inline Simulation simulate_traces_detailed(const AesKey &key, std::size_t n,
                                           const LeakageConfig &cfg,
                                           const ChannelConfig &ch,
                                           std::size_t repeat = 1,
                                           unsigned threads = 1,
                                           bool keep_clean = false) {
    cfg.validate();
    ch.validate();
    if (n == 0)
        throw Error(Errc::bad_config, "trace count must be >= 1");
    if (repeat == 0 || n % repeat != 0)
        throw Error(Errc::bad_config,
                    "trace count must be a multiple of the repeat factor");

    const std::size_t S = cfg.samples();
    Simulation sim;
    TraceSet &ts = sim.traces;
    ts.trace_count = n;
    ts.sample_count = S;
    ts.samples.resize(n * S);
    ts.plaintexts.resize(n);
    ts.ciphertexts.resize(n);
    ts.key_known = true;
    ts.key = key;
    if (keep_clean)
        sim.clean.resize(n);

    const std::size_t groups = n / repeat;
    std::vector<AesBlock> group_pt(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        Rng prng(derive_seed(cfg.rng_seed, sim_detail::kPlaintextTag, g));
        group_pt[g] = prng.block();
    }

    ChannelConfig clean_ch = ch;
    clean_ch.vrm_noise_sigma = 0.0;
    clean_ch.receiver_noise_sigma = 0.0;

    auto worker = [&](std::size_t begin, std::size_t end) {
        Rng dummy(0);
        for (std::size_t i = begin; i < end; ++i) {
            const AesBlock &pt = group_pt[i / repeat];
            ts.plaintexts[i] = pt;
            ts.ciphertexts[i] = encrypt_block(key, pt).ciphertext;

            const std::vector<double> sig = render_power_signature(key, pt, cfg);
            Rng rng(derive_seed(cfg.rng_seed, sim_detail::kTraceTag, i));
            std::vector<double> row = apply_channel(sig, ch, rng);
            if (keep_clean)
                sim.clean[i] = apply_channel(sig, clean_ch, dummy);

            for (std::size_t s = 0; s < S; ++s)
                row[s] += rng.gaussian(cfg.noise_sigma);
            const double slope = rng.gaussian(cfg.drift_slope_sigma);
            const double dc = rng.gaussian(cfg.dc_shift_sigma);
            for (std::size_t s = 0; s < S; ++s)
                row[s] += slope * static_cast<double>(s) + dc;

            std::ptrdiff_t shift = 0;
            if (cfg.jitter_max > 0)
                shift = rng.uniform_int(-static_cast<std::int64_t>(cfg.jitter_max),
                                        static_cast<std::int64_t>(cfg.jitter_max));
            if (shift != 0)
                row = circular_shift(row, shift);

            double *dst = ts.samples.data() + i * S;
            for (std::size_t s = 0; s < S; ++s)
                dst[s] = quantize_sample(row[s]);
        }
    };

    if (threads <= 1) {
        worker(0, n);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto guarded = [&](std::size_t b, std::size_t e) {
            try {
                worker(b, e);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        };
        const std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t b = std::min<std::size_t>(t * chunk, n);
            const std::size_t e = std::min<std::size_t>(b + chunk, n);
            if (b < e)
                pool.emplace_back(guarded, b, e);
        }
        for (auto &th : pool)
            th.join();
        if (failure)
            std::rethrow_exception(failure);
    }

    ts.meta["tool"] = "psvclab";
    ts.meta["channel"] = ch.name();
    ts.meta["vin"] = std::to_string(cfg.supply_voltage);
    ts.meta["seed"] = std::to_string(cfg.rng_seed);
    ts.meta["repeat"] = std::to_string(repeat);
    ts.meta["voltage_scaling"] = "linear";
    return sim;
}

inline TraceSet simulate_traces(const AesKey &key, std::size_t n,
                                const LeakageConfig &cfg,
                                const ChannelConfig &ch, std::size_t repeat = 1,
                                unsigned threads = 1) {
    return simulate_traces_detailed(key, n, cfg, ch, repeat, threads, false)
        .traces;
}

/// Noise sigma hitting a target single-trace SNR (dB), measured against the
/// time variance of the noise-free channel output averaged over a few
/// seeded probe plaintexts.
inline double calibrate_noise_sigma(const AesKey &key, const LeakageConfig &cfg,
                                    const ChannelConfig &ch, double target_db,
                                    std::size_t probes = 8) {
    cfg.validate();
    ch.validate();
    if (probes == 0)
        throw Error(Errc::bad_config, "need at least one probe");
    ChannelConfig clean_ch = ch;
    clean_ch.vrm_noise_sigma = 0.0;
    clean_ch.receiver_noise_sigma = 0.0;
    Rng dummy(0);
    double var = 0.0;
    for (std::size_t i = 0; i < probes; ++i) {
        Rng prng(derive_seed(cfg.rng_seed, sim_detail::kProbeTag, i));
        const AesBlock pt = prng.block();
        const std::vector<double> sig = render_power_signature(key, pt, cfg);
        const std::vector<double> obs = apply_channel(sig, clean_ch, dummy);
        var += dsp_detail::variance(obs);
    }
    var /= static_cast<double>(probes);
    return std::sqrt(var / std::pow(10.0, target_db / 10.0));
}

} // namespace psvc
