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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "psvc/errors.hpp"
#include "psvc/trace_set.hpp"

namespace psvc {

struct FilterSpec {
    enum class Kind { low_pass, high_pass };
    Kind kind = Kind::low_pass;
    std::size_t window = 1; // odd, 1 <= window <= sample count
};

struct SnrReport {
    double snr_db = 0.0;
    double signal_power = 0.0; // volts^2
    double noise_power = 0.0;  // volts^2
};

namespace dsp_detail {

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x)
        s += v;
    return s / static_cast<double>(x.size());
}

/// Population variance over time.
inline double variance(std::span<const double> x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x)
        s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

inline std::size_t wrap(std::ptrdiff_t i, std::size_t n) {
    const auto sn = static_cast<std::ptrdiff_t>(n);
    return static_cast<std::size_t>(((i % sn) + sn) % sn);
}

} // namespace dsp_detail

/// Subtract the least-squares line from a trace.
inline std::vector<double> detrend_linear(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2)
        throw Error(Errc::insufficient_samples,
                    "detrend needs at least 2 samples, got " + std::to_string(n));
    const double tbar = static_cast<double>(n - 1) / 2.0;
    const double xbar = dsp_detail::mean(x);
    double stx = 0.0, stt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = static_cast<double>(i) - tbar;
        stx += dt * (x[i] - xbar);
        stt += dt * dt;
    }
    const double slope = stx / stt;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = x[i] - (xbar + slope * (static_cast<double>(i) - tbar));
    return out;
}

/// Centered moving average; edges use shrunken symmetric windows rather
/// than zero padding, so no edge transient can masquerade as leakage.
inline std::vector<double> moving_average(std::span<const double> x,
                                          std::size_t window) {
    const std::size_t n = x.size();
    if (window > n)
        throw Error(Errc::window_too_large, "window " + std::to_string(window) +
                                                " exceeds trace length " +
                                                std::to_string(n));
    if (window == 0 || window % 2 == 0)
        throw Error(Errc::bad_config, "moving-average window must be odd");
    const std::size_t half = window / 2;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t h = std::min({half, i, n - 1 - i});
        double s = 0.0;
        for (std::size_t j = i - h; j <= i + h; ++j)
            s += x[j];
        out[i] = s / static_cast<double>(2 * h + 1);
    }
    return out;
}

inline std::vector<double> filter(std::span<const double> x, FilterSpec spec) {
    std::vector<double> lp = moving_average(x, spec.window);
    if (spec.kind == FilterSpec::Kind::low_pass)
        return lp;
    for (std::size_t i = 0; i < x.size(); ++i)
        lp[i] = x[i] - lp[i];
    return lp;
}

/// out[t] = x[t - k mod n]; positive k delays the trace.
inline std::vector<double> circular_shift(std::span<const double> x,
                                          std::ptrdiff_t k) {
    const std::size_t n = x.size();
    std::vector<double> out(n);
    for (std::size_t t = 0; t < n; ++t)
        out[t] = x[dsp_detail::wrap(static_cast<std::ptrdiff_t>(t) - k, n)];
    return out;
}

namespace dsp_detail {

template <typename Fn>
inline TraceSet map_traces(const TraceSet &ts, Fn &&fn) {
    TraceSet out = ts;
    for (std::size_t i = 0; i < ts.trace_count; ++i) {
        std::vector<double> row = fn(ts.trace(i));
        for (std::size_t s = 0; s < ts.sample_count; ++s)
            out.at(i, s) = quantize_sample(row[s]);
    }
    return out;
}

} // namespace dsp_detail

inline TraceSet detrend_linear(const TraceSet &ts) {
    return dsp_detail::map_traces(ts, [](std::span<const double> x) {
        return detrend_linear(x);
    });
}

inline TraceSet filter(const TraceSet &ts, FilterSpec spec) {
    return dsp_detail::map_traces(ts, [spec](std::span<const double> x) {
        return filter(x, spec);
    });
}

/// Circularly realign every trace against a reference trace, searching
/// lags in [-max_lag, +max_lag] for the maximal centered cross-correlation.
/// Ties prefer the smaller |lag|, then the smaller lag. Applied lags are
/// recorded in meta["align_lags"].
inline TraceSet align(const TraceSet &ts, std::size_t reference_index,
                      std::size_t max_lag) {
    if (ts.trace_count == 0)
        throw Error(Errc::empty_set, "cannot align an empty trace set");
    if (reference_index >= ts.trace_count)
        throw Error(Errc::bad_config, "reference index out of range");
    if (max_lag == 0) {
        TraceSet out = ts;
        std::string lags = "0";
        for (std::size_t i = 1; i < ts.trace_count; ++i)
            lags += ",0";
        out.meta["align_lags"] = lags;
        return out;
    }

    const std::size_t n = ts.sample_count;
    const auto ref = ts.trace(reference_index);
    const double ref_mean = dsp_detail::mean(ref);
    std::vector<double> refc(n);
    for (std::size_t t = 0; t < n; ++t)
        refc[t] = ref[t] - ref_mean;

    TraceSet out = ts;
    std::string lags;
    for (std::size_t i = 0; i < ts.trace_count; ++i) {
        const auto x = ts.trace(i);
        const double xm = dsp_detail::mean(x);
        std::ptrdiff_t best_lag = 0;
        double best_score = 0.0;
        bool first = true;
        const auto ml = static_cast<std::ptrdiff_t>(max_lag);
        for (std::ptrdiff_t lag = -ml; lag <= ml; ++lag) {
            double score = 0.0;
            for (std::size_t t = 0; t < n; ++t)
                score +=
                    (x[dsp_detail::wrap(static_cast<std::ptrdiff_t>(t) - lag, n)] -
                     xm) *
                    refc[t];
            const bool better =
                first || score > best_score ||
                (score == best_score &&
                 (std::abs(lag) < std::abs(best_lag) ||
                  (std::abs(lag) == std::abs(best_lag) && lag < best_lag)));
            if (better) {
                best_score = score;
                best_lag = lag;
                first = false;
            }
        }
        const std::vector<double> shifted = circular_shift(x, best_lag);
        for (std::size_t s = 0; s < n; ++s)
            out.at(i, s) = quantize_sample(shifted[s]);
        if (i)
            lags += ',';
        lags += std::to_string(best_lag);
    }
    out.meta["align_lags"] = lags;
    return out;
}

/// Avg(N): collapse consecutive disjoint groups of n same-plaintext traces
/// into their per-sample mean.
inline TraceSet average(const TraceSet &ts, std::size_t n) {
    if (n == 0)
        throw Error(Errc::bad_config, "group size must be >= 1");
    if (n == 1)
        return ts;
    if (ts.trace_count % n != 0)
        throw Error(Errc::group_mismatch,
                    std::to_string(ts.trace_count) + " traces not divisible into groups of " +
                        std::to_string(n));

    const std::size_t groups = ts.trace_count / n;
    TraceSet out;
    out.trace_count = groups;
    out.sample_count = ts.sample_count;
    out.samples.resize(groups * ts.sample_count);
    out.plaintexts.resize(groups);
    out.ciphertexts.resize(groups);
    out.key_known = ts.key_known;
    out.key = ts.key;
    out.meta = ts.meta;

    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t base = g * n;
        for (std::size_t i = 1; i < n; ++i)
            if (ts.plaintexts[base + i] != ts.plaintexts[base])
                throw Error(Errc::mixed_plaintext_group,
                            "group " + std::to_string(g) +
                                " mixes different plaintexts");
        out.plaintexts[g] = ts.plaintexts[base];
        out.ciphertexts[g] = ts.ciphertexts[base];
        for (std::size_t s = 0; s < ts.sample_count; ++s) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                acc += ts.at(base + i, s);
            out.at(g, s) = quantize_sample(acc / static_cast<double>(n));
        }
    }
    out.meta["avg_n"] = std::to_string(n);
    return out;
}

namespace dsp_detail {

inline SnrReport make_report(double signal_power, double noise_power) {
    if (noise_power == 0.0)
        throw Error(Errc::zero_noise, "residual noise power is zero");
    SnrReport rep;
    rep.signal_power = signal_power;
    rep.noise_power = noise_power;
    rep.snr_db = 10.0 * std::log10(signal_power / noise_power);
    return rep;
}

} // namespace dsp_detail

/// Empirical SNR from repeated measurements of one computation: signal is
/// the per-sample mean trace (variance taken over time after mean
/// centering, so a common DC offset drops out); noise is the pooled
/// residual variance with T-1 degrees of freedom.
inline SnrReport estimate_snr(const TraceSet &ts) {
    if (ts.trace_count < 2)
        throw Error(Errc::insufficient_traces,
                    "empirical SNR needs at least 2 traces");
    for (std::size_t i = 1; i < ts.trace_count; ++i)
        if (ts.plaintexts[i] != ts.plaintexts[0])
            throw Error(Errc::mixed_plaintext_group,
                        "empirical SNR requires a single shared plaintext");

    const std::size_t T = ts.trace_count, S = ts.sample_count;
    std::vector<double> mean_trace(S, 0.0);
    for (std::size_t i = 0; i < T; ++i) {
        const auto row = ts.trace(i);
        for (std::size_t s = 0; s < S; ++s)
            mean_trace[s] += row[s];
    }
    for (double &v : mean_trace)
        v /= static_cast<double>(T);

    const double signal_power = dsp_detail::variance(mean_trace);

    double rss = 0.0;
    for (std::size_t i = 0; i < T; ++i) {
        const auto row = ts.trace(i);
        for (std::size_t s = 0; s < S; ++s) {
            const double r = row[s] - mean_trace[s];
            rss += r * r;
        }
    }
    const double noise_power =
        rss / (static_cast<double>(T - 1) * static_cast<double>(S));
    return dsp_detail::make_report(signal_power, noise_power);
}

/// Oracle-mode SNR against known noise-free traces (one row per trace, or a
/// single shared row). Noise is the per-trace residual variance over time.
inline SnrReport estimate_snr(const TraceSet &ts,
                              const std::vector<std::vector<double>> &clean) {
    if (ts.trace_count == 0)
        throw Error(Errc::empty_set, "no traces");
    if (clean.size() != ts.trace_count && clean.size() != 1)
        throw Error(Errc::bad_config,
                    "clean reference must have 1 or trace_count rows");

    const std::size_t S = ts.sample_count;
    double signal_power = 0.0, noise_power = 0.0;
    for (std::size_t i = 0; i < ts.trace_count; ++i) {
        const auto &c = clean[clean.size() == 1 ? 0 : i];
        if (c.size() != S)
            throw Error(Errc::bad_config, "clean reference length mismatch");
        signal_power += dsp_detail::variance(c);
        const auto row = ts.trace(i);
        std::vector<double> resid(S);
        for (std::size_t s = 0; s < S; ++s)
            resid[s] = row[s] - c[s];
        noise_power += dsp_detail::variance(resid);
    }
    signal_power /= static_cast<double>(ts.trace_count);
    noise_power /= static_cast<double>(ts.trace_count);
    return dsp_detail::make_report(signal_power, noise_power);
}

} // namespace psvc
