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
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "psvc/aes.hpp"
#include "psvc/errors.hpp"
#include "psvc/trace_set.hpp"

namespace psvc {

struct SelectionModel {
    enum class Kind { xor_hw, sbox_hw, hd };
    Kind kind = Kind::sbox_hw;
    unsigned target_byte = 0; // 0..15

    void validate() const {
        if (target_byte > 15)
            throw Error(Errc::bad_config, "target byte must be 0..15");
    }
};

inline const char *selection_kind_name(SelectionModel::Kind k) {
    switch (k) {
    case SelectionModel::Kind::xor_hw: return "xor";
    case SelectionModel::Kind::sbox_hw: return "sbox";
    case SelectionModel::Kind::hd: return "hd";
    }
    return "?";
}

/// Hypothesized leakage of the round-1 intermediate under a key guess.
/// The HD model pairs the SubBytes input with its output, so prev must be
/// the pre-substitution byte.
inline int select_value(std::uint8_t pt_byte, std::uint8_t key_guess,
                        const SelectionModel &model,
                        std::optional<std::uint8_t> prev_byte = std::nullopt) {
    const auto x = static_cast<std::uint8_t>(pt_byte ^ key_guess);
    switch (model.kind) {
    case SelectionModel::Kind::xor_hw:
        return hamming_weight(x);
    case SelectionModel::Kind::sbox_hw:
        return hamming_weight(sbox(x));
    case SelectionModel::Kind::hd:
        if (!prev_byte)
            throw Error(Errc::missing_prev_state,
                        "HD model needs the previous state byte");
        return hamming_distance(*prev_byte, sbox(x));
    }
    return 0;
}

/// Pearson correlation coefficient, two-pass, clamped to [-1, 1] against
/// sub-ulp rounding overshoot.
inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw Error(Errc::insufficient_samples, "length mismatch");
    const std::size_t n = x.size();
    if (n < 2)
        throw Error(Errc::insufficient_samples, "need at least 2 paired samples");
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        xm += x[i];
    xm /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        ym += y[i];
    ym /= static_cast<double>(n);
    double num = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - xm;
        const double dy = y[i] - ym;
        num += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw Error(Errc::zero_variance, "constant input to correlation");
    return std::clamp(num / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// |r| per key guess and time sample over the analysis window.
struct CorrelationMatrix {
    std::vector<double> values; // 256 x width, row per guess
    std::size_t window_begin = 0;
    std::size_t window_end = 0;
    SelectionModel model;
    std::size_t trace_count = 0;
    // diagnostics: inputs with no variation, reported as r = 0
    std::vector<std::size_t> zero_variance_samples; // absolute indices
    std::vector<std::uint8_t> zero_variance_guesses;

    std::size_t width() const { return window_end - window_begin; }
    double at(std::size_t guess, std::size_t absolute_t) const {
        return values[guess * width() + (absolute_t - window_begin)];
    }
};

/// Per-guess max-|r| array (the paper-facing summary of a CPA run).
struct GuessSummary {
    std::vector<std::uint8_t> guesses;
    std::vector<double> r;
    std::vector<std::size_t> argmax_time;
};

struct CpaResult {
    CorrelationMatrix matrix;
    GuessSummary summary;
};

struct TimeWindow {
    std::size_t begin = 0;
    std::size_t end = 0; // exclusive
};

/// Correlation power analysis: Pearson correlation between the selection
/// values and every time sample, for all 256 key-byte guesses.
///
/// Columns (or selection vectors) with zero variance yield r = 0 and are
/// flagged, so dead samples never win the argmax. Accumulation is plain
/// sequential two-pass in double precision; the guess loop may be split
/// across threads, which cannot change any bit of the output.
inline CpaResult run_cpa(const TraceSet &ts, const SelectionModel &model,
                         std::optional<TimeWindow> window = std::nullopt,
                         unsigned threads = 1) {
    model.validate();
    const std::size_t T = ts.trace_count;
    const std::size_t S = ts.sample_count;
    if (T < 2)
        throw Error(Errc::insufficient_traces,
                    "CPA needs at least 2 traces, got " + std::to_string(T));
    TimeWindow win = window.value_or(TimeWindow{0, S});
    if (win.begin >= win.end || win.end > S)
        throw Error(Errc::bad_config, "time window outside [0, S)");
    const std::size_t W = win.end - win.begin;

    // column-major centered copy of the window
    std::vector<double> xc(W * T);
    std::vector<double> sxx(W);
    for (std::size_t w = 0; w < W; ++w) {
        double m = 0.0;
        for (std::size_t i = 0; i < T; ++i)
            m += ts.at(i, win.begin + w);
        m /= static_cast<double>(T);
        double acc = 0.0;
        double *col = xc.data() + w * T;
        for (std::size_t i = 0; i < T; ++i) {
            const double d = ts.at(i, win.begin + w) - m;
            col[i] = d;
            acc += d * d;
        }
        sxx[w] = acc;
    }

    CpaResult res;
    CorrelationMatrix &mat = res.matrix;
    mat.values.assign(256 * W, 0.0);
    mat.window_begin = win.begin;
    mat.window_end = win.end;
    mat.model = model;
    mat.trace_count = T;

    std::vector<char> guess_dead(256, 0);

    auto guess_worker = [&](std::size_t kb, std::size_t ke) {
        std::vector<double> yc(T);
        for (std::size_t k = kb; k < ke; ++k) {
            const auto guess = static_cast<std::uint8_t>(k);
            double ym = 0.0;
            for (std::size_t i = 0; i < T; ++i) {
                const std::uint8_t p = ts.plaintexts[i][model.target_byte];
                std::optional<std::uint8_t> prev;
                if (model.kind == SelectionModel::Kind::hd)
                    prev = static_cast<std::uint8_t>(p ^ guess);
                yc[i] = static_cast<double>(select_value(p, guess, model, prev));
                ym += yc[i];
            }
            ym /= static_cast<double>(T);
            double syy = 0.0;
            for (std::size_t i = 0; i < T; ++i) {
                yc[i] -= ym;
                syy += yc[i] * yc[i];
            }
            if (syy == 0.0) {
                guess_dead[k] = 1;
                continue; // row stays 0
            }
            double *rrow = mat.values.data() + k * W;
            // columns in blocks of four independent accumulator chains;
            // each column's summation order is untouched
            std::size_t w = 0;
            for (; w + 4 <= W; w += 4) {
                const double *c0 = xc.data() + (w + 0) * T;
                const double *c1 = xc.data() + (w + 1) * T;
                const double *c2 = xc.data() + (w + 2) * T;
                const double *c3 = xc.data() + (w + 3) * T;
                double n0 = 0.0, n1 = 0.0, n2 = 0.0, n3 = 0.0;
                for (std::size_t i = 0; i < T; ++i) {
                    const double y = yc[i];
                    n0 += c0[i] * y;
                    n1 += c1[i] * y;
                    n2 += c2[i] * y;
                    n3 += c3[i] * y;
                }
                const double nums[4] = {n0, n1, n2, n3};
                for (std::size_t j = 0; j < 4; ++j)
                    rrow[w + j] =
                        sxx[w + j] == 0.0
                            ? 0.0
                            : std::clamp(nums[j] / std::sqrt(sxx[w + j] * syy),
                                         -1.0, 1.0);
            }
            for (; w < W; ++w) {
                const double *col = xc.data() + w * T;
                double num = 0.0;
                for (std::size_t i = 0; i < T; ++i)
                    num += col[i] * yc[i];
                rrow[w] = sxx[w] == 0.0
                              ? 0.0
                              : std::clamp(num / std::sqrt(sxx[w] * syy), -1.0,
                                           1.0);
            }
        }
    };

    if (threads <= 1) {
        guess_worker(0, 256);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto guarded = [&](std::size_t b, std::size_t e) {
            try {
                guess_worker(b, e);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        };
        const std::size_t chunk = (256 + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t b = std::min<std::size_t>(t * chunk, 256);
            const std::size_t e = std::min<std::size_t>(b + chunk, 256);
            if (b < e)
                pool.emplace_back(guarded, b, e);
        }
        for (auto &th : pool)
            th.join();
        if (failure)
            std::rethrow_exception(failure);
    }

    for (std::size_t w = 0; w < W; ++w)
        if (sxx[w] == 0.0)
            mat.zero_variance_samples.push_back(win.begin + w);
    for (std::size_t k = 0; k < 256; ++k)
        if (guess_dead[k])
            mat.zero_variance_guesses.push_back(static_cast<std::uint8_t>(k));

    GuessSummary &sum = res.summary;
    sum.guesses.resize(256);
    sum.r.resize(256);
    sum.argmax_time.resize(256);
    for (std::size_t k = 0; k < 256; ++k) {
        sum.guesses[k] = static_cast<std::uint8_t>(k);
        const double *rrow = mat.values.data() + k * W;
        double best = -1.0;
        std::size_t best_w = 0;
        for (std::size_t w = 0; w < W; ++w) {
            const double a = std::abs(rrow[w]);
            if (a > best) {
                best = a;
                best_w = w;
            }
        }
        sum.r[k] = best;
        sum.argmax_time[k] = win.begin + best_w;
    }
    return res;
}

/// Independent CPA per target byte, 0..15 in order.
inline std::vector<GuessSummary>
run_cpa_all_bytes(const TraceSet &ts, SelectionModel::Kind kind,
                  std::optional<TimeWindow> window = std::nullopt,
                  unsigned threads = 1) {
    std::vector<GuessSummary> out;
    out.reserve(16);
    for (unsigned b = 0; b < 16; ++b)
        out.push_back(
            run_cpa(ts, SelectionModel{kind, b}, window, threads).summary);
    return out;
}

} // namespace psvc
