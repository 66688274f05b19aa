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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "psvc/cpa.hpp"
#include "psvc/dsp.hpp"
#include "psvc/rng.hpp"

using namespace psvc;
using Catch::Matchers::WithinAbs;

namespace {

TraceSet make_set(const std::vector<std::vector<double>> &rows,
                  const std::vector<AesBlock> &pts = {}) {
    TraceSet ts;
    ts.trace_count = rows.size();
    ts.sample_count = rows.empty() ? 0 : rows[0].size();
    for (const auto &r : rows)
        for (double v : r)
            ts.samples.push_back(quantize_sample(v));
    ts.plaintexts = pts.empty() ? std::vector<AesBlock>(rows.size()) : pts;
    ts.ciphertexts.assign(rows.size(), AesBlock{});
    return ts;
}

double fitted_slope(std::span<const double> x) {
    const std::size_t n = x.size();
    const double tbar = static_cast<double>(n - 1) / 2.0;
    double xbar = 0.0;
    for (double v : x)
        xbar += v;
    xbar /= static_cast<double>(n);
    double stx = 0.0, stt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        stx += (static_cast<double>(i) - tbar) * (x[i] - xbar);
        stt += (static_cast<double>(i) - tbar) * (static_cast<double>(i) - tbar);
    }
    return stx / stt;
}

} // namespace

TEST_CASE("detrend removes exact lines") {
    const std::vector<double> ramp = {0, 1, 2, 3};
    for (double v : detrend_linear(ramp))
        CHECK_THAT(v, WithinAbs(0.0, 1e-12));

    const std::vector<double> flat = {5, 5, 5};
    for (double v : detrend_linear(flat))
        CHECK_THAT(v, WithinAbs(0.0, 1e-12));
}

TEST_CASE("detrend leaves the non-linear component") {
    // cosine phase: symmetric about the midpoint, so the wave itself has
    // no linear component for the fit to absorb
    std::vector<double> wave(512), contaminated(512);
    for (std::size_t i = 0; i < wave.size(); ++i) {
        wave[i] = std::cos(2.0 * std::numbers::pi * 8.0 * i / 512.0);
        contaminated[i] = wave[i] + 0.01 * i - 3.0;
    }
    const auto resid = detrend_linear(contaminated);
    CHECK(pearson(resid, wave) >= 0.999);

    // residual refits to the zero line, and its mean vanishes
    CHECK_THAT(fitted_slope(resid), WithinAbs(0.0, 1e-12));
    double mean = 0.0;
    for (double v : resid)
        mean += v;
    CHECK_THAT(mean / resid.size(), WithinAbs(0.0, 1e-12));
}

TEST_CASE("detrend rejects tiny inputs and is idempotent") {
    CHECK_THROWS_MATCHES(detrend_linear(std::vector<double>{1.0}), Error,
                         Catch::Matchers::Predicate<Error>([](const Error &e) {
                             return e.code() == Errc::insufficient_samples;
                         }));

    Rng rng(5);
    std::vector<double> x(300);
    for (auto &v : x)
        v = 0.05 * rng.gaussian() + 0.002;
    const auto once = detrend_linear(x);
    const auto twice = detrend_linear(std::span<const double>(once));
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK_THAT(twice[i], WithinAbs(once[i], 1e-9));
}

TEST_CASE("moving-average filters") {
    const std::vector<double> c = {2.5, 2.5, 2.5, 2.5, 2.5};

    SECTION("low-pass preserves DC") {
        const auto lp = filter(c, {FilterSpec::Kind::low_pass, 3});
        for (double v : lp)
            CHECK(v == 2.5);
    }
    SECTION("high-pass removes DC") {
        const auto hp = filter(c, {FilterSpec::Kind::high_pass, 3});
        for (double v : hp)
            CHECK(v == 0.0);
    }
    SECTION("the pair is complementary, pointwise") {
        Rng rng(9);
        std::vector<double> x(101);
        for (auto &v : x)
            v = rng.gaussian();
        const auto lp = filter(x, {FilterSpec::Kind::low_pass, 7});
        const auto hp = filter(x, {FilterSpec::Kind::high_pass, 7});
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK_THAT(lp[i] + hp[i], WithinAbs(x[i], 1e-12));
    }
    SECTION("window larger than the trace") {
        CHECK_THROWS_MATCHES(filter(c, {FilterSpec::Kind::low_pass, 7}), Error,
                             Catch::Matchers::Predicate<Error>([](const Error &e) {
                                 return e.code() == Errc::window_too_large;
                             }));
    }
    SECTION("even windows are rejected") {
        CHECK_THROWS(filter(c, {FilterSpec::Kind::low_pass, 4}));
        CHECK_THROWS(filter(c, {FilterSpec::Kind::high_pass, 0}));
    }
    SECTION("length is preserved for every window") {
        std::vector<double> x(33, 1.0);
        for (std::size_t w = 1; w <= 33; w += 2)
            CHECK(filter(x, {FilterSpec::Kind::low_pass, w}).size() == x.size());
    }
}

TEST_CASE("align recovers constructed circular shifts") {
    Rng rng(12);
    std::vector<double> ref(256);
    for (auto &v : ref)
        v = rng.gaussian();

    std::vector<std::vector<double>> rows = {ref};
    for (std::ptrdiff_t k : {3, -2, 0, 1})
        rows.push_back(circular_shift(ref, k));
    TraceSet ts = make_set(rows);

    SECTION("max_lag = 0 is a no-op") {
        const TraceSet out = align(ts, 0, 0);
        CHECK(out.samples == ts.samples);
        CHECK(out.meta.at("align_lags") == "0,0,0,0,0");
    }
    SECTION("shifted copies snap back to the reference") {
        const TraceSet out = align(ts, 0, 4);
        CHECK(out.meta.at("align_lags") == "0,-3,2,0,-1");
        for (std::size_t i = 0; i < out.trace_count; ++i)
            for (std::size_t s = 0; s < out.sample_count; ++s)
                REQUIRE(out.at(i, s) == quantize_sample(ref[s]));
    }
    SECTION("aligning twice is idempotent") {
        const TraceSet once = align(ts, 0, 4);
        const TraceSet twice = align(once, 0, 4);
        CHECK(twice.meta.at("align_lags") == "0,0,0,0,0");
        CHECK(twice.samples == once.samples);
    }
    SECTION("empty set is rejected") {
        TraceSet empty;
        CHECK_THROWS_MATCHES(align(empty, 0, 1), Error,
                             Catch::Matchers::Predicate<Error>([](const Error &e) {
                                 return e.code() == Errc::empty_set;
                             }));
    }
}

TEST_CASE("average collapses repeat groups") {
    AesBlock p0{}, p1{};
    p0[0] = 1;
    p1[0] = 2;

    SECTION("n = 1 is the identity") {
        TraceSet ts = make_set({{1, 2}, {3, 4}}, {p0, p1});
        const TraceSet out = average(ts, 1);
        CHECK(out.samples == ts.samples);
        CHECK(out.trace_count == 2);
    }
    SECTION("group mean") {
        TraceSet ts = make_set({{0, 2}, {2, 0}}, {p0, p0});
        const TraceSet out = average(ts, 2);
        REQUIRE(out.trace_count == 1);
        CHECK(out.at(0, 0) == 1.0);
        CHECK(out.at(0, 1) == 1.0);
        CHECK(out.plaintexts[0] == p0);
    }
    SECTION("indivisible trace count") {
        TraceSet ts = make_set({{1}, {2}, {3}}, {p0, p0, p0});
        CHECK_THROWS_MATCHES(average(ts, 2), Error,
                             Catch::Matchers::Predicate<Error>([](const Error &e) {
                                 return e.code() == Errc::group_mismatch;
                             }));
    }
    SECTION("mixed plaintexts in one group") {
        TraceSet ts = make_set({{1}, {2}}, {p0, p1});
        CHECK_THROWS_MATCHES(average(ts, 2), Error,
                             Catch::Matchers::Predicate<Error>([](const Error &e) {
                                 return e.code() == Errc::mixed_plaintext_group;
                             }));
    }
    SECTION("averaging is linear") {
        Rng rng(3);
        std::vector<std::vector<double>> xr, yr, sr;
        for (int i = 0; i < 6; ++i) {
            std::vector<double> a(32), b(32), s(32);
            for (int j = 0; j < 32; ++j) {
                a[j] = rng.gaussian();
                b[j] = rng.gaussian();
                s[j] = a[j] + b[j];
            }
            xr.push_back(a);
            yr.push_back(b);
            sr.push_back(s);
        }
        std::vector<AesBlock> pts = {p0, p0, p0, p1, p1, p1};
        const TraceSet ax = average(make_set(xr, pts), 3);
        const TraceSet ay = average(make_set(yr, pts), 3);
        const TraceSet as = average(make_set(sr, pts), 3);
        for (std::size_t i = 0; i < as.trace_count; ++i)
            for (std::size_t s = 0; s < as.sample_count; ++s)
                CHECK_THAT(as.at(i, s), WithinAbs(ax.at(i, s) + ay.at(i, s), 1e-6));
    }
}

TEST_CASE("empirical SNR estimation") {
    SECTION("identical traces have no residual noise") {
        TraceSet ts = make_set({{1, 2, 3}, {1, 2, 3}});
        CHECK_THROWS_MATCHES(estimate_snr(ts), Error,
                             Catch::Matchers::Predicate<Error>([](const Error &e) {
                                 return e.code() == Errc::zero_noise;
                             }));
    }
    SECTION("mixed plaintexts are rejected in empirical mode") {
        AesBlock p0{}, p1{};
        p1[5] = 9;
        TraceSet ts = make_set({{1, 2}, {2, 1}}, {p0, p1});
        CHECK_THROWS(estimate_snr(ts));
    }

    // unit-variance signal + unit-sigma noise -> ~0 dB
    Rng rng(21);
    const std::size_t S = 256, T = 1000;
    std::vector<double> signal(S);
    for (std::size_t s = 0; s < S; ++s)
        signal[s] = std::numbers::sqrt2 *
                    std::sin(2.0 * std::numbers::pi * 5.0 * s / double(S));
    auto build = [&](double amp) {
        TraceSet ts;
        ts.trace_count = T;
        ts.sample_count = S;
        ts.samples.resize(T * S);
        ts.plaintexts.assign(T, AesBlock{});
        ts.ciphertexts.assign(T, AesBlock{});
        for (std::size_t i = 0; i < T; ++i)
            for (std::size_t s = 0; s < S; ++s)
                ts.at(i, s) = amp * signal[s] + rng.gaussian();
        return ts;
    };

    const SnrReport base = estimate_snr(build(1.0));
    CHECK_THAT(base.snr_db, WithinAbs(0.0, 0.5));
    CHECK_THAT(base.snr_db,
               WithinAbs(10.0 * std::log10(base.signal_power / base.noise_power),
                         1e-12));

    SECTION("doubling the amplitude gains ~6.02 dB") {
        const SnrReport loud = estimate_snr(build(2.0));
        CHECK_THAT(loud.snr_db - base.snr_db, WithinAbs(6.02, 0.5));
    }
    SECTION("a common DC offset changes nothing") {
        TraceSet ts = build(1.0);
        const SnrReport before = estimate_snr(ts);
        for (auto &v : ts.samples)
            v += 3.3;
        const SnrReport after = estimate_snr(ts);
        CHECK_THAT(after.snr_db, WithinAbs(before.snr_db, 1e-9));
    }
}

TEST_CASE("Avg(N) raises SNR by 10*log10(N)") {
    Rng rng(33);
    const std::size_t S = 128;
    const std::size_t T = 2000;
    std::vector<double> signal(S);
    for (std::size_t s = 0; s < S; ++s)
        signal[s] = 0.01 * std::sin(2.0 * std::numbers::pi * 3.0 * s / double(S));

    TraceSet ts;
    ts.trace_count = T;
    ts.sample_count = S;
    ts.samples.resize(T * S);
    ts.plaintexts.assign(T, AesBlock{});
    ts.ciphertexts.assign(T, AesBlock{});
    for (std::size_t i = 0; i < T; ++i)
        for (std::size_t s = 0; s < S; ++s)
            ts.at(i, s) = signal[s] + 0.02 * rng.gaussian();

    const double snr1 = estimate_snr(ts).snr_db;
    for (std::size_t n : {2, 5, 10}) {
        const double gain = estimate_snr(average(ts, n)).snr_db - snr1;
        CHECK_THAT(gain, WithinAbs(10.0 * std::log10(double(n)), 1.5));
    }
}
