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
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "psvc/cpa.hpp"
#include "psvc/dsp.hpp"
#include "psvc/errors.hpp"
#include "psvc/sim.hpp"

namespace psvc {

inline constexpr double kDefaultLambda = 0.095;
inline constexpr double kMinOperatingVoltage = 1.8;
inline constexpr double kMaxOperatingVoltage = 5.5;

/// Outcome of thresholding a guess summary: per-guess distance from the
/// mean correlation, the winning guess, and the Success/Failed verdict.
struct LeakdownVerdict {
    std::vector<std::uint8_t> guesses;
    std::vector<double> d;
    std::uint8_t best_guess = 0;
    double best_distance = 0.0;
    double lambda = kDefaultLambda;
    bool success = false;
};

/// d[k] = r[k] - mean(r), mean taken over all provided guesses (the best
/// one included); the attack succeeds when the top distance clears lambda.
inline LeakdownVerdict leakdown_test(const GuessSummary &summary,
                                     double lambda) {
    const std::size_t n = summary.r.size();
    if (n == 0)
        throw Error(Errc::empty_summary, "no guesses to threshold");
    if (summary.guesses.size() != n)
        throw Error(Errc::bad_config, "summary guess labels out of sync");

    double mean = 0.0;
    for (double v : summary.r)
        mean += v;
    mean /= static_cast<double>(n);

    LeakdownVerdict verdict;
    verdict.guesses = summary.guesses;
    verdict.d.resize(n);
    verdict.lambda = lambda;
    std::size_t best = 0;
    for (std::size_t k = 0; k < n; ++k) {
        verdict.d[k] = summary.r[k] - mean;
        if (verdict.d[k] > verdict.d[best])
            best = k;
    }
    verdict.best_guess = summary.guesses[best];
    verdict.best_distance = verdict.d[best];
    verdict.success = verdict.best_distance > lambda;
    return verdict;
}

struct KeyRecovery {
    AesKey key_guess{};
    std::vector<LeakdownVerdict> verdicts; // one per key byte
    std::optional<unsigned> correct_count; // present when the set knows its key
};

/// Byte-wise CPA plus leakdown over all 16 key bytes.
inline KeyRecovery recover_key(const TraceSet &ts, SelectionModel::Kind kind,
                               double lambda,
                               std::optional<TimeWindow> window = std::nullopt,
                               unsigned threads = 1) {
    KeyRecovery rec;
    rec.verdicts.reserve(16);
    for (unsigned b = 0; b < 16; ++b) {
        const CpaResult res = run_cpa(ts, SelectionModel{kind, b}, window, threads);
        rec.verdicts.push_back(leakdown_test(res.summary, lambda));
        rec.key_guess[b] = rec.verdicts.back().best_guess;
    }
    if (ts.key_known) {
        unsigned correct = 0;
        for (unsigned b = 0; b < 16; ++b)
            correct += rec.key_guess[b] == ts.key[b];
        rec.correct_count = correct;
    }
    return rec;
}

struct ExperimentReport {
    enum class SweepVariable { trace_count, input_voltage };

    struct Point {
        double x = 0.0;
        double success_rate = 0.0;   // correct key bytes / (16 * reps)
        double full_key_rate = 0.0;  // all-16-bytes successes / reps
        double mean_best_distance = 0.0;
        double snr_db = 0.0;
    };

    SweepVariable sweep_variable = SweepVariable::trace_count;
    std::vector<Point> points;
    std::size_t repetitions = 0;
    std::uint64_t seed = 0;
};

namespace leakdown_detail {

constexpr std::uint64_t kSweepTag = 0x73776565; // "swee"
constexpr std::uint64_t kRepTag = 0x72657073;   // "reps"

} // namespace leakdown_detail

/// Seed of one sweep repetition; exposed so manifests can record the full
/// derivation table.
inline std::uint64_t sweep_run_seed(std::uint64_t root, std::size_t point,
                                    std::size_t rep) {
    return derive_seed(derive_seed(root, leakdown_detail::kSweepTag, point),
                       leakdown_detail::kRepTag, rep);
}

namespace leakdown_detail {

struct RunOutcome {
    unsigned correct_bytes = 0;
    bool full_key = false;
    double mean_best_distance = 0.0;
};

/// One simulate-and-attack repetition: fresh key and traces from the
/// derived seed, then the fixed filter order (detrend, Avg(repeat)) and
/// byte-wise recovery.
inline RunOutcome attack_once(LeakageConfig cfg, const ChannelConfig &ch,
                              std::size_t count, std::size_t repeat,
                              double lambda, std::uint64_t run_seed,
                              unsigned threads, double *snr_db_out) {
    cfg.rng_seed = run_seed;
    const AesKey key = random_key(run_seed);

    Simulation sim = simulate_traces_detailed(key, count, cfg, ch, repeat,
                                              threads, snr_db_out != nullptr);
    if (snr_db_out)
        *snr_db_out = estimate_snr(sim.traces, sim.clean).snr_db;

    TraceSet filtered = detrend_linear(sim.traces);
    if (repeat > 1)
        filtered = average(filtered, repeat);

    const KeyRecovery rec =
        recover_key(filtered, SelectionModel::Kind::sbox_hw, lambda,
                    std::nullopt, threads);
    RunOutcome out;
    out.correct_bytes = rec.correct_count.value_or(0);
    out.full_key = out.correct_bytes == 16;
    double acc = 0.0;
    for (const auto &v : rec.verdicts)
        acc += v.best_distance;
    out.mean_best_distance = acc / 16.0;
    return out;
}

inline ExperimentReport::Point
sweep_point(const LeakageConfig &cfg, const ChannelConfig &ch, double x,
            std::size_t point_index, std::size_t count, std::size_t repeat,
            std::size_t reps, double lambda, unsigned threads) {
    ExperimentReport::Point pt;
    pt.x = x;
    unsigned correct = 0, full = 0;
    double dist = 0.0, snr = 0.0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        const std::uint64_t run_seed =
            sweep_run_seed(cfg.rng_seed, point_index, rep);
        double *snr_out = rep == 0 ? &snr : nullptr;
        const RunOutcome out =
            attack_once(cfg, ch, count, repeat, lambda, run_seed, threads, snr_out);
        correct += out.correct_bytes;
        full += out.full_key;
        dist += out.mean_best_distance;
    }
    pt.success_rate =
        static_cast<double>(correct) / (16.0 * static_cast<double>(reps));
    pt.full_key_rate = static_cast<double>(full) / static_cast<double>(reps);
    pt.mean_best_distance = dist / static_cast<double>(reps);
    pt.snr_db = snr;
    return pt;
}

} // namespace leakdown_detail

/// Success rate versus raw trace count, `reps` independent runs per point.
inline ExperimentReport sweep_trace_count(const LeakageConfig &cfg,
                                          const ChannelConfig &ch,
                                          const std::vector<std::size_t> &counts,
                                          std::size_t reps, double lambda,
                                          std::size_t repeat = 1,
                                          unsigned threads = 1) {
    if (counts.empty())
        throw Error(Errc::bad_config, "sweep needs at least one trace count");
    if (!std::is_sorted(counts.begin(), counts.end()))
        throw Error(Errc::bad_config, "trace counts must be ascending");
    if (reps == 0)
        throw Error(Errc::bad_config, "repetitions must be >= 1");

    ExperimentReport rep;
    rep.sweep_variable = ExperimentReport::SweepVariable::trace_count;
    rep.repetitions = reps;
    rep.seed = cfg.rng_seed;
    for (std::size_t p = 0; p < counts.size(); ++p)
        rep.points.push_back(leakdown_detail::sweep_point(
            cfg, ch, static_cast<double>(counts[p]), p, counts[p], repeat, reps,
            lambda, threads));
    return rep;
}

/// Success rate and measured SNR versus supply voltage at a fixed trace
/// count. Voltages must stay inside the victim's rated operating range.
inline ExperimentReport sweep_voltage(const LeakageConfig &cfg,
                                      const ChannelConfig &ch,
                                      const std::vector<double> &voltages,
                                      std::size_t trace_count, std::size_t reps,
                                      double lambda, std::size_t repeat = 1,
                                      unsigned threads = 1) {
    if (voltages.empty())
        throw Error(Errc::bad_config, "sweep needs at least one voltage");
    if (!std::is_sorted(voltages.begin(), voltages.end()))
        throw Error(Errc::bad_config, "voltages must be ascending");
    if (reps == 0)
        throw Error(Errc::bad_config, "repetitions must be >= 1");
    for (double v : voltages)
        if (v < kMinOperatingVoltage || v > kMaxOperatingVoltage)
            throw Error(Errc::out_of_operating_range,
                        std::to_string(v) + " V outside rated " +
                            std::to_string(kMinOperatingVoltage) + "-" +
                            std::to_string(kMaxOperatingVoltage) + " V");

    ExperimentReport rep;
    rep.sweep_variable = ExperimentReport::SweepVariable::input_voltage;
    rep.repetitions = reps;
    rep.seed = cfg.rng_seed;
    for (std::size_t p = 0; p < voltages.size(); ++p) {
        LeakageConfig vcfg = cfg;
        vcfg.supply_voltage = voltages[p];
        rep.points.push_back(leakdown_detail::sweep_point(
            vcfg, ch, voltages[p], p, trace_count, repeat, reps, lambda, threads));
    }
    return rep;
}

inline std::string report_to_csv(const ExperimentReport &rep) {
    std::string out = "x_value,success_rate,full_key_rate,mean_best_distance,snr_db\n";
    char line[256];
    for (const auto &pt : rep.points) {
        std::snprintf(line, sizeof(line), "%.10g,%.10g,%.10g,%.10g,%.10g\n",
                      pt.x, pt.success_rate, pt.full_key_rate,
                      pt.mean_best_distance, pt.snr_db);
        out += line;
    }
    return out;
}

inline void write_report_csv(const ExperimentReport &rep,
                             const std::string &path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error(Errc::io_error, "cannot open " + path + " for writing");
    os << report_to_csv(rep);
    if (!os)
        throw Error(Errc::io_error, "write failed for " + path);
}

} // namespace psvc
