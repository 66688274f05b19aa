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

// psvclab: simulate leaky traces, filter them, attack them, and run
// parameter sweeps, as reproducible single-shot commands.
//
// Exit codes: 0 success, 1 runtime error, 2 usage/validation error,
// 3 attack ran but the leakdown test found no leak.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "psvc/psvc.hpp"

using nlohmann::json;
using namespace psvc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNoLeak = 3;

constexpr const char *kEnvPrefix = "PSVC_";

std::string upper_snake(std::string name) {
    for (auto &c : name) {
        if (c == '-')
            c = '_';
        else
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return name;
}

/// flag > config file > environment > default. CLI11 handles the flag
/// layer; this fills unset options from the JSON config and PSVC_*
/// variables and rejects unknown config keys.
class ConfigLayer {
  public:
    explicit ConfigLayer(CLI::App *cmd) : cmd_(cmd) {}

    void load(const std::string &path) {
        std::ifstream is(path);
        if (!is)
            throw CLI::ValidationError("--config", "cannot open " + path);
        cfg_ = json::parse(is, nullptr, false);
        if (cfg_.is_discarded() || !cfg_.is_object())
            throw CLI::ValidationError("--config",
                                       path + " is not a JSON object");
        for (const auto &item : cfg_.items()) {
            if (!cmd_->get_option_no_throw("--" + item.key()))
                throw CLI::ValidationError("--config",
                                           "unknown key '" + item.key() + "'");
        }
    }

    /// True when the flag, the config file, or the environment supplies a
    /// value (as opposed to the built-in default being in effect).
    bool provided(const std::string &flag) const {
        if (cmd_->get_option("--" + flag)->count() > 0)
            return true;
        if (cfg_.contains(flag))
            return true;
        return std::getenv((kEnvPrefix + upper_snake(flag)).c_str()) != nullptr;
    }

    template <typename T> void resolve(const std::string &flag, T &value) {
        CLI::Option *opt = cmd_->get_option("--" + flag);
        if (opt->count() > 0)
            return; // explicit flag wins
        if (cfg_.contains(flag)) {
            const auto &v = cfg_.at(flag);
            if constexpr (std::is_same_v<T, std::string>)
                value = v.is_string() ? v.get<std::string>() : v.dump();
            else if constexpr (std::is_same_v<T, bool>)
                value = v.get<bool>();
            else
                value = v.get<T>();
            return;
        }
        const std::string env_name = kEnvPrefix + upper_snake(flag);
        if (const char *env = std::getenv(env_name.c_str())) {
            std::string s(env);
            if constexpr (std::is_same_v<T, std::string>)
                value = s;
            else if constexpr (std::is_same_v<T, bool>)
                value = s == "1" || s == "true";
            else if constexpr (std::is_floating_point_v<T>)
                value = static_cast<T>(std::stod(s));
            else
                value = static_cast<T>(std::stoull(s));
        }
    }

  private:
    CLI::App *cmd_;
    json cfg_ = json::object();
};

std::uint8_t hex_nibble(char c) {
    if (c >= '0' && c <= '9')
        return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f')
        return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F')
        return static_cast<std::uint8_t>(c - 'A' + 10);
    throw CLI::ValidationError("--key", "invalid hex digit");
}

AesKey parse_key(const std::string &hex) {
    if (hex.size() != 32)
        throw CLI::ValidationError("--key", "expected 32 hex digits");
    AesKey key{};
    for (std::size_t i = 0; i < 16; ++i)
        key[i] = static_cast<std::uint8_t>(hex_nibble(hex[2 * i]) << 4 |
                                           hex_nibble(hex[2 * i + 1]));
    return key;
}

std::string key_to_hex(const AesKey &key) {
    static const char digits[] = "0123456789abcdef";
    std::string out;
    for (std::uint8_t b : key) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

/// Options shared by every command that builds a simulator.
struct SimOptions {
    std::string key = "random";
    double vin = 5.0;
    double vref = 5.0;
    std::size_t samples_per_op = 96;
    double leak_gain = 0.002;
    double noise_sigma = 0.0025;
    double snr_db = 0.0; // calibration target; active when set on cmdline/config
    bool snr_set = false;
    double drift_sigma = 0.0;
    double dc_sigma = 0.0;
    std::size_t jitter_max = 0;
    std::uint64_t seed = 1;
    std::string channel = "direct";
    double alpha = 0.5;
    double vrm_noise = 0.001;
    double carrier = 0.25;
    double mod_depth = 0.5;
    double rx_noise = 0.0005;
    unsigned threads = 1;

    void add_flags(CLI::App *cmd) {
        cmd->add_option("--key", key, "AES-128 key: 32 hex digits or 'random'");
        cmd->add_option("--vin", vin, "supply voltage (V)");
        cmd->add_option("--vref", vref, "nominal reference voltage (V)");
        cmd->add_option("--samples-per-op", samples_per_op,
                        "samples per AES operation segment (multiple of 16)");
        cmd->add_option("--leak-gain", leak_gain,
                        "volts per Hamming-weight unit");
        cmd->add_option("--noise-sigma", noise_sigma,
                        "white noise sigma (V); overridden by --snr-db");
        cmd->add_option("--snr-db", snr_db,
                        "calibrate noise sigma for this single-trace SNR");
        cmd->add_option("--drift-sigma", drift_sigma,
                        "per-trace linear drift slope sigma (V/sample)");
        cmd->add_option("--dc-sigma", dc_sigma, "per-trace DC shift sigma (V)");
        cmd->add_option("--jitter-max", jitter_max,
                        "max circular shift per trace (samples)");
        cmd->add_option("--seed", seed, "64-bit RNG seed");
        cmd->add_option("--channel", channel, "direct | vrm | rf")
            ->check(CLI::IsMember({"direct", "vrm", "rf"}));
        cmd->add_option("--alpha", alpha, "VRM attenuation in (0,1]");
        cmd->add_option("--vrm-noise", vrm_noise, "VRM noise sigma (V)");
        cmd->add_option("--carrier", carrier,
                        "RF carrier frequency (cycles/sample, < 0.5)");
        cmd->add_option("--mod-depth", mod_depth, "RF modulation depth (0,1]");
        cmd->add_option("--rx-noise", rx_noise, "RF receiver noise sigma (V)");
        cmd->add_option("--threads", threads, "worker threads");
    }

    void resolve(ConfigLayer &layer) {
        layer.resolve("key", key);
        layer.resolve("vin", vin);
        layer.resolve("vref", vref);
        layer.resolve("samples-per-op", samples_per_op);
        layer.resolve("leak-gain", leak_gain);
        layer.resolve("noise-sigma", noise_sigma);
        layer.resolve("snr-db", snr_db);
        layer.resolve("drift-sigma", drift_sigma);
        layer.resolve("dc-sigma", dc_sigma);
        layer.resolve("jitter-max", jitter_max);
        layer.resolve("seed", seed);
        layer.resolve("channel", channel);
        layer.resolve("alpha", alpha);
        layer.resolve("vrm-noise", vrm_noise);
        layer.resolve("carrier", carrier);
        layer.resolve("mod-depth", mod_depth);
        layer.resolve("rx-noise", rx_noise);
        layer.resolve("threads", threads);
        snr_set = layer.provided("snr-db");
    }

    LeakageConfig leakage() const {
        LeakageConfig cfg;
        cfg.samples_per_op = samples_per_op;
        cfg.leak_gain = leak_gain;
        cfg.supply_voltage = vin;
        cfg.reference_voltage = vref;
        cfg.noise_sigma = noise_sigma;
        cfg.drift_slope_sigma = drift_sigma;
        cfg.dc_shift_sigma = dc_sigma;
        cfg.jitter_max = jitter_max;
        cfg.rng_seed = seed;
        return cfg;
    }

    ChannelConfig channel_config() const {
        ChannelConfig ch;
        if (channel == "vrm")
            ch.kind = ChannelConfig::Kind::vrm;
        else if (channel == "rf")
            ch.kind = ChannelConfig::Kind::rf_am;
        ch.vrm_attenuation = alpha;
        ch.vrm_noise_sigma = vrm_noise;
        ch.carrier_freq_fraction = carrier;
        ch.modulation_depth = mod_depth;
        ch.receiver_noise_sigma = rx_noise;
        return ch;
    }

    AesKey resolve_key() const {
        return key == "random" ? random_key(seed) : parse_key(key);
    }

    json effective_json() const {
        json j;
        j["key"] = key == "random" ? "random" : key;
        j["vin"] = vin;
        j["vref"] = vref;
        j["samples-per-op"] = samples_per_op;
        j["leak-gain"] = leak_gain;
        j["noise-sigma"] = noise_sigma;
        if (snr_set)
            j["snr-db"] = snr_db;
        j["drift-sigma"] = drift_sigma;
        j["dc-sigma"] = dc_sigma;
        j["jitter-max"] = jitter_max;
        j["seed"] = seed;
        j["channel"] = channel;
        j["alpha"] = alpha;
        j["vrm-noise"] = vrm_noise;
        j["carrier"] = carrier;
        j["mod-depth"] = mod_depth;
        j["rx-noise"] = rx_noise;
        return j;
    }
};

SelectionModel::Kind parse_model(const std::string &name) {
    if (name == "xor")
        return SelectionModel::Kind::xor_hw;
    if (name == "sbox")
        return SelectionModel::Kind::sbox_hw;
    return SelectionModel::Kind::hd;
}

void write_text(const std::string &path, const std::string &text) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error(Errc::io_error, "cannot open " + path + " for writing");
    os << text;
    if (!os)
        throw Error(Errc::io_error, "write failed for " + path);
}

// ---------------------------------------------------------------- simulate

struct SimulateCmd {
    SimOptions sim;
    std::size_t traces = 1000;
    std::size_t repeat = 1;
    std::string out;
    std::string config;
    CLI::App *cmd = nullptr;

    void install(CLI::App &app) {
        cmd = app.add_subcommand("simulate",
                                 "generate a trace container from the victim model");
        sim.add_flags(cmd);
        cmd->add_option("--traces", traces, "total trace count");
        cmd->add_option("--repeat", repeat,
                        "consecutive repetitions of each plaintext");
        cmd->add_option("--out", out, "output trace container")->required();
        cmd->add_option("--config", config, "JSON config file");
    }

    int run() {
        ConfigLayer layer(cmd);
        if (!config.empty())
            layer.load(config);
        sim.resolve(layer);
        layer.resolve("traces", traces);
        layer.resolve("repeat", repeat);
        layer.resolve("out", out);

        LeakageConfig cfg = sim.leakage();
        const ChannelConfig ch = sim.channel_config();
        cfg.validate();
        ch.validate();
        const AesKey key = sim.resolve_key();
        if (sim.snr_set)
            cfg.noise_sigma = calibrate_noise_sigma(key, cfg, ch, sim.snr_db);

        Simulation s = simulate_traces_detailed(key, traces, cfg, ch, repeat,
                                                sim.threads, true);
        const SnrReport snr = estimate_snr(s.traces, s.clean);

        json run_cfg = sim.effective_json();
        run_cfg["traces"] = traces;
        run_cfg["repeat"] = repeat;
        run_cfg["noise-sigma-effective"] = cfg.noise_sigma;
        s.traces.meta["run_config"] = run_cfg.dump();
        s.traces.meta["snr_db"] = std::to_string(snr.snr_db);

        write_traceset(s.traces, out);
        std::printf("T=%zu S=%zu channel=%s vin=%.3f seed=%llu snr_db=%.2f -> %s\n",
                    s.traces.trace_count, s.traces.sample_count, ch.name(),
                    cfg.supply_voltage,
                    static_cast<unsigned long long>(cfg.rng_seed), snr.snr_db,
                    out.c_str());
        return kExitOk;
    }
};

// ------------------------------------------------------------------ filter

struct FilterCmd {
    std::string in, out, config;
    bool detrend = false;
    std::size_t lowpass = 0;
    std::size_t highpass = 0;
    std::size_t align_lag = 0;
    std::size_t align_ref = 0;
    std::size_t avg = 0;
    CLI::App *cmd = nullptr;

    void install(CLI::App &app) {
        cmd = app.add_subcommand(
            "filter", "detrend / band-filter / align / average a trace container");
        cmd->add_option("--in", in, "input trace container")->required();
        cmd->add_option("--out", out, "output trace container")->required();
        cmd->add_flag("--detrend", detrend, "subtract per-trace linear trend");
        cmd->add_option("--lowpass", lowpass, "moving-average window (odd)");
        cmd->add_option("--highpass", highpass,
                        "complement window (odd); applied after --lowpass");
        cmd->add_option("--align", align_lag, "max alignment lag (samples)");
        cmd->add_option("--align-ref", align_ref, "alignment reference trace");
        cmd->add_option("--avg", avg, "collapse groups of N repeated traces");
        cmd->add_option("--config", config, "JSON config file");
    }

    int run() {
        ConfigLayer layer(cmd);
        if (!config.empty())
            layer.load(config);
        layer.resolve("in", in);
        layer.resolve("out", out);
        layer.resolve("detrend", detrend);
        layer.resolve("lowpass", lowpass);
        layer.resolve("highpass", highpass);
        layer.resolve("align", align_lag);
        layer.resolve("align-ref", align_ref);
        layer.resolve("avg", avg);

        TraceSet ts = read_traceset(in);
        std::string chain;
        auto note = [&chain](const std::string &step) {
            if (!chain.empty())
                chain += ",";
            chain += step;
        };

        // fixed order: detrend -> filter -> align -> avg
        if (detrend) {
            ts = detrend_linear(ts);
            note("detrend");
        }
        if (lowpass) {
            ts = filter(ts, {FilterSpec::Kind::low_pass, lowpass});
            note("lowpass:" + std::to_string(lowpass));
        }
        if (highpass) {
            ts = filter(ts, {FilterSpec::Kind::high_pass, highpass});
            note("highpass:" + std::to_string(highpass));
        }
        if (align_lag) {
            ts = align(ts, align_ref, align_lag);
            note("align:" + std::to_string(align_lag));
        }
        if (avg > 1) {
            ts = average(ts, avg);
            note("avg:" + std::to_string(avg));
        }

        const auto prev = ts.meta.find("filter_chain");
        ts.meta["filter_chain"] =
            prev == ts.meta.end() ? chain : prev->second + ";" + chain;
        write_traceset(ts, out);
        std::printf("T=%zu S=%zu chain=[%s] -> %s\n", ts.trace_count,
                    ts.sample_count, chain.c_str(), out.c_str());
        return kExitOk;
    }
};

// ------------------------------------------------------------------ attack

struct AttackCmd {
    std::string in, out, corr_out, config;
    std::string model = "sbox";
    double lambda = kDefaultLambda;
    int byte_index = -1;
    unsigned threads = 1;
    CLI::App *cmd = nullptr;

    void install(CLI::App &app) {
        cmd = app.add_subcommand("attack",
                                 "CPA + leakdown key recovery on a trace container");
        cmd->add_option("--in", in, "input trace container")->required();
        cmd->add_option("--model", model, "selection model: xor | sbox | hd")
            ->check(CLI::IsMember({"xor", "sbox", "hd"}));
        cmd->add_option("--lambda", lambda, "leakdown threshold");
        cmd->add_option("--byte", byte_index, "attack a single key byte (0..15)")
            ->check(CLI::Range(0, 15));
        cmd->add_option("--corr-out", corr_out,
                        "CSV prefix for per-byte 256 x S correlation matrices");
        cmd->add_option("--out", out, "JSON report path");
        cmd->add_option("--threads", threads, "worker threads");
        cmd->add_option("--config", config, "JSON config file");
    }

    static void dump_matrix(const CorrelationMatrix &mat,
                            const std::string &path) {
        std::string text;
        char buf[32];
        const std::size_t W = mat.width();
        for (std::size_t k = 0; k < 256; ++k) {
            for (std::size_t w = 0; w < W; ++w) {
                std::snprintf(buf, sizeof(buf), "%.6g",
                              mat.values[k * W + w]);
                text += buf;
                text += (w + 1 == W) ? '\n' : ',';
            }
        }
        write_text(path, text);
    }

    int run() {
        ConfigLayer layer(cmd);
        if (!config.empty())
            layer.load(config);
        layer.resolve("in", in);
        layer.resolve("model", model);
        layer.resolve("lambda", lambda);
        layer.resolve("byte", byte_index);
        layer.resolve("corr-out", corr_out);
        layer.resolve("out", out);
        layer.resolve("threads", threads);

        const TraceSet ts = read_traceset(in);
        if (ts.trace_count < 2) {
            std::fprintf(stderr,
                         "attack needs at least 2 traces, file has %zu\n",
                         ts.trace_count);
            return kExitRuntime;
        }
        const SelectionModel::Kind kind = parse_model(model);

        std::vector<unsigned> bytes;
        if (byte_index >= 0)
            bytes.push_back(static_cast<unsigned>(byte_index));
        else
            for (unsigned b = 0; b < 16; ++b)
                bytes.push_back(b);

        json report;
        report["model"] = model;
        report["lambda"] = lambda;
        report["traces"] = ts.trace_count;
        report["samples"] = ts.sample_count;
        report["in"] = in;
        report["byte"] = byte_index;
        report["threads"] = threads;

        AesKey guess{};
        unsigned success_count = 0, correct_count = 0;
        json per_byte = json::array();
        for (unsigned b : bytes) {
            const CpaResult res =
                run_cpa(ts, SelectionModel{kind, b}, std::nullopt, threads);
            if (!corr_out.empty())
                dump_matrix(res.matrix,
                            corr_out + "byte" + std::to_string(b) + ".csv");
            const LeakdownVerdict v = leakdown_test(res.summary, lambda);
            guess[b] = v.best_guess;
            success_count += v.success;

            json jb;
            jb["byte"] = b;
            jb["guess"] = v.best_guess;
            jb["d"] = v.best_distance;
            jb["argmax_time"] = res.summary.argmax_time[v.best_guess];
            jb["verdict"] = v.success ? "Success" : "Failed";
            if (ts.key_known) {
                jb["truth"] = ts.key[b];
                jb["correct"] = ts.key[b] == v.best_guess;
                correct_count += ts.key[b] == v.best_guess;
            }
            per_byte.push_back(jb);

            std::printf("byte %2u: guess=0x%02x d=%+.4f %s", b, v.best_guess,
                        v.best_distance, v.success ? "Success" : "Failed");
            if (ts.key_known)
                std::printf(" (%s)",
                            ts.key[b] == v.best_guess ? "correct" : "wrong");
            std::printf("\n");
        }
        report["per_byte"] = per_byte;

        if (byte_index < 0) {
            std::printf("recovered key: %s\n", key_to_hex(guess).c_str());
            report["recovered_key"] = key_to_hex(guess);
        }
        if (ts.key_known) {
            std::printf("%u/%zu bytes correct\n", correct_count, bytes.size());
            report["correct_count"] = correct_count;
        }

        const bool leak_detected = 2 * success_count > bytes.size();
        report["leak_detected"] = leak_detected;
        if (!out.empty())
            write_text(out, report.dump(2) + "\n");
        if (!leak_detected) {
            std::fprintf(stderr, "no leak detected (%u/%zu Success at lambda=%g)\n",
                         success_count, bytes.size(), lambda);
            return kExitNoLeak;
        }
        return kExitOk;
    }
};

// ------------------------------------------------------------------- sweep

struct SweepCmd {
    SimOptions sim;
    std::string mode = "traces";
    std::string points;
    std::size_t reps = 5;
    std::size_t traces = 400;
    std::size_t repeat = 1;
    double lambda = kDefaultLambda;
    std::string out_dir = ".";
    std::string config;
    CLI::App *cmd = nullptr;

    void install(CLI::App &app) {
        cmd = app.add_subcommand(
            "sweep", "success-rate experiments over trace count or voltage");
        sim.add_flags(cmd);
        cmd->add_option("--mode", mode, "traces | voltage")
            ->check(CLI::IsMember({"traces", "voltage"}));
        cmd->add_option("--points", points,
                        "comma-separated sweep points (counts or volts)")
            ->required();
        cmd->add_option("--reps", reps, "repetitions per point");
        cmd->add_option("--traces", traces,
                        "trace count per run (voltage mode)");
        cmd->add_option("--repeat", repeat, "plaintext repetition factor");
        cmd->add_option("--lambda", lambda, "leakdown threshold");
        cmd->add_option("--out-dir", out_dir, "output directory");
        cmd->add_option("--config", config, "JSON config file");
    }

    int run() {
        ConfigLayer layer(cmd);
        if (!config.empty())
            layer.load(config);
        sim.resolve(layer);
        layer.resolve("mode", mode);
        layer.resolve("points", points);
        layer.resolve("reps", reps);
        layer.resolve("traces", traces);
        layer.resolve("repeat", repeat);
        layer.resolve("lambda", lambda);
        layer.resolve("out-dir", out_dir);

        LeakageConfig cfg = sim.leakage();
        const ChannelConfig ch = sim.channel_config();
        cfg.validate();
        ch.validate();
        if (sim.snr_set) {
            const AesKey key = sim.resolve_key();
            cfg.noise_sigma = calibrate_noise_sigma(key, cfg, ch, sim.snr_db);
        }

        std::vector<double> xs;
        for (std::size_t pos = 0; pos < points.size();) {
            const std::size_t comma = points.find(',', pos);
            const std::string tok =
                points.substr(pos, comma == std::string::npos ? std::string::npos
                                                              : comma - pos);
            try {
                xs.push_back(std::stod(tok));
            } catch (const std::exception &) {
                throw CLI::ValidationError("--points", "bad number '" + tok + "'");
            }
            if (comma == std::string::npos)
                break;
            pos = comma + 1;
        }
        if (xs.empty())
            throw CLI::ValidationError("--points", "no sweep points");

        ExperimentReport rep;
        if (mode == "traces") {
            std::vector<std::size_t> counts;
            for (double x : xs)
                counts.push_back(static_cast<std::size_t>(x));
            rep = sweep_trace_count(cfg, ch, counts, reps, lambda, repeat,
                                    sim.threads);
        } else {
            rep = sweep_voltage(cfg, ch, xs, traces, reps, lambda, repeat,
                                sim.threads);
        }

        std::filesystem::create_directories(out_dir);
        const std::string csv_path = out_dir + "/sweep.csv";
        write_report_csv(rep, csv_path);

        json manifest;
        manifest["mode"] = mode;
        manifest["points"] = xs;
        manifest["reps"] = reps;
        manifest["repeat"] = repeat;
        manifest["lambda"] = lambda;
        manifest["traces"] = traces;
        manifest["seed"] = rep.seed;
        manifest["config"] = sim.effective_json();
        manifest["noise-sigma-effective"] = cfg.noise_sigma;
        json seeds = json::array();
        for (std::size_t p = 0; p < xs.size(); ++p) {
            json row = json::array();
            for (std::size_t r = 0; r < reps; ++r)
                row.push_back(sweep_run_seed(cfg.rng_seed, p, r));
            seeds.push_back(row);
        }
        manifest["derived_seeds"] = seeds;
        write_text(out_dir + "/manifest.json", manifest.dump(2) + "\n");

        for (const auto &pt : rep.points)
            std::printf("x=%g success_rate=%.4f full_key_rate=%.4f d=%.4f snr=%.2f dB\n",
                        pt.x, pt.success_rate, pt.full_key_rate,
                        pt.mean_best_distance, pt.snr_db);
        std::printf("wrote %s and %s/manifest.json\n", csv_path.c_str(),
                    out_dir.c_str());
        return kExitOk;
    }
};

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"psvclab: supply-voltage side-channel laboratory"};
    app.require_subcommand(1);

    SimulateCmd simulate;
    FilterCmd filter;
    AttackCmd attack;
    SweepCmd sweep;
    simulate.install(app);
    filter.install(app);
    attack.install(app);
    sweep.install(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (simulate.cmd->parsed())
            return simulate.run();
        if (filter.cmd->parsed())
            return filter.run();
        if (attack.cmd->parsed())
            return attack.run();
        if (sweep.cmd->parsed())
            return sweep.run();
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitUsage;
    } catch (const Error &e) {
        // config/validation problems are usage errors; the rest are runtime
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.code() == Errc::bad_config ||
                       e.code() == Errc::out_of_operating_range
                   ? kExitUsage
                   : kExitRuntime;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
