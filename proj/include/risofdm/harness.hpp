// SPDX-License-Identifier: Apache-2.0
//
// risofdm: link-level simulation of RIS-aided OFDM links
// Copyright (C) 2026 The risofdm authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Experiment runners for the rate-vs-bandwidth sweep, the efficiency and
// Doppler tables and the brute-force oracle suite, plus their CSV output.
//
// Every trial draws its own channel from a seed derived from (experiment
// seed, stream, N, trial). The seed does not depend on the bandwidth, the
// speed or the method, so all of them see the same random paths.

#pragma once

#include "channel.hpp"
#include "config.hpp"
#include "configuration.hpp"
#include "error.hpp"
#include "kvconfig.hpp"
#include "metrics.hpp"
#include "nnconf.hpp"
#include "scene.hpp"
#include "text.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace risofdm::harness
{

enum class ExperimentKind
{
    rate_vs_bandwidth,
    efficiency_table,
    doppler_table,
    oracle_suite,
};

inline const char *to_string(ExperimentKind k)
{
    switch (k)
    {
    case ExperimentKind::rate_vs_bandwidth: return "rate_vs_bandwidth";
    case ExperimentKind::efficiency_table: return "efficiency_table";
    case ExperimentKind::doppler_table: return "doppler_table";
    case ExperimentKind::oracle_suite: return "oracle_suite";
    }
    return "unknown";
}

inline ExperimentKind parse_kind(const std::string &s)
{
    for (auto k : {ExperimentKind::rate_vs_bandwidth, ExperimentKind::efficiency_table, ExperimentKind::doppler_table,
                   ExperimentKind::oracle_suite})
        if (s == to_string(k))
            return k;
    throw Error(ErrorKind::parse, "unknown experiment '" + s + "'");
}

struct ExperimentSpec
{
    ExperimentKind kind = ExperimentKind::rate_vs_bandwidth;
    Scenario scenario;
    std::vector<double> bandwidths_hz{2.1e6, 4.2e6, 6.3e6, 8.4e6, 10.5e6};
    std::vector<std::size_t> reflector_counts{25, 64, 100}; ///< square grids
    std::vector<double> speeds{20.0};
    std::vector<int> bits{4};
    std::size_t trials = 50;
    std::size_t sequence_length = 8;  ///< correlated realisations per efficiency trial
    double nlos_jitter_s = 1e-9;      ///< NLOS delay jitter between adjacent realisations
    std::size_t training_realizations = 200;
    nn::TrainingSettings training;
    AoOptions ao;
    std::vector<std::string> methods; ///< empty: every method of the experiment
    std::string output_path;
    std::uint64_t seed = 1;
    bool timing = false; ///< record wall-clock time per row (breaks byte-identical output)

    void validate() const
    {
        require(trials >= 1, ErrorKind::invalid_argument, "trials must be at least 1");
        require(!bandwidths_hz.empty() && !reflector_counts.empty() && !speeds.empty() && !bits.empty(), ErrorKind::invalid_argument,
                "sweep lists must not be empty");
        require(sequence_length >= 2 || kind != ExperimentKind::efficiency_table, ErrorKind::invalid_argument,
                "efficiency needs a sequence of at least two realisations");
        require(nlos_jitter_s >= 0.0, ErrorKind::invalid_argument, "jitter must be non-negative");
        for (int b : bits)
            require(b >= 1, ErrorKind::invalid_argument, "quantisation needs at least one bit");
        scenario.validate();
    }

    bool wants(const std::string &method) const
    {
        return methods.empty() || std::find(methods.begin(), methods.end(), method) != methods.end();
    }
};

inline ExperimentSpec load_experiment(const KeyValueConfig &c)
{
    ExperimentSpec s;
    std::string kind = to_string(s.kind);
    c.read("experiment", kind);
    s.kind = parse_kind(kind);
    apply(c, s.scenario);
    apply(c, s.training);
    c.read("bandwidths_hz", s.bandwidths_hz);
    c.read("reflector_counts", s.reflector_counts);
    c.read("speeds", s.speeds);
    c.read("bits", s.bits);
    c.read("trials", s.trials);
    c.read("sequence_length", s.sequence_length);
    c.read("nlos_jitter_s", s.nlos_jitter_s);
    c.read("training_realizations", s.training_realizations);
    c.read("ao_max_outer", s.ao.max_outer);
    c.read("ao_tolerance", s.ao.relative_tolerance);
    c.read("ao_multi_start", s.ao.multi_start);
    c.read("sca_max_steps", s.ao.inner.max_steps);
    c.read("sca_tolerance", s.ao.inner.relative_tolerance);
    c.read("methods", s.methods);
    c.read("output_path", s.output_path);
    c.read("seed", s.seed);
    c.read("timing", s.timing);
    s.validate();
    return s;
}

// ------------------------------------------------------------------ rows

struct ResultRow
{
    std::string method;
    std::size_t n_reflectors = 0;
    double bandwidth_hz = 0.0;
    double speed = 0.0;
    int b_bits = 0; ///< 0: continuous phases
    double rate_bit_s = std::numeric_limits<double>::quiet_NaN();
    double coherent_bit_s = std::numeric_limits<double>::quiet_NaN();
    double efficiency_pct = std::numeric_limits<double>::quiet_NaN();
    double residual_doppler_hz = std::numeric_limits<double>::quiet_NaN();
    double wall_time_s = 0.0;
    std::string status = "ok";
};

inline constexpr const char *kResultHeader =
    "method,N,B,v,b_bits,rate_bit_s,coherent_bit_s,efficiency_pct,residual_doppler_hz,wall_time_s,status";

inline bool same_row(const ResultRow &a, const ResultRow &b)
{
    auto eq = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
    return a.method == b.method && a.n_reflectors == b.n_reflectors && eq(a.bandwidth_hz, b.bandwidth_hz) && eq(a.speed, b.speed) &&
           a.b_bits == b.b_bits && eq(a.rate_bit_s, b.rate_bit_s) && eq(a.coherent_bit_s, b.coherent_bit_s) &&
           eq(a.efficiency_pct, b.efficiency_pct) && eq(a.residual_doppler_hz, b.residual_doppler_hz) &&
           eq(a.wall_time_s, b.wall_time_s) && a.status == b.status;
}

inline void sort_rows(std::vector<ResultRow> &rows)
{
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow &a, const ResultRow &b) {
        return std::tie(a.n_reflectors, a.bandwidth_hz, a.speed, a.b_bits, a.method) <
               std::tie(b.n_reflectors, b.bandwidth_hz, b.speed, b.b_bits, b.method);
    });
}

// ----------------------------------------------------------------- seeds

enum class Stream : std::uint64_t
{
    trial = 1,
    training = 2,
    sequence = 3,
    random_phase = 4,
};

inline std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t a, std::uint64_t b)
{
    std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32), static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),    static_cast<std::uint32_t>(b),
                      static_cast<std::uint32_t>(b >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

/// side x side grid for square counts, otherwise a single column of n.
inline RisGrid square_grid(std::size_t n, const RisGrid &like)
{
    require(n >= 1, ErrorKind::invalid_argument, "need at least one reflector");
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    RisGrid g = like;
    g.n_rows = side * side == n ? side : n;
    g.n_cols = side * side == n ? side : 1;
    return g;
}

inline Scenario trial_scenario(const ExperimentSpec &spec, std::size_t n, Stream stream, std::size_t trial)
{
    Scenario s = spec.scenario;
    s.grid = square_grid(n, s.grid);
    s.rng_seed = derive_seed(spec.seed, stream, n, trial);
    return s;
}

// --------------------------------------------------------------- helpers

namespace detail
{

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

inline double mean(const std::vector<double> &x)
{
    if (x.empty())
        return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double v : x)
        s += v;
    return s / static_cast<double>(x.size());
}

inline double rate_with_waterfill(const ChannelRealization &chan, const RisConfiguration &config, const LinkBudget &budget)
{
    return achievable_rate(chan, config, waterfill_for(chan, config, budget), budget).rate_bit_s;
}

inline double rate_uniform(const ChannelRealization &chan, const RisConfiguration &config, const LinkBudget &budget)
{
    return achievable_rate(chan, config, uniform_power(chan.n_blocks(), chan.n_subcarriers, budget.power_budget), budget).rate_bit_s;
}

inline double coherent_waterfilled(const ChannelRealization &chan, const LinkBudget &budget)
{
    return coherent_rate(chan, waterfill_coherent(chan, budget), budget);
}

} // namespace detail

/// Trains the configurator on stationary i.i.d. draws of `base` (the trial
/// seeds are never reused for training).
inline nn::NnParameters train_configurator(const ExperimentSpec &spec, const Scenario &base, std::size_t n)
{
    std::vector<nn::NnSample> data;
    const LinkBudget budget = LinkBudget::of(base);
    Scenario s = base;
    s.grid = square_grid(n, s.grid);
    s.ue_speed = 0.0;
    s.n_blocks = 1;
    for (std::size_t i = 0; i < spec.training_realizations; ++i)
    {
        s.rng_seed = derive_seed(spec.seed, Stream::training, n, i);
        data.push_back(nn::prepare_sample(synthesize_stationary(derive_geometry(s), s), budget));
    }
    return nn::train(data, s.n_subcarriers, n, budget, spec.training).params;
}

// ------------------------------------------------------ rate vs bandwidth

/// Per-trial rates of one (N, B) point, keyed by method.
inline std::map<std::string, std::vector<double>> rate_trials(const ExperimentSpec &spec, std::size_t n, double bandwidth_hz,
                                                              const nn::NnParameters *nn_params, std::size_t first_trial,
                                                              std::size_t count)
{
    std::map<std::string, std::vector<double>> out;
    for (std::size_t t = first_trial; t < first_trial + count; ++t)
    {
        Scenario s = trial_scenario(spec, n, Stream::trial, t);
        s.bandwidth_hz = bandwidth_hz;
        s.ue_speed = 0.0;
        s.n_blocks = 1;
        const ChannelRealization chan = synthesize_stationary(derive_geometry(s), s);
        const LinkBudget budget = LinkBudget::of(s);
        out["coherent"].push_back(detail::coherent_waterfilled(chan, budget));
        if (spec.wants("stm"))
            out["stm"].push_back(detail::rate_with_waterfill(chan, tv_stm(chan), budget));
        if (spec.wants("ao"))
        {
            const AoResult ao = ao_optimize(chan, budget, spec.ao);
            out["ao"].push_back(achievable_rate(chan, ao.config, ao.alloc, budget).rate_bit_s);
        }
        if (nn_params && spec.wants("nn"))
            out["nn"].push_back(detail::rate_with_waterfill(chan, nn::infer_config(*nn_params, chan), budget));
    }
    return out;
}

inline std::vector<ResultRow> run_rate_vs_bandwidth(const ExperimentSpec &spec)
{
    spec.validate();
    std::vector<ResultRow> rows;
    for (std::size_t n : spec.reflector_counts)
        for (double b : spec.bandwidths_hz)
        {
            const auto t0 = detail::Clock::now();
            Scenario s = spec.scenario;
            s.bandwidth_hz = b;
            std::optional<nn::NnParameters> params;
            std::map<std::string, std::vector<double>> rates;
            std::string status = "ok";
            try
            {
                if (spec.wants("nn"))
                    params = train_configurator(spec, s, n);
                ExperimentSpec local = spec;
                local.scenario = s;
                rates = rate_trials(local, n, b, params ? &*params : nullptr, 0, spec.trials);
            }
            catch (const Error &e)
            {
                if (e.kind() != ErrorKind::scenario_infeasible)
                    throw;
                status = "infeasible";
            }
            const double elapsed = spec.timing ? detail::seconds_since(t0) : 0.0;
            for (const char *m : {"stm", "ao", "nn", "coherent"})
            {
                if (std::string(m) != "coherent" && !spec.wants(m))
                    continue;
                ResultRow r;
                r.method = m;
                r.n_reflectors = n;
                r.bandwidth_hz = b;
                r.status = status;
                r.wall_time_s = elapsed;
                if (status == "ok")
                {
                    r.rate_bit_s = detail::mean(rates[m]);
                    r.coherent_bit_s = detail::mean(rates["coherent"]);
                }
                rows.push_back(r);
            }
        }
    sort_rows(rows);
    return rows;
}

// ------------------------------------------------------- efficiency table

/// Correlated sequence: a base draw and `length - 1` NLOS-jittered copies.
inline std::vector<ChannelRealization> correlated_sequence(const ExperimentSpec &spec, std::size_t n, std::size_t trial)
{
    Scenario s = trial_scenario(spec, n, Stream::trial, trial);
    s.ue_speed = 0.0;
    s.n_blocks = 1;
    const PathSet base = derive_geometry(s);
    std::mt19937_64 rng(derive_seed(spec.seed, Stream::sequence, n, trial));
    std::vector<ChannelRealization> seq;
    seq.push_back(synthesize_stationary(base, s));
    for (std::size_t t = 1; t < spec.sequence_length; ++t)
        seq.push_back(synthesize_stationary(perturb_nlos(base, rng, spec.nlos_jitter_s), s));
    return seq;
}

inline std::vector<ResultRow> run_efficiency_table(const ExperimentSpec &spec)
{
    spec.validate();
    std::vector<ResultRow> rows;
    for (std::size_t n : spec.reflector_counts)
    {
        const auto t0 = detail::Clock::now();
        std::optional<nn::NnParameters> params;
        if (spec.wants("nn"))
            params = train_configurator(spec, spec.scenario, n);
        const LinkBudget budget = LinkBudget::of(spec.scenario);

        // method -> bits -> per-trial efficiency / rate
        std::map<std::string, std::map<int, std::vector<double>>> eff, rate;
        std::map<int, std::vector<double>> coherent;
        for (std::size_t t = 0; t < spec.trials; ++t)
        {
            const auto seq = correlated_sequence(spec, n, t);
            std::map<std::string, std::vector<RisConfiguration>> configs;
            for (const auto &chan : seq)
            {
                if (spec.wants("stm"))
                    configs["stm"].push_back(tv_stm(chan));
                if (spec.wants("ao"))
                    configs["ao"].push_back(ao_optimize(chan, budget, spec.ao).config);
                if (params)
                    configs["nn"].push_back(nn::infer_config(*params, chan));
            }
            for (int b : spec.bits)
            {
                std::vector<double> coh;
                for (const auto &chan : seq)
                    coh.push_back(detail::coherent_waterfilled(chan, budget));
                coherent[b].push_back(detail::mean(coh));
                for (const auto &[m, cs] : configs)
                {
                    Eigen::MatrixXd levels(static_cast<Eigen::Index>(seq.size()), static_cast<Eigen::Index>(n));
                    std::vector<double> r;
                    for (std::size_t i = 0; i < seq.size(); ++i)
                    {
                        const RisConfiguration q = quantize(cs[i], b);
                        levels.row(static_cast<Eigen::Index>(i)) = q.thetas.row(0);
                        r.push_back(detail::rate_with_waterfill(seq[i], q, budget));
                    }
                    eff[m][b].push_back(efficiency_rate(levels));
                    rate[m][b].push_back(detail::mean(r));
                }
            }
        }
        const double elapsed = spec.timing ? detail::seconds_since(t0) : 0.0;
        for (const auto &[m, by_bits] : eff)
            for (const auto &[b, values] : by_bits)
            {
                ResultRow r;
                r.method = m;
                r.n_reflectors = n;
                r.bandwidth_hz = spec.scenario.bandwidth_hz;
                r.b_bits = b;
                r.efficiency_pct = detail::mean(values);
                r.rate_bit_s = detail::mean(rate[m][b]);
                r.coherent_bit_s = detail::mean(coherent[b]);
                r.wall_time_s = elapsed;
                rows.push_back(r);
            }
    }
    sort_rows(rows);
    return rows;
}

// ---------------------------------------------------------- Doppler table

inline RisConfiguration random_phases(std::size_t blocks, std::size_t n, std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> phase(-kPi, kPi);
    Eigen::VectorXd theta(static_cast<Eigen::Index>(n));
    for (auto &x : theta)
        x = phase(rng);
    return RisConfiguration::constant(blocks, theta);
}

/// Rates and |residual Doppler| of every Doppler-table method for one trial.
struct DopplerTrial
{
    std::map<std::string, double> rate;
    std::map<std::string, double> residual;
};

inline DopplerTrial doppler_trial(const ExperimentSpec &spec, std::size_t n, double speed, std::size_t trial)
{
    Scenario s = trial_scenario(spec, n, Stream::trial, trial);
    s.ue_speed = speed;
    require(s.n_blocks >= 2, ErrorKind::invalid_argument, "the Doppler table needs n_blocks >= 2");
    const ChannelRealization chan = synthesize(derive_geometry(s), s);
    const LinkBudget budget = LinkBudget::of(s);
    std::mt19937_64 rng(derive_seed(spec.seed, Stream::random_phase, n, trial));

    DopplerTrial out;
    out.rate["coherent"] = detail::coherent_waterfilled(chan, budget);
    out.rate["coherent_uniform"] = coherent_rate(chan, uniform_power(chan.n_blocks(), chan.n_subcarriers, budget.power_budget), budget);
    const std::vector<std::pair<std::string, RisConfiguration>> configs{
        {"tv_stm", tv_stm(chan)}, {"ti_stm", ti_stm(chan)}, {"fixed_random", random_phases(chan.n_blocks(), n, rng)}};
    for (const auto &[m, c] : configs)
    {
        out.rate[m] = detail::rate_with_waterfill(chan, c, budget);
        out.rate[m + "_uniform"] = detail::rate_uniform(chan, c, budget);
        try
        {
            out.residual[m] = std::abs(residual_doppler(chan, c));
        }
        catch (const Error &e)
        {
            if (e.kind() != ErrorKind::unmeasurable)
                throw;
            out.residual[m] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return out;
}

inline std::vector<ResultRow> run_doppler_table(const ExperimentSpec &spec)
{
    spec.validate();
    std::vector<ResultRow> rows;
    for (std::size_t n : spec.reflector_counts)
        for (double v : spec.speeds)
        {
            const auto t0 = detail::Clock::now();
            std::map<std::string, std::vector<double>> rate, residual;
            for (std::size_t t = 0; t < spec.trials; ++t)
            {
                const DopplerTrial d = doppler_trial(spec, n, v, t);
                for (const auto &[m, x] : d.rate)
                    rate[m].push_back(x);
                for (const auto &[m, x] : d.residual)
                    residual[m].push_back(x);
            }
            const double elapsed = spec.timing ? detail::seconds_since(t0) : 0.0;
            for (const auto &[m, values] : rate)
            {
                const bool uniform = m.size() > 8 && m.compare(m.size() - 8, 8, "_uniform") == 0;
                if (!spec.wants(uniform ? m.substr(0, m.size() - 8) : m) && m.rfind("coherent", 0) != 0)
                    continue;
                ResultRow r;
                r.method = m;
                r.n_reflectors = n;
                r.bandwidth_hz = spec.scenario.bandwidth_hz;
                r.speed = v;
                r.rate_bit_s = detail::mean(values);
                r.coherent_bit_s = detail::mean(rate[uniform ? "coherent_uniform" : "coherent"]);
                if (residual.count(m))
                {
                    r.residual_doppler_hz = detail::mean(residual[m]);
                    if (std::isnan(r.residual_doppler_hz))
                        r.status = "unmeasurable";
                }
                r.wall_time_s = elapsed;
                rows.push_back(r);
            }
        }
    sort_rows(rows);
    return rows;
}

// ---------------------------------------------------------------- oracles

struct OracleResult
{
    RisConfiguration config;
    double rate_bit_s = -std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
};

/// Exhaustive search over every b-bit configuration of a single-block
/// channel. With `alloc` the power is held fixed; without it every
/// candidate is water-filled (the joint optimum over quantised phases).
inline OracleResult brute_force_config_oracle(const ChannelRealization &chan, int bits, const std::optional<PowerAllocation> &alloc,
                                              const LinkBudget &budget)
{
    chan.validate();
    const std::size_t n = chan.n_reflectors();
    require(n <= 8 && bits >= 1 && bits <= 2, ErrorKind::invalid_argument, "oracle search space is capped at N <= 8, b <= 2");
    require(chan.n_blocks() == 1, ErrorKind::invalid_argument, "the oracle searches a single block");
    const std::size_t levels = std::size_t{1} << bits;
    const double step = quantization_step(bits);
    const auto half = static_cast<long>(levels / 2);

    const BlockSpectrum s = block_spectrum(chan, 0);
    const double scale = budget.bandwidth_hz / cyclic_prefix_factor(chan.n_subcarriers, chan.n_taps);
    const double nf = budget.noise_floor();

    OracleResult best;
    std::vector<std::size_t> digit(n, 0);
    Eigen::VectorXd theta(static_cast<Eigen::Index>(n));
    Eigen::VectorXcd omega(static_cast<Eigen::Index>(n));
    while (true)
    {
        for (std::size_t i = 0; i < n; ++i)
        {
            theta(static_cast<Eigen::Index>(i)) = static_cast<double>(static_cast<long>(digit[i]) - half) * step;
            omega(static_cast<Eigen::Index>(i)) = std::polar(1.0, theta(static_cast<Eigen::Index>(i)));
        }
        const Eigen::VectorXd gains = s.combined(omega).cwiseAbs2();
        const Eigen::VectorXd p = alloc ? Eigen::VectorXd(alloc->powers.row(0).transpose())
                                        : Eigen::VectorXd(waterfill(gains, budget.power_budget, nf).powers.row(0).transpose());
        const double r = scale * block_log_sum(gains, p, nf);
        ++best.evaluated;
        if (r > best.rate_bit_s)
        {
            best.rate_bit_s = r;
            best.config = RisConfiguration::constant(1, theta);
        }
        std::size_t i = 0;
        while (i < n && ++digit[i] == levels)
            digit[i++] = 0;
        if (i == n)
            break;
    }
    return best;
}

/// Relative slack of the sandwich comparisons. The oracle's -pi level and
/// quantize's +pi level are the same phase but differ in the last bits.
inline constexpr double kOracleSlack = 1e-9;

/// Sandwich check on tiny instances: AO (continuous) >= oracle >= quantised
/// STM and NN, all with water-filled power. A violated bound marks the row.
inline std::vector<ResultRow> run_oracle_suite(const ExperimentSpec &spec)
{
    spec.validate();
    std::vector<ResultRow> rows;
    for (std::size_t n : spec.reflector_counts)
    {
        const auto t0 = detail::Clock::now();
        std::optional<nn::NnParameters> params;
        if (spec.wants("nn"))
            params = train_configurator(spec, spec.scenario, n);
        for (int b : spec.bits)
        {
            std::map<std::string, std::vector<double>> rate;
            std::vector<double> coherent;
            bool violated = false;
            for (std::size_t t = 0; t < spec.trials; ++t)
            {
                Scenario s = trial_scenario(spec, n, Stream::trial, t);
                s.ue_speed = 0.0;
                s.n_blocks = 1;
                const ChannelRealization chan = synthesize_stationary(derive_geometry(s), s);
                const LinkBudget budget = LinkBudget::of(s);
                const double oracle = brute_force_config_oracle(chan, b, std::nullopt, budget).rate_bit_s;
                const AoResult ao = ao_optimize(chan, budget, spec.ao);
                const double ao_rate = achievable_rate(chan, ao.config, ao.alloc, budget).rate_bit_s;
                const double stm_q = detail::rate_with_waterfill(chan, quantize(tv_stm(chan), b), budget);
                rate["oracle"].push_back(oracle);
                rate["ao"].push_back(ao_rate);
                rate["stm_quantized"].push_back(stm_q);
                violated = violated || ao_rate < oracle * (1.0 - kOracleSlack) || stm_q > oracle * (1.0 + kOracleSlack);
                if (params)
                {
                    const double nn_q = detail::rate_with_waterfill(chan, quantize(nn::infer_config(*params, chan), b), budget);
                    rate["nn_quantized"].push_back(nn_q);
                    violated = violated || nn_q > oracle * (1.0 + kOracleSlack);
                }
                coherent.push_back(detail::coherent_waterfilled(chan, budget));
            }
            const double elapsed = spec.timing ? detail::seconds_since(t0) : 0.0;
            for (const auto &[m, values] : rate)
            {
                if (m == "ao" && b != spec.bits.front())
                    continue; // continuous phases do not depend on b
                ResultRow r;
                r.method = m;
                r.n_reflectors = n;
                r.bandwidth_hz = spec.scenario.bandwidth_hz;
                r.b_bits = m == "ao" ? 0 : b;
                r.rate_bit_s = detail::mean(values);
                r.coherent_bit_s = detail::mean(coherent);
                r.wall_time_s = elapsed;
                r.status = violated ? "violation" : "ok";
                rows.push_back(r);
            }
        }
    }
    sort_rows(rows);
    return rows;
}

inline std::vector<ResultRow> run_experiment(const ExperimentSpec &spec)
{
    switch (spec.kind)
    {
    case ExperimentKind::rate_vs_bandwidth: return run_rate_vs_bandwidth(spec);
    case ExperimentKind::efficiency_table: return run_efficiency_table(spec);
    case ExperimentKind::doppler_table: return run_doppler_table(spec);
    case ExperimentKind::oracle_suite: return run_oracle_suite(spec);
    }
    throw Error(ErrorKind::contract, "unhandled experiment kind");
}

// -------------------------------------------------------------------- CSV

inline std::string format_row(const ResultRow &r)
{
    using text::format_double;
    std::ostringstream o;
    o << r.method << ',' << r.n_reflectors << ',' << format_double(r.bandwidth_hz) << ',' << format_double(r.speed) << ',' << r.b_bits
      << ',' << format_double(r.rate_bit_s) << ',' << format_double(r.coherent_bit_s) << ',' << format_double(r.efficiency_pct) << ','
      << format_double(r.residual_doppler_hz) << ',' << format_double(r.wall_time_s) << ',' << r.status;
    return o.str();
}

inline std::string plot_path(const std::string &path) { return path + ".plot.csv"; }

/// Writes the result CSV. For the bandwidth sweep a companion
/// `<path>.plot.csv` with columns x (bandwidth), series (method_N) and y
/// (rate) is written as well.
inline void emit_results(const std::vector<ResultRow> &rows, const std::string &path, bool with_plot_data = false)
{
    {
        std::ofstream out(path, std::ios::binary);
        require(static_cast<bool>(out), ErrorKind::io, "cannot open '" + path + "' for writing");
        out << kResultHeader << '\n';
        for (const auto &r : rows)
            out << format_row(r) << '\n';
        require(static_cast<bool>(out), ErrorKind::io, "write to '" + path + "' failed");
    }
    if (!with_plot_data)
        return;
    const std::string pp = plot_path(path);
    std::ofstream plot(pp, std::ios::binary);
    require(static_cast<bool>(plot), ErrorKind::io, "cannot open '" + pp + "' for writing");
    plot << "x,series,y\n";
    for (const auto &r : rows)
        plot << text::format_double(r.bandwidth_hz) << ',' << r.method << "_N" << r.n_reflectors << ','
             << text::format_double(r.rate_bit_s) << '\n';
    require(static_cast<bool>(plot), ErrorKind::io, "write to '" + pp + "' failed");
}

inline std::vector<ResultRow> parse_results(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path + "'");
    std::string line;
    require(static_cast<bool>(std::getline(in, line)) && line == kResultHeader, ErrorKind::parse,
            "'" + path + "' does not start with the result header");
    std::vector<ResultRow> rows;
    std::size_t number = 1;
    while (std::getline(in, line))
    {
        ++number;
        if (line.empty())
            continue;
        const auto f = text::split(line, ',');
        require(f.size() == 11, ErrorKind::parse, path + ":" + std::to_string(number) + ": expected 11 fields");
        ResultRow r;
        r.method = std::string(f[0]);
        r.n_reflectors = static_cast<std::size_t>(text::parse_int(f[1]));
        r.bandwidth_hz = text::parse_double(f[2]);
        r.speed = text::parse_double(f[3]);
        r.b_bits = static_cast<int>(text::parse_int(f[4]));
        r.rate_bit_s = text::parse_double(f[5]);
        r.coherent_bit_s = text::parse_double(f[6]);
        r.efficiency_pct = text::parse_double(f[7]);
        r.residual_doppler_hz = text::parse_double(f[8]);
        r.wall_time_s = text::parse_double(f[9]);
        r.status = std::string(f[10]);
        rows.push_back(r);
    }
    return rows;
}

} // namespace risofdm::harness
