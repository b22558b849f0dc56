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

// Rate objective and the measurements built on top of it.

#pragma once

#include "channel.hpp"
#include "configuration.hpp"
#include "error.hpp"
#include "scene.hpp"
#include "text.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace risofdm
{

/// The scalars the rate expression needs from a scenario.
struct LinkBudget
{
    double bandwidth_hz = 0.0;
    double noise_density = 0.0;
    double power_budget = 0.0;

    static LinkBudget of(const Scenario &s) { return {s.bandwidth_hz, s.noise_density, s.power_budget}; }

    double noise_floor() const { return bandwidth_hz * noise_density; }
};

/// Per-block subcarrier powers, U x K.
struct PowerAllocation
{
    Eigen::MatrixXd powers;
    Eigen::VectorXd water_level; ///< one entry per block when produced by water-filling
    std::string warning;

    std::size_t n_blocks() const { return static_cast<std::size_t>(powers.rows()); }

    void validate(double power_budget) const
    {
        require((powers.array() >= 0.0).all(), ErrorKind::contract, "negative subcarrier power");
        for (Eigen::Index u = 0; u < powers.rows(); ++u)
            require(powers.row(u).sum() <= power_budget + 1e-9, ErrorKind::contract, "block power exceeds the budget");
    }
};

inline PowerAllocation uniform_power(std::size_t blocks, std::size_t k, double power_budget)
{
    PowerAllocation a;
    a.powers = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(blocks), static_cast<Eigen::Index>(k), power_budget / static_cast<double>(k));
    return a;
}

struct RateReport
{
    double rate_bit_s = 0.0;
    double coherent_bit_s = 0.0;
    Eigen::VectorXd per_subcarrier_snr; ///< block-major, U*K entries
    double xi = 0.0;
};

/// Cyclic-prefix factor K + M - 1.
inline double cyclic_prefix_factor(std::size_t k, std::size_t m) { return static_cast<double>(k + m - 1); }

/// (|direct_i| + sum_n |composite_{n,i}|)^2 per subcarrier.
inline Eigen::VectorXd coherent_gains(const BlockSpectrum &s)
{
    Eigen::VectorXd g = s.direct.cwiseAbs();
    if (s.composite.rows() > 0)
        g += s.composite.cwiseAbs().colwise().sum().transpose();
    return g.cwiseAbs2();
}

/// Exact water-filling: p_i = max(0, mu - noise_floor / g_i), sum p_i = P.
/// The water level is found from the sorted inverse gains instead of by
/// bisection.
inline PowerAllocation waterfill(const Eigen::VectorXd &gains, double total_power, double noise_floor)
{
    require(total_power > 0.0, ErrorKind::invalid_argument, "power budget must be positive");
    require((gains.array() >= 0.0).all(), ErrorKind::invalid_argument, "gains must be non-negative");
    const auto k = static_cast<std::size_t>(gains.size());
    PowerAllocation out;
    out.powers = Eigen::MatrixXd::Zero(1, gains.size());
    out.water_level = Eigen::VectorXd::Zero(1);

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < k; ++i)
        if (gains(static_cast<Eigen::Index>(i)) > 0.0)
            active.push_back(i);
    if (active.empty())
    {
        out.warning = "all subcarrier gains are zero; nothing allocated";
        return out;
    }
    std::vector<double> floor_level(k, 0.0);
    for (auto i : active)
        floor_level[i] = noise_floor / gains(static_cast<Eigen::Index>(i));
    std::sort(active.begin(), active.end(), [&](std::size_t a, std::size_t b) { return floor_level[a] < floor_level[b]; });

    double prefix = 0.0;
    double mu = 0.0;
    for (std::size_t j = 0; j < active.size(); ++j)
    {
        prefix += floor_level[active[j]];
        const double candidate = (total_power + prefix) / static_cast<double>(j + 1);
        if (j > 0 && candidate <= floor_level[active[j]])
            break;
        mu = candidate;
    }
    for (auto i : active)
        out.powers(0, static_cast<Eigen::Index>(i)) = std::max(0.0, mu - floor_level[i]);
    out.water_level(0) = mu;
    return out;
}

/// Stacks single-block allocations into one U x K allocation.
inline PowerAllocation stack_blocks(const std::vector<PowerAllocation> &blocks)
{
    PowerAllocation out;
    if (blocks.empty())
        return out;
    out.powers.resize(static_cast<Eigen::Index>(blocks.size()), blocks.front().powers.cols());
    out.water_level.resize(static_cast<Eigen::Index>(blocks.size()));
    for (std::size_t u = 0; u < blocks.size(); ++u)
    {
        out.powers.row(static_cast<Eigen::Index>(u)) = blocks[u].powers.row(0);
        out.water_level(static_cast<Eigen::Index>(u)) = blocks[u].water_level.size() ? blocks[u].water_level(0) : 0.0;
        if (!blocks[u].warning.empty())
            out.warning = blocks[u].warning;
    }
    return out;
}

/// Sum over subcarriers of log2(1 + p_i g_i / (B N0)).
inline double block_log_sum(const Eigen::VectorXd &gains, const Eigen::VectorXd &powers, double noise_floor)
{
    double acc = 0.0;
    for (Eigen::Index i = 0; i < gains.size(); ++i)
        acc += std::log2(1.0 + powers(i) * gains(i) / noise_floor);
    return acc;
}

namespace detail
{

inline void check_rate_inputs(const ChannelRealization &chan, const PowerAllocation &alloc)
{
    chan.validate();
    require(alloc.n_blocks() == chan.n_blocks() && static_cast<std::size_t>(alloc.powers.cols()) == chan.n_subcarriers,
            ErrorKind::contract, "power allocation does not match the channel dimensions");
}

} // namespace detail

inline double coherent_rate(const ChannelRealization &chan, const PowerAllocation &alloc, const LinkBudget &budget)
{
    detail::check_rate_inputs(chan, alloc);
    double acc = 0.0;
    for (std::size_t u = 0; u < chan.n_blocks(); ++u)
    {
        const auto s = block_spectrum(chan, u);
        acc += block_log_sum(coherent_gains(s), alloc.powers.row(static_cast<Eigen::Index>(u)).transpose(), budget.noise_floor());
    }
    return budget.bandwidth_hz / cyclic_prefix_factor(chan.n_subcarriers, chan.n_taps) * acc;
}

/// Achievable rate of `config` under `alloc`; the coherent bound is evaluated
/// with the same allocation.
inline RateReport achievable_rate(const ChannelRealization &chan, const RisConfiguration &config, const PowerAllocation &alloc,
                                  const LinkBudget &budget)
{
    detail::check_rate_inputs(chan, alloc);
    require(config.n_blocks() == chan.n_blocks() && config.n_reflectors() == chan.n_reflectors(), ErrorKind::contract,
            "configuration does not match the channel dimensions");
    const auto k = static_cast<Eigen::Index>(chan.n_subcarriers);
    RateReport r;
    r.xi = cyclic_prefix_factor(chan.n_subcarriers, chan.n_taps);
    r.per_subcarrier_snr.resize(k * static_cast<Eigen::Index>(chan.n_blocks()));
    double acc = 0.0;
    double acc_coherent = 0.0;
    const double nf = budget.noise_floor();
    for (std::size_t u = 0; u < chan.n_blocks(); ++u)
    {
        const auto s = block_spectrum(chan, u);
        const Eigen::VectorXd gains = s.combined(config.omega(u)).cwiseAbs2();
        const Eigen::VectorXd p = alloc.powers.row(static_cast<Eigen::Index>(u)).transpose();
        for (Eigen::Index i = 0; i < k; ++i)
        {
            const double snr = p(i) * gains(i) / nf;
            r.per_subcarrier_snr(static_cast<Eigen::Index>(u) * k + i) = snr;
            acc += std::log2(1.0 + snr);
        }
        acc_coherent += block_log_sum(coherent_gains(s), p, nf);
    }
    r.rate_bit_s = budget.bandwidth_hz / r.xi * acc;
    r.coherent_bit_s = budget.bandwidth_hz / r.xi * acc_coherent;
    return r;
}

/// Water-filled allocation for a configuration, block by block.
inline PowerAllocation waterfill_for(const ChannelRealization &chan, const RisConfiguration &config, const LinkBudget &budget)
{
    std::vector<PowerAllocation> blocks;
    for (std::size_t u = 0; u < chan.n_blocks(); ++u)
    {
        const auto s = block_spectrum(chan, u);
        blocks.push_back(waterfill(s.combined(config.omega(u)).cwiseAbs2(), budget.power_budget, budget.noise_floor()));
    }
    return stack_blocks(blocks);
}

/// Water-filled allocation on the coherent gains; with it the coherent rate
/// bounds every (configuration, allocation) pair.
inline PowerAllocation waterfill_coherent(const ChannelRealization &chan, const LinkBudget &budget)
{
    std::vector<PowerAllocation> blocks;
    for (std::size_t u = 0; u < chan.n_blocks(); ++u)
        blocks.push_back(waterfill(coherent_gains(block_spectrum(chan, u)), budget.power_budget, budget.noise_floor()));
    return stack_blocks(blocks);
}

// ------------------------------------------------------------ quantization

inline double quantization_step(int bits)
{
    require(bits >= 1, ErrorKind::invalid_argument, "quantization needs at least one bit");
    return kPi / std::ldexp(1.0, bits - 1);
}

/// round(theta / delta) * delta with ties away from zero.
inline double quantize(double theta, int bits)
{
    const double delta = quantization_step(bits);
    return std::round(theta / delta) * delta;
}

inline Eigen::MatrixXd quantize(const Eigen::MatrixXd &theta, int bits)
{
    return theta.unaryExpr([bits](double x) { return quantize(x, bits); });
}

inline RisConfiguration quantize(const RisConfiguration &config, int bits)
{
    RisConfiguration q = config;
    q.thetas = quantize(config.thetas, bits);
    return q;
}

/// Two quantized phases name the same level when they agree modulo 2 pi
/// (so -pi and pi are one level).
inline bool same_level(double a, double b)
{
    if (a == b)
        return true;
    return std::abs(std::remainder(a - b, 2.0 * kPi)) <= 1e-12;
}

/// Percentage of reflector steps that kept their quantized level between
/// adjacent rows of a T x N sequence.
inline double efficiency_rate(const Eigen::MatrixXd &sequence)
{
    require(sequence.rows() >= 2, ErrorKind::undefined_metric, "efficiency needs at least two realizations");
    require(sequence.cols() >= 1, ErrorKind::undefined_metric, "efficiency needs at least one reflector");
    std::size_t changes = 0;
    for (Eigen::Index t = 1; t < sequence.rows(); ++t)
        for (Eigen::Index n = 0; n < sequence.cols(); ++n)
            if (!same_level(sequence(t, n), sequence(t - 1, n)))
                ++changes;
    const double comparisons = static_cast<double>(sequence.cols()) * static_cast<double>(sequence.rows() - 1);
    return 100.0 * (1.0 - static_cast<double>(changes) / comparisons);
}

// ------------------------------------------------------------ Doppler drift

/// Phase-drift frequency of the strongest combined tap across blocks.
/// The tap is the one with the largest energy summed over the frame; the
/// unwrapped phase is regressed on the block index by least squares.
inline double residual_doppler(const ChannelRealization &chan, const RisConfiguration &config)
{
    chan.validate();
    require(chan.n_blocks() >= 2, ErrorKind::undefined_metric, "residual Doppler needs at least two blocks");
    require(config.n_blocks() == chan.n_blocks() && config.n_reflectors() == chan.n_reflectors(), ErrorKind::contract,
            "configuration does not match the channel dimensions");
    const std::size_t u_count = chan.n_blocks();
    std::vector<Eigen::VectorXcd> taps;
    Eigen::VectorXd energy = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(chan.n_taps));
    for (std::size_t u = 0; u < u_count; ++u)
    {
        taps.push_back(chan.combined_taps(u, config.omega(u)));
        energy += taps.back().cwiseAbs2();
    }
    Eigen::Index m_star = 0;
    energy.maxCoeff(&m_star);

    std::vector<double> phase(u_count);
    for (std::size_t u = 0; u < u_count; ++u)
    {
        const cdouble c = taps[u](m_star);
        require(std::abs(c) >= 1e-12, ErrorKind::unmeasurable, "strongest combined tap vanishes in block " + std::to_string(u + 1));
        phase[u] = std::arg(c);
    }
    for (std::size_t u = 1; u < u_count; ++u)
        phase[u] = phase[u - 1] + std::remainder(phase[u] - phase[u - 1], 2.0 * kPi);

    const double mean_u = (static_cast<double>(u_count) + 1.0) / 2.0;
    const double mean_p = std::accumulate(phase.begin(), phase.end(), 0.0) / static_cast<double>(u_count);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t u = 0; u < u_count; ++u)
    {
        const double x = static_cast<double>(u + 1) - mean_u;
        sxy += x * (phase[u] - mean_p);
        sxx += x * x;
    }
    return sxy / sxx / (2.0 * kPi * chan.block_duration_s);
}

// --------------------------------------------------------------------- CSV

inline constexpr const char *kRateReportHeader = "rate_bps,coherent_bps,xi,b_bits,efficiency_pct,residual_doppler_hz";

/// One CSV row under kRateReportHeader; unavailable metrics are written as nan.
inline std::string rate_report_row(const RateReport &r, int b_bits, double efficiency_pct, double residual_doppler_hz)
{
    return text::format_double(r.rate_bit_s) + ',' + text::format_double(r.coherent_bit_s) + ',' + text::format_double(r.xi) + ',' +
           std::to_string(b_bits) + ',' + text::format_double(efficiency_pct) + ',' + text::format_double(residual_doppler_hz);
}

} // namespace risofdm
