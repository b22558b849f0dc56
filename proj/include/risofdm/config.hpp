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

// Classic surface configuration algorithms: strongest-tap alignment in its
// time-varying and time-invariant forms, and alternating optimisation of
// power (water-filling) and phases (successive convex approximation).

#pragma once

#include "channel.hpp"
#include "configuration.hpp"
#include "error.hpp"
#include "metrics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

namespace risofdm
{

// --------------------------------------------------------------------- STM

/// Phases that rotate every reflector's contribution at tap m onto the phase
/// of the direct tap (phase 0 when the direct tap vanishes).
inline Eigen::VectorXd stm_candidate(const ChannelRealization &chan, std::size_t block, std::size_t m)
{
    require(block < chan.n_blocks(), ErrorKind::invalid_argument, "block index out of range");
    require(m < chan.n_taps, ErrorKind::invalid_argument, "tap index out of range");
    const auto mi = static_cast<Eigen::Index>(m);
    const cdouble h = chan.direct(static_cast<Eigen::Index>(block), mi);
    const double reference = std::abs(h) > 0.0 ? std::arg(h) : 0.0;
    const auto &v = chan.composite[block];
    Eigen::VectorXd theta(v.rows());
    for (Eigen::Index n = 0; n < v.rows(); ++n)
        theta(n) = wrap_phase(reference - std::arg(v(n, mi)));
    return theta;
}

/// |h_u[m] + [V_u]_m^T e^{j theta}|^2
inline double tap_power(const ChannelRealization &chan, std::size_t block, std::size_t m, const Eigen::VectorXd &theta)
{
    const auto mi = static_cast<Eigen::Index>(m);
    const auto &v = chan.composite[block];
    cdouble acc = chan.direct(static_cast<Eigen::Index>(block), mi);
    for (Eigen::Index n = 0; n < v.rows(); ++n)
        acc += v(n, mi) * std::polar(1.0, theta(n));
    return std::norm(acc);
}

struct StmChoice
{
    std::size_t tap = 0;
    Eigen::VectorXd theta;
    double power = 0.0;
};

/// Strongest aligned tap of `block`, candidates taken from `candidate_block`.
/// Ties resolve to the smaller tap index.
inline StmChoice strongest_tap(const ChannelRealization &chan, std::size_t block, std::size_t candidate_block)
{
    StmChoice best;
    best.power = -1.0;
    for (std::size_t m = 0; m < chan.n_taps; ++m)
    {
        Eigen::VectorXd theta = stm_candidate(chan, candidate_block, m);
        const double p = tap_power(chan, block, m, theta);
        if (p > best.power)
            best = {m, std::move(theta), p};
    }
    return best;
}

/// Time-varying STM: re-aligned at every block.
inline RisConfiguration tv_stm(const ChannelRealization &chan)
{
    chan.validate();
    RisConfiguration c;
    c.thetas.resize(static_cast<Eigen::Index>(chan.n_blocks()), static_cast<Eigen::Index>(chan.n_reflectors()));
    for (std::size_t u = 0; u < chan.n_blocks(); ++u)
        c.thetas.row(static_cast<Eigen::Index>(u)) = strongest_tap(chan, u, u).theta.transpose();
    c.time_invariant = chan.n_blocks() == 1;
    return c;
}

/// Time-invariant STM: aligned once at `reference_block` (zero-based; the
/// default is the first transmitted block) and held for the whole frame.
inline RisConfiguration ti_stm(const ChannelRealization &chan, std::size_t reference_block = 0)
{
    chan.validate();
    require(reference_block < chan.n_blocks(), ErrorKind::invalid_argument, "reference block out of range");
    const StmChoice choice = strongest_tap(chan, reference_block, reference_block);
    return RisConfiguration::constant(chan.n_blocks(), choice.theta);
}

// --------------------------------------------------------------------- SCA

/// First-order expansion of a^2 + b^2 around (anchor_a, anchor_b).
inline double sca_surrogate(double a, double b, double anchor_a, double anchor_b)
{
    return anchor_a * anchor_a + anchor_b * anchor_b + 2.0 * anchor_a * (a - anchor_a) + 2.0 * anchor_b * (b - anchor_b);
}

struct ScaState
{
    Eigen::VectorXd anchor_a; ///< Re of the combined response at the anchor
    Eigen::VectorXd anchor_b; ///< Im of the combined response at the anchor
    Eigen::VectorXcd omega;
    std::size_t iteration = 0;
    double objective = 0.0; ///< surrogate objective at omega (log2 units)
};

struct ScaOptions
{
    std::size_t max_steps = 500;
    double relative_tolerance = 1e-7;
    std::size_t max_halvings = 60;
};

/// Anchors the linearisation at omega.
inline ScaState anchor_at(const BlockSpectrum &s, const Eigen::VectorXcd &omega)
{
    ScaState st;
    const Eigen::VectorXcd h = s.combined(omega);
    st.anchor_a = h.real();
    st.anchor_b = h.imag();
    st.omega = omega;
    return st;
}

namespace detail
{

// sum_i log2(1 + c_i y_i) with y_i the surrogate; -inf outside the log domain.
inline double surrogate_objective(const BlockSpectrum &s, const Eigen::VectorXd &snr_scale, const Eigen::VectorXcd &anchor,
                                  const Eigen::VectorXcd &omega, Eigen::VectorXd *weights = nullptr)
{
    const Eigen::VectorXcd h = s.combined(omega);
    double acc = 0.0;
    if (weights)
        weights->resize(h.size());
    for (Eigen::Index i = 0; i < h.size(); ++i)
    {
        const double y = 2.0 * (std::conj(anchor(i)) * h(i)).real() - std::norm(anchor(i));
        const double arg = 1.0 + snr_scale(i) * y;
        if (!(arg > 0.0))
            return -std::numeric_limits<double>::infinity();
        acc += std::log2(arg);
        if (weights)
            (*weights)(i) = snr_scale(i) / (arg * std::log(2.0));
    }
    return acc;
}

inline Eigen::VectorXcd project_unit_disks(Eigen::VectorXcd w)
{
    for (Eigen::Index n = 0; n < w.size(); ++n)
    {
        const double r = std::abs(w(n));
        if (r > 1.0)
            w(n) /= r;
    }
    return w;
}

} // namespace detail

/// One convex subproblem: maximise sum_i log2(1 + p_i y_i / (B N0)) with
/// y_i the linearised |.|^2 at the state's anchors, over |omega_n| <= 1, by
/// projected gradient ascent with a halving line search.
inline ScaState sca_inner_solve(const BlockSpectrum &s, const Eigen::VectorXd &powers, double noise_floor, ScaState state,
                                const ScaOptions &opt = {})
{
    require(state.omega.size() == s.composite.rows(), ErrorKind::contract, "state does not match the channel");
    require(powers.size() == s.direct.size(), ErrorKind::contract, "power vector does not match the channel");
    const Eigen::VectorXd scale = powers / noise_floor;
    Eigen::VectorXcd anchor(state.anchor_a.size());
    for (Eigen::Index i = 0; i < anchor.size(); ++i)
        anchor(i) = {state.anchor_a(i), state.anchor_b(i)};
    const Eigen::MatrixXcd g_conj = s.composite.conjugate();

    Eigen::VectorXd weights;
    double f = detail::surrogate_objective(s, scale, anchor, state.omega, &weights);
    require(std::isfinite(f), ErrorKind::numerical, "surrogate objective is not finite at the anchor");
    for (std::size_t step = 0; step < opt.max_steps; ++step)
    {
        const Eigen::VectorXcd weighted = (2.0 * weights.array()).cast<cdouble>() * anchor.array();
        const Eigen::VectorXcd grad = g_conj * weighted;
        require(grad.allFinite(), ErrorKind::numerical, "non-finite SCA gradient");
        const double gmax = grad.cwiseAbs().maxCoeff();
        if (gmax == 0.0)
            break;
        const Eigen::VectorXcd dir = grad / gmax;

        double t = 1.0;
        bool accepted = false;
        Eigen::VectorXcd candidate;
        double f_new = f;
        for (std::size_t h = 0; h < opt.max_halvings; ++h, t *= 0.5)
        {
            candidate = detail::project_unit_disks(state.omega + t * dir);
            f_new = detail::surrogate_objective(s, scale, anchor, candidate);
            const double predicted = (grad.conjugate().cwiseProduct(candidate - state.omega)).real().sum();
            if (f_new > f && f_new >= f + 1e-4 * predicted)
            {
                accepted = true;
                break;
            }
        }
        if (!accepted)
            break;
        const double gain = f_new - f;
        state.omega = candidate;
        f = detail::surrogate_objective(s, scale, anchor, state.omega, &weights);
        ++state.iteration;
        if (gain < opt.relative_tolerance * std::abs(f))
            break;
    }
    state.objective = f;
    return state;
}

inline ScaState sca_inner_solve(const ChannelRealization &chan, std::size_t block, const PowerAllocation &alloc, double noise_floor,
                                ScaState state, const ScaOptions &opt = {})
{
    return sca_inner_solve(block_spectrum(chan, block), alloc.powers.row(static_cast<Eigen::Index>(block)).transpose(), noise_floor,
                           std::move(state), opt);
}

// ---------------------------------------------------------------------- AO

struct AoOptions
{
    std::size_t max_outer = 30;
    double relative_tolerance = 1e-5;
    /// Also start from the aligned candidate of every tap, not only the
    /// strongest one, and keep the best result.
    bool multi_start = true;
    ScaOptions inner;
};

struct AoResult
{
    RisConfiguration config;
    PowerAllocation alloc;
    /// Rate of block u [bit/s] before the first and after every outer round,
    /// for the start that produced the returned phases.
    std::vector<std::vector<double>> rate_history;
};

namespace detail
{

inline double block_rate(const BlockSpectrum &s, const Eigen::VectorXcd &omega, const Eigen::VectorXd &powers, double noise_floor,
                         double scale)
{
    return scale * block_log_sum(s.combined(omega).cwiseAbs2(), powers, noise_floor);
}

inline Eigen::VectorXcd snap_unit(const Eigen::VectorXcd &w)
{
    Eigen::VectorXcd out(w.size());
    for (Eigen::Index n = 0; n < w.size(); ++n)
        out(n) = std::abs(w(n)) > 0.0 ? w(n) / std::abs(w(n)) : cdouble(1.0, 0.0);
    return out;
}

inline Eigen::VectorXcd unit_from_phases(const Eigen::VectorXd &theta)
{
    Eigen::VectorXcd w(theta.size());
    for (Eigen::Index n = 0; n < theta.size(); ++n)
        w(n) = std::polar(1.0, theta(n));
    return w;
}

struct AoRun
{
    Eigen::VectorXcd best;
    PowerAllocation alloc;
    double rate = 0.0;
    std::vector<double> history;
};

// One AO run on a single block from the unit-modulus start `omega`.
inline AoRun ao_block(const BlockSpectrum &s, Eigen::VectorXcd omega, const LinkBudget &budget, double scale, const AoOptions &opt)
{
    const double nf = budget.noise_floor();
    Eigen::VectorXd p = Eigen::VectorXd::Constant(s.direct.size(), budget.power_budget / static_cast<double>(s.direct.size()));

    AoRun run;
    run.history.push_back(block_rate(s, omega, p, nf, scale));
    run.best = omega;
    run.alloc = waterfill(s.combined(omega).cwiseAbs2(), budget.power_budget, nf);
    run.rate = block_rate(s, omega, run.alloc.powers.row(0).transpose(), nf, scale);

    for (std::size_t round = 0; round < opt.max_outer; ++round)
    {
        p = waterfill(s.combined(omega).cwiseAbs2(), budget.power_budget, nf).powers.row(0).transpose();
        const ScaState st = sca_inner_solve(s, p, nf, anchor_at(s, omega), opt.inner);
        omega = st.omega;
        const double r = block_rate(s, omega, p, nf, scale);
        const double previous = run.history.back();
        run.history.push_back(r);

        const Eigen::VectorXcd unit = snap_unit(omega);
        PowerAllocation unit_alloc = waterfill(s.combined(unit).cwiseAbs2(), budget.power_budget, nf);
        const double unit_rate = block_rate(s, unit, unit_alloc.powers.row(0).transpose(), nf, scale);
        if (unit_rate > run.rate)
        {
            run.best = unit;
            run.rate = unit_rate;
            run.alloc = std::move(unit_alloc);
        }
        if (r - previous < opt.relative_tolerance * std::abs(previous))
            break;
    }
    return run;
}

} // namespace detail

/// Alternating optimisation, block by block. Each run starts from aligned
/// phases with uniform power; every outer round water-fills for the current
/// phases, then solves one anchored convex subproblem and re-anchors. The
/// first start is tv_stm; with `multi_start` the candidates of the other
/// taps follow. The returned phases are the best unit-modulus iterate over
/// all runs, with its water-filled power.
inline AoResult ao_optimize(const ChannelRealization &chan, const LinkBudget &budget, const AoOptions &opt = {})
{
    chan.validate();
    const double scale = budget.bandwidth_hz / cyclic_prefix_factor(chan.n_subcarriers, chan.n_taps);

    AoResult result;
    result.config.thetas.resize(static_cast<Eigen::Index>(chan.n_blocks()), static_cast<Eigen::Index>(chan.n_reflectors()));
    std::vector<PowerAllocation> block_alloc;
    for (std::size_t u = 0; u < chan.n_blocks(); ++u)
    {
        const BlockSpectrum s = block_spectrum(chan, u);
        const StmChoice first = strongest_tap(chan, u, u);
        detail::AoRun best = detail::ao_block(s, detail::unit_from_phases(first.theta), budget, scale, opt);
        if (opt.multi_start)
            for (std::size_t m = 0; m < chan.n_taps; ++m)
            {
                if (m == first.tap)
                    continue;
                detail::AoRun run = detail::ao_block(s, detail::unit_from_phases(stm_candidate(chan, u, m)), budget, scale, opt);
                if (run.rate > best.rate)
                    best = std::move(run);
            }
        for (Eigen::Index n = 0; n < best.best.size(); ++n)
            result.config.thetas(static_cast<Eigen::Index>(u), n) = wrap_phase(std::arg(best.best(n)));
        block_alloc.push_back(std::move(best.alloc));
        result.rate_history.push_back(std::move(best.history));
    }
    result.config.time_invariant = chan.n_blocks() == 1;
    result.alloc = stack_blocks(block_alloc);
    return result;
}

} // namespace risofdm
