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

#include "catch_amalgamated.hpp"
#include "oracles.hpp"
#include "risofdm.hpp"

#include <cstdio>

using namespace risofdm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{

ChannelRealization one_tap(cdouble h, const std::vector<cdouble> &v, std::size_t k = 1)
{
    ChannelRealization c;
    c.n_taps = 1;
    c.n_subcarriers = k;
    c.block_duration_s = 1e-3;
    c.direct = Eigen::MatrixXcd::Constant(1, 1, h);
    Eigen::MatrixXcd m(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t n = 0; n < v.size(); ++n)
        m(static_cast<Eigen::Index>(n), 0) = v[n];
    c.composite.push_back(m);
    return c;
}

// Frame whose blocks all repeat one realisation.
ChannelRealization frozen_frame(const ChannelRealization &one, std::size_t blocks)
{
    ChannelRealization c = one;
    c.direct = one.direct.replicate(static_cast<Eigen::Index>(blocks), 1);
    c.composite.assign(blocks, one.composite.front());
    return c;
}

double waterfilled_rate(const ChannelRealization &c, const RisConfiguration &cfg, const LinkBudget &b)
{
    return achievable_rate(c, cfg, waterfill_for(c, cfg, b), b).rate_bit_s;
}

LinkBudget budget() { return {10e6, 4e-24, 1.0}; }

} // namespace

TEST_CASE("wrap_phase", "[config]")
{
    CHECK(wrap_phase(0.0) == 0.0);
    CHECK(wrap_phase(kPi) == -kPi);
    CHECK(wrap_phase(-kPi) == -kPi);
    CHECK_THAT(wrap_phase(3.0 * kPi / 2.0), WithinAbs(-kPi / 2.0, 1e-15));
    CHECK_THAT(wrap_phase(-5.0 * kPi / 2.0), WithinAbs(-kPi / 2.0, 1e-14));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> x(-100.0, 100.0);
    for (int i = 0; i < 1000; ++i)
    {
        const double v = x(rng);
        const double w = wrap_phase(v);
        CHECK(w >= -kPi);
        CHECK(w < kPi);
        CHECK_THAT(std::remainder(w - v, 2.0 * kPi), WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("STM candidate examples", "[config]")
{
    SECTION("phase subtraction")
    {
        const auto c = one_tap(1.0, {std::polar(1.0, kPi / 4), std::polar(2.0, -kPi / 2)});
        const auto t = stm_candidate(c, 0, 0);
        CHECK_THAT(t(0), WithinAbs(-kPi / 4, 1e-15));
        CHECK_THAT(t(1), WithinAbs(kPi / 2, 1e-15));
        CHECK_THAT(std::sqrt(tap_power(c, 0, 0, t)), WithinRel(1.0 + 1.0 + 2.0, 1e-14));
    }
    SECTION("vanishing direct tap uses phase zero as reference")
    {
        const auto c = one_tap(0.0, {cdouble(0.0, 1.0), cdouble(0.0, 1.0)});
        const auto t = stm_candidate(c, 0, 0);
        CHECK_THAT(t(0), WithinAbs(-kPi / 2, 1e-15));
        CHECK_THAT(t(1), WithinAbs(-kPi / 2, 1e-15));
    }
    SECTION("aligned tap magnitude is the sum of magnitudes")
    {
        std::mt19937_64 rng(2);
        for (int trial = 0; trial < 100; ++trial)
        {
            auto c = oracle::random_channel(rng, 5, 3, 8, 1);
            for (std::size_t m = 0; m < 3; ++m)
            {
                const auto mi = static_cast<Eigen::Index>(m);
                const double expected = std::abs(c.direct(0, mi)) + c.composite[0].col(mi).cwiseAbs().sum();
                CHECK_THAT(std::sqrt(tap_power(c, 0, m, stm_candidate(c, 0, m))), WithinRel(expected, 1e-12));
            }
        }
    }
    SECTION("index contracts")
    {
        const auto c = one_tap(1.0, {1.0});
        CHECK_THROWS_AS(stm_candidate(c, 1, 0), Error);
        CHECK_THROWS_AS(stm_candidate(c, 0, 1), Error);
    }
}

TEST_CASE("TV-STM picks the strongest aligned tap", "[config]")
{
    std::mt19937_64 rng(3);
    SECTION("single tap")
    {
        auto c = oracle::random_channel(rng, 4, 1, 4, 3);
        const auto cfg = tv_stm(c);
        for (std::size_t u = 0; u < 3; ++u)
            CHECK((cfg.thetas.row(static_cast<Eigen::Index>(u)).transpose() - stm_candidate(c, u, 0)).norm() == 0.0);
    }
    SECTION("exhaustive check on two reflectors and two taps")
    {
        for (int trial = 0; trial < 200; ++trial)
        {
            auto c = oracle::random_channel(rng, 2, 2, 4, 1);
            const double p0 = tap_power(c, 0, 0, stm_candidate(c, 0, 0));
            const double p1 = tap_power(c, 0, 1, stm_candidate(c, 0, 1));
            const std::size_t expect = p1 > p0 ? 1 : 0;
            const auto cfg = tv_stm(c);
            CHECK((cfg.thetas.row(0).transpose() - stm_candidate(c, 0, expect)).norm() == 0.0);
        }
    }
    SECTION("argmax over every block")
    {
        auto c = oracle::random_channel(rng, 6, 4, 8, 4);
        const auto cfg = tv_stm(c);
        for (std::size_t u = 0; u < 4; ++u)
        {
            const StmChoice best = strongest_tap(c, u, u);
            for (std::size_t m = 0; m < 4; ++m)
                CHECK(best.power >= tap_power(c, u, m, stm_candidate(c, u, m)));
            CHECK((cfg.thetas.row(static_cast<Eigen::Index>(u)).transpose() - best.theta).norm() == 0.0);
        }
    }
    SECTION("ties go to the smaller tap")
    {
        ChannelRealization c;
        c.n_taps = 2;
        c.n_subcarriers = 4;
        c.direct = Eigen::MatrixXcd::Constant(1, 2, 1.0);
        c.composite.push_back(Eigen::MatrixXcd::Constant(1, 2, cdouble(0.0, 1.0)));
        CHECK(strongest_tap(c, 0, 0).tap == 0);
    }
}

TEST_CASE("TI-STM specialisations", "[config]")
{
    std::mt19937_64 rng(4);
    SECTION("one block equals TV-STM")
    {
        for (int trial = 0; trial < 20; ++trial)
        {
            auto c = oracle::random_channel(rng, 5, 3, 8, 1);
            CHECK(ti_stm(c).thetas == tv_stm(c).thetas);
        }
    }
    SECTION("a frozen frame equals TV-STM in every block")
    {
        const auto c = frozen_frame(oracle::random_channel(rng, 5, 3, 8, 1), 6);
        const auto ti = ti_stm(c);
        CHECK(ti.time_invariant);
        CHECK(ti.thetas == tv_stm(c).thetas);
    }
    SECTION("rows are constant and follow the reference block")
    {
        auto c = oracle::random_channel(rng, 5, 3, 8, 4);
        const auto ti = ti_stm(c, 2);
        for (Eigen::Index u = 0; u < 4; ++u)
            CHECK(ti.thetas.row(u) == ti.thetas.row(0));
        CHECK((ti.thetas.row(0).transpose() - strongest_tap(c, 2, 2).theta).norm() == 0.0);
        CHECK_THROWS_AS(ti_stm(c, 4), Error);
    }
}

TEST_CASE("TI-STM holds the phase when only the direct link drifts", "[config]")
{
    PathSet p;
    p.ap_ris.push_back({100e-9, 1e-6, {0.3, 0.1}, true});
    p.ris_ue.push_back({50e-9, 1e-4, {-0.4, 0.0}, 0.0, true});
    p.direct.push_back({150e-9, 1e-16, 230.0});
    Scenario s;
    s.grid = {4, 4, 0.04, 0.04};
    s.n_subcarriers = 32;
    s.ue_speed = 20.0;
    s.n_blocks = 14;
    s.block_duration_s = 3e-4;
    const auto chan = synthesize(p, s);
    const auto ti = ti_stm(chan);
    const auto tv = tv_stm(chan);
    CHECK(std::abs(residual_doppler(chan, ti)) <= 0.01 * 230.0);
    CHECK_THAT(residual_doppler(chan, tv), WithinRel(230.0, 1e-3));
    CHECK((tv.thetas.row(0) - tv.thetas.row(13)).norm() > 0.1);
}

TEST_CASE("TV-STM rate dominates TI-STM on drifting frames", "[config]")
{
    Scenario s;
    s.grid = {5, 5, 0.04, 0.04};
    s.n_subcarriers = 64;
    s.ue_speed = 20.0;
    s.n_blocks = 8;
    const auto b = LinkBudget::of(s);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial)
    {
        std::mt19937_64 geo(100 + static_cast<std::uint64_t>(trial));
        const auto chan = synthesize(derive_geometry(s, geo), s);
        CHECK(waterfilled_rate(chan, tv_stm(chan), b) >= waterfilled_rate(chan, ti_stm(chan), b) * (1.0 - 1e-9));
    }
}

TEST_CASE("SCA surrogate is a tight minorant", "[config]")
{
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0.0, 3.0);
    for (int i = 0; i < 10000; ++i)
    {
        const double a = g(rng), b = g(rng), a0 = g(rng), b0 = g(rng);
        CHECK(sca_surrogate(a, b, a0, b0) <= a * a + b * b + 1e-12 * (1.0 + a * a + b * b));
        CHECK_THAT(sca_surrogate(a0, b0, a0, b0), WithinRel(a0 * a0 + b0 * b0, 1e-14));
    }
}

TEST_CASE("SCA inner solve", "[config]")
{
    const double nf = 1.0;
    SECTION("one reflector from an interior start reaches the unit circle")
    {
        const cdouble v = std::polar(0.8, 1.1);
        const auto c = one_tap(0.0, {v});
        const auto s = block_spectrum(c, 0);
        Eigen::VectorXcd w0(1);
        w0(0) = std::polar(0.3, -0.5);
        const ScaState st = sca_inner_solve(s, Eigen::VectorXd::Ones(1), nf, anchor_at(s, w0));
        CHECK_THAT(std::abs(st.omega(0)), WithinAbs(1.0, 1e-9));
        CHECK_THAT(std::abs(s.combined(st.omega)(0)), WithinRel(std::abs(v), 1e-9));
    }
    SECTION("the optimum is a fixed point")
    {
        const auto c = one_tap(std::polar(0.5, 0.2), {std::polar(0.8, 1.1), std::polar(0.3, -2.0)});
        const auto s = block_spectrum(c, 0);
        Eigen::VectorXcd w(2);
        w(0) = std::polar(1.0, 0.2 - 1.1);
        w(1) = std::polar(1.0, 0.2 + 2.0);
        const ScaState st = sca_inner_solve(s, Eigen::VectorXd::Ones(1), nf, anchor_at(s, w));
        CHECK((st.omega - w).norm() <= 1e-9);
    }
    SECTION("iterates stay in the unit disks and improve the surrogate")
    {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> r(0.0, 1.0);
        for (int trial = 0; trial < 50; ++trial)
        {
            auto c = oracle::random_channel(rng, 6, 3, 8, 1, 1.0);
            const auto s = block_spectrum(c, 0);
            Eigen::VectorXcd w(6);
            for (auto &x : w)
                x = std::polar(r(rng), 2.0 * kPi * r(rng));
            const Eigen::VectorXd p = Eigen::VectorXd::Constant(8, 0.125);
            const ScaState start = anchor_at(s, w);
            ScaOptions opt;
            opt.max_steps = 1;
            ScaState st = start;
            double previous = -std::numeric_limits<double>::infinity();
            for (int step = 0; step < 20; ++step)
            {
                st = sca_inner_solve(s, p, nf, st, opt);
                CHECK(st.omega.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
                CHECK(st.objective >= previous);
                previous = st.objective;
            }
        }
    }
    SECTION("shape contracts")
    {
        const auto c = one_tap(1.0, {1.0, 1.0});
        const auto s = block_spectrum(c, 0);
        ScaState wrong = anchor_at(s, Eigen::VectorXcd::Ones(2));
        wrong.omega = Eigen::VectorXcd::Ones(3);
        CHECK_THROWS_AS(sca_inner_solve(s, Eigen::VectorXd::Ones(1), nf, wrong), Error);
        CHECK_THROWS_AS(sca_inner_solve(s, Eigen::VectorXd::Ones(2), nf, anchor_at(s, Eigen::VectorXcd::Ones(2))), Error);
    }
}

TEST_CASE("AO rate history never decreases", "[config]")
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial)
    {
        auto c = oracle::random_channel(rng, 8, 4, 16, 2);
        const auto res = ao_optimize(c, budget());
        REQUIRE(res.rate_history.size() == 2);
        for (const auto &h : res.rate_history)
        {
            REQUIRE(h.size() >= 2);
            for (std::size_t i = 1; i < h.size(); ++i)
                CHECK(h[i] >= h[i - 1] * (1.0 - 1e-9));
        }
        res.alloc.validate(1.0);
        CHECK(res.config.thetas.cwiseAbs().maxCoeff() <= kPi);
    }
}

TEST_CASE("AO is at least as good as its STM start", "[config]")
{
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 30; ++trial)
    {
        auto c = oracle::random_channel(rng, 6, 4, 16, 1);
        const auto b = budget();
        const auto res = ao_optimize(c, b);
        const double ao = achievable_rate(c, res.config, res.alloc, b).rate_bit_s;
        CHECK(ao >= waterfilled_rate(c, tv_stm(c), b) * (1.0 - 1e-6));
        CHECK_THAT(ao, WithinRel(waterfilled_rate(c, res.config, b), 1e-9));
    }
}

TEST_CASE("AO closed form for one reflector and one subcarrier", "[config]")
{
    const cdouble v = std::polar(3e-6, 0.7);
    const auto c = one_tap(0.0, {v});
    const LinkBudget b{1e6, 4e-24, 1.0};
    const auto res = ao_optimize(c, b);
    const double expected = b.bandwidth_hz * std::log2(1.0 + b.power_budget * std::norm(v) / b.noise_floor());
    CHECK_THAT(achievable_rate(c, res.config, res.alloc, b).rate_bit_s, WithinRel(expected, 1e-9));
}

TEST_CASE("AO beats the best two-bit configuration on two reflectors", "[config]")
{
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 30; ++trial)
    {
        auto c = oracle::random_channel(rng, 2, 3, 8, 1);
        const auto b = budget();
        const auto oracle_best = harness::brute_force_config_oracle(c, 2, std::nullopt, b);
        CHECK(oracle_best.evaluated == 16);
        const auto res = ao_optimize(c, b);
        CHECK(achievable_rate(c, res.config, res.alloc, b).rate_bit_s >= oracle_best.rate_bit_s * (1.0 - harness::kOracleSlack));
    }
}

TEST_CASE("configuration CSV round trip", "[config]")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    RisConfiguration cfg;
    cfg.thetas.resize(3, 5);
    for (auto &x : cfg.thetas.reshaped())
        x = ph(rng);
    const std::string path = "test_config_roundtrip.csv";
    write_config_csv(cfg, path);
    const auto back = read_config_csv(path);
    CHECK(back.thetas == cfg.thetas);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_config_csv("does_not_exist.csv"), Error);
}
