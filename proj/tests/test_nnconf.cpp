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
using namespace risofdm::nn;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{

// Parameters with random signs everywhere so every ReLU path is exercised.
NnParameters random_parameters(std::size_t k, std::size_t n, std::size_t depth, std::mt19937_64 &rng)
{
    NnParameters p = NnParameters::initial(k, n, depth, rng);
    std::normal_distribution<double> g(0.0, 0.5);
    for (auto &x : p.b0)
        x = g(rng);
    for (std::size_t l = 0; l < depth; ++l)
    {
        for (auto &x : p.w[l])
            x = 1.0 + g(rng) * 2.0;
        for (auto &x : p.b[l])
            x = g(rng);
    }
    return p;
}

// Moderate-SNR budget for the tap scale used by oracle::random_channel.
LinkBudget unit_budget() { return {1e6, 1e-16, 1.0}; }

Scenario small_scene(std::size_t side, std::size_t k)
{
    Scenario s;
    s.grid = {side, side, 0.04, 0.04};
    s.n_subcarriers = k;
    return s;
}

} // namespace

TEST_CASE("relu", "[nnconf]")
{
    Eigen::VectorXd x(3);
    x << -1.0, 2.0, 0.0;
    const Eigen::VectorXd y = relu(x);
    CHECK(y(0) == 0.0);
    CHECK(y(1) == 2.0);
    CHECK(y(2) == 0.0);
}

TEST_CASE("parameter shapes and initial values", "[nnconf]")
{
    std::mt19937_64 rng(1);
    const auto p = NnParameters::initial(16, 5, 3, rng);
    CHECK(p.w0.rows() == 16);
    CHECK(p.w0.cols() == 5);
    CHECK(p.depth() == 3);
    CHECK(p.b0.isZero());
    for (std::size_t l = 0; l < 3; ++l)
    {
        CHECK(p.w[l].isOnes());
        CHECK(p.b[l].isZero());
    }
    CHECK_NOTHROW(p.validate());
    const double sd = std::sqrt(p.w0.array().square().mean());
    CHECK(sd > 0.1);
    CHECK(sd < 0.4);
    CHECK_THROWS_AS(NnParameters::initial(0, 5, 1, rng), Error);
    CHECK_THROWS_AS(NnParameters::initial(4, 5, 0, rng), Error);

    NnParameters bad = p;
    bad.b0(0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(bad.validate(), Error);

    NnParameters q = NnParameters::zeros_like(p);
    q.unflatten(p.flatten());
    CHECK(q.flatten() == p.flatten());
    CHECK_THROWS_AS(q.unflatten(Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("feature construction", "[nnconf]")
{
    SECTION("identical phases give zero features")
    {
        std::mt19937_64 rng(2);
        auto c = oracle::random_channel(rng, 3, 2, 8, 1);
        for (Eigen::Index n = 0; n < 3; ++n)
            c.composite[0].row(n) = 0.5 * (n + 1) * c.direct.row(0);
        const auto f = build_features(c, 0);
        CHECK(f.theta.cwiseAbs().maxCoeff() <= 1e-12);
    }
    SECTION("single reflector and subcarrier")
    {
        ChannelRealization c;
        c.n_taps = 1;
        c.n_subcarriers = 1;
        c.direct = Eigen::MatrixXcd::Constant(1, 1, std::polar(2.0, 0.3));
        c.composite.push_back(Eigen::MatrixXcd::Constant(1, 1, std::polar(1.0, -0.4)));
        const auto f = build_features(c, 0);
        CHECK_THAT(f.theta(0, 0), WithinAbs(0.7, 1e-14));
        CHECK_THAT(f.theta(0, 0), WithinAbs(stm_candidate(c, 0, 0)(0), 1e-14));
    }
    SECTION("matches a naive DFT")
    {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 20; ++trial)
        {
            auto c = oracle::random_channel(rng, 2, 3, 4, 1);
            const auto f = build_features(c, 0);
            REQUIRE(f.theta.rows() == 2);
            REQUIRE(f.theta.cols() == 4);
            for (std::size_t i = 0; i < 4; ++i)
            {
                const auto d = oracle::dft(c.direct.row(0).transpose(), i, 4);
                for (Eigen::Index n = 0; n < 2; ++n)
                {
                    const auto v = oracle::dft(c.composite[0].row(n).transpose(), i, 4);
                    const double expected = std::arg(d) - std::arg(v);
                    const double got = f.theta(n, static_cast<Eigen::Index>(i));
                    CHECK(got >= -kPi);
                    CHECK(got < kPi);
                    CHECK_THAT(std::remainder(got - expected, 2.0 * kPi), WithinAbs(0.0, 1e-12));
                }
            }
        }
    }
    SECTION("zero responses give zero features")
    {
        std::mt19937_64 rng(4);
        auto c = oracle::random_channel(rng, 2, 2, 4, 1);
        c.direct.setZero();
        CHECK(build_features(c, 0).theta.isZero());
    }
}

TEST_CASE("forward pass", "[nnconf]")
{
    std::mt19937_64 rng(5);
    SECTION("dead network returns the last bias")
    {
        NnParameters p = random_parameters(8, 4, 2, rng);
        p.w0.setZero();
        for (auto &w : p.w)
            w.setZero();
        FeatureMatrix f{Eigen::MatrixXd::Random(4, 8)};
        CHECK(forward(p, f).theta == p.b.back());
    }
    SECTION("identity regime")
    {
        NnParameters p = NnParameters::initial(8, 4, 1, rng);
        p.w0 = p.w0.cwiseAbs();
        FeatureMatrix f{Eigen::MatrixXd::Random(4, 8).cwiseAbs()};
        const auto r = forward(p, f);
        CHECK((r.cache.thetas[0].array() >= 0.0).all());
        CHECK(r.theta == r.cache.thetas[0]);
    }
    SECTION("matches the full-product oracle")
    {
        for (int trial = 0; trial < 50; ++trial)
        {
            const std::size_t k = 1 + trial % 9, n = 1 + trial % 5, depth = 1 + trial % 3;
            NnParameters p = random_parameters(k, n, depth, rng);
            FeatureMatrix f{kPi * Eigen::MatrixXd::Random(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k))};
            const Eigen::VectorXd expected = oracle::nn_forward(p, f.theta);
            const Eigen::VectorXd got = forward(p, f).theta;
            for (Eigen::Index i = 0; i < got.size(); ++i)
                CHECK_THAT(got(i), WithinAbs(expected(i), 1e-12 * (1.0 + std::abs(expected(i)))));
        }
    }
    SECTION("shape contract")
    {
        NnParameters p = NnParameters::initial(8, 4, 1, rng);
        CHECK_THROWS_AS(forward(p, FeatureMatrix{Eigen::MatrixXd::Zero(4, 7)}), Error);
    }
}

TEST_CASE("gradients match central differences", "[nnconf]")
{
    std::mt19937_64 rng(6);
    const LinkBudget b = unit_budget();
    for (int trial = 0; trial < 5; ++trial)
    {
        auto c = oracle::random_channel(rng, 4, 3, 8, 1 + static_cast<std::size_t>(trial % 2));
        const NnParameters p = random_parameters(8, 4, 2, rng);
        const NnSample sample = prepare_sample(c, b);
        const LossGradient lg = loss_and_gradients(p, sample, b);
        auto f = [&](const Eigen::VectorXd &x) {
            NnParameters q = p;
            q.unflatten(x);
            return loss_and_gradients(q, sample, b).loss;
        };
        const Eigen::VectorXd fd = oracle::central_difference(f, p.flatten(), 1e-5);
        const Eigen::VectorXd g = lg.grad.flatten();
        const double floor = 1e-6 * g.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < g.size(); ++i)
            CHECK(std::abs(g(i) - fd(i)) <= 1e-4 * std::max(std::abs(fd(i)), floor));
    }
}

TEST_CASE("loss and gradient properties", "[nnconf]")
{
    std::mt19937_64 rng(7);
    auto c = oracle::random_channel(rng, 4, 3, 8, 1);
    const LinkBudget b = unit_budget();
    SECTION("loss is the negative uniform-power rate")
    {
        const NnParameters p = random_parameters(8, 4, 2, rng);
        const auto lg = loss_and_gradients(p, c, b);
        const Eigen::VectorXd theta = forward(p, build_features(c, 0)).theta;
        const double r = oracle::rate(c, theta.transpose(), Eigen::MatrixXd::Constant(1, 8, 1.0 / 8.0), b.bandwidth_hz, b.noise_density);
        CHECK_THAT(-lg.loss, WithinRel(r, 1e-10));
        CHECK_THAT(sample_rate(p, prepare_sample(c, b), b), WithinRel(r, 1e-10));
    }
    SECTION("dead network has zero hidden-weight gradients")
    {
        NnParameters p = random_parameters(8, 4, 2, rng);
        p.w0.setZero();
        for (auto &x : p.b0)
            x = -std::abs(x) - 0.1;
        for (auto &x : p.b[0])
            x = -std::abs(x) - 0.1;
        for (auto &x : p.w[0])
            x = std::abs(x) + 0.1;
        for (auto &x : p.w[1])
            x = std::abs(x) + 0.1;
        const auto lg = loss_and_gradients(p, c, b);
        for (const auto &w : lg.grad.w)
            CHECK(w.isZero());
        CHECK(lg.grad.w0.isZero());
    }
    SECTION("lower noise gives a larger rate")
    {
        const NnParameters p = random_parameters(8, 4, 2, rng);
        double previous = 0.0;
        for (double n0 : {1e-15, 1e-16, 1e-17, 1e-18})
        {
            const double magnitude = std::abs(loss_and_gradients(p, c, {b.bandwidth_hz, n0, 1.0}).loss);
            CHECK(magnitude > previous);
            previous = magnitude;
        }
    }
}

TEST_CASE("training on one realisation does not lose rate", "[nnconf]")
{
    std::mt19937_64 rng(8);
    const LinkBudget b = unit_budget();
    auto c = oracle::random_channel(rng, 6, 3, 16, 1);
    TrainingSettings cfg;
    cfg.epochs = 50;
    const TrainingResult r = train(std::vector<ChannelRealization>{c}, b, cfg);
    CHECK(r.best_validation_rate >= r.initial_validation_rate);
    CHECK(sample_rate(r.params, prepare_sample(c, b), b) >= r.initial_validation_rate);
    REQUIRE(r.loss_curve.size() == 50);
    for (double x : r.loss_curve)
        CHECK(std::isfinite(x));
    CHECK_THROWS_AS(train(std::vector<ChannelRealization>{}, b, cfg), Error);
}

TEST_CASE("training is deterministic", "[nnconf]")
{
    std::mt19937_64 rng(9);
    const LinkBudget b = unit_budget();
    std::vector<ChannelRealization> data;
    for (int i = 0; i < 10; ++i)
        data.push_back(oracle::random_channel(rng, 4, 2, 8, 1));
    TrainingSettings cfg;
    cfg.epochs = 10;
    cfg.batch_size = 3;
    const auto a = train(data, b, cfg);
    const auto c = train(data, b, cfg);
    CHECK(a.params.flatten() == c.params.flatten());
    CHECK(a.loss_curve == c.loss_curve);
}

TEST_CASE("trained configurator approaches TV-STM", "[nnconf]")
{
    Scenario s = small_scene(4, 64);
    const LinkBudget b = LinkBudget::of(s);
    std::vector<ChannelRealization> train_set, test_set;
    for (std::uint64_t i = 0; i < 200; ++i)
    {
        s.rng_seed = 1000 + i;
        train_set.push_back(synthesize_stationary(derive_geometry(s), s));
    }
    for (std::uint64_t i = 0; i < 50; ++i)
    {
        s.rng_seed = 5000 + i;
        test_set.push_back(synthesize_stationary(derive_geometry(s), s));
    }
    TrainingSettings cfg;
    cfg.epochs = 100;
    const auto r = train(train_set, b, cfg);
    double nn_sum = 0.0, stm_sum = 0.0;
    for (const auto &c : test_set)
    {
        const auto nn_cfg = infer_config(r.params, c);
        const auto stm_cfg = tv_stm(c);
        nn_sum += achievable_rate(c, nn_cfg, waterfill_for(c, nn_cfg, b), b).rate_bit_s;
        stm_sum += achievable_rate(c, stm_cfg, waterfill_for(c, stm_cfg, b), b).rate_bit_s;
    }
    CHECK(nn_sum >= 0.9 * stm_sum);
}

TEST_CASE("inference", "[nnconf]")
{
    std::mt19937_64 rng(10);
    const NnParameters p = random_parameters(8, 4, 2, rng);
    auto c = oracle::random_channel(rng, 4, 3, 8, 3);
    SECTION("deterministic and wrapped")
    {
        const auto a = infer_config(p, c);
        CHECK(a.thetas == infer_config(p, c).thetas);
        CHECK((a.thetas.array() >= -kPi).all());
        CHECK((a.thetas.array() < kPi).all());
        CHECK_FALSE(a.time_invariant);
    }
    SECTION("time-invariant use replicates the first block")
    {
        const auto ti = infer_config(p, c, true);
        const auto tv = infer_config(p, c);
        CHECK(ti.time_invariant);
        for (Eigen::Index u = 0; u < 3; ++u)
            CHECK(ti.thetas.row(u) == tv.thetas.row(0));
    }
}

TEST_CASE("NN keeps its configuration across correlated draws", "[nnconf]")
{
    harness::ExperimentSpec spec;
    spec.kind = harness::ExperimentKind::efficiency_table;
    spec.scenario = small_scene(5, 64);
    spec.training_realizations = 100;
    spec.training.epochs = 60;
    spec.sequence_length = 6;
    const std::size_t n = 25;
    const NnParameters p = harness::train_configurator(spec, spec.scenario, n);
    double nn_eff = 0.0, stm_eff = 0.0;
    for (std::size_t trial = 0; trial < 5; ++trial)
    {
        const auto seq = harness::correlated_sequence(spec, n, trial);
        Eigen::MatrixXd nn_rows(static_cast<Eigen::Index>(seq.size()), static_cast<Eigen::Index>(n));
        Eigen::MatrixXd stm_rows = nn_rows;
        for (std::size_t t = 0; t < seq.size(); ++t)
        {
            nn_rows.row(static_cast<Eigen::Index>(t)) = quantize(infer_config(p, seq[t]).thetas.row(0), 4);
            stm_rows.row(static_cast<Eigen::Index>(t)) = quantize(tv_stm(seq[t]).thetas.row(0), 4);
        }
        nn_eff += efficiency_rate(nn_rows);
        stm_eff += efficiency_rate(stm_rows);
    }
    CHECK(nn_eff > stm_eff);
}

TEST_CASE("parameter file round trip", "[nnconf]")
{
    std::mt19937_64 rng(11);
    const NnParameters p = random_parameters(6, 3, 2, rng);
    const std::string path = "test_nnconf_params.csv";
    save_parameters(p, path);
    const NnParameters q = load_parameters(path);
    CHECK(q.flatten() == p.flatten());
    CHECK(q.depth() == 2);
    {
        std::ofstream out(path);
        out << "nnconf,6,3,2\n1,2,3\n";
    }
    CHECK_THROWS_AS(load_parameters(path), Error);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_parameters("does_not_exist.csv"), Error);
}
