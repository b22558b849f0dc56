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

// Neural configurator. The input layer sums the columns of Theta * W0 (so
// only the row sums of W0 reach the output), followed by L element-wise
// layers theta_l = ReLU(theta_{l-1} .* w_l) + b_l. Gradients are derived by
// hand; training minimises the negative achievable rate at uniform power.

#pragma once

#include "channel.hpp"
#include "configuration.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "text.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace risofdm::nn
{

struct NnParameters
{
    Eigen::MatrixXd w0;                  ///< K x N
    Eigen::VectorXd b0;                  ///< N
    std::vector<Eigen::VectorXd> w;      ///< L entries of N
    std::vector<Eigen::VectorXd> b;      ///< L entries of N

    std::size_t depth() const { return w.size(); }
    std::size_t n_subcarriers() const { return static_cast<std::size_t>(w0.rows()); }
    std::size_t n_reflectors() const { return static_cast<std::size_t>(w0.cols()); }

    void validate() const
    {
        const auto n = w0.cols();
        require(depth() >= 1 && b.size() == w.size(), ErrorKind::contract, "network needs L >= 1 hidden layers");
        require(b0.size() == n, ErrorKind::contract, "b0 has the wrong length");
        for (std::size_t l = 0; l < w.size(); ++l)
            require(w[l].size() == n && b[l].size() == n, ErrorKind::contract, "hidden layer has the wrong width");
        require(w0.allFinite() && b0.allFinite(), ErrorKind::numerical, "non-finite input-layer parameter");
        for (std::size_t l = 0; l < w.size(); ++l)
            require(w[l].allFinite() && b[l].allFinite(), ErrorKind::numerical, "non-finite hidden-layer parameter");
    }

    static NnParameters zeros_like(const NnParameters &p)
    {
        NnParameters z;
        z.w0 = Eigen::MatrixXd::Zero(p.w0.rows(), p.w0.cols());
        z.b0 = Eigen::VectorXd::Zero(p.b0.size());
        for (std::size_t l = 0; l < p.depth(); ++l)
        {
            z.w.push_back(Eigen::VectorXd::Zero(p.w[l].size()));
            z.b.push_back(Eigen::VectorXd::Zero(p.b[l].size()));
        }
        return z;
    }

    /// W0 ~ N(0, init_std^2) (default 1/sqrt(K)), biases 0, hidden weights 1.
    static NnParameters initial(std::size_t k, std::size_t n, std::size_t depth, std::mt19937_64 &rng, double init_std = -1.0)
    {
        require(k >= 1 && n >= 1 && depth >= 1, ErrorKind::invalid_argument, "invalid network shape");
        const double sd = init_std >= 0.0 ? init_std : 1.0 / std::sqrt(static_cast<double>(k));
        std::normal_distribution<double> g(0.0, sd);
        NnParameters p;
        p.w0.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < p.w0.size(); ++i)
            p.w0.data()[i] = sd > 0.0 ? g(rng) : 0.0;
        p.b0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        for (std::size_t l = 0; l < depth; ++l)
        {
            p.w.push_back(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)));
            p.b.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
        }
        return p;
    }

    /// Packs every parameter into one vector (W0 column-major, b0, then w_l, b_l).
    Eigen::VectorXd flatten() const
    {
        Eigen::Index size = w0.size() + b0.size();
        for (std::size_t l = 0; l < depth(); ++l)
            size += w[l].size() + b[l].size();
        Eigen::VectorXd out(size);
        Eigen::Index at = 0;
        auto put = [&](const auto &x) {
            out.segment(at, x.size()) = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
            at += x.size();
        };
        put(w0);
        put(b0);
        for (std::size_t l = 0; l < depth(); ++l)
        {
            put(w[l]);
            put(b[l]);
        }
        return out;
    }

    void unflatten(const Eigen::VectorXd &v)
    {
        Eigen::Index at = 0;
        auto get = [&](auto &x) {
            Eigen::Map<Eigen::VectorXd>(x.data(), x.size()) = v.segment(at, x.size());
            at += x.size();
        };
        get(w0);
        get(b0);
        for (std::size_t l = 0; l < depth(); ++l)
        {
            get(w[l]);
            get(b[l]);
        }
        require(at == v.size(), ErrorKind::contract, "flat parameter vector has the wrong length");
    }
};

/// Per-subcarrier phase misalignment between the direct response and each
/// reflector's composite response, N x K, wrapped to [-pi, pi).
struct FeatureMatrix
{
    Eigen::MatrixXd theta;
};

inline FeatureMatrix build_features(const BlockSpectrum &s)
{
    FeatureMatrix f;
    f.theta.resize(s.composite.rows(), s.composite.cols());
    for (Eigen::Index i = 0; i < s.composite.cols(); ++i)
    {
        const cdouble d = s.direct(i);
        for (Eigen::Index n = 0; n < s.composite.rows(); ++n)
        {
            const cdouble v = s.composite(n, i);
            f.theta(n, i) = (std::abs(d) > 0.0 && std::abs(v) > 0.0) ? wrap_phase(std::arg(d) - std::arg(v)) : 0.0;
        }
    }
    return f;
}

inline FeatureMatrix build_features(const ChannelRealization &chan, std::size_t block)
{
    return build_features(block_spectrum(chan, block));
}

inline Eigen::VectorXd relu(const Eigen::VectorXd &x) { return x.cwiseMax(0.0); }

struct ForwardCache
{
    std::vector<Eigen::VectorXd> pre;    ///< pre-activations z_0 .. z_L
    std::vector<Eigen::VectorXd> thetas; ///< layer outputs theta_0 .. theta_L
};

struct ForwardResult
{
    Eigen::VectorXd theta; ///< theta_L, unwrapped
    ForwardCache cache;
};

inline ForwardResult forward(const NnParameters &p, const FeatureMatrix &features)
{
    require(features.theta.cols() == p.w0.rows() && features.theta.rows() == p.w0.cols(), ErrorKind::contract,
            "feature matrix does not match the network shape");
    ForwardResult r;
    // sum of the columns of Theta * W0 == Theta * (W0 * 1)
    const Eigen::VectorXd w0_rows = p.w0.rowwise().sum();
    Eigen::VectorXd z = features.theta * w0_rows;
    Eigen::VectorXd t = relu(z) + p.b0;
    r.cache.pre.push_back(z);
    r.cache.thetas.push_back(t);
    for (std::size_t l = 0; l < p.depth(); ++l)
    {
        z = t.cwiseProduct(p.w[l]);
        t = relu(z) + p.b[l];
        r.cache.pre.push_back(z);
        r.cache.thetas.push_back(t);
    }
    r.theta = t;
    return r;
}

/// Everything the loss needs from one realisation, computed once.
struct NnSample
{
    std::vector<FeatureMatrix> features;
    std::vector<BlockSpectrum> spectra;
    double rate_scale = 0.0; ///< B / xi
};

inline NnSample prepare_sample(const ChannelRealization &chan, const LinkBudget &budget)
{
    chan.validate();
    NnSample s;
    s.rate_scale = budget.bandwidth_hz / cyclic_prefix_factor(chan.n_subcarriers, chan.n_taps);
    for (std::size_t u = 0; u < chan.n_blocks(); ++u)
    {
        s.spectra.push_back(block_spectrum(chan, u));
        s.features.push_back(build_features(s.spectra.back()));
    }
    return s;
}

struct LossGradient
{
    double loss = 0.0; ///< negative rate [bit/s]
    NnParameters grad;
};

namespace detail
{

inline Eigen::VectorXcd unit_weights(const Eigen::VectorXd &theta)
{
    Eigen::VectorXcd w(theta.size());
    for (Eigen::Index n = 0; n < theta.size(); ++n)
        w(n) = std::polar(1.0, theta(n));
    return w;
}

// Reverse pass from dL/dtheta_L down to every parameter; accumulates into g.
inline void backward(const NnParameters &p, const FeatureMatrix &features, const ForwardCache &cache, Eigen::VectorXd upstream,
                     NnParameters &g)
{
    for (std::size_t l = p.depth(); l-- > 0;)
    {
        g.b[l] += upstream;
        const Eigen::VectorXd dz = (cache.pre[l + 1].array() > 0.0).select(upstream, 0.0);
        g.w[l] += dz.cwiseProduct(cache.thetas[l]);
        upstream = dz.cwiseProduct(p.w[l]);
    }
    g.b0 += upstream;
    const Eigen::VectorXd dz0 = (cache.pre[0].array() > 0.0).select(upstream, 0.0);
    const Eigen::VectorXd d_rows = features.theta.transpose() * dz0; // dL / d(W0 * 1)
    g.w0.colwise() += d_rows;
}

} // namespace detail

/// Negative rate of the network's phases at uniform power, and its gradient.
inline LossGradient loss_and_gradients(const NnParameters &p, const NnSample &sample, const LinkBudget &budget)
{
    LossGradient out;
    out.grad = NnParameters::zeros_like(p);
    double rate = 0.0;
    for (std::size_t u = 0; u < sample.spectra.size(); ++u)
    {
        const BlockSpectrum &s = sample.spectra[u];
        const auto k = s.direct.size();
        const double c = budget.power_budget / static_cast<double>(k) / budget.noise_floor();
        const ForwardResult fw = forward(p, sample.features[u]);
        const Eigen::VectorXcd omega = detail::unit_weights(fw.theta);
        const Eigen::VectorXcd h = s.combined(omega);

        Eigen::VectorXcd q(k);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < k; ++i)
        {
            const double g = std::norm(h(i));
            acc += std::log2(1.0 + c * g);
            q(i) = c / ((1.0 + c * g) * std::log(2.0)) * std::conj(h(i));
        }
        rate += sample.rate_scale * acc;

        // dR/dtheta_n = -2 scale Im((G q)_n omega_n); the loss is -R.
        const Eigen::VectorXcd t = s.composite * q;
        Eigen::VectorXd d_theta(omega.size());
        for (Eigen::Index n = 0; n < omega.size(); ++n)
            d_theta(n) = 2.0 * sample.rate_scale * (t(n) * omega(n)).imag();
        detail::backward(p, sample.features[u], fw.cache, d_theta, out.grad);
    }
    out.loss = -rate;
    require(std::isfinite(out.loss), ErrorKind::numerical, "non-finite training loss");
    return out;
}

inline LossGradient loss_and_gradients(const NnParameters &p, const ChannelRealization &chan, const LinkBudget &budget)
{
    return loss_and_gradients(p, prepare_sample(chan, budget), budget);
}

/// Achievable rate at uniform power of the network's (wrapped) phases.
inline double sample_rate(const NnParameters &p, const NnSample &sample, const LinkBudget &budget)
{
    double rate = 0.0;
    for (std::size_t u = 0; u < sample.spectra.size(); ++u)
    {
        const BlockSpectrum &s = sample.spectra[u];
        const auto k = s.direct.size();
        const Eigen::VectorXd theta = forward(p, sample.features[u]).theta.unaryExpr([](double x) { return wrap_phase(x); });
        const Eigen::VectorXd gains = s.combined(detail::unit_weights(theta)).cwiseAbs2();
        rate += sample.rate_scale *
                block_log_sum(gains, Eigen::VectorXd::Constant(k, budget.power_budget / static_cast<double>(k)), budget.noise_floor());
    }
    return rate;
}

// ---------------------------------------------------------------- training

struct TrainingSettings
{
    std::size_t depth = 2;
    double learning_rate = 0.1;
    std::size_t batch_size = 16;
    std::size_t epochs = 200;
    double validation_fraction = 0.2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double init_std = -1.0; ///< negative: 1/sqrt(K)
    std::uint64_t training_seed = 7;
};

struct TrainingResult
{
    NnParameters params;
    std::vector<double> loss_curve; ///< mean training loss per epoch
    double initial_validation_rate = 0.0;
    double best_validation_rate = 0.0;
    std::size_t best_epoch = 0; ///< 0 means the initial parameters won
};

/// Mini-batch Adam on the negative rate. Keeps the parameters with the best
/// mean validation rate (the initial parameters included).
inline TrainingResult train(const std::vector<NnSample> &dataset, std::size_t n_subcarriers, std::size_t n_reflectors,
                            const LinkBudget &budget, const TrainingSettings &cfg)
{
    require(!dataset.empty(), ErrorKind::invalid_argument, "training needs at least one realisation");
    require(cfg.batch_size >= 1, ErrorKind::invalid_argument, "batch size must be positive");
    std::mt19937_64 rng(cfg.training_seed);

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(dataset.size())));
    if (n_val >= dataset.size())
        n_val = 0;
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> tr(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    if (val.empty())
        val = tr;

    auto validation_rate = [&](const NnParameters &p) {
        double acc = 0.0;
        for (auto i : val)
            acc += sample_rate(p, dataset[i], budget);
        return acc / static_cast<double>(val.size());
    };

    TrainingResult result;
    NnParameters params = NnParameters::initial(n_subcarriers, n_reflectors, cfg.depth, rng, cfg.init_std);
    result.params = params;
    result.initial_validation_rate = validation_rate(params);
    result.best_validation_rate = result.initial_validation_rate;

    Eigen::VectorXd x = params.flatten();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(x.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(x.size());
    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch)
    {
        std::shuffle(tr.begin(), tr.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < tr.size(); start += cfg.batch_size)
        {
            const std::size_t stop = std::min(tr.size(), start + cfg.batch_size);
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size());
            for (std::size_t j = start; j < stop; ++j)
            {
                const LossGradient lg = loss_and_gradients(params, dataset[tr[j]], budget);
                grad += lg.grad.flatten();
                epoch_loss += lg.loss;
            }
            grad /= static_cast<double>(stop - start);
            ++step;
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            x.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
            params.unflatten(x);
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(tr.size()));
        require(std::isfinite(result.loss_curve.back()), ErrorKind::numerical, "training loss diverged");
        const double vr = validation_rate(params);
        if (vr > result.best_validation_rate)
        {
            result.best_validation_rate = vr;
            result.best_epoch = epoch;
            result.params = params;
        }
    }
    return result;
}

inline TrainingResult train(const std::vector<ChannelRealization> &dataset, const LinkBudget &budget, const TrainingSettings &cfg)
{
    require(!dataset.empty(), ErrorKind::invalid_argument, "training needs at least one realisation");
    std::vector<NnSample> samples;
    samples.reserve(dataset.size());
    for (const auto &c : dataset)
        samples.push_back(prepare_sample(c, budget));
    return train(samples, dataset.front().n_subcarriers, dataset.front().n_reflectors(), budget, cfg);
}

// --------------------------------------------------------------- inference

/// Phases per block from the block's own features, wrapped to [-pi, pi).
/// With `time_invariant` the first block is used and replicated.
inline RisConfiguration infer_config(const NnParameters &p, const ChannelRealization &chan, bool time_invariant = false)
{
    chan.validate();
    const std::size_t blocks = time_invariant ? 1 : chan.n_blocks();
    RisConfiguration c;
    c.thetas.resize(static_cast<Eigen::Index>(chan.n_blocks()), static_cast<Eigen::Index>(chan.n_reflectors()));
    for (std::size_t u = 0; u < blocks; ++u)
    {
        const Eigen::VectorXd theta = forward(p, build_features(chan, u)).theta;
        c.thetas.row(static_cast<Eigen::Index>(u)) = theta.unaryExpr([](double x) { return wrap_phase(x); }).transpose();
    }
    if (time_invariant)
        for (Eigen::Index u = 1; u < c.thetas.rows(); ++u)
            c.thetas.row(u) = c.thetas.row(0);
    c.time_invariant = time_invariant || chan.n_blocks() == 1;
    return c;
}

// ------------------------------------------------------------- persistence

// Text layout, comma separated:
//   nnconf,K,N,L
//   K lines of W0 (N values each)
//   one line b0
//   for l = 1..L: one line w_l, one line b_l
inline void save_parameters(const NnParameters &p, const std::string &path)
{
    p.validate();
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::io, "cannot open '" + path + "' for writing");
    auto row = [&](const auto &x) {
        for (Eigen::Index j = 0; j < x.size(); ++j)
            out << (j ? "," : "") << text::format_double(x(j));
        out << '\n';
    };
    out << "nnconf," << p.n_subcarriers() << ',' << p.n_reflectors() << ',' << p.depth() << '\n';
    for (Eigen::Index i = 0; i < p.w0.rows(); ++i)
        row(p.w0.row(i));
    row(p.b0);
    for (std::size_t l = 0; l < p.depth(); ++l)
    {
        row(p.w[l]);
        row(p.b[l]);
    }
    require(static_cast<bool>(out), ErrorKind::io, "write to '" + path + "' failed");
}

inline NnParameters load_parameters(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path + "'");
    std::string line;
    auto next_values = [&](std::size_t expected) {
        require(static_cast<bool>(std::getline(in, line)), ErrorKind::parse, "truncated parameter file '" + path + "'");
        const auto f = text::split(text::trim(line), ',');
        require(f.size() == expected, ErrorKind::parse, "parameter row has the wrong length in '" + path + "'");
        Eigen::VectorXd v(static_cast<Eigen::Index>(expected));
        for (std::size_t j = 0; j < expected; ++j)
            v(static_cast<Eigen::Index>(j)) = text::parse_double(f[j]);
        return v;
    };
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::parse, "empty parameter file '" + path + "'");
    const auto head = text::split(text::trim(line), ',');
    require(head.size() == 4 && head[0] == "nnconf", ErrorKind::parse, "'" + path + "' is not an nnconf parameter file");
    const auto k = static_cast<std::size_t>(text::parse_int(head[1]));
    const auto n = static_cast<std::size_t>(text::parse_int(head[2]));
    const auto l_count = static_cast<std::size_t>(text::parse_int(head[3]));
    NnParameters p;
    p.w0.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < k; ++i)
        p.w0.row(static_cast<Eigen::Index>(i)) = next_values(n).transpose();
    p.b0 = next_values(n);
    for (std::size_t l = 0; l < l_count; ++l)
    {
        p.w.push_back(next_values(n));
        p.b.push_back(next_values(n));
    }
    p.validate();
    return p;
}

} // namespace risofdm::nn
