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

// Command-line front end.
//
//   risofdm simulate  --config scenario.cfg [--method stm] [--out report.csv]
//   risofdm sweep     --config experiment.cfg [--out results.csv]
//   risofdm oracle    --config experiment.cfg [--out results.csv]
//   risofdm train-nn  --config experiment.cfg --out params.csv
//
// Failures print one line "error kind=<kind> message=<text>" on stderr and
// exit with status 2.

#include "risofdm.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace
{

using namespace risofdm;

struct CommonOptions
{
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> methods;
    std::vector<std::string> overrides;
    bool timing = false;
};

void add_common(CLI::App *cmd, CommonOptions &o, bool out_required = false)
{
    cmd->add_option("--config", o.config_path, "key/value configuration file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "experiment seed (overrides the config)");
    auto *out = cmd->add_option("--out", o.out, "output CSV path");
    if (out_required)
        out->required();
    cmd->add_option("--method", o.methods, "restrict to these methods (repeatable)");
    cmd->add_option("--set", o.overrides, "override a config key, key=value (repeatable)");
    cmd->add_flag("--timing", o.timing, "record wall-clock time per row");
}

KeyValueConfig load_config(const CommonOptions &o)
{
    KeyValueConfig cfg = KeyValueConfig::load(o.config_path);
    for (const auto &kv : o.overrides)
    {
        const auto eq = kv.find('=');
        require(eq != std::string::npos, ErrorKind::parse, "--set expects key=value, got '" + kv + "'");
        cfg.set(std::string(text::trim(kv.substr(0, eq))), std::string(text::trim(kv.substr(eq + 1))));
    }
    return cfg;
}

void reject_unused(const KeyValueConfig &cfg)
{
    const auto unused = cfg.unused_keys();
    if (unused.empty())
        return;
    std::string list;
    for (const auto &k : unused)
        list += (list.empty() ? "" : ", ") + k;
    throw Error(ErrorKind::parse, "unknown config keys: " + list);
}

harness::ExperimentSpec experiment_from(const CommonOptions &o)
{
    KeyValueConfig cfg = load_config(o);
    if (o.seed)
        cfg.set("seed", std::to_string(*o.seed));
    harness::ExperimentSpec spec = harness::load_experiment(cfg);
    reject_unused(cfg);
    if (!o.methods.empty())
        spec.methods = o.methods;
    if (!o.out.empty())
        spec.output_path = o.out;
    spec.timing = spec.timing || o.timing;
    return spec;
}

void write_rows(const harness::ExperimentSpec &spec, const std::vector<harness::ResultRow> &rows)
{
    if (spec.output_path.empty())
    {
        std::cout << harness::kResultHeader << '\n';
        for (const auto &r : rows)
            std::cout << harness::format_row(r) << '\n';
        return;
    }
    harness::emit_results(rows, spec.output_path, spec.kind == harness::ExperimentKind::rate_vs_bandwidth);
}

int run_simulate(const CommonOptions &o, const std::string &nn_path, int bits)
{
    KeyValueConfig cfg = load_config(o);
    if (o.seed)
        cfg.set("rng_seed", std::to_string(*o.seed));
    Scenario s;
    apply(cfg, s);
    reject_unused(cfg);
    s.validate();

    const ChannelRealization chan = synthesize(derive_geometry(s), s);
    const LinkBudget budget = LinkBudget::of(s);
    const std::string method = o.methods.empty() ? "stm" : o.methods.front();
    RisConfiguration config;
    std::optional<PowerAllocation> alloc;
    if (method == "stm" || method == "tv_stm")
        config = tv_stm(chan);
    else if (method == "ti_stm")
        config = ti_stm(chan);
    else if (method == "ao")
    {
        AoResult ao = ao_optimize(chan, budget);
        config = ao.config;
        alloc = ao.alloc;
    }
    else if (method == "nn")
    {
        require(!nn_path.empty(), ErrorKind::invalid_argument, "method nn needs --nn-params");
        config = nn::infer_config(nn::load_parameters(nn_path), chan);
    }
    else
        throw Error(ErrorKind::invalid_argument, "unknown method '" + method + "'");
    if (bits > 0)
    {
        config = quantize(config, bits);
        alloc.reset();
    }
    if (!alloc)
        alloc = waterfill_for(chan, config, budget);
    const RateReport report = achievable_rate(chan, config, *alloc, budget);

    double efficiency = std::numeric_limits<double>::quiet_NaN();
    double residual = std::numeric_limits<double>::quiet_NaN();
    if (chan.n_blocks() >= 2)
    {
        efficiency = efficiency_rate(bits > 0 ? config.thetas : quantize(config.thetas, 4));
        residual = residual_doppler(chan, config);
    }
    const std::string row = rate_report_row(report, bits, efficiency, residual);
    if (o.out.empty())
        std::cout << kRateReportHeader << '\n' << row << '\n';
    else
    {
        std::ofstream out(o.out, std::ios::binary);
        require(static_cast<bool>(out), ErrorKind::io, "cannot open '" + o.out + "' for writing");
        out << kRateReportHeader << '\n' << row << '\n';
        write_config_csv(config, o.out + ".config.csv");
    }
    return 0;
}

int run_train(const CommonOptions &o)
{
    const harness::ExperimentSpec spec = experiment_from(o);
    const std::size_t n = spec.scenario.grid.size();
    std::vector<nn::NnSample> data;
    const LinkBudget budget = LinkBudget::of(spec.scenario);
    Scenario s = spec.scenario;
    s.ue_speed = 0.0;
    s.n_blocks = 1;
    for (std::size_t i = 0; i < spec.training_realizations; ++i)
    {
        s.rng_seed = harness::derive_seed(spec.seed, harness::Stream::training, n, i);
        data.push_back(nn::prepare_sample(synthesize_stationary(derive_geometry(s), s), budget));
    }
    const nn::TrainingResult result = nn::train(data, s.n_subcarriers, n, budget, spec.training);
    nn::save_parameters(result.params, spec.output_path);
    std::ofstream curve(spec.output_path + ".loss.csv", std::ios::binary);
    require(static_cast<bool>(curve), ErrorKind::io, "cannot write the loss curve next to '" + spec.output_path + "'");
    curve << "epoch,mean_loss\n";
    for (std::size_t e = 0; e < result.loss_curve.size(); ++e)
        curve << e + 1 << ',' << text::format_double(result.loss_curve[e]) << '\n';
    std::cout << "initial_validation_rate_bps=" << text::format_double(result.initial_validation_rate)
              << " best_validation_rate_bps=" << text::format_double(result.best_validation_rate) << " best_epoch=" << result.best_epoch
              << '\n';
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"risofdm: link-level simulation of RIS-aided OFDM links"};
    app.require_subcommand(1);

    CommonOptions sim_opt, sweep_opt, oracle_opt, train_opt;
    std::string nn_path;
    int bits = 0;
    auto *sim = app.add_subcommand("simulate", "one realisation of a scenario, one configuration method");
    add_common(sim, sim_opt);
    sim->add_option("--nn-params", nn_path, "parameter file for --method nn");
    sim->add_option("--bits", bits, "quantise the configuration to this many bits (0: continuous)")->check(CLI::Range(0, 16));
    auto *sweep = app.add_subcommand("sweep", "run the experiment named in the config");
    add_common(sweep, sweep_opt);
    auto *oracle = app.add_subcommand("oracle", "brute-force sandwich checks on tiny instances");
    add_common(oracle, oracle_opt);
    auto *train = app.add_subcommand("train-nn", "train the neural configurator and save its parameters");
    add_common(train, train_opt, true);

    CLI11_PARSE(app, argc, argv);
    try
    {
        if (*sim)
            return run_simulate(sim_opt, nn_path, bits);
        if (*sweep)
        {
            const auto spec = experiment_from(sweep_opt);
            write_rows(spec, harness::run_experiment(spec));
            return 0;
        }
        if (*oracle)
        {
            auto spec = experiment_from(oracle_opt);
            spec.kind = harness::ExperimentKind::oracle_suite;
            write_rows(spec, harness::run_experiment(spec));
            return 0;
        }
        if (*train)
            return run_train(train_opt);
    }
    catch (const Error &e)
    {
        std::cerr << "error kind=" << to_string(e.kind()) << " message=" << e.what() << '\n';
        return 2;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error kind=internal message=" << e.what() << '\n';
        return 2;
    }
    return 0;
}
