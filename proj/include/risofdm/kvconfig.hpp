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

// Flat key/value configuration files.
//
//   # comment
//   carrier_hz = 3.5e9
//   ue_pos = 15, 0, 1.5
//
// One key per line, keys are the field names of the structure being filled,
// values are SI units. Vectors and sweep lists are comma separated. A key
// given twice is an error; keys no loader consumed can be listed so the CLI
// can reject typos.

#pragma once

#include "error.hpp"
#include "nnconf.hpp"
#include "scene.hpp"
#include "text.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

namespace risofdm
{

class KeyValueConfig
{
    static_assert(std::is_same_v<std::uint64_t, std::size_t>, "seeds are read through the size_t overload");

public:
    static KeyValueConfig parse(const std::string &content, const std::string &origin = "<string>")
    {
        KeyValueConfig cfg;
        std::istringstream in(content);
        std::string line;
        std::size_t number = 0;
        while (std::getline(in, line))
        {
            ++number;
            const auto hash = line.find('#');
            const std::string_view body = text::trim(std::string_view(line).substr(0, hash));
            if (body.empty())
                continue;
            const auto eq = body.find('=');
            const std::string where = origin + ":" + std::to_string(number);
            require(eq != std::string_view::npos, ErrorKind::parse, where + ": expected 'key = value'");
            const std::string key(text::trim(body.substr(0, eq)));
            const std::string value(text::trim(body.substr(eq + 1)));
            require(!key.empty(), ErrorKind::parse, where + ": empty key");
            require(cfg.values_.emplace(key, value).second, ErrorKind::parse, where + ": duplicate key '" + key + "'");
        }
        return cfg;
    }

    static KeyValueConfig load(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        require(static_cast<bool>(in), ErrorKind::io, "cannot open config file '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    bool has(const std::string &key) const { return values_.count(key) != 0; }

    /// Overrides (or adds) a key, e.g. from a command-line flag.
    void set(const std::string &key, const std::string &value) { values_[key] = value; }

    template <class T> void read(const std::string &key, T &target) const
    {
        const auto it = values_.find(key);
        if (it == values_.end())
            return;
        used_.insert(key);
        try
        {
            assign(it->second, target);
        }
        catch (const Error &e)
        {
            throw Error(ErrorKind::parse, "key '" + key + "': " + e.what());
        }
    }

    std::vector<std::string> unused_keys() const
    {
        std::vector<std::string> out;
        for (const auto &kv : values_)
            if (!used_.count(kv.first))
                out.push_back(kv.first);
        return out;
    }

private:
    static void assign(const std::string &v, double &t) { t = text::parse_double(v); }
    static void assign(const std::string &v, std::string &t) { t = v; }
    static void assign(const std::string &v, bool &t)
    {
        if (v == "true" || v == "1")
            t = true;
        else if (v == "false" || v == "0")
            t = false;
        else
            throw Error(ErrorKind::parse, "not a boolean: '" + v + "'");
    }
    static void assign(const std::string &v, int &t) { t = static_cast<int>(text::parse_int(v)); }
    static void assign(const std::string &v, std::size_t &t)
    {
        const auto x = text::parse_int(v);
        require(x >= 0, ErrorKind::parse, "expected a non-negative integer, got '" + v + "'");
        t = static_cast<std::size_t>(x);
    }
    static void assign(const std::string &v, Vec3 &t)
    {
        const auto f = text::split(v, ',');
        require(f.size() == 3, ErrorKind::parse, "expected three comma-separated values, got '" + v + "'");
        for (int i = 0; i < 3; ++i)
            t(i) = text::parse_double(f[static_cast<std::size_t>(i)]);
    }
    template <class T> static void assign(const std::string &v, std::vector<T> &t)
    {
        t.clear();
        for (auto field : text::split(v, ','))
        {
            T x{};
            assign(std::string(text::trim(field)), x);
            t.push_back(x);
        }
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

inline void apply(const KeyValueConfig &c, PathProfile &p)
{
    c.read("n_nlos_ap_ris", p.n_nlos_ap_ris);
    c.read("n_nlos_ris_ue", p.n_nlos_ris_ue);
    c.read("n_direct", p.n_direct);
    c.read("delay_spread_s", p.delay_spread_s);
    c.read("pdp_decay_s", p.pdp_decay_s);
    c.read("gamma_los", p.gamma_los);
    c.read("gamma_nlos", p.gamma_nlos);
    c.read("los_fraction", p.los_fraction);
    c.read("direct_blockage_db", p.direct_blockage_db);
    c.read("nlos_elevation_max", p.nlos_elevation_max);
}

inline void apply(const KeyValueConfig &c, Scenario &s)
{
    c.read("carrier_hz", s.carrier_hz);
    c.read("bandwidth_hz", s.bandwidth_hz);
    c.read("n_subcarriers", s.n_subcarriers);
    c.read("n_rows", s.grid.n_rows);
    c.read("n_cols", s.grid.n_cols);
    c.read("d_h", s.grid.d_h);
    c.read("d_v", s.grid.d_v);
    c.read("ap_pos", s.ap_pos);
    c.read("ris_pos", s.ris_pos);
    c.read("ue_pos", s.ue_pos);
    c.read("ue_speed", s.ue_speed);
    c.read("ue_heading", s.ue_heading);
    c.read("block_duration_s", s.block_duration_s);
    c.read("n_blocks", s.n_blocks);
    c.read("noise_density", s.noise_density);
    c.read("power_budget", s.power_budget);
    c.read("rng_seed", s.rng_seed);
    c.read("guard_taps", s.guard_taps);
    apply(c, s.profile);
}

inline void apply(const KeyValueConfig &c, nn::TrainingSettings &t)
{
    c.read("depth", t.depth);
    c.read("learning_rate", t.learning_rate);
    c.read("batch_size", t.batch_size);
    c.read("epochs", t.epochs);
    c.read("validation_fraction", t.validation_fraction);
    c.read("beta1", t.beta1);
    c.read("beta2", t.beta2);
    c.read("epsilon", t.epsilon);
    c.read("init_std", t.init_std);
    c.read("training_seed", t.training_seed);
}

inline Scenario load_scenario(const std::string &path)
{
    Scenario s;
    apply(KeyValueConfig::load(path), s);
    s.validate();
    return s;
}

} // namespace risofdm
