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

// Scenario description, RIS geometry and the path-level description of the
// three propagation groups (AP->RIS, RIS->UE, AP->UE).
//
// Coordinate frame: the RIS lies on the y-z plane through ris_pos with its
// boundary normal along +x. Angles are taken in that frame; azimuth is
// measured from +x towards +y, elevation from the x-y plane towards +z.

#pragma once

#include "error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace risofdm
{

inline constexpr double kSpeedOfLight = 3e8;
inline constexpr double kPi = std::numbers::pi;

using cdouble = std::complex<double>;
using Vec3 = Eigen::Vector3d;

struct RisGrid
{
    std::size_t n_rows = 1;
    std::size_t n_cols = 1;
    double d_h = 0.05; ///< element width [m]
    double d_v = 0.05; ///< element height [m]

    std::size_t size() const { return n_rows * n_cols; }

    void validate() const
    {
        require(n_rows >= 1 && n_cols >= 1, ErrorKind::invalid_scenario, "RIS grid needs at least one row and one column");
        require(d_h > 0.0 && d_v > 0.0, ErrorKind::invalid_scenario, "RIS element sides must be positive");
    }
};

struct PathAngles
{
    double azimuth = 0.0;   ///< [-pi, pi]
    double elevation = 0.0; ///< [-pi/2, pi/2]

    void validate() const
    {
        require(std::isfinite(azimuth) && std::isfinite(elevation), ErrorKind::invalid_argument, "path angles must be finite");
        require(std::abs(azimuth) <= kPi + 1e-12, ErrorKind::invalid_argument, "azimuth outside [-pi, pi]");
        require(std::abs(elevation) <= kPi / 2 + 1e-12, ErrorKind::invalid_argument, "elevation outside [-pi/2, pi/2]");
    }

    /// Unit vector pointing along (azimuth, elevation).
    Vec3 direction() const
    {
        return {std::cos(azimuth) * std::cos(elevation),
                std::sin(azimuth) * std::cos(elevation),
                std::sin(elevation)};
    }
};

inline PathAngles angles_of(const Vec3 &direction)
{
    const double r = direction.norm();
    return {std::atan2(direction.y(), direction.x()), std::asin(std::clamp(direction.z() / r, -1.0, 1.0))};
}

struct ApRisPath
{
    double delay_s = 0.0;
    double gain = 0.0; ///< linear power gain alpha
    PathAngles angles; ///< direction of the AP side, seen from the RIS
    bool los = false;
};

struct RisUePath
{
    double delay_s = 0.0;
    double gain = 0.0; ///< linear power gain beta
    PathAngles angles; ///< departure direction towards the UE, seen from the RIS
    double doppler_hz = 0.0;
    bool los = false;
};

struct DirectPath
{
    double delay_s = 0.0;
    double gain = 0.0; ///< linear power gain delta
    double doppler_hz = 0.0;
};

struct PathSet
{
    std::vector<ApRisPath> ap_ris;
    std::vector<RisUePath> ris_ue;
    std::vector<DirectPath> direct; ///< may be empty (blocked direct link)

    void validate() const
    {
        require(!ap_ris.empty() && !ris_ue.empty(), ErrorKind::invalid_argument, "AP->RIS and RIS->UE groups need at least one path each");
        for (const auto &p : ap_ris)
            require(p.delay_s >= 0.0 && p.gain >= 0.0, ErrorKind::invalid_argument, "negative delay or gain in AP->RIS group");
        for (const auto &p : ris_ue)
            require(p.delay_s >= 0.0 && p.gain >= 0.0, ErrorKind::invalid_argument, "negative delay or gain in RIS->UE group");
        for (const auto &p : direct)
            require(p.delay_s >= 0.0 && p.gain >= 0.0, ErrorKind::invalid_argument, "negative delay or gain in direct group");
    }
};

/// Statistical knobs for the NLOS part of derive_geometry.
struct PathProfile
{
    std::size_t n_nlos_ap_ris = 1;
    std::size_t n_nlos_ris_ue = 1;
    std::size_t n_direct = 3;
    double delay_spread_s = 300e-9; ///< NLOS excess delays are drawn in [0, spread]
    double pdp_decay_s = 100e-9;    ///< exponential power-delay profile constant
    double gamma_los = 2.0;
    double gamma_nlos = 3.5;
    double los_fraction = 0.9;       ///< share of a LOS group's gain carried by its LOS path
    double direct_blockage_db = 0.0; ///< extra attenuation of the AP->UE group
    double nlos_elevation_max = kPi / 6;
};

struct Scenario
{
    double carrier_hz = 3.5e9;
    double bandwidth_hz = 10.5e6;
    std::size_t n_subcarriers = 256;
    RisGrid grid{10, 10, 0.04, 0.04};
    Vec3 ap_pos{30.0, 250.0, 15.0};
    Vec3 ris_pos{0.0, 0.0, 5.0};
    Vec3 ue_pos{15.0, 0.0, 1.5};
    double ue_speed = 0.0;
    Vec3 ue_heading{0.0, 1.0, 0.0};
    double block_duration_s = 3e-4;
    std::size_t n_blocks = 1;
    double noise_density = 4e-24; ///< N0 [W/Hz]
    double power_budget = 1.0;    ///< P [W]
    std::uint64_t rng_seed = 1;
    std::size_t guard_taps = 4;
    PathProfile profile;

    void validate() const
    {
        require(carrier_hz > 0.0, ErrorKind::invalid_scenario, "carrier frequency must be positive");
        require(bandwidth_hz > 0.0, ErrorKind::invalid_scenario, "bandwidth must be positive");
        require(n_subcarriers >= 1, ErrorKind::invalid_scenario, "need at least one subcarrier");
        grid.validate();
        require(ue_speed >= 0.0, ErrorKind::invalid_scenario, "UE speed must be non-negative");
        require(std::abs(ue_heading.norm() - 1.0) <= 1e-9, ErrorKind::invalid_scenario, "UE heading must be a unit vector");
        require(block_duration_s > 0.0, ErrorKind::invalid_scenario, "block duration must be positive");
        require(n_blocks >= 1, ErrorKind::invalid_scenario, "need at least one block");
        require(noise_density > 0.0, ErrorKind::invalid_scenario, "noise density must be positive");
        require(power_budget > 0.0, ErrorKind::invalid_scenario, "power budget must be positive");
        require(profile.los_fraction > 0.0 && profile.los_fraction <= 1.0, ErrorKind::invalid_scenario, "los_fraction must lie in (0, 1]");
        require(profile.delay_spread_s >= 0.0 && profile.pdp_decay_s > 0.0, ErrorKind::invalid_scenario, "invalid delay profile");
    }

    bool is_stationary() const { return ue_speed == 0.0 && n_blocks == 1; }
};

inline double wavelength(double carrier_hz)
{
    require(carrier_hz > 0.0, ErrorKind::invalid_scenario, "carrier frequency must be positive");
    return kSpeedOfLight / carrier_hz;
}

inline double wavelength(const Scenario &scenario) { return wavelength(scenario.carrier_hz); }

/// Element positions on the y-z plane, one column per reflector. Column n is
/// [0, d_h * (n mod n_rows), d_v * floor(n / n_cols)].
inline Eigen::Matrix3Xd element_offsets(const RisGrid &grid)
{
    grid.validate();
    const std::size_t n = grid.size();
    Eigen::Matrix3Xd psi(3, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
    {
        psi(0, i) = 0.0;
        psi(1, i) = grid.d_h * static_cast<double>(i % grid.n_rows);
        psi(2, i) = grid.d_v * static_cast<double>(i / grid.n_cols);
    }
    return psi;
}

/// Wave vector (-2 pi / lambda) * direction(angles).
inline Vec3 wave_vector(const PathAngles &angles, double lambda)
{
    return (-2.0 * kPi / lambda) * angles.direction();
}

inline Eigen::VectorXcd array_response(const Eigen::Matrix3Xd &offsets, const PathAngles &angles, double lambda)
{
    const Eigen::VectorXd phase = (wave_vector(angles, lambda).transpose() * offsets).transpose();
    Eigen::VectorXcd out(phase.size());
    for (Eigen::Index i = 0; i < phase.size(); ++i)
        out(i) = std::polar(1.0, phase(i));
    return out;
}

inline Eigen::VectorXcd array_response(const RisGrid &grid, const PathAngles &angles, double lambda)
{
    angles.validate();
    require(lambda > 0.0, ErrorKind::invalid_argument, "wavelength must be positive");
    return array_response(element_offsets(grid), angles, lambda);
}

/// Doppler shift seen by a receiver moving along `heading` for a wave that
/// arrives from `arrival_direction` (unit vector pointing back to the source).
inline double doppler_frequency(double speed, const Vec3 &heading, const Vec3 &arrival_direction, double carrier_hz)
{
    require(speed >= 0.0, ErrorKind::invalid_argument, "speed must be non-negative");
    require(std::abs(heading.norm() - 1.0) <= 1e-9, ErrorKind::invalid_argument, "heading must be a unit vector");
    require(std::abs(arrival_direction.norm() - 1.0) <= 1e-9, ErrorKind::invalid_argument, "arrival direction must be a unit vector");
    return speed * carrier_hz / kSpeedOfLight * heading.dot(arrival_direction);
}

/// Log-distance pathloss (lambda / 4 pi d)^2 * d^-(gamma - 2).
inline double pathloss(double distance, double lambda, double gamma)
{
    const double fs = lambda / (4.0 * kPi * distance);
    return fs * fs * std::pow(distance, -(gamma - 2.0));
}

namespace detail
{

// Exponential power-delay-profile weights normalised to `total`.
inline std::vector<double> pdp_weights(const std::vector<double> &excess_delays, double decay_s, double total)
{
    std::vector<double> w(excess_delays.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
    {
        w[i] = std::exp(-excess_delays[i] / decay_s);
        sum += w[i];
    }
    for (auto &x : w)
        x = sum > 0.0 ? total * x / sum : 0.0;
    return w;
}

inline PathAngles draw_nlos_angles(std::mt19937_64 &rng, double elevation_max)
{
    std::uniform_real_distribution<double> az(-kPi / 2, kPi / 2);
    std::uniform_real_distribution<double> el(-elevation_max, elevation_max);
    const double a = az(rng);
    return {a, el(rng)};
}

} // namespace detail

/// Builds the three path groups: LOS delays and angles from positions, NLOS
/// paths drawn from scenario.profile. Deterministic for a given rng state.
inline PathSet derive_geometry(const Scenario &scenario, std::mt19937_64 &rng)
{
    scenario.validate();
    const auto &prof = scenario.profile;
    const double lambda = wavelength(scenario);

    const Vec3 ris_to_ap = scenario.ap_pos - scenario.ris_pos;
    const Vec3 ris_to_ue = scenario.ue_pos - scenario.ris_pos;
    const Vec3 ue_to_ap = scenario.ap_pos - scenario.ue_pos;
    const double d_a = ris_to_ap.norm();
    const double d_b = ris_to_ue.norm();
    const double d_d = ue_to_ap.norm();
    constexpr double min_distance = 1e-6;
    require(d_a > min_distance && d_b > min_distance && d_d > min_distance, ErrorKind::degenerate_geometry,
            "AP, RIS and UE positions must be distinct");

    std::uniform_real_distribution<double> excess(0.0, prof.delay_spread_s);
    PathSet paths;

    // AP -> RIS
    {
        const double total = pathloss(d_a, lambda, prof.gamma_los);
        const double los_share = prof.n_nlos_ap_ris == 0 ? 1.0 : prof.los_fraction;
        paths.ap_ris.push_back({d_a / kSpeedOfLight, los_share * total, angles_of(ris_to_ap), true});
        std::vector<double> ex(prof.n_nlos_ap_ris);
        std::vector<PathAngles> ang(prof.n_nlos_ap_ris);
        for (std::size_t k = 0; k < ex.size(); ++k)
        {
            ex[k] = excess(rng);
            ang[k] = detail::draw_nlos_angles(rng, prof.nlos_elevation_max);
        }
        const auto w = detail::pdp_weights(ex, prof.pdp_decay_s, (1.0 - los_share) * total);
        for (std::size_t k = 0; k < ex.size(); ++k)
            paths.ap_ris.push_back({d_a / kSpeedOfLight + ex[k], w[k], ang[k], false});
    }

    // RIS -> UE; a NLOS path arrives at the UE from the reverse of its
    // departure direction.
    {
        const double total = pathloss(d_b, lambda, prof.gamma_los);
        const double los_share = prof.n_nlos_ris_ue == 0 ? 1.0 : prof.los_fraction;
        const double f_los = doppler_frequency(scenario.ue_speed, scenario.ue_heading, -ris_to_ue / d_b, scenario.carrier_hz);
        paths.ris_ue.push_back({d_b / kSpeedOfLight, los_share * total, angles_of(ris_to_ue), f_los, true});
        std::vector<double> ex(prof.n_nlos_ris_ue);
        std::vector<PathAngles> ang(prof.n_nlos_ris_ue);
        for (std::size_t k = 0; k < ex.size(); ++k)
        {
            ex[k] = excess(rng);
            ang[k] = detail::draw_nlos_angles(rng, prof.nlos_elevation_max);
        }
        const auto w = detail::pdp_weights(ex, prof.pdp_decay_s, (1.0 - los_share) * total);
        for (std::size_t k = 0; k < ex.size(); ++k)
        {
            const Vec3 arrival = -ang[k].direction();
            const double f = doppler_frequency(scenario.ue_speed, scenario.ue_heading, arrival, scenario.carrier_hz);
            paths.ris_ue.push_back({d_b / kSpeedOfLight + ex[k], w[k], ang[k], f, false});
        }
    }

    // AP -> UE, all NLOS. The earliest path arrives at the geometric delay so
    // that no cascade path precedes the causality reference.
    if (prof.n_direct > 0)
    {
        const double total = pathloss(d_d, lambda, prof.gamma_nlos) * std::pow(10.0, -prof.direct_blockage_db / 10.0);
        const double f_bar = doppler_frequency(scenario.ue_speed, scenario.ue_heading, ue_to_ap / d_d, scenario.carrier_hz);
        std::vector<double> ex(prof.n_direct, 0.0);
        for (std::size_t k = 1; k < ex.size(); ++k)
            ex[k] = excess(rng);
        const auto w = detail::pdp_weights(ex, prof.pdp_decay_s, total);
        for (std::size_t k = 0; k < ex.size(); ++k)
            paths.direct.push_back({d_d / kSpeedOfLight + ex[k], w[k], f_bar});
    }
    return paths;
}

inline PathSet derive_geometry(const Scenario &scenario)
{
    std::mt19937_64 rng(scenario.rng_seed);
    return derive_geometry(scenario, rng);
}

/// Correlated redraw: LOS paths are kept, every NLOS delay is jittered
/// uniformly by at most `jitter_s` around `base`.
inline PathSet perturb_nlos(const PathSet &base, std::mt19937_64 &rng, double jitter_s)
{
    std::uniform_real_distribution<double> jitter(-jitter_s, jitter_s);
    PathSet out = base;
    for (auto &p : out.ap_ris)
        if (!p.los)
            p.delay_s = std::max(0.0, p.delay_s + jitter(rng));
    for (auto &p : out.ris_ue)
        if (!p.los)
            p.delay_s = std::max(0.0, p.delay_s + jitter(rng));
    for (auto &p : out.direct)
        p.delay_s = std::max(0.0, p.delay_s + jitter(rng));
    return out;
}

} // namespace risofdm
