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
#include "risofdm.hpp"

using namespace risofdm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("wavelength follows the carrier", "[scene]")
{
    CHECK(wavelength(3e8) == 1.0);
    CHECK_THAT(wavelength(3e9), WithinRel(0.1, 1e-15));
    CHECK_THAT(wavelength(28e9), WithinAbs(0.0107142857, 1e-9));
    CHECK_THROWS_AS(wavelength(0.0), Error);
}

TEST_CASE("element offsets follow the row/column layout", "[scene]")
{
    const Eigen::Matrix3Xd one = element_offsets({1, 1, 0.05, 0.05});
    REQUIRE(one.cols() == 1);
    CHECK(one.col(0).isZero());

    const Eigen::Matrix3Xd psi = element_offsets({2, 2, 0.05, 0.05});
    Eigen::Matrix3Xd expected(3, 4);
    expected << 0, 0, 0, 0, 0, 0.05, 0, 0.05, 0, 0, 0.05, 0.05;
    CHECK(psi.isApprox(expected));

    const Eigen::Matrix3Xd row = element_offsets({1, 5, 0.05, 0.05});
    CHECK(row.row(1).isZero());
}

TEST_CASE("array response of simple geometries", "[scene]")
{
    const double lambda = 0.1;
    const auto single = array_response(RisGrid{1, 1, 0.05, 0.05}, {0.7, 0.3}, lambda);
    REQUIRE(single.size() == 1);
    CHECK(single(0) == cdouble(1.0, 0.0));

    const auto broadside = array_response(RisGrid{3, 3, 0.05, 0.05}, {0.0, 0.0}, lambda);
    for (Eigen::Index n = 0; n < broadside.size(); ++n)
        CHECK(std::abs(broadside(n) - cdouble(1.0, 0.0)) < 1e-15);

    const auto quarter = array_response(RisGrid{2, 2, lambda / 4, lambda / 4}, {kPi / 2, 0.0}, lambda);
    const cdouble mj = std::polar(1.0, -kPi / 2);
    const cdouble expected[4] = {1.0, mj, 1.0, mj};
    for (int n = 0; n < 4; ++n)
        CHECK(std::abs(quarter(n) - expected[n]) < 1e-12);
}

TEST_CASE("array response has unit modulus", "[scene]")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> a(-kPi, kPi), e(-kPi / 2, kPi / 2);
    for (int t = 0; t < 50; ++t)
    {
        const auto s = array_response(RisGrid{4, 4, 0.03, 0.02}, {a(rng), e(rng)}, 0.0857);
        CHECK((s.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("doppler frequency", "[scene]")
{
    const Vec3 x(1, 0, 0), y(0, 1, 0);
    CHECK(doppler_frequency(0.0, x, x, 3e9) == 0.0);
    CHECK_THAT(doppler_frequency(30.0, x, x, 3e9), WithinRel(300.0, 1e-12));
    CHECK_THAT(doppler_frequency(30.0, x, -x, 3e9), WithinRel(-300.0, 1e-12));
    CHECK(doppler_frequency(30.0, x, y, 3e9) == 0.0);
    CHECK_THROWS_AS(doppler_frequency(30.0, Vec3(2, 0, 0), y, 3e9), Error);
}

TEST_CASE("LOS geometry by hand", "[scene]")
{
    Scenario s;
    s.ris_pos = Vec3(0, 0, 0);
    s.ue_pos = Vec3(0, 30, 0);
    s.ap_pos = Vec3(50, 0, 0);
    const PathSet p = derive_geometry(s);
    REQUIRE(p.ris_ue.front().los);
    CHECK_THAT(p.ris_ue.front().angles.azimuth, WithinAbs(kPi / 2, 1e-12));
    CHECK_THAT(p.ris_ue.front().angles.elevation, WithinAbs(0.0, 1e-12));
    CHECK_THAT(p.ris_ue.front().delay_s, WithinRel(100e-9, 1e-12));
    CHECK_THAT(p.ap_ris.front().delay_s, WithinRel(50.0 / 3e8, 1e-12));
    CHECK_THAT(p.direct.front().delay_s, WithinRel(std::hypot(50.0, 30.0) / 3e8, 1e-12));
}

TEST_CASE("stationary geometry has no Doppler", "[scene]")
{
    Scenario s;
    s.profile.n_nlos_ris_ue = 4;
    const PathSet p = derive_geometry(s);
    for (const auto &b : p.ris_ue)
        CHECK(b.doppler_hz == 0.0);
    for (const auto &d : p.direct)
        CHECK(d.doppler_hz == 0.0);
}

TEST_CASE("geometry is deterministic per seed", "[scene]")
{
    Scenario s;
    s.ue_speed = 20.0;
    s.rng_seed = 99;
    const PathSet a = derive_geometry(s), b = derive_geometry(s);
    REQUIRE(a.ris_ue.size() == b.ris_ue.size());
    for (std::size_t i = 0; i < a.ris_ue.size(); ++i)
    {
        CHECK(a.ris_ue[i].delay_s == b.ris_ue[i].delay_s);
        CHECK(a.ris_ue[i].angles.azimuth == b.ris_ue[i].angles.azimuth);
        CHECK(a.ris_ue[i].doppler_hz == b.ris_ue[i].doppler_hz);
    }
    for (std::size_t i = 0; i < a.direct.size(); ++i)
        CHECK(a.direct[i].gain == b.direct[i].gain);
}

TEST_CASE("group powers follow the pathloss split", "[scene]")
{
    Scenario s;
    s.profile.n_nlos_ap_ris = 3;
    const PathSet p = derive_geometry(s);
    const double d_a = (s.ap_pos - s.ris_pos).norm();
    double total = 0.0;
    for (const auto &a : p.ap_ris)
        total += a.gain;
    CHECK_THAT(total, WithinRel(pathloss(d_a, wavelength(s), s.profile.gamma_los), 1e-12));
    CHECK_THAT(p.ap_ris.front().gain / total, WithinRel(s.profile.los_fraction, 1e-12));
}

TEST_CASE("direct blockage attenuates the direct group", "[scene]")
{
    Scenario s;
    const PathSet open = derive_geometry(s);
    s.profile.direct_blockage_db = 20.0;
    const PathSet blocked = derive_geometry(s);
    for (std::size_t i = 0; i < open.direct.size(); ++i)
        CHECK_THAT(blocked.direct[i].gain, WithinRel(open.direct[i].gain / 100.0, 1e-12));
}

TEST_CASE("first direct path never arrives after a cascade path", "[scene]")
{
    for (std::uint64_t seed = 1; seed < 30; ++seed)
    {
        Scenario s;
        s.rng_seed = seed;
        const PathSet p = derive_geometry(s);
        const double eta = p.direct.front().delay_s;
        for (const auto &a : p.ap_ris)
            for (const auto &b : p.ris_ue)
                CHECK(a.delay_s + b.delay_s >= eta);
    }
}

TEST_CASE("abeam roadside UE sees no Doppler on the RIS LOS path", "[scene]")
{
    Scenario s; // heading along +y, RIS-to-UE line in the x-z plane
    s.ue_speed = 20.0;
    const PathSet p = derive_geometry(s);
    CHECK(std::abs(p.ris_ue.front().doppler_hz) < 1e-9);
    const Vec3 to_ap = (s.ap_pos - s.ue_pos).normalized();
    CHECK_THAT(p.direct.front().doppler_hz, WithinRel(20.0 * s.carrier_hz / kSpeedOfLight * to_ap.y(), 1e-12));
}

TEST_CASE("invalid scenarios are rejected", "[scene]")
{
    Scenario s;
    s.carrier_hz = -1.0;
    CHECK_THROWS_AS(s.validate(), Error);
    s = Scenario{};
    s.grid.n_rows = 0;
    CHECK_THROWS_AS(s.validate(), Error);
    s = Scenario{};
    s.ue_heading = Vec3(1, 1, 0);
    CHECK_THROWS_AS(s.validate(), Error);
    s = Scenario{};
    s.ue_pos = s.ris_pos;
    try
    {
        derive_geometry(s);
        FAIL("expected an error");
    }
    catch (const Error &e)
    {
        CHECK(e.kind() == ErrorKind::degenerate_geometry);
    }
}

TEST_CASE("NLOS perturbation keeps LOS paths", "[scene]")
{
    Scenario s;
    const PathSet base = derive_geometry(s);
    std::mt19937_64 rng(5);
    const PathSet moved = perturb_nlos(base, rng, 1e-9);
    CHECK(moved.ap_ris.front().delay_s == base.ap_ris.front().delay_s);
    CHECK(moved.ris_ue.front().delay_s == base.ris_ue.front().delay_s);
    CHECK(std::abs(moved.ap_ris.back().delay_s - base.ap_ris.back().delay_s) <= 1e-9);
    CHECK(moved.ap_ris.back().gain == base.ap_ris.back().gain);
}
