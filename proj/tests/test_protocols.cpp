// SPDX-License-Identifier: Apache-2.0
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


#include "arqlab/dmt.hpp"
#include "arqlab/protocols.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace arqlab;
using protocols::EpochContext;
using protocols::ProtocolParams;

namespace
{

phy::ChannelSet unit_channels(int users, double snr)
{
    phy::ChannelSet ch;
    ch.gains = Eigen::MatrixXcd::Ones(1, users);
    ch.snr = snr;
    return ch;
}

std::vector<int> first(int k)
{
    std::vector<int> v(k);
    for (int i = 0; i < k; ++i)
        v[i] = i;
    return v;
}

struct Moments
{
    double mean_len = 0.0, se_len = 0.0, mean_del = 0.0, se_del = 0.0;
};

Moments gta_moments(int k, int epochs, std::uint64_t seed)
{
    Rng rng = make_stream(seed, 0);
    auto ch = phy::draw_channels(AntennaConfig{k, 1, 1}, 1e6, rng);
    ProtocolParams params;
    params.rate = 0.1;
    protocols::EpochRunner runner;
    const auto who = first(k);
    double sl = 0, sl2 = 0, sd = 0, sd2 = 0;
    for (int t = 0; t < epochs; ++t)
    {
        phy::redraw_channels(ch, rng);
        const auto &out = runner.run_gta({who, ch, params, rng});
        sl += out.length;
        sl2 += static_cast<double>(out.length) * out.length;
        sd += out.delivered_count();
        sd2 += static_cast<double>(out.delivered_count()) * out.delivered_count();
    }
    Moments m;
    m.mean_len = sl / epochs;
    m.mean_del = sd / epochs;
    m.se_len = std::sqrt((sl2 / epochs - m.mean_len * m.mean_len) / epochs);
    m.se_del = std::sqrt((sd2 / epochs - m.mean_del * m.mean_del) / epochs);
    return m;
}

} // namespace

TEST_CASE("parameter validation")
{
    ProtocolParams p;
    CHECK_NOTHROW(p.validate());
    p.p_t = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.p_t = 1.0;
    p.deadline = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("idle epochs")
{
    const auto ch = unit_channels(2, 3.0);
    ProtocolParams params;
    Rng rng = make_stream(1, 0);
    const std::vector<int> none;
    for (Protocol p : {Protocol::gta, Protocol::ondma, Protocol::irarq})
    {
        protocols::EpochRunner r;
        const auto &out = r.run(p, {none, ch, params, rng});
        CHECK(out.length == 1);
        CHECK(out.idle());
        CHECK_FALSE(out.system_error());
    }
}

TEST_CASE("ir-arq epoch examples")
{
    const auto ch = unit_channels(2, 3.0);
    Rng rng = make_stream(1, 0);
    ProtocolParams params;
    params.deadline = 2;
    params.rate = 1.3;
    const auto who = first(2);
    auto out = protocols::run_irarq_epoch({who, ch, params, rng});
    CHECK(out.length == 1);
    CHECK(out.decoded_ok[0] == 1);
    CHECK(out.decoded_ok[1] == 1);
    CHECK(out.delivered_count() == 2);

    // Round 1 fails the sum condition (2.807 < 3.2); round 2 accumulates 5.614 >= 3.2.
    params.rate = 1.6;
    out = protocols::run_irarq_epoch({who, ch, params, rng});
    CHECK(out.length == 2);
    CHECK_FALSE(out.system_error());
    CHECK(out.delivered_count() == 2);

    // With L = 1 the same collision is an error after one slot.
    params.deadline = 1;
    out = protocols::run_irarq_epoch({who, ch, params, rng});
    CHECK(out.length == 1);
    CHECK(out.system_error());

    // Two rounds are not enough once 2 I_S < 2 R.
    params.deadline = 2;
    params.rate = 2.9;
    out = protocols::run_irarq_epoch({who, ch, params, rng});
    CHECK(out.length == 2);
    CHECK(out.system_error());
}

TEST_CASE("o-ndma epoch examples")
{
    Rng rng = make_stream(1, 0);
    ProtocolParams params;
    params.rate = 2.0;
    const auto ch3 = unit_channels(3, 3.0);
    const auto out3 = protocols::run_ondma_epoch({first(3), ch3, params, rng});
    CHECK(out3.length == 3);
    CHECK(out3.delivered_count() == 3);

    const auto ch1 = unit_channels(1, 3.0);
    const auto out1 = protocols::run_ondma_epoch({first(1), ch1, params, rng});
    CHECK(out1.length == 1);
    CHECK(out1.decoded_ok[0] == 1);

    // The collision-size gain lifts the single-user SNR by k.
    params.rate = 2.5;
    const auto ch2 = unit_channels(2, 3.0);
    CHECK(protocols::run_ondma_epoch({first(2), ch2, params, rng}).system_error());
    params.combining = protocols::CombiningGain::collision_size;
    CHECK_FALSE(protocols::run_ondma_epoch({first(2), ch2, params, rng}).system_error());
}

TEST_CASE("o-ndma epoch length is deterministic in k")
{
    Rng rng = make_stream(2, 0);
    auto ch = phy::draw_channels(AntennaConfig{5, 1, 1}, 10.0, rng);
    ProtocolParams params;
    protocols::EpochRunner r;
    for (int t = 0; t < 200; ++t)
    {
        phy::redraw_channels(ch, rng);
        const int k = 1 + t % 5;
        CHECK(r.run_ondma({first(k), ch, params, rng}).length == k);
    }
}

TEST_CASE("gta scripted split (1,1)")
{
    const auto ch = unit_channels(2, 3.0);
    Rng rng = make_stream(1, 0);
    ProtocolParams params;
    params.rate = 1.0;
    std::ostringstream trace;
    const auto who = first(2);
    EpochContext ctx{who, ch, params, rng, &trace};
    ctx.splitter = [](int g, Rng &) {
        std::vector<bool> left(g, false);
        left[0] = true;
        return left;
    };
    const auto out = protocols::run_gta_epoch(ctx);
    CHECK(out.length == 3);
    CHECK(out.delivered_count() == 2);
    CHECK_FALSE(out.system_error());
    CHECK(trace.str() == "epoch=0 slot=1 active=0,1 collision\n"
                         "epoch=0 slot=2 active=0 clean-ok\n"
                         "epoch=0 slot=3 active=1 clean-ok\n");
}

TEST_CASE("gta pruning and empty-left splits")
{
    const auto ch = unit_channels(3, 3.0);
    Rng rng = make_stream(1, 0);
    ProtocolParams params;
    params.rate = 1.0;
    const auto who = first(3);
    EpochContext ctx{who, ch, params, rng};
    int call = 0;
    // First everyone goes right (empty left), then users 0 and 1 go left and 2 is pruned,
    // then 0 goes left alone.
    ctx.splitter = [&call](int g, Rng &) {
        ++call;
        std::vector<bool> left(g, false);
        if (call == 2)
            left[0] = left[1] = true;
        if (call == 3)
            left[0] = true;
        return left;
    };
    const auto out = protocols::run_gta_epoch(ctx);
    CHECK(out.length == 5);
    CHECK(out.delivered_count() == 2);
    CHECK(out.pruned[2] == 1);
    CHECK(out.delivered[2] == 0);
    CHECK_FALSE(out.system_error());

    ctx.splitter = [](int g, Rng &) { return std::vector<bool>(g + 1, false); };
    CHECK_THROWS_AS(protocols::run_gta_epoch(ctx), std::logic_error);
}

TEST_CASE("gta Monte Carlo epochs agree with the recursion")
{
    const auto table = dmt::gta_table(6);
    CHECK(gta_moments(2, 1'000'000, 11).mean_len == doctest::Approx(4.0).epsilon(0.02 / 4.0));
    CHECK(gta_moments(3, 1'000'000, 12).mean_del == doctest::Approx(2.5).epsilon(0.02 / 2.5));
    for (int k = 1; k <= 6; ++k)
    {
        const auto m = gta_moments(k, 100'000, 20 + k);
        INFO("k=" << k);
        CHECK(std::abs(m.mean_len - table.expected_length[k]) <= 3.0 * m.se_len + 1e-12);
        CHECK(std::abs(m.mean_del - table.expected_delivered[k]) <= 3.0 * m.se_del + 1e-12);
    }
}

TEST_CASE("ir-arq epoch lengths shrink as snr grows on paired channels")
{
    Rng rng = make_stream(3, 0);
    auto ch = phy::draw_channels(AntennaConfig{2, 1, 1}, 1.0, rng);
    ProtocolParams params;
    params.deadline = 4;
    params.rate = 2.0;
    protocols::EpochRunner r;
    const auto who = first(2);
    for (int t = 0; t < 5000; ++t)
    {
        phy::redraw_channels(ch, rng);
        int prev = params.deadline + 1;
        for (double snr : {1.0, 10.0, 100.0, 1000.0})
        {
            ch.snr = snr;
            const int len = r.run_irarq({who, ch, params, rng}).length;
            CHECK(len <= prev);
            prev = len;
        }
    }
}

TEST_CASE("replaying a seed reproduces the trace")
{
    auto run = [](std::uint64_t seed) {
        Rng rng = make_stream(seed, 0);
        auto ch = phy::draw_channels(AntennaConfig{4, 1, 1}, 10.0, rng);
        ProtocolParams params;
        params.deadline = 3;
        params.rate = 1.5;
        std::ostringstream trace;
        protocols::EpochRunner r;
        std::vector<int> who;
        const auto all = first(4);
        for (int t = 0; t < 200; ++t)
        {
            phy::redraw_channels(ch, rng);
            protocols::choose_participants(all, 0.6, rng, who);
            for (Protocol p : {Protocol::gta, Protocol::ondma, Protocol::irarq})
                r.run(p, {who, ch, params, rng, &trace});
        }
        return trace.str();
    };
    const auto a = run(9);
    CHECK(a.size() > 1000);
    CHECK(a == run(9));
    CHECK(a != run(10));
}

TEST_CASE("probability-p_t rule")
{
    Rng rng = make_stream(4, 0);
    const auto all = first(4);
    std::vector<int> out;
    protocols::choose_participants(all, 1.0, rng, out);
    CHECK(out == all);
    long total = 0;
    for (int t = 0; t < 100'000; ++t)
    {
        protocols::choose_participants(all, 0.3, rng, out);
        total += static_cast<long>(out.size());
    }
    const double mean = total / 100'000.0;
    CHECK(std::abs(mean - 1.2) < 3.0 * std::sqrt(4 * 0.3 * 0.7 / 100'000.0));
}
