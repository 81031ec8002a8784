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
#include "arqlab/parallel.hpp"
#include "arqlab/queueing.hpp"
#include "arqlab/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

using namespace arqlab;
using namespace arqlab::queueing;

namespace
{

BetaTable zero_beta(int users, int deadline)
{
    return BetaTable(users, deadline);
}

/// Two users, L = 2, where every 2-collision needs a second round.
BetaTable collision_beta()
{
    BetaTable b(2, 2);
    b(2, 1) = 1.0;
    return b;
}

double md1_delay(double lambda, int users)
{
    return 1.5 + lambda / (2.0 * (users - lambda));
}

protocols::ProtocolParams params_at(double snr, double r, int deadline, double p_t = 1.0)
{
    protocols::ProtocolParams p;
    p.rate = r * std::log2(snr);
    p.deadline = deadline;
    p.p_t = p_t;
    return p;
}

} // namespace

TEST_CASE("transmission probability fixed point")
{
    auto s = solve_transmission_probability(1.0, 2, 1.0, zero_beta(2, 2));
    CHECK(s.solvable);
    CHECK(s.p == doctest::Approx(0.5).epsilon(1e-9));

    const auto b = collision_beta();
    s = solve_transmission_probability(0.9, 2, 1.0, b);
    CHECK(s.solvable);
    CHECK(s.p == doctest::Approx((2.0 - std::sqrt(0.76)) / 1.8).epsilon(1e-9));
    CHECK(std::abs(s.residual) <= 1e-9);

    s = solve_transmission_probability(1.0, 2, 1.0, b);
    CHECK(s.solvable);
    CHECK(s.p == doctest::Approx(1.0).epsilon(1e-6));

    s = solve_transmission_probability(0.0, 2, 1.0, b);
    CHECK(s.solvable);
    CHECK(s.empty_queue);

    // Above the region there is no root in (0, p_t].
    CHECK_FALSE(solve_transmission_probability(1.2, 2, 1.0, b).solvable);
    CHECK_FALSE(solve_transmission_probability(0.8, 2, 0.3, zero_beta(2, 2)).solvable);
    CHECK_THROWS_AS(solve_transmission_probability(-0.1, 2, 1.0, b), std::invalid_argument);
    CHECK_THROWS_AS(solve_transmission_probability(0.5, 3, 1.0, b), std::invalid_argument);
}

TEST_CASE("fixed point residual over a random grid")
{
    Rng rng = make_stream(7, 0);
    for (int t = 0; t < 200; ++t)
    {
        BetaTable b(4, 3);
        for (int k = 1; k <= 4; ++k)
        {
            const double b1 = uniform01(rng);
            b(k, 1) = b1;
            b(k, 2) = b1 * uniform01(rng);
        }
        const double region = dmt::stability_region(Protocol::irarq, AntennaConfig{4, 1, 1}, 1.0, b);
        const double lambda = 0.95 * region * uniform01(rng);
        if (lambda == 0.0)
            continue;
        const auto s = solve_transmission_probability(lambda, 4, 1.0, b);
        REQUIRE(s.solvable);
        CHECK(std::abs(s.residual) <= 1e-9);
        CHECK(s.p > 0.0);
        CHECK(s.p <= 1.0);
    }
}

TEST_CASE("epoch length moments")
{
    const auto m0 = epoch_length_moments(0.4, 3, zero_beta(3, 3));
    CHECK(m0.u1 == doctest::Approx(1.0));
    CHECK(m0.u2 == doctest::Approx(1.0));
    CHECK(m0.v1 == doctest::Approx(1.0));
    CHECK(m0.v2 == doctest::Approx(1.0));

    // Enumerate the other user's state: it collides with probability p and
    // the collision lasts two slots.
    const auto b = collision_beta();
    for (double p : {0.1, 0.5, 0.9})
    {
        const double eu1 = (1.0 - p) * 1.0 + p * 2.0;
        const double eu2 = (1.0 - p) * 1.0 + p * 4.0;
        const auto m = epoch_length_moments(p, 2, b);
        CHECK(m.u1 == doctest::Approx(eu1));
        CHECK(m.u2 == doctest::Approx(eu2));
        CHECK(m.v1 == doctest::Approx(1.0));
        CHECK(m.v2 == doctest::Approx(1.0));
    }
}

TEST_CASE("analytic delay")
{
    const auto z = zero_beta(2, 2);
    CHECK(analytic_delay(1.0, 2, 1.0, z) == doctest::Approx(2.0));
    CHECK(analytic_delay(1e-9, 2, 1.0, z) == doctest::Approx(1.5));
    CHECK(analytic_delay(1.0, 2, 1.0, zero_beta(2, 1)) == doctest::Approx(2.0));

    double prev = 0.0;
    for (double lambda = 0.1; lambda < 1.95; lambda += 0.1)
    {
        const double d = analytic_delay(lambda, 2, 1.0, z);
        CHECK(d == doctest::Approx(md1_delay(lambda, 2)));
        CHECK(d > prev);
        prev = d;
    }
    CHECK(std::isinf(analytic_delay(2.0, 2, 1.0, z)));
    CHECK(std::isinf(analytic_delay(1.2, 2, 1.0, collision_beta())));

    // A longer deadline adds rounds and therefore delay.
    BetaTable b3(2, 3);
    b3(2, 1) = 0.5;
    b3(2, 2) = 0.2;
    BetaTable b2(2, 2);
    b2(2, 1) = 0.5;
    CHECK(analytic_delay(0.8, 2, 1.0, b3) > analytic_delay(0.8, 2, 1.0, b2));
}

TEST_CASE("simulated delay matches the slotted M/D/1 limit")
{
    const AntennaConfig c{2, 1, 1};
    RandomAccessOptions opts;
    opts.horizon = 200'000;
    for (double lambda : {0.5, 1.0, 1.5})
    {
        const auto rep = simulate_random_arrivals(Protocol::irarq, c, params_at(1e8, 0.2, 2), lambda, 1e8, 31, opts);
        INFO("lambda=" << lambda << " D=" << rep.delay << " ci=" << rep.delay_ci);
        CHECK(rep.delay_ci > 0.0);
        CHECK(std::abs(rep.delay - md1_delay(lambda, 2)) <= 2.0 * rep.delay_ci);
        CHECK(rep.verdict == Verdict::stable);
        CHECK(rep.pe < 1e-3);
        CHECK(rep.departures + rep.final_backlog == rep.arrivals);
    }
}

TEST_CASE("bernoulli arrivals never wait behind one-slot epochs")
{
    RandomAccessOptions opts;
    opts.horizon = 100'000;
    opts.arrivals = ArrivalKind::bernoulli;
    const auto rep =
        simulate_random_arrivals(Protocol::irarq, AntennaConfig{2, 1, 1}, params_at(1e8, 0.2, 2), 1.6, 1e8, 5, opts);
    CHECK(rep.delay == doctest::Approx(1.5).epsilon(0.01));
    CHECK(rep.arrivals == doctest::Approx(0.8 * 2 * 100'000).epsilon(0.01));

    opts.horizon = 100;
    CHECK_THROWS_AS(simulate_random_arrivals(Protocol::irarq, AntennaConfig{2, 1, 1}, params_at(1e8, 0.2, 2), 2.5,
                                             1e8, 5, opts),
                    std::invalid_argument);
}

TEST_CASE("stability verdicts")
{
    const AntennaConfig c{2, 1, 1};
    RandomAccessOptions opts;
    opts.horizon = 200'000;
    CHECK(simulate_random_arrivals(Protocol::ondma, c, params_at(1e8, 0.2, 1), 1.2, 1e8, 3, opts).verdict ==
          Verdict::unstable);
    const auto st = simulate_random_arrivals(Protocol::irarq, c, params_at(1e8, 0.2, 2), 1.8, 1e8, 4, opts);
    CHECK(st.verdict == Verdict::stable);
    CHECK(std::abs(st.slope) < opts.slope_epsilon);

    const auto idle = simulate_random_arrivals(Protocol::gta, c, params_at(1e8, 0.2, 1), 0.0, 1e8, 4, opts);
    CHECK(idle.verdict == Verdict::stable);
    CHECK(idle.arrivals == 0);
    CHECK(std::isnan(idle.delay));
}

TEST_CASE("boundary from verdicts")
{
    const std::vector<double> grid{0.2, 0.4, 0.6, 0.8};
    std::vector<Verdict> v{Verdict::stable, Verdict::stable, Verdict::unstable, Verdict::unstable};
    CHECK(boundary_from_verdicts(grid, v).value() == doctest::Approx(0.5));
    v = {Verdict::stable, Verdict::stable, Verdict::stable, Verdict::stable};
    CHECK_FALSE(boundary_from_verdicts(grid, v).has_value());
    v = {Verdict::unstable, Verdict::unstable, Verdict::unstable, Verdict::unstable};
    CHECK_FALSE(boundary_from_verdicts(grid, v).has_value());
    // Inconclusive points are skipped when locating the transition.
    v = {Verdict::stable, Verdict::inconclusive, Verdict::unstable, Verdict::unstable};
    CHECK(boundary_from_verdicts(grid, v).value() == doctest::Approx(0.4));

    const std::vector<double> zero{0.0};
    const auto scan = stability_boundary_scan(Protocol::gta, AntennaConfig{2, 1, 1}, params_at(1e8, 0.2, 1), 1e8,
                                              zero, 1, RandomAccessOptions{});
    CHECK(scan.reports.size() == 1);
    CHECK(scan.reports[0].verdict == Verdict::stable);
    CHECK_FALSE(scan.boundary.has_value());

    const std::vector<double> unsorted{0.5, 0.2};
    CHECK_THROWS_AS(stability_boundary_scan(Protocol::gta, AntennaConfig{2, 1, 1}, params_at(1e8, 0.2, 1), 1e8,
                                            unsorted, 1),
                    std::invalid_argument);
}

TEST_CASE("o-ndma scan brackets the unit boundary and is worker-independent")
{
    const std::vector<double> grid{0.8, 0.9, 1.1, 1.2};
    RandomAccessOptions opts;
    opts.horizon = 100'000;
    const auto params = params_at(1e8, 0.2, 1);
    const auto a = stability_boundary_scan(Protocol::ondma, AntennaConfig{2, 1, 1}, params, 1e8, grid, 8, opts, 1);
    const auto b = stability_boundary_scan(Protocol::ondma, AntennaConfig{2, 1, 1}, params, 1e8, grid, 8, opts, 3);
    REQUIRE(a.boundary.has_value());
    CHECK(*a.boundary == doctest::Approx(1.0));
    REQUIRE(b.boundary.has_value());
    CHECK(*a.boundary == *b.boundary);
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        CHECK(a.reports[i].seed == derive_seed(8, i));
        CHECK(a.reports[i].delay == b.reports[i].delay);
    }
}

TEST_CASE("gta queues with the pruned-packet wait")
{
    const AntennaConfig c{3, 1, 1};
    RandomAccessOptions opts;
    opts.horizon = 100'000;
    const auto params = params_at(1e3, 0.3, 1, 0.6);
    const auto plain = simulate_random_arrivals(Protocol::gta, c, params, 0.3, 1e3, 12, opts);
    opts.pruned_wait_one_epoch = true;
    const auto wait = simulate_random_arrivals(Protocol::gta, c, params, 0.3, 1e3, 12, opts);
    CHECK(plain.verdict == Verdict::stable);
    CHECK(wait.verdict == Verdict::stable);
    CHECK(std::isfinite(plain.delay));
    CHECK(std::isfinite(wait.delay));
    CHECK(plain.delay != wait.delay);
    CHECK(plain.departures + plain.final_backlog == plain.arrivals);
    CHECK(wait.departures + wait.final_backlog == wait.arrivals);
}

TEST_CASE("replications are reproducible and merge by weight")
{
    const AntennaConfig c{2, 1, 1};
    RandomAccessOptions opts;
    opts.horizon = 50'000;
    std::ostringstream t1, t2;
    opts.trace = &t1;
    const auto params = params_at(100.0, 0.4, 2);
    const auto a = simulate_random_arrivals(Protocol::irarq, c, params, 0.8, 100.0, 21, opts);
    opts.trace = &t2;
    const auto a2 = simulate_random_arrivals(Protocol::irarq, c, params, 0.8, 100.0, 21, opts);
    CHECK(a.delay == a2.delay);
    CHECK(t1.str() == t2.str());
    CHECK(!t1.str().empty());

    opts.trace = nullptr;
    const auto b = simulate_random_arrivals(Protocol::irarq, c, params, 0.8, 100.0, 22, opts);
    CHECK(a.delay != b.delay);

    const std::vector<DelayReport> both{a, b};
    const auto m = merge_reports(both);
    const double w = static_cast<double>(a.measured_packets) / (a.measured_packets + b.measured_packets);
    CHECK(m.delay == doctest::Approx(w * a.delay + (1 - w) * b.delay));
    const double we = static_cast<double>(a.nonidle_epochs) / (a.nonidle_epochs + b.nonidle_epochs);
    CHECK(m.pe == doctest::Approx(we * a.pe + (1 - we) * b.pe));
    CHECK(m.arrivals == a.arrivals + b.arrivals);
    CHECK(m.measured_packets == a.measured_packets + b.measured_packets);
}

TEST_CASE("longer deadlines trade delay for reliability")
{
    const AntennaConfig c{2, 1, 1};
    RandomAccessOptions opts;
    opts.horizon = 200'000;
    const double snr = std::pow(10.0, 1.5);
    const auto l1 = simulate_random_arrivals(Protocol::irarq, c, params_at(snr, 0.5, 1), 0.4, snr, 41, opts);
    const auto l3 = simulate_random_arrivals(Protocol::irarq, c, params_at(snr, 0.5, 3), 0.4, snr, 41, opts);
    CHECK(l3.delay > l1.delay);
    CHECK(l3.pe < l1.pe);
}

TEST_CASE("verdict names")
{
    CHECK(to_string(Verdict::stable) == "stable");
    CHECK(to_string(Verdict::unstable) == "unstable");
    CHECK(to_string(Verdict::inconclusive) == "inconclusive");
}
