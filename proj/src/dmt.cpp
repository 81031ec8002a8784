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

namespace arqlab::dmt
{

namespace
{

void check_pt(double p_t)
{
    if (!(p_t > 0.0 && p_t <= 1.0))
        throw std::invalid_argument("transmission probability must lie in (0, 1]");
}

double penalty_from_table(const GtaRecursionTable<double> &t, int users, double p_t)
{
    double num = 0.0, den = 0.0;
    for (int k = 0; k <= users; ++k)
    {
        const double b = binomial_pmf<double>(users, k, p_t);
        num += b * t.expected_length[k];
        den += b * t.expected_delivered[k];
    }
    return num / den;
}

} // namespace

double to_double(const Rational &q)
{
    // Scale into 64-bit-friendly range before dividing.
    using boost::multiprecision::cpp_int;
    const cpp_int &n = q.numerator();
    const cpp_int &d = q.denominator();
    const std::size_t bits = std::max(boost::multiprecision::msb(abs(n) + 1), boost::multiprecision::msb(d));
    const int shift = bits > 60 ? static_cast<int>(bits - 60) : 0;
    const double nd = (n >> shift).convert_to<double>();
    const double dd = (d >> shift).convert_to<double>();
    return nd / dd;
}

GtaRecursionTable<double> gta_table(int k_max)
{
    const auto exact = gta_recursion<Rational>(k_max);
    GtaRecursionTable<double> t;
    for (const auto &x : exact.expected_length)
        t.expected_length.push_back(to_double(x));
    for (const auto &j : exact.expected_delivered)
        t.expected_delivered.push_back(to_double(j));
    return t;
}

double gta_multiplexing_penalty(const AntennaConfig &config, double p_t)
{
    config.validate();
    check_pt(p_t);
    return penalty_from_table(gta_table(config.users), config.users, p_t);
}

double gta_dmt(const AntennaConfig &config, double p_t, double r_e)
{
    const double penalty = gta_multiplexing_penalty(config, p_t);
    return mac_dmt<double>(1, config.tx_antennas, config.rx_antennas, penalty * r_e);
}

double gta_optimal_pt(const AntennaConfig &config)
{
    config.validate();
    const auto table = gta_table(config.users);
    auto f = [&](double p) { return penalty_from_table(table, config.users, p); };

    constexpr int grid = 1000;
    double best_p = 1.0;
    double best = f(1.0);
    for (int i = grid - 1; i >= 1; --i)
    {
        const double p = static_cast<double>(i) / grid;
        const double v = f(p);
        if (v < best)
        {
            best = v;
            best_p = p;
        }
    }

    // Golden-section refinement inside the neighbouring grid cells.
    double lo = std::max(best_p - 1.0 / grid, 1e-9);
    double hi = std::min(best_p + 1.0 / grid, 1.0);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - g * (hi - lo);
    double b = lo + g * (hi - lo);
    double fa = f(a), fb = f(b);
    while (hi - lo > 1e-12)
    {
        if (fa < fb)
        {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        }
        else
        {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    const double refined = 0.5 * (lo + hi);
    // Monotone penalties (K = 1) put the optimum on the boundary p_t = 1.
    if (f(1.0) <= f(refined))
        return 1.0;
    return refined;
}

double ondma_dmt(const AntennaConfig &config, double p_t, double r_e)
{
    config.validate();
    check_pt(p_t);
    const double k = config.users;
    const double scale = (k * p_t + std::pow(1.0 - p_t, k)) / (k * p_t);
    return mac_dmt<double>(1, config.tx_antennas, config.rx_antennas, scale * r_e);
}

int beta_highsnr(int k, int tx, int rx, double r, int l)
{
    if (k < 1 || l < 1)
        throw std::invalid_argument("beta_highsnr: k and l must be >= 1");
    const double threshold = std::min(static_cast<double>(l * tx), static_cast<double>(l * rx) / k);
    return r > threshold ? 1 : 0;
}

BetaTable high_snr_beta_table(const AntennaConfig &config, double r, int deadline)
{
    config.validate();
    BetaTable t(config.users, deadline, BetaSource::high_snr_indicator);
    for (int k = 1; k <= config.users; ++k)
        for (int l = 1; l <= deadline; ++l)
            t(k, l) = beta_highsnr(k, config.tx_antennas, config.rx_antennas, r, l);
    return t;
}

double irarq_effective_multiplexing(const AntennaConfig &config, double p_t, double r, int deadline,
                                    const BetaFn &beta)
{
    config.validate();
    check_pt(p_t);
    if (deadline < 1)
        throw std::invalid_argument("deadline must be >= 1");
    if (r < 0.0 || r > std::min(config.tx_antennas, config.rx_antennas))
        throw std::invalid_argument("first-round multiplexing gain must lie in [0, min{M, N}]");
    double extra = 0.0;
    for (int k = 1; k <= config.users; ++k)
    {
        double rounds = 0.0;
        for (int l = 1; l < deadline; ++l)
            rounds += beta(k, l);
        extra += binomial_pmf<double>(config.users, k, p_t) * rounds;
    }
    return p_t * config.users * r / (1.0 + extra);
}

double irarq_effective_multiplexing(const AntennaConfig &config, double p_t, double r, int deadline)
{
    return irarq_effective_multiplexing(config, p_t, r, deadline, [&](int k, int l) {
        return static_cast<double>(beta_highsnr(k, config.tx_antennas, config.rx_antennas, r, l));
    });
}

std::optional<double> irarq_first_round_gain(const AntennaConfig &config, double p_t, double r_e)
{
    config.validate();
    check_pt(p_t);
    const double r = r_e / (p_t * config.users);
    const double first_discontinuity =
        std::min(static_cast<double>(config.tx_antennas), static_cast<double>(config.rx_antennas) / config.users);
    if (r < 0.0 || r >= first_discontinuity)
        return std::nullopt;
    return r;
}

double irarq_dmdt(const AntennaConfig &config, double r_e, int deadline)
{
    config.validate();
    if (deadline < 1)
        throw std::invalid_argument("deadline must be >= 1");
    // The right end is the supremum of achievable r_e; the formula stays defined there.
    if (r_e < 0.0 || r_e > config.degrees_of_freedom())
        throw std::invalid_argument("irarq_dmdt: r_e must lie in [0, min{KM, N}]");
    return mac_dmt<double>(config.users, config.tx_antennas, config.rx_antennas,
                           r_e / (static_cast<double>(config.users) * deadline));
}

double irarq_dmdt_at_rate(const AntennaConfig &config, double r, int deadline)
{
    config.validate();
    if (deadline < 1)
        throw std::invalid_argument("deadline must be >= 1");
    return mac_dmt<double>(config.users, config.tx_antennas, config.rx_antennas, r / deadline);
}

double random_arrival_diversity(Protocol protocol, const AntennaConfig &config, double r_arrival, int deadline)
{
    config.validate();
    if (r_arrival < 0.0)
        throw std::invalid_argument("arrival multiplexing gain must be >= 0");
    switch (protocol)
    {
    case Protocol::gta:
    case Protocol::ondma:
        return mac_dmt<double>(1, config.tx_antennas, config.rx_antennas, r_arrival);
    case Protocol::irarq:
        return irarq_dmdt_at_rate(config, r_arrival, deadline);
    }
    throw std::invalid_argument("unknown protocol");
}

namespace
{

double ondma_region(const AntennaConfig &config, double p_t)
{
    const double k = config.users;
    return k * p_t / (k * p_t + std::pow(1.0 - p_t, k));
}

double irarq_region(const AntennaConfig &config, double p_t, const BetaFn &beta, int deadline)
{
    double extra = 0.0;
    for (int k = 1; k <= config.users; ++k)
    {
        double rounds = 0.0;
        for (int l = 1; l < deadline; ++l)
            rounds += beta(k, l);
        extra += binomial_pmf<double>(config.users, k, p_t) * rounds;
    }
    return p_t * config.users / (1.0 + extra);
}

} // namespace

double stability_region(Protocol protocol, const AntennaConfig &config, double p_t, double r_arrival, int deadline)
{
    config.validate();
    check_pt(p_t);
    switch (protocol)
    {
    case Protocol::gta:
        return 1.0 / gta_multiplexing_penalty(config, p_t);
    case Protocol::ondma:
        return ondma_region(config, p_t);
    case Protocol::irarq:
        if (deadline < 1)
            throw std::invalid_argument("deadline must be >= 1");
        return irarq_region(
            config, p_t,
            [&](int k, int l) {
                return static_cast<double>(beta_highsnr(k, config.tx_antennas, config.rx_antennas, r_arrival, l));
            },
            deadline);
    }
    throw std::invalid_argument("unknown protocol");
}

double stability_region(Protocol protocol, const AntennaConfig &config, double p_t, const BetaTable &beta)
{
    config.validate();
    check_pt(p_t);
    if (protocol != Protocol::irarq)
        return stability_region(protocol, config, p_t, 0.0, 1);
    if (beta.users() != config.users)
        throw std::invalid_argument("beta table user count does not match the configuration");
    return irarq_region(
        config, p_t, [&](int k, int l) { return beta(k, l); }, beta.deadline());
}

StabilityOptimum irarq_stability_grid_search(const AntennaConfig &config, const BetaTable &beta, double step)
{
    if (!(step > 0.0 && step <= 1.0))
        throw std::invalid_argument("grid step must lie in (0, 1]");
    StabilityOptimum best{1.0, stability_region(Protocol::irarq, config, 1.0, beta)};
    const int n = static_cast<int>(std::floor(1.0 / step));
    for (int i = n; i >= 1; --i)
    {
        const double p = i * step;
        if (p > 1.0)
            continue;
        const double v = stability_region(Protocol::irarq, config, p, beta);
        if (v > best.lambda_max)
            best = {p, v};
    }
    return best;
}

std::vector<TradeoffPoint> tradeoff_curve(Protocol protocol, const AntennaConfig &config, double p_t,
                                          std::optional<int> deadline, double step)
{
    config.validate();
    if (!(step > 0.0))
        throw std::invalid_argument("tradeoff_curve: step must be > 0");
    const double span = config.degrees_of_freedom();
    std::vector<TradeoffPoint> out;
    const int n = static_cast<int>(std::ceil(span / step - 1e-9));
    for (int i = 0; i < n; ++i)
    {
        const double r_e = i * step;
        if (r_e >= span)
            break;
        TradeoffPoint pt{r_e, 0.0, std::nullopt};
        switch (protocol)
        {
        case Protocol::gta:
            pt.d = gta_dmt(config, p_t, r_e);
            break;
        case Protocol::ondma:
            pt.d = ondma_dmt(config, p_t, r_e);
            break;
        case Protocol::irarq:
            pt.deadline = deadline.value_or(1);
            pt.d = irarq_dmdt(config, r_e, *pt.deadline);
            break;
        }
        out.push_back(pt);
    }
    return out;
}

void write_tradeoff_csv_header(std::ostream &os) { os << "r_e,d,protocol,L,p_t\n"; }

void write_tradeoff_csv(std::ostream &os, Protocol protocol, double p_t, const std::vector<TradeoffPoint> &points)
{
    const auto old = os.precision(12);
    for (const auto &pt : points)
    {
        os << pt.r_e << ',' << pt.d << ',' << to_string(protocol) << ',';
        if (pt.deadline)
            os << *pt.deadline;
        os << ',' << p_t << '\n';
    }
    os.precision(old);
}

} // namespace arqlab::dmt
