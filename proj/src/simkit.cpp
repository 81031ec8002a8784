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


#include "arqlab/simkit.hpp"

#include "arqlab/binomial.hpp"
#include "arqlab/parallel.hpp"
#include "arqlab/phy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace arqlab::sim
{

namespace
{

std::uint64_t chunk_count(std::uint64_t total, std::uint64_t chunk)
{
    return (total + chunk - 1) / chunk;
}

std::uint64_t chunk_extent(std::uint64_t total, std::uint64_t chunk, std::uint64_t index)
{
    return std::min(chunk, total - index * chunk);
}

void check_options(const SimOptions &opts)
{
    if (opts.chunk_size == 0)
        throw std::invalid_argument("SimOptions: chunk_size must be >= 1");
}

std::vector<int> first_users(int k)
{
    std::vector<int> v(k);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

} // namespace

BetaTable estimate_beta(const AntennaConfig &config, double snr, double rate, int deadline, std::uint64_t trials,
                        std::uint64_t seed, const SimOptions &opts)
{
    config.validate();
    check_options(opts);
    if (trials == 0)
        throw std::invalid_argument("estimate_beta: trials must be >= 1");
    if (deadline < 1)
        throw std::invalid_argument("estimate_beta: deadline must be >= 1");
    if (!(snr > 0.0) || rate < 0.0)
        throw std::invalid_argument("estimate_beta: snr must be > 0 and rate >= 0");

    const int users = config.users;
    struct Counts
    {
        // still_failing(k, l): trials whose first decodable round exceeds l.
        Eigen::Array<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic> still_failing;
        Eigen::Array<std::uint64_t, Eigen::Dynamic, 1> len_sum, len_sq_sum;
    };
    Counts total{decltype(Counts::still_failing)::Zero(users + 1, deadline + 1),
                 decltype(Counts::len_sum)::Zero(users + 1), decltype(Counts::len_sq_sum)::Zero(users + 1)};

    auto compute = [&](std::uint64_t chunk) {
        Counts c{decltype(Counts::still_failing)::Zero(users + 1, deadline + 1),
                 decltype(Counts::len_sum)::Zero(users + 1), decltype(Counts::len_sq_sum)::Zero(users + 1)};
        Rng rng = make_stream(seed, chunk);
        phy::ChannelSet ch = phy::draw_channels(config, snr, rng);
        phy::SubsetInformation info;
        const std::uint64_t n = chunk_extent(trials, opts.chunk_size, chunk);
        for (int k = 1; k <= users; ++k)
        {
            const auto active = first_users(k);
            for (std::uint64_t t = 0; t < n; ++t)
            {
                phy::redraw_channels(ch, rng);
                info.assign(ch, active, snr);
                const int first_ok = info.first_decodable_round(rate, deadline);
                for (int l = 1; l < first_ok && l <= deadline; ++l)
                    ++c.still_failing(k, l);
                const auto len = static_cast<std::uint64_t>(std::min(first_ok, deadline));
                c.len_sum(k) += len;
                c.len_sq_sum(k) += len * len;
            }
        }
        return c;
    };
    for_each_chunk_ordered(chunk_count(trials, opts.chunk_size), opts.workers, compute,
                           [&](std::uint64_t, Counts &&c) {
                               total.still_failing += c.still_failing;
                               total.len_sum += c.len_sum;
                               total.len_sq_sum += c.len_sq_sum;
                               return true;
                           });

    BetaTable table(users, deadline, BetaSource::monte_carlo);
    table.trials = trials;
    table.snr = snr;
    const double n = static_cast<double>(trials);
    for (int k = 1; k <= users; ++k)
    {
        for (int l = 1; l <= deadline; ++l)
        {
            const double b = static_cast<double>(total.still_failing(k, l)) / n;
            table(k, l) = b;
            table.stderr_(k, l) = std::sqrt(b * (1.0 - b) / n);
        }
        const double mean = static_cast<double>(total.len_sum(k)) / n;
        const double var = std::max(0.0, static_cast<double>(total.len_sq_sum(k)) / n - mean * mean);
        table.length_stderr(k) = std::sqrt(var / n);
    }
    return table;
}

EpochStatistics estimate_epoch_statistics(Protocol protocol, const AntennaConfig &config,
                                          const protocols::ProtocolParams &params, double snr, std::uint64_t trials,
                                          std::uint64_t seed, const SimOptions &opts)
{
    config.validate();
    params.validate();
    check_options(opts);
    if (trials == 0)
        throw std::invalid_argument("estimate_epoch_statistics: trials must be >= 1");

    const int users = config.users;
    using Sums = Eigen::Array<std::uint64_t, Eigen::Dynamic, 5>; // len, del, len^2, del^2, len*del
    Sums total = Sums::Zero(users + 1, 5);

    auto compute = [&](std::uint64_t chunk) {
        Sums s = Sums::Zero(users + 1, 5);
        Rng rng = make_stream(seed, chunk);
        phy::ChannelSet ch = phy::draw_channels(config, snr, rng);
        protocols::EpochRunner runner;
        const std::uint64_t n = chunk_extent(trials, opts.chunk_size, chunk);
        for (int k = 1; k <= users; ++k)
        {
            const auto active = first_users(k);
            for (std::uint64_t t = 0; t < n; ++t)
            {
                phy::redraw_channels(ch, rng);
                const auto &out = runner.run(protocol, {active, ch, params, rng});
                const auto len = static_cast<std::uint64_t>(out.length);
                const auto del = static_cast<std::uint64_t>(out.delivered_count());
                s(k, 0) += len;
                s(k, 1) += del;
                s(k, 2) += len * len;
                s(k, 3) += del * del;
                s(k, 4) += len * del;
            }
        }
        return s;
    };
    for_each_chunk_ordered(chunk_count(trials, opts.chunk_size), opts.workers, compute,
                           [&](std::uint64_t, Sums &&s) {
                               total += s;
                               return true;
                           });

    EpochStatistics st;
    st.trials = trials;
    st.mean_length = Eigen::ArrayXd::Zero(users + 1);
    st.mean_delivered = Eigen::ArrayXd::Zero(users + 1);
    st.var_length = Eigen::ArrayXd::Zero(users + 1);
    st.var_delivered = Eigen::ArrayXd::Zero(users + 1);
    st.cov_length_delivered = Eigen::ArrayXd::Zero(users + 1);
    st.mean_length(0) = 1.0; // idle slot
    const double n = static_cast<double>(trials);
    for (int k = 1; k <= users; ++k)
    {
        const double ml = static_cast<double>(total(k, 0)) / n;
        const double md = static_cast<double>(total(k, 1)) / n;
        st.mean_length(k) = ml;
        st.mean_delivered(k) = md;
        st.var_length(k) = std::max(0.0, static_cast<double>(total(k, 2)) / n - ml * ml);
        st.var_delivered(k) = std::max(0.0, static_cast<double>(total(k, 3)) / n - md * md);
        st.cov_length_delivered(k) = static_cast<double>(total(k, 4)) / n - ml * md;
    }
    return st;
}

RenewalThroughput irarq_renewal_throughput(const BetaTable &beta, double p_t)
{
    if (!(p_t > 0.0 && p_t <= 1.0))
        throw std::invalid_argument("p_t must lie in (0, 1]");
    const int users = beta.users();
    double den = 1.0;
    double var_den = 0.0;
    for (int k = 1; k <= users; ++k)
    {
        const double b = binomial_pmf<double>(users, k, p_t);
        den += b * beta.extra_rounds(k);
        if (beta.length_stderr.size() > k)
            var_den += b * b * beta.length_stderr(k) * beta.length_stderr(k);
    }
    const double num = p_t * users;
    return {num / den, num / (den * den) * std::sqrt(var_den)};
}

RenewalThroughput renewal_throughput(const EpochStatistics &stats, double p_t)
{
    if (!(p_t > 0.0 && p_t <= 1.0))
        throw std::invalid_argument("p_t must lie in (0, 1]");
    const int users = stats.users();
    const double n = static_cast<double>(stats.trials);
    double num = 0.0, den = 0.0, var_num = 0.0, var_den = 0.0, cov = 0.0;
    for (int k = 0; k <= users; ++k)
    {
        const double b = binomial_pmf<double>(users, k, p_t);
        num += b * stats.mean_delivered(k);
        den += b * stats.mean_length(k);
        var_num += b * b * stats.var_delivered(k) / n;
        var_den += b * b * stats.var_length(k) / n;
        cov += b * b * stats.cov_length_delivered(k) / n;
    }
    const double eta = num / den;
    const double var = (var_num + eta * eta * var_den - 2.0 * eta * cov) / (den * den);
    return {eta, std::sqrt(std::max(0.0, var))};
}

ThroughputEstimate fully_loaded_throughput(Protocol protocol, const AntennaConfig &config,
                                           const protocols::ProtocolParams &params, double snr, std::uint64_t slots,
                                           std::uint64_t seed, const SimOptions &opts)
{
    config.validate();
    params.validate();
    check_options(opts);
    if (slots == 0)
        throw std::invalid_argument("fully_loaded_throughput: slots must be >= 1");

    struct Sums
    {
        std::uint64_t epochs = 0, len = 0, del = 0, len_sq = 0, del_sq = 0, len_del = 0;
    };
    Sums total;
    const auto everyone = first_users(config.users);

    auto compute = [&](std::uint64_t chunk) {
        Sums s;
        Rng rng = make_stream(seed, chunk);
        phy::ChannelSet ch = phy::draw_channels(config, snr, rng);
        protocols::EpochRunner runner;
        std::vector<int> participants;
        const std::uint64_t budget = chunk_extent(slots, opts.chunk_size, chunk);
        while (s.len < budget)
        {
            protocols::choose_participants(everyone, params.p_t, rng, participants);
            phy::redraw_channels(ch, rng);
            const auto &out = runner.run(protocol, {participants, ch, params, rng});
            const auto len = static_cast<std::uint64_t>(out.length);
            const auto del = static_cast<std::uint64_t>(out.delivered_count());
            ++s.epochs;
            s.len += len;
            s.del += del;
            s.len_sq += len * len;
            s.del_sq += del * del;
            s.len_del += len * del;
        }
        return s;
    };
    for_each_chunk_ordered(chunk_count(slots, opts.chunk_size), opts.workers, compute, [&](std::uint64_t, Sums &&s) {
        total.epochs += s.epochs;
        total.len += s.len;
        total.del += s.del;
        total.len_sq += s.len_sq;
        total.del_sq += s.del_sq;
        total.len_del += s.len_del;
        return true;
    });

    ThroughputEstimate est;
    est.slots = total.len;
    est.epochs = total.epochs;
    const double n = static_cast<double>(total.epochs);
    const double eta = static_cast<double>(total.del) / static_cast<double>(total.len);
    const double mean_len = static_cast<double>(total.len) / n;
    // Ratio estimator: residuals del - eta * len have zero mean.
    const double s2 = (static_cast<double>(total.del_sq) - 2.0 * eta * static_cast<double>(total.len_del) +
                       eta * eta * static_cast<double>(total.len_sq)) /
                      n;
    est.packets_per_slot = eta;
    est.stderr_ = std::sqrt(std::max(0.0, s2) / n) / mean_len;
    est.bits_per_channel_use = eta * params.rate;
    return est;
}

bool ErrorEstimate::sandwich_holds() const
{
    std::uint64_t sum = 0;
    for (auto e : user_errors)
    {
        if (e > error_epochs)
            return false;
        sum += e;
    }
    return error_epochs <= sum;
}

ErrorEstimate system_error_probability(Protocol protocol, const AntennaConfig &config,
                                       const protocols::ProtocolParams &params, double snr, const ErrorStopRule &stop,
                                       std::uint64_t seed, const SimOptions &opts)
{
    config.validate();
    params.validate();
    check_options(opts);
    if (stop.max_epochs == 0)
        throw std::invalid_argument("system_error_probability: trials must be >= 1");
    if (stop.forced_participants && (*stop.forced_participants < 1 || *stop.forced_participants > config.users))
        throw std::invalid_argument("system_error_probability: forced participant count out of range");

    const int users = config.users;
    struct Counts
    {
        std::uint64_t epochs = 0, nonidle = 0, errors = 0;
        std::vector<std::uint64_t> user_errors;
    };
    Counts total;
    total.user_errors.assign(users, 0);
    const auto everyone = first_users(users);

    auto compute = [&](std::uint64_t chunk) {
        Counts c;
        c.user_errors.assign(users, 0);
        Rng rng = make_stream(seed, chunk);
        phy::ChannelSet ch = phy::draw_channels(config, snr, rng);
        protocols::EpochRunner runner;
        std::vector<int> participants;
        if (stop.forced_participants)
            participants = first_users(*stop.forced_participants);
        const std::uint64_t n = chunk_extent(stop.max_epochs, opts.chunk_size, chunk);
        for (std::uint64_t t = 0; t < n; ++t)
        {
            if (!stop.forced_participants)
                protocols::choose_participants(everyone, params.p_t, rng, participants);
            phy::redraw_channels(ch, rng);
            const auto &out = runner.run(protocol, {participants, ch, params, rng});
            ++c.epochs;
            if (out.idle())
                continue;
            ++c.nonidle;
            bool any = false;
            for (std::size_t i = 0; i < out.participants.size(); ++i)
                if (out.delivered[i] && !out.decoded_ok[i])
                {
                    ++c.user_errors[out.participants[i]];
                    any = true;
                }
            c.errors += any ? 1 : 0;
        }
        return c;
    };
    for_each_chunk_ordered(chunk_count(stop.max_epochs, opts.chunk_size), opts.workers, compute,
                           [&](std::uint64_t, Counts &&c) {
                               total.epochs += c.epochs;
                               total.nonidle += c.nonidle;
                               total.errors += c.errors;
                               for (int u = 0; u < users; ++u)
                                   total.user_errors[u] += c.user_errors[u];
                               return stop.target_errors == 0 || total.errors < stop.target_errors;
                           });

    ErrorEstimate est;
    est.epochs = total.epochs;
    est.nonidle_epochs = total.nonidle;
    est.error_epochs = total.errors;
    est.user_errors = total.user_errors;
    const double n = static_cast<double>(std::max<std::uint64_t>(total.nonidle, 1));
    est.pe = static_cast<double>(total.errors) / n;
    est.stderr_ = std::sqrt(est.pe * (1.0 - est.pe) / n);
    for (auto e : total.user_errors)
        est.per_user.push_back(static_cast<double>(e) / n);
    if (!est.sandwich_holds())
        throw std::logic_error("per-user / system error sandwich bound violated");
    return est;
}

double diversity_slope(std::span<const std::pair<double, double>> snr_pe)
{
    if (snr_pe.size() < 3)
        throw std::invalid_argument("diversity_slope: at least 3 samples required");
    double top = 0.0;
    for (const auto &[snr, pe] : snr_pe)
    {
        if (!(pe > 0.0))
            throw std::invalid_argument("diversity_slope: error probabilities must be > 0");
        if (!(snr > 0.0))
            throw std::invalid_argument("diversity_slope: snr must be > 0");
        top = std::max(top, snr);
    }
    std::vector<std::pair<double, double>> xy;
    for (const auto &[snr, pe] : snr_pe)
        if (snr >= top / 10.0 * (1.0 - 1e-12))
            xy.emplace_back(std::log2(snr), -std::log2(pe));
    if (xy.size() < 2)
    {
        xy.clear();
        for (const auto &[snr, pe] : snr_pe)
            xy.emplace_back(std::log2(snr), -std::log2(pe));
    }
    const double n = static_cast<double>(xy.size());
    double mx = 0.0, my = 0.0;
    for (const auto &[x, y] : xy)
    {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (const auto &[x, y] : xy)
    {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if (sxx <= 0.0)
        throw std::invalid_argument("diversity_slope: samples need distinct snr values");
    return sxy / sxx;
}

void write_sim_csv_header(std::ostream &os) { os << "snr_db,protocol,L,p_t,r,metric,value,stderr,trials,seed\n"; }

void write_sim_csv(std::ostream &os, const SimRecord &rec)
{
    const auto old = os.precision(10);
    os << rec.snr_db << ',' << rec.protocol << ',';
    if (rec.deadline)
        os << *rec.deadline;
    os << ',' << rec.p_t << ',' << rec.r << ',' << rec.metric << ',' << rec.value << ',' << rec.stderr_ << ','
       << rec.trials << ',' << rec.seed << '\n';
    os.precision(old);
}

} // namespace arqlab::sim
