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


#include "arqlab/queueing.hpp"

#include "arqlab/binomial.hpp"
#include "arqlab/dmt.hpp"
#include "arqlab/parallel.hpp"
#include "arqlab/phy.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <stdexcept>

namespace arqlab::queueing
{

namespace
{

double extra_rounds_mix(int users, double p, const BetaTable &beta)
{
    double s = 0.0;
    for (int k = 1; k <= users; ++k)
        s += binomial_pmf<double>(users, k, p) * beta.extra_rounds(k);
    return s;
}

void check_beta(int users, const BetaTable &beta)
{
    if (users < 1)
        throw std::invalid_argument("users must be >= 1");
    if (beta.users() != users)
        throw std::invalid_argument("beta table user count does not match K");
}

/// Half-width of a 95% interval from batch means.
double batch_half_width(const std::vector<double> &means)
{
    const auto n = means.size();
    if (n < 2)
        return std::numeric_limits<double>::infinity();
    double m = 0.0;
    for (double x : means)
        m += x;
    m /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : means)
        ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const boost::math::students_t dist(static_cast<double>(n - 1));
    return boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(static_cast<double>(n));
}

/// Arrival-time generator for one user.
class ArrivalStream
{
  public:
    ArrivalStream(ArrivalKind kind, double rate, Rng &rng) : kind_(kind), rate_(rate)
    {
        if (kind_ == ArrivalKind::bernoulli && rate_ > 1.0)
            throw std::invalid_argument("Bernoulli arrivals need lambda / K <= 1");
        next_ = rate_ > 0.0 ? draw(0.0, rng) : std::numeric_limits<double>::infinity();
    }

    double peek() const { return next_; }

    void advance(Rng &rng) { next_ = draw(next_, rng); }

  private:
    double draw(double after, Rng &rng)
    {
        if (kind_ == ArrivalKind::poisson)
            return after + std::exponential_distribution<double>(rate_)(rng);
        // At most one arrival per slot, uniform within the slot.
        double slot = std::floor(after) + (after > 0.0 ? 1.0 : 0.0);
        if (rate_ < 1.0)
            slot += static_cast<double>(std::geometric_distribution<std::uint64_t>(rate_)(rng));
        return slot + uniform01(rng);
    }

    ArrivalKind kind_;
    double rate_;
    double next_;
};

} // namespace

TransmissionProbability solve_transmission_probability(double lambda, int users, double p_t,
                                                       const BetaTable &beta)
{
    check_beta(users, beta);
    if (!(lambda >= 0.0))
        throw std::invalid_argument("lambda must be >= 0");
    if (!(p_t > 0.0 && p_t <= 1.0))
        throw std::invalid_argument("p_t must lie in (0, 1]");

    TransmissionProbability out;
    if (lambda == 0.0)
    {
        out.solvable = true;
        out.empty_queue = true;
        return out;
    }
    const double k = users;
    auto g = [&](double p) { return k * p - lambda * (1.0 + extra_rounds_mix(users, p, beta)); };

    // g(0) = -lambda < 0. Locate the first sign change on a grid, then bisect.
    constexpr int grid = 1000;
    double lo = 0.0;
    double hi = -1.0;
    for (int i = 1; i <= grid; ++i)
    {
        const double p = p_t * i / grid;
        const double v = g(p);
        if (v >= 0.0)
        {
            hi = p;
            break;
        }
        lo = p;
    }
    if (hi < 0.0)
    {
        // A root that only touches zero at p_t (double root) still counts.
        if (std::abs(g(p_t)) <= 1e-12)
        {
            out.p = p_t;
            out.solvable = true;
            out.residual = g(p_t);
        }
        else
        {
            out.p = p_t;
            out.residual = g(p_t);
        }
        return out;
    }
    while (hi - lo > 1e-12)
    {
        const double mid = 0.5 * (lo + hi);
        (g(mid) >= 0.0 ? hi : lo) = mid;
    }
    out.p = hi;
    out.solvable = true;
    out.residual = g(hi);
    return out;
}

EpochMoments epoch_length_moments(double p, int users, const BetaTable &beta)
{
    check_beta(users, beta);
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("p must lie in [0, 1]");
    EpochMoments m;
    for (int k = 1; k <= users; ++k)
    {
        const double b = binomial_pmf<double>(users - 1, k - 1, p);
        m.u1 += b * beta.extra_rounds(k);
        m.u2 += b * beta.weighted_extra_rounds(k);
    }
    for (int k = 1; k <= users - 1; ++k)
    {
        const double b = binomial_pmf<double>(users - 1, k, p);
        m.v1 += b * beta.extra_rounds(k);
        m.v2 += b * beta.weighted_extra_rounds(k);
    }
    return m;
}

double analytic_delay(double lambda, int users, double p_t, const BetaTable &beta)
{
    const auto tp = solve_transmission_probability(lambda, users, p_t, beta);
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (!tp.solvable)
        return inf;
    const double region = users * p_t / (1.0 + extra_rounds_mix(users, p_t, beta));
    if (lambda >= region)
        return inf;
    const auto m = epoch_length_moments(tp.p, users, beta);
    const double q = 1.0 / p_t - 1.0;
    const double y1 = m.u1 + q * m.v1;
    const double y2 = m.u2 + (2.0 - p_t) * (1.0 - p_t) / (p_t * p_t) * m.v2 + 2.0 * q * m.u1 * m.v1;
    const double den = 2.0 * (users - lambda * y1);
    if (!(den > 0.0))
        return inf;
    return y1 + lambda * y2 / den + m.v2 / (2.0 * m.v1);
}

std::string_view to_string(Verdict v)
{
    switch (v)
    {
    case Verdict::stable:
        return "stable";
    case Verdict::unstable:
        return "unstable";
    case Verdict::inconclusive:
        return "inconclusive";
    }
    return "?";
}

DelayReport simulate_random_arrivals(Protocol protocol, const AntennaConfig &config,
                                     const protocols::ProtocolParams &params, double lambda, double snr,
                                     std::uint64_t seed, const RandomAccessOptions &opts)
{
    config.validate();
    params.validate();
    if (!(lambda >= 0.0))
        throw std::invalid_argument("lambda must be >= 0");
    if (opts.horizon == 0)
        throw std::invalid_argument("horizon must be >= 1");
    if (!(opts.warmup_fraction >= 0.0 && opts.warmup_fraction < 1.0))
        throw std::invalid_argument("warmup fraction must lie in [0, 1)");
    if (opts.batches < 2)
        throw std::invalid_argument("at least 2 batches are required");

    const int users = config.users;
    const double horizon = static_cast<double>(opts.horizon);
    const double warm = opts.warmup_fraction * horizon;
    const double half = 0.5 * horizon;
    const double batch_len = (horizon - warm) / opts.batches;
    auto batch_of = [&](double t) {
        return std::clamp(static_cast<int>((t - warm) / batch_len), 0, opts.batches - 1);
    };

    Rng rng = make_stream(seed, 0);
    phy::ChannelSet ch = phy::draw_channels(config, snr, rng);
    protocols::EpochRunner runner;

    std::vector<std::deque<double>> queues(users);
    std::vector<ArrivalStream> streams;
    streams.reserve(users);
    for (int i = 0; i < users; ++i)
        streams.emplace_back(opts.arrivals, lambda / users, rng);
    std::vector<std::uint8_t> blocked(users, 0);

    DelayReport rep;
    rep.lambda = lambda;
    rep.seed = seed;
    std::vector<double> delay_sum(opts.batches, 0.0);
    std::vector<std::uint64_t> delay_n(opts.batches, 0);
    std::vector<std::uint64_t> err_n(opts.batches, 0), nonidle_n(opts.batches, 0);
    std::vector<std::uint64_t> user_errors(users, 0);
    std::uint64_t backlog = 0;
    // Backlog regression sums, x measured from the middle of the horizon.
    double sn = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;

    std::vector<int> eligible, participants;
    eligible.reserve(users);
    std::uint64_t t = 0;
    while (static_cast<double>(t) < horizon)
    {
        const double now = static_cast<double>(t);
        for (int i = 0; i < users; ++i)
            while (streams[i].peek() < now)
            {
                queues[i].push_back(streams[i].peek());
                streams[i].advance(rng);
                ++rep.arrivals;
                ++backlog;
            }
        if (rep.arrivals != rep.departures + backlog)
            throw std::logic_error("packet ledger out of balance");

        if (now >= half)
        {
            const double x = now - half;
            const double y = static_cast<double>(backlog);
            sn += 1.0;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }

        eligible.clear();
        for (int i = 0; i < users; ++i)
        {
            if (!queues[i].empty() && !blocked[i])
                eligible.push_back(i);
            blocked[i] = 0;
        }
        protocols::choose_participants(eligible, params.p_t, rng, participants);
        ++rep.epochs;
        if (participants.empty())
        {
            ++ch.epoch;
            if (opts.trace)
                *opts.trace << "epoch=" << ch.epoch << " slot=1 active=- idle\n";
            ++t;
            continue;
        }

        phy::redraw_channels(ch, rng);
        protocols::EpochContext ctx{participants, ch, params, rng, opts.trace};
        const auto &out = runner.run(protocol, ctx);
        const std::uint64_t end = t + static_cast<std::uint64_t>(out.length);
        const double end_time = static_cast<double>(end);
        const bool measured_epoch = now >= warm;
        bool any_error = false;
        for (std::size_t j = 0; j < out.participants.size(); ++j)
        {
            const int u = out.participants[j];
            if (out.pruned[j])
            {
                blocked[u] = opts.pruned_wait_one_epoch ? 1 : 0;
                continue;
            }
            if (!out.delivered[j])
                continue;
            const double arrived = queues[u].front();
            queues[u].pop_front();
            --backlog;
            ++rep.departures;
            if (arrived >= warm)
            {
                const int b = batch_of(arrived);
                delay_sum[b] += end_time - arrived;
                ++delay_n[b];
            }
            if (!out.decoded_ok[j])
            {
                any_error = true;
                if (measured_epoch)
                    ++user_errors[u];
            }
        }
        if (measured_epoch)
        {
            const int b = batch_of(now);
            ++nonidle_n[b];
            ++rep.nonidle_epochs;
            if (any_error)
            {
                ++err_n[b];
                ++rep.error_epochs;
            }
        }
        t = end;
    }
    if (rep.arrivals != rep.departures + backlog)
        throw std::logic_error("packet ledger out of balance");
    rep.final_backlog = backlog;
    rep.slots = t;

    // Delay and error estimates with batch-means intervals.
    double dsum = 0.0;
    std::uint64_t dn = 0;
    std::vector<double> dmeans, emeans;
    for (int b = 0; b < opts.batches; ++b)
    {
        dsum += delay_sum[b];
        dn += delay_n[b];
        if (delay_n[b] > 0)
            dmeans.push_back(delay_sum[b] / static_cast<double>(delay_n[b]));
        if (nonidle_n[b] > 0)
            emeans.push_back(static_cast<double>(err_n[b]) / static_cast<double>(nonidle_n[b]));
    }
    rep.measured_packets = dn;
    rep.delay = dn > 0 ? dsum / static_cast<double>(dn) : std::numeric_limits<double>::quiet_NaN();
    rep.delay_ci = batch_half_width(dmeans);
    const double ne = static_cast<double>(std::max<std::uint64_t>(rep.nonidle_epochs, 1));
    rep.pe = static_cast<double>(rep.error_epochs) / ne;
    rep.pe_ci = batch_half_width(emeans);
    std::uint64_t user_sum = 0;
    for (int u = 0; u < users; ++u)
    {
        rep.per_user_pe.push_back(static_cast<double>(user_errors[u]) / ne);
        user_sum += user_errors[u];
        if (user_errors[u] > rep.error_epochs)
            throw std::logic_error("per-user / system error sandwich bound violated");
    }
    if (rep.error_epochs > user_sum)
        throw std::logic_error("per-user / system error sandwich bound violated");

    const double det = sn * sxx - sx * sx;
    if (sn >= 2.0 && det > 0.0)
    {
        rep.slope = (sn * sxy - sx * sy) / det;
        if (std::abs(rep.slope) < opts.slope_epsilon)
            rep.verdict = Verdict::stable;
        else if (rep.slope > opts.slope_epsilon)
            rep.verdict = Verdict::unstable;
    }
    else if (rep.arrivals == 0)
        rep.verdict = Verdict::stable;
    return rep;
}

DelayReport merge_reports(std::span<const DelayReport> reports)
{
    if (reports.empty())
        throw std::invalid_argument("merge_reports: nothing to merge");
    DelayReport m;
    m.lambda = reports.front().lambda;
    m.seed = reports.front().seed;
    m.verdict = reports.front().verdict;
    double dw = 0.0, d = 0.0, dci = 0.0, ew = 0.0, eci = 0.0, slope = 0.0;
    m.per_user_pe.assign(reports.front().per_user_pe.size(), 0.0);
    for (const auto &r : reports)
    {
        const double wd = static_cast<double>(r.measured_packets);
        const double we = static_cast<double>(r.nonidle_epochs);
        if (wd > 0.0)
        {
            d += wd * r.delay;
            dci += wd * wd * r.delay_ci * r.delay_ci;
            dw += wd;
        }
        eci += we * we * r.pe_ci * r.pe_ci;
        ew += we;
        for (std::size_t u = 0; u < m.per_user_pe.size() && u < r.per_user_pe.size(); ++u)
            m.per_user_pe[u] += we * r.per_user_pe[u];
        slope += r.slope;
        if (r.verdict != m.verdict)
            m.verdict = Verdict::inconclusive;
        m.arrivals += r.arrivals;
        m.departures += r.departures;
        m.measured_packets += r.measured_packets;
        m.epochs += r.epochs;
        m.nonidle_epochs += r.nonidle_epochs;
        m.error_epochs += r.error_epochs;
        m.final_backlog += r.final_backlog;
        m.slots += r.slots;
    }
    m.delay = dw > 0.0 ? d / dw : std::numeric_limits<double>::quiet_NaN();
    m.delay_ci = dw > 0.0 ? std::sqrt(dci) / dw : std::numeric_limits<double>::infinity();
    m.pe = ew > 0.0 ? static_cast<double>(m.error_epochs) / ew : 0.0;
    m.pe_ci = ew > 0.0 ? std::sqrt(eci) / ew : std::numeric_limits<double>::infinity();
    for (auto &x : m.per_user_pe)
        x = ew > 0.0 ? x / ew : 0.0;
    m.slope = slope / static_cast<double>(reports.size());
    return m;
}

std::optional<double> boundary_from_verdicts(std::span<const double> lambda_grid, std::span<const Verdict> verdicts)
{
    if (lambda_grid.size() != verdicts.size())
        throw std::invalid_argument("grid and verdict sizes differ");
    std::optional<std::size_t> last_stable;
    for (std::size_t i = 0; i < verdicts.size(); ++i)
    {
        if (verdicts[i] == Verdict::unstable)
        {
            if (!last_stable)
                return std::nullopt;
            return 0.5 * (lambda_grid[*last_stable] + lambda_grid[i]);
        }
        if (verdicts[i] == Verdict::stable)
            last_stable = i;
    }
    return std::nullopt;
}

BoundaryScan stability_boundary_scan(Protocol protocol, const AntennaConfig &config,
                                     const protocols::ProtocolParams &params, double snr,
                                     std::span<const double> lambda_grid, std::uint64_t seed,
                                     const RandomAccessOptions &opts, int workers)
{
    if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end()))
        throw std::invalid_argument("lambda grid must be sorted ascending");
    BoundaryScan scan;
    scan.reports.resize(lambda_grid.size());
    RandomAccessOptions quiet = opts;
    quiet.trace = nullptr;
    for_each_chunk_ordered(
        lambda_grid.size(), workers,
        [&](std::uint64_t i) {
            return simulate_random_arrivals(protocol, config, params, lambda_grid[i], snr, derive_seed(seed, i),
                                            quiet);
        },
        [&](std::uint64_t i, DelayReport &&r) {
            scan.reports[i] = std::move(r);
            return true;
        });
    std::vector<Verdict> verdicts;
    for (const auto &r : scan.reports)
        verdicts.push_back(r.verdict);
    scan.boundary = boundary_from_verdicts(lambda_grid, verdicts);
    return scan;
}

} // namespace arqlab::queueing
