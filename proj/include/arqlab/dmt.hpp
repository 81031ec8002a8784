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


#ifndef ARQLAB_DMT_HPP
#define ARQLAB_DMT_HPP

// Closed-form diversity-multiplexing(-delay) tradeoffs, GTA epoch recursions,
// effective multiplexing gains and stability regions for the three random
// access protocols.

#include "arqlab/beta_table.hpp"
#include "arqlab/binomial.hpp"
#include "arqlab/types.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace arqlab::dmt
{

using Rational = boost::rational<boost::multiprecision::cpp_int>;

/// Optimal point-to-point MIMO tradeoff d^{M,N}(r): the piecewise-linear
/// curve through (k, (M - k)(N - k)), k = 0..min{M, N}. This is the only
/// primitive curve; every multi-user tradeoff below is expressed through it.
template <typename Scalar>
Scalar point_to_point_dmt(int tx, int rx, Scalar r)
{
    if (tx < 1 || rx < 1)
        throw std::invalid_argument("point_to_point_dmt: antenna counts must be >= 1");
    if (!(r >= Scalar(0)))
        throw std::invalid_argument("point_to_point_dmt: multiplexing gain must be >= 0");
    const int kmax = std::min(tx, rx);
    if (r >= Scalar(kmax))
        return Scalar(0);
    int k = 0;
    while (Scalar(k + 1) <= r)
        ++k;
    const Scalar frac = r - Scalar(k);
    const Scalar lo = Scalar((tx - k) * (rx - k));
    const Scalar hi = Scalar((tx - k - 1) * (rx - k - 1));
    return lo + (hi - lo) * frac;
}

/// Tradeoff of the coordinated k-user multiple access channel. Below
/// r = min{M, N/(k+1)} each user sees its own point-to-point curve; above
/// it the users behave as one kM-antenna transmitter at rate kr.
template <typename Scalar>
Scalar mac_dmt(int k, int tx, int rx, Scalar r)
{
    if (k < 1)
        throw std::invalid_argument("mac_dmt: k must be >= 1");
    const Scalar threshold = std::min(Scalar(tx), Scalar(rx) / Scalar(k + 1));
    if (r <= threshold)
        return point_to_point_dmt<Scalar>(tx, rx, r);
    return point_to_point_dmt<Scalar>(k * tx, rx, Scalar(k) * r);
}

/// Expected epoch length X_k (slots) and expected number of delivered
/// packets J_k of a GTA epoch started by a k-user collision.
template <typename Scalar>
struct GtaRecursionTable
{
    std::vector<Scalar> expected_length;
    std::vector<Scalar> expected_delivered;

    int max_collision() const { return static_cast<int>(expected_length.size()) - 1; }
};

/// Solves the self-referential GTA recursions for k = 0..k_max. The X_k and
/// J_k terms on the right-hand side (empty and full left subgroup) are moved
/// to the left, so each row is solved exactly in one step.
template <typename Scalar>
GtaRecursionTable<Scalar> gta_recursion(int k_max)
{
    if (k_max < 0)
        throw std::invalid_argument("gta_recursion: k_max must be >= 0");
    GtaRecursionTable<Scalar> t;
    t.expected_length.assign(std::max(k_max, 1) + 1, Scalar(0));
    t.expected_delivered.assign(std::max(k_max, 1) + 1, Scalar(0));
    t.expected_length[0] = Scalar(1);
    t.expected_length[1] = Scalar(1);
    t.expected_delivered[0] = Scalar(0);
    t.expected_delivered[1] = Scalar(1);

    const Scalar half = Scalar(1) / Scalar(2);
    for (int k = 2; k <= k_max; ++k)
    {
        const Scalar self = binomial_pmf<Scalar>(k, 0, half) + binomial_pmf<Scalar>(k, k, half);
        const Scalar b1 = binomial_pmf<Scalar>(k, 1, half);
        Scalar x = Scalar(1) + b1 * (Scalar(1) + t.expected_length[k - 1]);
        Scalar j = b1 * (Scalar(1) + t.expected_delivered[k - 1]);
        for (int i = 2; i < k; ++i)
        {
            const Scalar b = binomial_pmf<Scalar>(k, i, half);
            x = x + b * t.expected_length[i];
            j = j + b * t.expected_delivered[i];
        }
        t.expected_length[k] = x / (Scalar(1) - self);
        t.expected_delivered[k] = j / (Scalar(1) - self);
    }
    t.expected_length.resize(k_max + 1);
    t.expected_delivered.resize(k_max + 1);
    return t;
}

/// Exact table converted to double.
GtaRecursionTable<double> gta_table(int k_max);

double to_double(const Rational &q);

/// Multiplexing penalty of GTA: sum_k B(K,k,p_t) X_k / sum_k B(K,k,p_t) J_k.
/// The GTA tradeoff is d_1^MAC(penalty * r_e).
double gta_multiplexing_penalty(const AntennaConfig &config, double p_t);

double gta_dmt(const AntennaConfig &config, double p_t, double r_e);

/// Transmission probability that minimizes the multiplexing penalty (and so
/// maximizes both the r_e span and the GTA stability region).
double gta_optimal_pt(const AntennaConfig &config);

/// O-NDMA tradeoff d_1^MAC(r) with r = (K p_t + (1 - p_t)^K) / (K p_t) r_e.
double ondma_dmt(const AntennaConfig &config, double p_t, double r_e);

/// High-SNR limit of beta_k(l): 1(r > min{lM, lN/k}). Exactly at the
/// threshold the indicator returns 0.
int beta_highsnr(int k, int tx, int rx, double r, int l);

/// beta_k(l) supplier, indexed (k, l).
using BetaFn = std::function<double(int k, int l)>;

/// Table of high-SNR indicators for first-round gain r.
BetaTable high_snr_beta_table(const AntennaConfig &config, double r, int deadline);

/// r_e = p_t K r / (1 + sum_k B(K,k,p_t) sum_{l<L} beta_k(l)).
double irarq_effective_multiplexing(const AntennaConfig &config, double p_t, double r, int deadline,
                                    const BetaFn &beta);

/// Same, with the high-SNR indicators.
double irarq_effective_multiplexing(const AntennaConfig &config, double p_t, double r, int deadline);

/// First-round gain giving r_e, restricted to the first continuity interval
/// r < min{M, N/K} where r_e = p_t K r. Empty when r_e is not reachable there.
std::optional<double> irarq_first_round_gain(const AntennaConfig &config, double p_t, double r_e);

/// Optimal IR-ARQ tradeoff d_K^MAC(r_e / (K L)), for r_e in [0, min{KM, N}].
double irarq_dmdt(const AntennaConfig &config, double r_e, int deadline);

/// IR-ARQ tradeoff at a given first-round gain: d_K^MAC(r / L).
double irarq_dmdt_at_rate(const AntennaConfig &config, double r, int deadline);

/// Diversity under random arrivals at a fixed arrival multiplexing gain.
double random_arrival_diversity(Protocol protocol, const AntennaConfig &config, double r_arrival, int deadline);

/// Supremum of stable total arrival rates (packets/slot). GTA and O-NDMA
/// regions do not depend on SNR; for IR-ARQ the high-SNR indicators at
/// arrival gain `r_arrival` are used.
double stability_region(Protocol protocol, const AntennaConfig &config, double p_t, double r_arrival, int deadline);

/// IR-ARQ region with a finite-SNR (or any) beta table; GTA/O-NDMA ignore it.
double stability_region(Protocol protocol, const AntennaConfig &config, double p_t, const BetaTable &beta);

struct StabilityOptimum
{
    double p_t;
    double lambda_max;
};

/// Grid search of the IR-ARQ stability region over p_t in (0, 1].
StabilityOptimum irarq_stability_grid_search(const AntennaConfig &config, const BetaTable &beta, double step = 1e-3);

struct TradeoffPoint
{
    double r_e = 0.0;
    double d = 0.0;
    std::optional<int> deadline;
};

/// Sweeps r_e over [0, min{KM, N}) with the given step. GTA and O-NDMA use
/// `p_t`; IR-ARQ uses its optimal parameters and `deadline`.
std::vector<TradeoffPoint> tradeoff_curve(Protocol protocol, const AntennaConfig &config, double p_t,
                                          std::optional<int> deadline, double step = 0.01);

/// CSV header `r_e,d,protocol,L,p_t`.
void write_tradeoff_csv_header(std::ostream &os);
void write_tradeoff_csv(std::ostream &os, Protocol protocol, double p_t, const std::vector<TradeoffPoint> &points);

} // namespace arqlab::dmt

#endif
