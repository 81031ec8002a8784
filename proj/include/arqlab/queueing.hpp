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


#ifndef ARQLAB_QUEUEING_HPP
#define ARQLAB_QUEUEING_HPP

#include "arqlab/beta_table.hpp"
#include "arqlab/protocols.hpp"
#include "arqlab/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace arqlab::queueing
{

struct TransmissionProbability
{
    double p = 0.0;
    bool solvable = false;
    /// lambda = 0: every queue is empty in steady state and p is reported as 0.
    bool empty_queue = false;
    /// K p - lambda (1 + sum_k B(K,k,p) sum_{l<L} beta_k(l)) at the returned p.
    double residual = 0.0;
};

/// Smallest root of K p = lambda (1 + sum_k B(K,k,p) sum_{l<L} beta_k(l))
/// on (0, p_t]. The steady-state probability that a user transmits cannot
/// exceed p_t, so the search stops there; no root means overload.
TransmissionProbability solve_transmission_probability(double lambda, int users, double p_t,
                                                       const BetaTable &beta);

/// First two moments of the relevant (U) and irrelevant (V) epoch lengths
/// seen by a tagged user.
struct EpochMoments
{
    double u1 = 1.0;
    double u2 = 1.0;
    double v1 = 1.0;
    double v2 = 1.0;
};

EpochMoments epoch_length_moments(double p, int users, const BetaTable &beta);

/// Approximate IR-ARQ mean delay (slots) from the M/G/1-with-vacations
/// decomposition. Returns +infinity outside the stability region.
double analytic_delay(double lambda, int users, double p_t, const BetaTable &beta);

enum class ArrivalKind
{
    poisson,
    bernoulli
};

enum class Verdict
{
    stable,
    unstable,
    inconclusive
};

std::string_view to_string(Verdict v);

struct RandomAccessOptions
{
    /// Simulated slots.
    std::uint64_t horizon = 200'000;
    /// Fraction of the horizon excluded from delay and error statistics.
    double warmup_fraction = 0.2;
    /// Backlog-slope threshold in packets/slot.
    double slope_epsilon = 1e-3;
    ArrivalKind arrivals = ArrivalKind::poisson;
    /// GTA: a pruned packet skips the epoch right after it was pruned.
    bool pruned_wait_one_epoch = false;
    /// Batches for the batch-means confidence intervals.
    int batches = 20;
    std::ostream *trace = nullptr;
};

struct DelayReport
{
    double lambda = 0.0;
    std::uint64_t seed = 0;
    /// Mean sojourn time (slots) from arrival to the end of the delivering epoch.
    double delay = 0.0;
    double delay_ci = 0.0;
    /// Fraction of non-idle epochs with at least one undecoded delivered packet.
    double pe = 0.0;
    double pe_ci = 0.0;
    std::vector<double> per_user_pe;
    Verdict verdict = Verdict::inconclusive;
    /// Least-squares slope of the total backlog (packets/slot) over the second half.
    double slope = 0.0;
    std::uint64_t arrivals = 0;
    std::uint64_t departures = 0;
    std::uint64_t measured_packets = 0;
    std::uint64_t epochs = 0;
    std::uint64_t nonidle_epochs = 0;
    std::uint64_t error_epochs = 0;
    std::uint64_t final_backlog = 0;
    std::uint64_t slots = 0;
};

/// One replication: per-user FIFO queues fed by arrivals of total rate
/// lambda, epochs started by the probability-p_t rule among non-empty
/// queues. Throws std::logic_error if the packet ledger or the per-user
/// error sandwich is ever violated.
DelayReport simulate_random_arrivals(Protocol protocol, const AntennaConfig &config,
                                     const protocols::ProtocolParams &params, double lambda, double snr,
                                     std::uint64_t seed, const RandomAccessOptions &opts = {});

/// Pools replications: delay weighted by measured packets, P_e by non-idle epochs.
DelayReport merge_reports(std::span<const DelayReport> reports);

struct BoundaryScan
{
    std::vector<DelayReport> reports;
    /// Midpoint between the last stable grid point and the first unstable one.
    std::optional<double> boundary;
};

/// Runs one replication per lambda (seed derived from the master seed and the
/// grid index), up to `workers` at a time.
BoundaryScan stability_boundary_scan(Protocol protocol, const AntennaConfig &config,
                                     const protocols::ProtocolParams &params, double snr,
                                     std::span<const double> lambda_grid, std::uint64_t seed,
                                     const RandomAccessOptions &opts = {}, int workers = 1);

std::optional<double> boundary_from_verdicts(std::span<const double> lambda_grid,
                                             std::span<const Verdict> verdicts);

} // namespace arqlab::queueing

#endif
