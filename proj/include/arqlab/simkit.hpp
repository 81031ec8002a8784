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


#ifndef ARQLAB_SIMKIT_HPP
#define ARQLAB_SIMKIT_HPP

// Monte Carlo estimation: beta tables, fully-loaded throughput, system error
// probability and diversity slopes. All estimators split their work into
// fixed-size chunks, each with its own generator stream (master seed, chunk
// index), and reduce integer counts in chunk order. Results are therefore
// bitwise identical for any worker count.

#include "arqlab/beta_table.hpp"
#include "arqlab/protocols.hpp"
#include "arqlab/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace arqlab::sim
{

struct SimOptions
{
    int workers = 1;
    std::uint64_t chunk_size = 1u << 16;
};

/// beta_k(l) for k = 1..K and l = 0..L by direct simulation of the joint
/// decoder, `trials` channel draws per k. The table also carries the
/// standard error of each cell and of the mean epoch length per k.
BetaTable estimate_beta(const AntennaConfig &config, double snr, double rate, int deadline, std::uint64_t trials,
                        std::uint64_t seed, const SimOptions &opts = {});

/// Per-k epoch statistics for any protocol: the renewal-reward ingredients
/// (mean epoch length, mean number of delivered packets) and their sampling
/// variances, from `trials` epochs started by exactly k participants.
struct EpochStatistics
{
    Eigen::ArrayXd mean_length;
    Eigen::ArrayXd mean_delivered;
    Eigen::ArrayXd var_length;
    Eigen::ArrayXd var_delivered;
    Eigen::ArrayXd cov_length_delivered;
    std::uint64_t trials = 0;

    int users() const { return static_cast<int>(mean_length.size()) - 1; }
};

EpochStatistics estimate_epoch_statistics(Protocol protocol, const AntennaConfig &config,
                                          const protocols::ProtocolParams &params, double snr, std::uint64_t trials,
                                          std::uint64_t seed, const SimOptions &opts = {});

/// Throughput in units of R (packets/slot) together with its standard error.
struct RenewalThroughput
{
    double packets_per_slot = 0.0;
    double stderr_ = 0.0;
};

/// p_t K / (1 + sum_k B(K,k,p_t) sum_{l<L} beta_k(l)): the IR-ARQ
/// renewal-reward throughput in units of R. The standard error propagates
/// the table's per-k epoch-length errors.
RenewalThroughput irarq_renewal_throughput(const BetaTable &beta, double p_t);

/// General renewal-reward throughput sum_k B E[delivered | k] / sum_k B E[length | k].
RenewalThroughput renewal_throughput(const EpochStatistics &stats, double p_t);

struct ThroughputEstimate
{
    /// Delivered packets per slot (throughput in units of R).
    double packets_per_slot = 0.0;
    double stderr_ = 0.0;
    /// Throughput in bits/channel-use, packets_per_slot * R.
    double bits_per_channel_use = 0.0;
    std::uint64_t slots = 0;
    std::uint64_t epochs = 0;
};

/// Back-to-back epochs with every queue always backlogged, for at least `slots` slots.
ThroughputEstimate fully_loaded_throughput(Protocol protocol, const AntennaConfig &config,
                                           const protocols::ProtocolParams &params, double snr, std::uint64_t slots,
                                           std::uint64_t seed, const SimOptions &opts = {});

struct ErrorStopRule
{
    /// Upper bound on simulated epochs.
    std::uint64_t max_epochs = 1'000'000;
    /// Stop at the first chunk boundary where this many system errors were seen (0: never).
    std::uint64_t target_errors = 0;
    /// Fix the number of participants instead of applying the probability-p_t rule.
    std::optional<int> forced_participants;
};

struct ErrorEstimate
{
    double pe = 0.0;
    double stderr_ = 0.0;
    std::vector<double> per_user;
    std::uint64_t epochs = 0;
    std::uint64_t nonidle_epochs = 0;
    std::uint64_t error_epochs = 0;
    std::vector<std::uint64_t> user_errors;

    /// max_i P_e(i) <= P_e <= sum_j P_e(j), checked on the raw counts.
    bool sandwich_holds() const;
};

/// Fraction of non-idle fully-loaded epochs in which at least one delivered
/// message is in outage. Throws std::logic_error if the per-user sandwich
/// bound is ever violated.
ErrorEstimate system_error_probability(Protocol protocol, const AntennaConfig &config,
                                       const protocols::ProtocolParams &params, double snr, const ErrorStopRule &stop,
                                       std::uint64_t seed, const SimOptions &opts = {});

/// Negative least-squares slope of log2 P_e against log2 snr (snr linear),
/// over the samples in the top decade of snr.
double diversity_slope(std::span<const std::pair<double, double>> snr_pe);

/// One row of `snr_db,protocol,L,p_t,r,metric,value,stderr,trials,seed`.
struct SimRecord
{
    double snr_db = 0.0;
    std::string protocol;
    std::optional<int> deadline;
    double p_t = 1.0;
    double r = 0.0;
    std::string metric;
    double value = 0.0;
    double stderr_ = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
};

void write_sim_csv_header(std::ostream &os);
void write_sim_csv(std::ostream &os, const SimRecord &rec);

} // namespace arqlab::sim

#endif
