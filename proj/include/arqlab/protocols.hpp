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


#ifndef ARQLAB_PROTOCOLS_HPP
#define ARQLAB_PROTOCOLS_HPP

#include "arqlab/phy.hpp"
#include "arqlab/rng.hpp"
#include "arqlab/types.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace arqlab::protocols
{

/// SNR seen by each O-NDMA single-user decoder after matched filtering:
/// `unit` keeps it at snr, `collision_size` scales it by the k repetitions.
enum class CombiningGain
{
    unit,
    collision_size
};

struct ProtocolParams
{
    double p_t = 1.0;
    /// First-round rate R in bits/channel-use.
    double rate = 1.0;
    /// IR-ARQ deadline L (maximum number of rounds).
    int deadline = 1;
    CombiningGain combining = CombiningGain::unit;

    void validate() const;
};

/// Per-participant results of one collision resolution epoch. Flags are
/// aligned with `participants`.
struct EpochOutcome
{
    int length = 1;
    std::vector<int> participants;
    std::vector<std::uint8_t> delivered;
    std::vector<std::uint8_t> decoded_ok;
    std::vector<std::uint8_t> pruned;

    int initial_collision() const { return static_cast<int>(participants.size()); }
    bool idle() const { return participants.empty(); }
    int delivered_count() const;
    /// At least one delivered message was not decoded.
    bool system_error() const;

    void reset(std::span<const int> who);
};

/// Returns, for a colliding group of the given size, which members join the
/// left subgroup. The default is a fair coin per user.
using Splitter = std::function<std::vector<bool>(int group_size, Rng &rng)>;

struct EpochContext
{
    std::span<const int> participants;
    const phy::ChannelSet &channels;
    const ProtocolParams &params;
    Rng &rng;
    /// One line per slot: epoch id, slot index, active set, decision.
    std::ostream *trace = nullptr;
    Splitter splitter = {};
};

/// Executes epochs while keeping scratch buffers alive between calls.
class EpochRunner
{
  public:
    const EpochOutcome &run(Protocol protocol, const EpochContext &ctx);
    const EpochOutcome &run_irarq(const EpochContext &ctx);
    const EpochOutcome &run_ondma(const EpochContext &ctx);
    const EpochOutcome &run_gta(const EpochContext &ctx);

  private:
    EpochOutcome out_;
    phy::SubsetInformation info_;
    std::vector<int> group_;
    std::vector<int> left_;
    std::vector<int> right_;
    std::vector<bool> split_;
};

EpochOutcome run_irarq_epoch(const EpochContext &ctx);
EpochOutcome run_ondma_epoch(const EpochContext &ctx);
EpochOutcome run_gta_epoch(const EpochContext &ctx);

/// Probability-p_t rule: each eligible user joins independently with probability p_t.
void choose_participants(std::span<const int> eligible, double p_t, Rng &rng, std::vector<int> &out);

} // namespace arqlab::protocols

#endif
