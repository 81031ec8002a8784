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


#include "arqlab/protocols.hpp"

#include <algorithm>
#include <array>
#include <ostream>
#include <stdexcept>

namespace arqlab::protocols
{

void ProtocolParams::validate() const
{
    if (!(p_t > 0.0 && p_t <= 1.0))
        throw std::invalid_argument("p_t must lie in (0, 1]");
    if (!(rate >= 0.0))
        throw std::invalid_argument("rate must be >= 0");
    if (deadline < 1)
        throw std::invalid_argument("deadline must be >= 1");
}

int EpochOutcome::delivered_count() const
{
    return static_cast<int>(std::count(delivered.begin(), delivered.end(), std::uint8_t{1}));
}

bool EpochOutcome::system_error() const
{
    for (std::size_t i = 0; i < participants.size(); ++i)
        if (delivered[i] && !decoded_ok[i])
            return true;
    return false;
}

void EpochOutcome::reset(std::span<const int> who)
{
    length = 1;
    participants.assign(who.begin(), who.end());
    delivered.assign(who.size(), 0);
    decoded_ok.assign(who.size(), 0);
    pruned.assign(who.size(), 0);
}

void choose_participants(std::span<const int> eligible, double p_t, Rng &rng, std::vector<int> &out)
{
    out.clear();
    if (p_t >= 1.0)
    {
        out.assign(eligible.begin(), eligible.end());
        return;
    }
    for (int u : eligible)
        if (uniform01(rng) < p_t)
            out.push_back(u);
}

namespace
{

template <typename Positions>
void trace_slot(const EpochContext &ctx, int slot, const Positions &positions, const char *decision)
{
    if (!ctx.trace)
        return;
    std::ostream &os = *ctx.trace;
    os << "epoch=" << ctx.channels.epoch << " slot=" << slot << " active=";
    bool first = true;
    for (int pos : positions)
    {
        os << (first ? "" : ",") << ctx.participants[pos];
        first = false;
    }
    if (first)
        os << '-';
    os << ' ' << decision << '\n';
}

struct AllPositions
{
    int n;
    struct It
    {
        int i;
        int operator*() const { return i; }
        It &operator++()
        {
            ++i;
            return *this;
        }
        bool operator!=(const It &o) const { return i != o.i; }
    };
    It begin() const { return {0}; }
    It end() const { return {n}; }
};

} // namespace

const EpochOutcome &EpochRunner::run(Protocol protocol, const EpochContext &ctx)
{
    switch (protocol)
    {
    case Protocol::gta:
        return run_gta(ctx);
    case Protocol::ondma:
        return run_ondma(ctx);
    case Protocol::irarq:
        return run_irarq(ctx);
    }
    throw std::invalid_argument("unknown protocol");
}

const EpochOutcome &EpochRunner::run_irarq(const EpochContext &ctx)
{
    out_.reset(ctx.participants);
    const int k = static_cast<int>(ctx.participants.size());
    if (k == 0)
    {
        trace_slot(ctx, 1, AllPositions{0}, "idle");
        return out_;
    }
    const int deadline = ctx.params.deadline;
    info_.assign(ctx.channels, ctx.participants, ctx.channels.snr);
    const int first_ok = info_.first_decodable_round(ctx.params.rate, deadline);
    const bool ok = first_ok <= deadline;
    out_.length = std::min(first_ok, deadline);
    std::fill(out_.delivered.begin(), out_.delivered.end(), std::uint8_t{1});
    std::fill(out_.decoded_ok.begin(), out_.decoded_ok.end(), static_cast<std::uint8_t>(ok));
    if (ctx.trace)
    {
        for (int l = 1; l < out_.length; ++l)
            trace_slot(ctx, l, AllPositions{k}, "nack");
        trace_slot(ctx, out_.length, AllPositions{k}, ok ? "ack" : "ack-deadline-error");
    }
    return out_;
}

const EpochOutcome &EpochRunner::run_ondma(const EpochContext &ctx)
{
    out_.reset(ctx.participants);
    const int k = static_cast<int>(ctx.participants.size());
    if (k == 0)
    {
        trace_slot(ctx, 1, AllPositions{0}, "idle");
        return out_;
    }
    out_.length = k;
    const double gain = ctx.params.combining == CombiningGain::collision_size ? static_cast<double>(k) : 1.0;
    for (int i = 0; i < k; ++i)
    {
        out_.delivered[i] = 1;
        out_.decoded_ok[i] =
            !phy::single_user_outage(ctx.channels.user(ctx.participants[i]), ctx.channels.snr, ctx.params.rate, gain);
    }
    if (ctx.trace)
    {
        for (int l = 1; l < k; ++l)
            trace_slot(ctx, l, AllPositions{k}, l == 1 ? "collision" : "repeat");
        trace_slot(ctx, k, AllPositions{k}, k == 1 ? "single-decode" : "separate-decode");
    }
    return out_;
}

const EpochOutcome &EpochRunner::run_gta(const EpochContext &ctx)
{
    out_.reset(ctx.participants);
    const int k = static_cast<int>(ctx.participants.size());
    if (k == 0)
    {
        trace_slot(ctx, 1, AllPositions{0}, "idle");
        return out_;
    }

    auto clean_slot = [&](int pos) {
        out_.delivered[pos] = 1;
        out_.decoded_ok[pos] = !phy::single_user_outage(ctx.channels.user(ctx.participants[pos]), ctx.channels.snr,
                                                        ctx.params.rate, 1.0);
        trace_slot(ctx, out_.length, std::array<int, 1>{pos}, out_.decoded_ok[pos] ? "clean-ok" : "clean-outage");
    };

    if (k == 1)
    {
        clean_slot(0);
        return out_;
    }

    // Slot 1 is the collision of the whole group.
    group_.resize(k);
    for (int i = 0; i < k; ++i)
        group_[i] = i;
    trace_slot(ctx, 1, group_, "collision");

    while (true)
    {
        const int g = static_cast<int>(group_.size());
        if (ctx.splitter)
        {
            split_ = ctx.splitter(g, ctx.rng);
            if (static_cast<int>(split_.size()) != g)
                throw std::logic_error("GTA splitter returned a mask of the wrong size");
        }
        else
        {
            split_.resize(g);
            for (int i = 0; i < g; ++i)
                split_[i] = uniform01(ctx.rng) < 0.5;
        }
        left_.clear();
        right_.clear();
        for (int i = 0; i < g; ++i)
            (split_[i] ? left_ : right_).push_back(group_[i]);

        if (left_.empty())
        {
            // The whole group moves right and collides again.
            ++out_.length;
            trace_slot(ctx, out_.length, group_, "collision");
            continue;
        }
        if (left_.size() == 1)
        {
            ++out_.length;
            clean_slot(left_[0]);
            group_ = right_;
            ++out_.length;
            if (group_.size() == 1)
            {
                clean_slot(group_[0]);
                return out_;
            }
            trace_slot(ctx, out_.length, group_, "collision");
            continue;
        }
        // Two successive collisions: the right subgroup is pruned.
        for (int pos : right_)
            out_.pruned[pos] = 1;
        group_ = left_;
        ++out_.length;
        trace_slot(ctx, out_.length, group_, "collision-prune-right");
    }
}

EpochOutcome run_irarq_epoch(const EpochContext &ctx)
{
    EpochRunner r;
    return r.run_irarq(ctx);
}

EpochOutcome run_ondma_epoch(const EpochContext &ctx)
{
    EpochRunner r;
    return r.run_ondma(ctx);
}

EpochOutcome run_gta_epoch(const EpochContext &ctx)
{
    EpochRunner r;
    return r.run_gta(ctx);
}

} // namespace arqlab::protocols
