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


#include "arqlab/phy.hpp"

#include <bit>
#include <stdexcept>

namespace arqlab::phy
{

ChannelSet draw_channels(const AntennaConfig &config, double snr, Rng &rng, std::uint64_t epoch)
{
    config.validate();
    if (!(snr > 0.0))
        throw std::invalid_argument("draw_channels: snr must be > 0");
    ChannelSet ch;
    ch.gains.resize(config.rx_antennas, static_cast<Eigen::Index>(config.users) * config.tx_antennas);
    ch.tx_antennas = config.tx_antennas;
    ch.snr = snr;
    ch.epoch = epoch;
    redraw_channels(ch, rng);
    ch.epoch = epoch;
    return ch;
}

void redraw_channels(ChannelSet &channels, Rng &rng)
{
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    for (Eigen::Index c = 0; c < channels.gains.cols(); ++c)
        for (Eigen::Index r = 0; r < channels.gains.rows(); ++r)
        {
            const double re = gauss(rng);
            const double im = gauss(rng);
            channels.gains(r, c) = {re, im};
        }
    ++channels.epoch;
}

double subset_mutual_information(const ChannelSet &channels, std::span<const int> subset, double snr)
{
    if (subset.empty())
        throw std::invalid_argument("subset_mutual_information: subset must be nonempty");
    const Eigen::Index m = channels.tx_antennas;
    Eigen::MatrixXcd h(channels.rx_antennas(), static_cast<Eigen::Index>(subset.size()) * m);
    for (std::size_t j = 0; j < subset.size(); ++j)
        h.middleCols(static_cast<Eigen::Index>(j) * m, m) = channels.user(subset[j]);
    return log2_det_identity_plus(h, snr / static_cast<double>(m));
}

void SubsetInformation::assign(const ChannelSet &channels, std::span<const int> active, double snr)
{
    const int k = static_cast<int>(active.size());
    if (k == 0)
        throw std::invalid_argument("SubsetInformation: active set must be nonempty");
    if (k > 20)
        throw std::invalid_argument("SubsetInformation: at most 20 active users");
    active_count_ = k;
    const std::size_t n = std::size_t{1} << k;
    info_.resize(n);
    sizes_.resize(n);
    const double scale = snr / channels.tx_antennas;

    if (channels.rx_antennas() == 1)
    {
        // Scalar receiver: every Gram matrix is the sum of squared row norms.
        std::vector<double> &acc = info_;
        acc[0] = 0.0;
        sizes_[0] = 0;
        for (std::size_t mask = 1; mask < n; ++mask)
        {
            const int low = std::countr_zero(mask);
            acc[mask] = acc[mask & (mask - 1)] + channels.user(active[low]).squaredNorm();
            sizes_[mask] = sizes_[mask & (mask - 1)] + 1;
        }
        for (std::size_t mask = 1; mask < n; ++mask)
            info_[mask] = std::log2(1.0 + scale * acc[mask]);
        info_[0] = 0.0;
        return;
    }

    const Eigen::Index nr = channels.rx_antennas();
    grams_.resize(n);
    grams_[0].setZero(nr, nr);
    info_[0] = 0.0;
    sizes_[0] = 0;
    for (std::size_t mask = 1; mask < n; ++mask)
    {
        const int low = std::countr_zero(mask);
        const auto h = channels.user(active[low]);
        grams_[mask] = grams_[mask & (mask - 1)] + h * h.adjoint();
        sizes_[mask] = sizes_[mask & (mask - 1)] + 1;
        Eigen::MatrixXcd a = scale * grams_[mask];
        a.diagonal().array() += 1.0;
        Eigen::LLT<Eigen::MatrixXcd> llt(a);
        double s = 0.0;
        for (Eigen::Index i = 0; i < nr; ++i)
            s += std::log2(llt.matrixLLT()(i, i).real());
        info_[mask] = 2.0 * s;
    }
}

bool SubsetInformation::decodable(double rate, int rounds) const
{
    const std::size_t n = info_.size();
    for (std::size_t mask = 1; mask < n; ++mask)
        if (rounds * info_[mask] < sizes_[mask] * rate)
            return false;
    return true;
}

int SubsetInformation::first_decodable_round(double rate, int max_rounds) const
{
    for (int l = 1; l <= max_rounds; ++l)
        if (decodable(rate, l))
            return l;
    return max_rounds + 1;
}

bool joint_outage(const ChannelSet &channels, std::span<const int> active, double snr, double rate, int rounds)
{
    if (active.empty())
        throw std::invalid_argument("joint_outage: active set must be nonempty");
    if (rounds < 1)
        throw std::invalid_argument("joint_outage: rounds must be >= 1");
    if (rate < 0.0)
        throw std::invalid_argument("joint_outage: rate must be >= 0");
    return !SubsetInformation(channels, active, snr).decodable(rate, rounds);
}

bool single_user_outage(const Eigen::Ref<const Eigen::MatrixXcd> &channel, double snr, double rate,
                        double combining_gain)
{
    const double scale = combining_gain * snr / static_cast<double>(channel.cols());
    return log2_det_identity_plus(channel, scale) < rate;
}

} // namespace arqlab::phy
