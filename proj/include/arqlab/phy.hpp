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


#ifndef ARQLAB_PHY_HPP
#define ARQLAB_PHY_HPP

#include "arqlab/rng.hpp"
#include "arqlab/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace arqlab::phy
{

/// Frozen Rayleigh channels of one collision resolution epoch. User i owns
/// the N x M block in columns [iM, (i+1)M) of `gains`.
struct ChannelSet
{
    Eigen::MatrixXcd gains;
    int tx_antennas = 1;
    double snr = 1.0;
    std::uint64_t epoch = 0;

    int users() const { return static_cast<int>(gains.cols()) / tx_antennas; }
    int rx_antennas() const { return static_cast<int>(gains.rows()); }

    auto user(int i) const { return gains.middleCols(static_cast<Eigen::Index>(i) * tx_antennas, tx_antennas); }
    auto user(int i) { return gains.middleCols(static_cast<Eigen::Index>(i) * tx_antennas, tx_antennas); }
};

/// Draws i.i.d. CN(0, 1) entries for all K users.
ChannelSet draw_channels(const AntennaConfig &config, double snr, Rng &rng, std::uint64_t epoch = 0);

/// Redraws in place (next epoch), reusing storage.
void redraw_channels(ChannelSet &channels, Rng &rng);

/// log2 det(I + scale H H^H), evaluated on whichever Gram matrix is smaller.
template <typename Derived>
typename Derived::RealScalar log2_det_identity_plus(const Eigen::MatrixBase<Derived> &h,
                                                    typename Derived::RealScalar scale)
{
    using Real = typename Derived::RealScalar;
    using Scalar = typename Derived::Scalar;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (h.rows() == 1 || h.cols() == 1)
        return std::log2(Real(1) + scale * h.squaredNorm());
    Mat a = h.cols() < h.rows() ? Mat(h.adjoint() * h) : Mat(h * h.adjoint());
    a *= scale;
    a.diagonal().array() += Scalar(1);
    Eigen::LLT<Mat> llt(a);
    Real s(0);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        s += std::log2(std::real(llt.matrixLLT()(i, i)));
    return Real(2) * s;
}

/// Sum mutual information log2 det(I_N + (snr/M) sum_{i in S} H_i H_i^H) in bits/channel-use.
double subset_mutual_information(const ChannelSet &channels, std::span<const int> subset, double snr);

/// Mutual information of every nonempty subset of an active user set,
/// indexed by bitmask over positions in `active`. Buffers are reused
/// across `assign` calls so the Monte Carlo inner loops do not allocate.
class SubsetInformation
{
  public:
    SubsetInformation() = default;
    SubsetInformation(const ChannelSet &channels, std::span<const int> active, double snr)
    {
        assign(channels, active, snr);
    }

    void assign(const ChannelSet &channels, std::span<const int> active, double snr);

    int active_count() const { return active_count_; }
    double operator()(unsigned mask) const { return info_[mask]; }

    /// True iff rounds * I_S >= |S| * rate holds for every nonempty S.
    bool decodable(double rate, int rounds) const;

    /// First round l in 1..max_rounds at which all subset conditions hold,
    /// or max_rounds + 1 when the deadline passes without decoding.
    int first_decodable_round(double rate, int max_rounds) const;

  private:
    int active_count_ = 0;
    std::vector<double> info_;
    std::vector<int> sizes_;
    std::vector<Eigen::MatrixXcd> grams_;
};

/// Outage of the joint decoder after `rounds` identical-channel rounds at
/// first-round rate `rate`: some subset S has rounds * I_S < |S| * rate.
bool joint_outage(const ChannelSet &channels, std::span<const int> active, double snr, double rate, int rounds);

/// Single-user decoder outage: log2 det(I + (gain snr / M) H H^H) < rate.
bool single_user_outage(const Eigen::Ref<const Eigen::MatrixXcd> &channel, double snr, double rate,
                        double combining_gain = 1.0);

} // namespace arqlab::phy

#endif
