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


#ifndef ARQLAB_BETA_TABLE_HPP
#define ARQLAB_BETA_TABLE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string_view>

namespace arqlab
{

enum class BetaSource
{
    monte_carlo,
    high_snr_indicator,
    closed_form
};

inline std::string_view to_string(BetaSource s)
{
    switch (s)
    {
    case BetaSource::monte_carlo:
        return "monte-carlo";
    case BetaSource::high_snr_indicator:
        return "high-snr-indicator";
    case BetaSource::closed_form:
        return "closed-form";
    }
    return "?";
}

/// Persistent-outage probabilities beta_k(l): the probability that a joint
/// decoder facing k colliders still fails after l rounds. Row k = 1..K,
/// column l = 0..L; beta_k(0) = 1. Row 0 describes the idle epoch.
struct BetaTable
{
    BetaTable() = default;

    BetaTable(int users, int deadline, BetaSource src = BetaSource::closed_form)
        : values(Eigen::ArrayXXd::Zero(users + 1, deadline + 1)),
          stderr_(Eigen::ArrayXXd::Zero(users + 1, deadline + 1)), length_stderr(Eigen::ArrayXd::Zero(users + 1)),
          source(src)
    {
        if (users < 1 || deadline < 1)
            throw std::invalid_argument("BetaTable: users and deadline must be >= 1");
        values.col(0).setOnes();
    }

    int users() const { return static_cast<int>(values.rows()) - 1; }
    int deadline() const { return static_cast<int>(values.cols()) - 1; }

    double operator()(int k, int l) const { return values(k, l); }
    double &operator()(int k, int l) { return values(k, l); }

    /// Probability that a k-collision epoch ends exactly at round l (l = 1..L).
    double alpha(int k, int l) const { return values(k, l - 1) - values(k, l); }

    /// Sum over l = 1..L-1 of beta_k(l): expected extra rounds of a k-collision epoch.
    double extra_rounds(int k) const
    {
        return deadline() > 1 ? values.row(k).segment(1, deadline() - 1).sum() : 0.0;
    }

    /// Sum over l = 1..L-1 of (2l + 1) beta_k(l), used by the second epoch-length moment.
    double weighted_extra_rounds(int k) const
    {
        double s = 0.0;
        for (int l = 1; l < deadline(); ++l)
            s += (2.0 * l + 1.0) * values(k, l);
        return s;
    }

    Eigen::ArrayXXd values;
    Eigen::ArrayXXd stderr_;
    /// Standard error of the mean epoch length per k (Monte Carlo tables only).
    Eigen::ArrayXd length_stderr;
    BetaSource source = BetaSource::closed_form;
    std::uint64_t trials = 0;
    double snr = 0.0;
};

} // namespace arqlab

#endif
