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

#ifndef ARQLAB_TYPES_HPP
#define ARQLAB_TYPES_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace arqlab
{

/// Dimensions of the symmetric random access channel: K users with M
/// transmit antennas each, N antennas at the receiver.
struct AntennaConfig
{
    int users = 2;
    int tx_antennas = 1;
    int rx_antennas = 1;

    void validate() const
    {
        if (users < 1 || tx_antennas < 1 || rx_antennas < 1)
            throw std::invalid_argument("AntennaConfig: users, tx_antennas and rx_antennas must be >= 1");
    }

    /// Degrees of freedom of the coordinated multiple access channel, min{KM, N}.
    double degrees_of_freedom() const
    {
        return static_cast<double>(std::min(users * tx_antennas, rx_antennas));
    }

    friend bool operator==(const AntennaConfig &, const AntennaConfig &) = default;
};

enum class Protocol
{
    gta,
    ondma,
    irarq
};

inline std::string_view to_string(Protocol p)
{
    switch (p)
    {
    case Protocol::gta:
        return "GTA";
    case Protocol::ondma:
        return "O-NDMA";
    case Protocol::irarq:
        return "IR-ARQ";
    }
    return "?";
}

/// Accepts the display names and the short CLI tags (gta, ondma, irarq), case-insensitive.
inline Protocol parse_protocol(std::string_view tag)
{
    std::string s;
    for (char c : tag)
        if (c != '-' && c != '_')
            s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s == "gta")
        return Protocol::gta;
    if (s == "ondma")
        return Protocol::ondma;
    if (s == "irarq" || s == "ir")
        return Protocol::irarq;
    throw std::invalid_argument("unknown protocol tag '" + std::string(tag) + "'");
}

/// How the first-round rate is specified: a constant R in bits/channel-use,
/// or a multiplexing gain r with R = r log2(1 + snr).
enum class RateMode
{
    fixed_rate,
    multiplexing
};

inline RateMode parse_rate_mode(std::string_view s)
{
    if (s == "fixed-R" || s == "fixed" || s == "fixed-r")
        return RateMode::fixed_rate;
    if (s == "multiplexing")
        return RateMode::multiplexing;
    throw std::invalid_argument("unknown rate mode '" + std::string(s) + "'");
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// First-round rate in bits/channel-use at linear SNR `snr`.
inline double first_round_rate(RateMode mode, double value, double snr)
{
    if (value < 0.0)
        throw std::invalid_argument("rate / multiplexing gain must be >= 0");
    return mode == RateMode::fixed_rate ? value : value * std::log2(1.0 + snr);
}

} // namespace arqlab

#endif
