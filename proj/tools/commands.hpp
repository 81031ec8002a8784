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


#ifndef ARQLAB_TOOLS_COMMANDS_HPP
#define ARQLAB_TOOLS_COMMANDS_HPP

#include "arqlab/protocols.hpp"
#include "arqlab/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace arqlab::cli
{

/// Invalid or missing configuration; mapped to exit code 2.
class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig
{
    std::vector<Protocol> protocols{Protocol::gta, Protocol::ondma, Protocol::irarq};
    AntennaConfig antennas;
    std::vector<int> deadlines{2};
    /// Unset: GTA uses its optimal p_t, O-NDMA and IR-ARQ use 1.
    std::optional<double> p_t;
    std::vector<double> snr_db{30.0};
    std::vector<double> lambdas{1.0};
    RateMode rate_mode = RateMode::multiplexing;
    double r = 0.45;
    std::uint64_t trials = 100'000;
    std::uint64_t target_errors = 0;
    std::uint64_t horizon = 200'000;
    std::optional<std::uint64_t> seed;
    std::string out;
    int workers = 1;
    protocols::CombiningGain combining = protocols::CombiningGain::unit;
    std::string trace;
    bool scan = false;

    double p_t_for(Protocol p) const;
    /// Deadlines that apply to a protocol: the configured list for IR-ARQ, none otherwise.
    std::vector<std::optional<int>> deadlines_for(Protocol p) const;
    protocols::ProtocolParams params_for(Protocol p, std::optional<int> deadline, double snr) const;
    void validate() const;
    void require_seed(const char *command) const;
};

/// Overwrites the fields present in a JSON document; unknown keys are rejected.
void apply_json(ExperimentConfig &cfg, const std::string &json_text);

void cmd_dmt(const ExperimentConfig &cfg, std::ostream &os);
void cmd_gta_recursion(const ExperimentConfig &cfg, std::ostream &os);
void cmd_beta(const ExperimentConfig &cfg, std::ostream &os);
void cmd_throughput(const ExperimentConfig &cfg, std::ostream &os);
void cmd_pe_vs_snr(const ExperimentConfig &cfg, std::ostream &os);
void cmd_delay_vs_load(const ExperimentConfig &cfg, std::ostream &os);
void cmd_stability(const ExperimentConfig &cfg, std::ostream &os);

/// Full command line entry point. Returns the process exit code.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace arqlab::cli

#endif
