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


#ifndef ARQLAB_RNG_HPP
#define ARQLAB_RNG_HPP

#include <cstdint>
#include <random>

namespace arqlab
{

using Rng = std::mt19937_64;

/// Independent generator for substream `stream` of a master seed. Every
/// Monte Carlo chunk owns exactly one of these; they are never shared.
inline Rng make_stream(std::uint64_t master_seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x61727121u};
    return Rng(seq);
}

inline double uniform01(Rng &rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

} // namespace arqlab

#endif
