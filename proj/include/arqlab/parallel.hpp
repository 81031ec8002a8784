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


#ifndef ARQLAB_PARALLEL_HPP
#define ARQLAB_PARALLEL_HPP

#include <algorithm>
#include <cstdint>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace arqlab
{

/// Computes chunks 0, 1, ... with up to `workers` threads and hands the
/// results to `consume` strictly in chunk order. Each chunk seeds its own
/// generator from its index, so the consumed sequence (and any early stop
/// decided by `consume` returning false) does not depend on `workers`.
template <typename Compute, typename Consume>
void for_each_chunk_ordered(std::uint64_t n_chunks, int workers, Compute compute, Consume consume)
{
    using Partial = decltype(compute(std::uint64_t{0}));
    if (workers <= 1)
    {
        for (std::uint64_t c = 0; c < n_chunks; ++c)
            if (!consume(c, compute(c)))
                return;
        return;
    }
    const auto w = static_cast<std::uint64_t>(workers);
    for (std::uint64_t base = 0; base < n_chunks; base += w)
    {
        const std::uint64_t count = std::min<std::uint64_t>(w, n_chunks - base);
        std::vector<std::optional<Partial>> results(count);
        std::vector<std::exception_ptr> errors(count);
        std::vector<std::thread> pool;
        pool.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i)
            pool.emplace_back([&, i] {
                try
                {
                    results[i].emplace(compute(base + i));
                }
                catch (...)
                {
                    errors[i] = std::current_exception();
                }
            });
        for (auto &t : pool)
            t.join();
        for (std::uint64_t i = 0; i < count; ++i)
        {
            if (errors[i])
                std::rethrow_exception(errors[i]);
            if (!consume(base + i, std::move(*results[i])))
                return;
        }
    }
}

/// splitmix64 finalizer; derives per-replication seeds from a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace arqlab

#endif
