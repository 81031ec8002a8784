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

#ifndef ARQLAB_BINOMIAL_HPP
#define ARQLAB_BINOMIAL_HPP

#include <stdexcept>

namespace arqlab
{

/// n choose k in the given scalar type. Exact for integer-like and rational scalars.
template <typename Scalar>
Scalar binomial_coefficient(int n, int k)
{
    if (k < 0 || k > n)
        return Scalar(0);
    if (k > n - k)
        k = n - k;
    Scalar c(1);
    for (int i = 1; i <= k; ++i)
        c = c * Scalar(n - k + i) / Scalar(i);
    return c;
}

/// B(n, k, p) = C(n, k) p^k (1 - p)^(n - k), the binomial pmf.
template <typename Scalar>
Scalar binomial_pmf(int n, int k, const Scalar &p)
{
    if (n < 0)
        throw std::invalid_argument("binomial_pmf: n must be >= 0");
    if (k < 0 || k > n)
        return Scalar(0);
    Scalar q = Scalar(1) - p;
    Scalar v = binomial_coefficient<Scalar>(n, k);
    for (int i = 0; i < k; ++i)
        v = v * p;
    for (int i = 0; i < n - k; ++i)
        v = v * q;
    return v;
}

} // namespace arqlab

#endif
