/*=========================================================================
 *
 *  Copyright The stainnorm contributors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *         http://www.apache.org/licenses/LICENSE-2.0.txt
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 *
 *=========================================================================*/

#pragma once

#include <omp.h>

#include <algorithm>
#include <cstddef>
#include <vector>

namespace stainnorm::parallel
{

/// Reductions split their input into chunks of this many elements. The
/// chunking never depends on the thread count, and partials are folded in
/// chunk order, so results are bit-identical for any number of threads.
inline constexpr std::size_t kReduceChunk = std::size_t{ 1 } << 14;

inline std::size_t chunk_count(std::size_t n, std::size_t chunk = kReduceChunk)
{
  return (n + chunk - 1) / chunk;
}

/// Computes `partial(begin, end)` for each fixed-size chunk in parallel and
/// folds the partials left to right with `combine`.
template <typename Acc, typename Partial, typename Combine>
Acc chunked_reduce(std::size_t n, Acc init, Partial partial, Combine combine, std::size_t chunk = kReduceChunk)
{
  const std::size_t chunks = chunk_count(n, chunk);
  std::vector<Acc> partials(chunks, init);
  const auto count = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < count; ++c)
  {
    const std::size_t begin = static_cast<std::size_t>(c) * chunk;
    partials[static_cast<std::size_t>(c)] = partial(begin, std::min(n, begin + chunk));
  }
  Acc acc = init;
  for (const Acc & p : partials)
  {
    acc = combine(acc, p);
  }
  return acc;
}

/// Serial twin of chunked_reduce with the same chunk boundaries and fold
/// order.
template <typename Acc, typename Partial, typename Combine>
Acc chunked_reduce_serial(std::size_t n, Acc init, Partial partial, Combine combine, std::size_t chunk = kReduceChunk)
{
  Acc acc = init;
  for (std::size_t begin = 0; begin < n; begin += chunk)
  {
    acc = combine(acc, partial(begin, std::min(n, begin + chunk)));
  }
  return acc;
}

/// Sets the OpenMP team size for the lifetime of the object.
class ScopedThreads
{
public:
  explicit ScopedThreads(int threads)
    : previous_(omp_get_max_threads())
  {
    if (threads > 0)
    {
      omp_set_num_threads(threads);
    }
  }
  ~ScopedThreads() { omp_set_num_threads(previous_); }

  ScopedThreads(const ScopedThreads &) = delete;
  ScopedThreads & operator=(const ScopedThreads &) = delete;

private:
  int previous_;
};

} // namespace stainnorm::parallel
