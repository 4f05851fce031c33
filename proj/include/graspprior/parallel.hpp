#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace graspprior
{

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index is handled exactly once,
/// so results written to slot i do not depend on the worker count. The first exception
/// thrown (lowest index) is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn)
{
  const std::size_t threads = std::min<std::size_t>(n, std::size_t(std::max(1, workers)));
  if (threads <= 1)
  {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }

  std::mutex mutex;
  std::exception_ptr error;
  std::size_t error_index = n;
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += threads)
        {
          try
          {
            fn(i);
          }
          catch (...)
          {
            std::lock_guard lock(mutex);
            if (i < error_index)
            {
              error_index = i;
              error = std::current_exception();
            }
            return;
          }
        }
      });
  }
  if (error)
    std::rethrow_exception(error);
}

}  // namespace graspprior
