#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <future>
#include <vector>

namespace figforge::util {

/// Runs fn(0..count-1) with at most `max_parallel` calls in flight. Results
/// keep index order, so output does not depend on scheduling. An exception
/// thrown by fn(i) is stored in slot i instead of aborting the others.
template <typename T>
struct SlotResult {
  std::optional<T> value;
  std::exception_ptr error;
};

template <typename T>
std::vector<SlotResult<T>> parallel_indexed(std::size_t count, std::size_t max_parallel,
                                            const std::function<T(std::size_t)>& fn) {
  std::vector<SlotResult<T>> out(count);
  auto run_one = [&](std::size_t i) {
    try {
      out[i].value.emplace(fn(i));
    } catch (...) {
      out[i].error = std::current_exception();
    }
  };
  if (max_parallel <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) run_one(i);
    return out;
  }
  for (std::size_t begin = 0; begin < count; begin += max_parallel) {
    std::size_t end = std::min(count, begin + max_parallel);
    std::vector<std::future<void>> batch;
    batch.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(std::async(std::launch::async, run_one, i));
    }
    for (auto& f : batch) f.get();
  }
  return out;
}

}  // namespace figforge::util
