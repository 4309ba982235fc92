#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <iterator>
#include <memory>
#include <optional>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "voxmatch/errors.hpp"

namespace voxmatch {

inline unsigned default_worker_count() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1u : n;
}

/// Knobs for parallel evaluation. `workers` is the number of lanes the
/// combinators may use; `partitions`, when set, overrides the partition
/// count of datasets built by higher-level code (the matcher).
struct ExecutionConfig {
  unsigned workers = default_worker_count();
  std::optional<std::size_t> partitions;
};

namespace detail {

/// Runs body(p) for every partition index on up to `workers` lanes.
/// Callers store results by partition index, so the dispatch order of
/// partitions to lanes never shows up in outputs.
template <typename Body>
void for_each_partition(std::size_t partition_count, unsigned workers, Body&& body) {
  if (partition_count == 0) return;
  const std::size_t lanes =
      std::min<std::size_t>(std::max(workers, 1u), partition_count);
  if (lanes <= 1) {
    for (std::size_t p = 0; p < partition_count; ++p) body(p);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(lanes);
  for (std::size_t i = 0; i < lanes; ++i) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t p = next.fetch_add(1, std::memory_order_relaxed);
        if (p >= partition_count) break;
        body(p);
      }
    });
  }
  for (auto& t : pool) t.join();
}

struct Failure {
  std::size_t logical_index = 0;
  std::exception_ptr error;
};

/// Rethrows the recorded failure with the smallest logical index, if any.
/// Picking the smallest index keeps error reporting independent of the
/// schedule that produced it.
inline void rethrow_first(const std::vector<std::optional<Failure>>& failures) {
  const Failure* first = nullptr;
  for (const auto& f : failures)
    if (f && (!first || f->logical_index < first->logical_index)) first = &*f;
  if (first) std::rethrow_exception(first->error);
}

}  // namespace detail

/// Immutable, ordered, partition-indexed in-memory collection with
/// data-parallel combinators. Partitions are contiguous index ranges whose
/// sizes differ by at most one; concatenating them in order yields the
/// logical element sequence. Combinators always return new datasets, and
/// observable results never depend on worker count or scheduling.
template <typename T>
class PartitionedDataset {
 public:
  /// Builds a dataset from an ordered element sequence split into
  /// `partition_count` contiguous blocks (leading blocks take the excess).
  static PartitionedDataset from_items(std::vector<T> items,
                                       std::size_t partition_count,
                                       ExecutionConfig cfg = {}) {
    return PartitionedDataset(
        std::make_shared<const std::vector<T>>(std::move(items)),
        partition_count, cfg);
  }

  std::size_t element_count() const { return items_->size(); }
  std::size_t partition_count() const { return partition_count_; }
  const ExecutionConfig& config() const { return cfg_; }

  /// Half-open logical index range [first, second) of partition p.
  std::pair<std::size_t, std::size_t> partition_range(std::size_t p) const {
    const std::size_t n = items_->size();
    const std::size_t base = n / partition_count_;
    const std::size_t rem = n % partition_count_;
    const std::size_t begin = p * base + std::min(p, rem);
    return {begin, begin + base + (p < rem ? 1 : 0)};
  }

  /// Elements in logical order.
  std::vector<T> collect() const { return *items_; }

  /// Same logical sequence under k contiguous partitions. Shares storage;
  /// partitioning is positional, not physical.
  PartitionedDataset repartition(std::size_t k) const {
    return PartitionedDataset(items_, k, cfg_);
  }

  PartitionedDataset with_workers(unsigned workers) const {
    ExecutionConfig cfg = cfg_;
    cfg.workers = workers;
    return PartitionedDataset(items_, partition_count_, cfg);
  }

  /// Element-wise transform; preserves order and partitioning. `f` must be
  /// pure. The first element-level failure (by logical index) propagates.
  template <typename F>
  auto map(F f) const {
    using U = std::decay_t<std::invoke_result_t<F&, const T&>>;
    const auto& src = *items_;
    std::vector<std::vector<U>> parts(partition_count_);
    std::vector<std::optional<detail::Failure>> failures(partition_count_);
    detail::for_each_partition(partition_count_, cfg_.workers, [&](std::size_t p) {
      const auto [begin, end] = partition_range(p);
      auto& out = parts[p];
      out.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        try {
          out.push_back(f(src[i]));
        } catch (...) {
          failures[p] = detail::Failure{i, std::current_exception()};
          return;
        }
      }
    });
    detail::rethrow_first(failures);
    std::vector<U> result;
    result.reserve(src.size());
    for (auto& part : parts)
      result.insert(result.end(), std::make_move_iterator(part.begin()),
                    std::make_move_iterator(part.end()));
    return PartitionedDataset<U>::from_items(std::move(result),
                                             partition_count_, cfg_);
  }

  /// In-order concatenation of f(e) over all elements, repartitioned to the
  /// source partition count.
  template <typename F>
  auto flat_map(F f) const {
    using Seq = std::decay_t<std::invoke_result_t<F&, const T&>>;
    using U = std::decay_t<decltype(*std::begin(std::declval<Seq&>()))>;
    const auto& src = *items_;
    std::vector<std::vector<U>> parts(partition_count_);
    std::vector<std::optional<detail::Failure>> failures(partition_count_);
    detail::for_each_partition(partition_count_, cfg_.workers, [&](std::size_t p) {
      const auto [begin, end] = partition_range(p);
      auto& out = parts[p];
      for (std::size_t i = begin; i < end; ++i) {
        try {
          Seq seq = f(src[i]);
          out.insert(out.end(), std::make_move_iterator(std::begin(seq)),
                     std::make_move_iterator(std::end(seq)));
        } catch (...) {
          failures[p] = detail::Failure{i, std::current_exception()};
          return;
        }
      }
    });
    detail::rethrow_first(failures);
    std::size_t total = 0;
    for (const auto& part : parts) total += part.size();
    std::vector<U> result;
    result.reserve(total);
    for (auto& part : parts)
      result.insert(result.end(), std::make_move_iterator(part.begin()),
                    std::make_move_iterator(part.end()));
    return PartitionedDataset<U>::from_items(std::move(result),
                                             partition_count_, cfg_);
  }

  /// Pairs element i of this dataset with element i of `other`.
  /// Partitioning follows the left-hand side.
  template <typename U>
  PartitionedDataset<std::pair<T, U>> zip(const PartitionedDataset<U>& other) const {
    if (element_count() != other.element_count())
      throw LengthMismatch("zip length mismatch: " +
                           std::to_string(element_count()) + " vs " +
                           std::to_string(other.element_count()));
    const auto& a = *items_;
    const auto& b = *other.items_;
    std::vector<std::pair<T, U>> result;
    result.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) result.emplace_back(a[i], b[i]);
    return PartitionedDataset<std::pair<T, U>>::from_items(std::move(result),
                                                           partition_count_, cfg_);
  }

  /// Folds each partition left-to-right from `identity`, then folds the
  /// partials in partition order. For an associative, commutative `op` this
  /// equals the serial left fold; the fixed combine order makes the result
  /// reproducible for a given partition count.
  template <typename Op>
  T reduce(Op op, T identity) const {
    const auto& src = *items_;
    std::vector<T> partials(partition_count_, identity);
    std::vector<std::optional<detail::Failure>> failures(partition_count_);
    detail::for_each_partition(partition_count_, cfg_.workers, [&](std::size_t p) {
      const auto [begin, end] = partition_range(p);
      T acc = identity;
      for (std::size_t i = begin; i < end; ++i) {
        try {
          acc = op(std::move(acc), src[i]);
        } catch (...) {
          failures[p] = detail::Failure{i, std::current_exception()};
          return;
        }
      }
      partials[p] = std::move(acc);
    });
    detail::rethrow_first(failures);
    T result = identity;
    for (auto& partial : partials) result = op(std::move(result), partial);
    return result;
  }

 private:
  template <typename>
  friend class PartitionedDataset;

  PartitionedDataset(std::shared_ptr<const std::vector<T>> items,
                     std::size_t partition_count, ExecutionConfig cfg)
      : items_(std::move(items)), partition_count_(partition_count), cfg_(cfg) {
    if (partition_count_ < 1)
      throw InvalidPartitionCount("partition count must be >= 1, got " +
                                  std::to_string(partition_count_));
    if (cfg_.workers < 1) cfg_.workers = 1;
  }

  std::shared_ptr<const std::vector<T>> items_;
  std::size_t partition_count_;
  ExecutionConfig cfg_;
};

}  // namespace voxmatch
