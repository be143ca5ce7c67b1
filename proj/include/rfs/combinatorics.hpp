#pragma once

#include <cstddef>
#include <vector>

namespace rfs {

/// Hard cap on the size of the index set handed to the enumerators.
/// Bell(10) = 115975 partitions is the largest table we materialize by default.
inline constexpr std::size_t kDefaultPartitionCap = 10;

/// A set partition of {0..n-1}. Blocks are ordered by their smallest element
/// and every block is sorted ascending.
struct Partition {
  std::vector<std::vector<std::size_t>> blocks;

  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Every partition of {0..n-1}, in restricted-growth-string order.
/// Throws SizeLimitError when n > cap.
std::vector<Partition> set_partitions(std::size_t n, std::size_t cap = kDefaultPartitionCap);

/// Partitions of {0..n-1} into blocks of exactly two elements, in the same
/// order as set_partitions. Empty for odd n.
std::vector<Partition> pair_partitions(std::size_t n, std::size_t cap = kDefaultPartitionCap);

/// True when `p` satisfies the canonical-form invariants for an n-element set.
bool is_canonical_partition(const Partition& p, std::size_t n);

}  // namespace rfs
