#include "rfs/combinatorics.hpp"

#include <algorithm>
#include <string>

#include "rfs/errors.hpp"

namespace rfs {
namespace {

void check_cap(std::size_t n, std::size_t cap) {
  if (n > cap) {
    throw SizeLimitError("partition enumeration of " + std::to_string(n) +
                         " elements exceeds the cap of " + std::to_string(cap));
  }
}

Partition from_growth_string(const std::vector<std::size_t>& rgs, std::size_t block_count) {
  Partition p;
  p.blocks.resize(block_count);
  for (std::size_t i = 0; i < rgs.size(); ++i) p.blocks[rgs[i]].push_back(i);
  return p;
}

void pair_up(std::vector<std::size_t>& remaining, Partition& current, std::vector<Partition>& out) {
  if (remaining.empty()) {
    Partition p = current;
    std::sort(p.blocks.begin(), p.blocks.end());
    out.push_back(std::move(p));
    return;
  }
  const std::size_t first = remaining.front();
  for (std::size_t k = 1; k < remaining.size(); ++k) {
    const std::size_t partner = remaining[k];
    std::vector<std::size_t> rest;
    rest.reserve(remaining.size() - 2);
    for (std::size_t j = 1; j < remaining.size(); ++j)
      if (j != k) rest.push_back(remaining[j]);
    current.blocks.push_back({first, partner});
    pair_up(rest, current, out);
    current.blocks.pop_back();
  }
}

}  // namespace

std::vector<Partition> set_partitions(std::size_t n, std::size_t cap) {
  check_cap(n, cap);
  std::vector<Partition> out;
  if (n == 0) {
    out.emplace_back();
    return out;
  }
  // Restricted growth strings: rgs[0] = 0, rgs[i] <= 1 + max(rgs[0..i-1]).
  std::vector<std::size_t> rgs(n, 0);
  std::vector<std::size_t> prefix_max(n, 0);
  while (true) {
    out.push_back(from_growth_string(rgs, prefix_max[n - 1] + 1));
    std::size_t i = n - 1;
    while (i > 0 && rgs[i] == prefix_max[i - 1] + 1) --i;
    if (i == 0) break;
    ++rgs[i];
    prefix_max[i] = std::max(prefix_max[i - 1], rgs[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      rgs[j] = 0;
      prefix_max[j] = prefix_max[i];
    }
  }
  return out;
}

namespace {

// Block label of every element; lexicographic order on these is enumeration order.
std::vector<std::size_t> growth_string(const Partition& p, std::size_t n) {
  std::vector<std::size_t> a(n);
  for (std::size_t b = 0; b < p.blocks.size(); ++b)
    for (std::size_t e : p.blocks[b]) a[e] = b;
  return a;
}

}  // namespace

std::vector<Partition> pair_partitions(std::size_t n, std::size_t cap) {
  check_cap(n, cap);
  std::vector<Partition> out;
  if (n % 2 != 0) return out;
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  Partition current;
  pair_up(all, current, out);
  std::vector<std::pair<std::vector<std::size_t>, std::size_t>> keyed;
  for (std::size_t i = 0; i < out.size(); ++i) keyed.emplace_back(growth_string(out[i], n), i);
  std::sort(keyed.begin(), keyed.end());
  std::vector<Partition> sorted;
  sorted.reserve(out.size());
  for (const auto& k : keyed) sorted.push_back(std::move(out[k.second]));
  return sorted;
}

bool is_canonical_partition(const Partition& p, std::size_t n) {
  std::vector<bool> seen(n, false);
  std::size_t total = 0;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const auto& block = p.blocks[b];
    if (block.empty()) return false;
    if (!std::is_sorted(block.begin(), block.end())) return false;
    if (b > 0 && p.blocks[b - 1].front() >= block.front()) return false;
    for (std::size_t e : block) {
      if (e >= n || seen[e]) return false;
      seen[e] = true;
      ++total;
    }
  }
  return total == n;
}

}  // namespace rfs
