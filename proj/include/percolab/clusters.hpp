#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "percolab/lattice.hpp"

namespace percolab {

// Disjoint sets with path halving and union by size over flat 32-bit arrays.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1), components_(n) {
    std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
  }

  std::uint32_t find(std::uint32_t x) noexcept {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Returns true when a and b were in distinct components.
  bool unite(std::uint32_t a, std::uint32_t b) noexcept {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    --components_;
    return true;
  }

  [[nodiscard]] std::size_t components() const noexcept { return components_; }
  [[nodiscard]] std::uint32_t size_of_root(std::uint32_t root) const noexcept { return size_[root]; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
  std::size_t components_;
};

struct ClusterLabeling {
  // Representative vertex of each vertex's component.
  std::vector<std::uint32_t> component_id;
  std::uint64_t count = 0;
  // Indexed by representative; zero for non-representatives.
  std::vector<std::uint32_t> sizes;
  std::uint64_t merges = 0;

  [[nodiscard]] std::uint32_t cluster_size(VertexIndex v) const { return sizes[component_id[v]]; }
};

// Any source of bond states: BondConfig, LazyBondField, ...
template <class Source>
concept BondSource = requires(const Source& s, BondIndex i) {
  { s.box() } -> std::convertible_to<const BoxSpec&>;
  { s.is_open(i) } -> std::convertible_to<bool>;
};

template <BondSource Source>
ClusterLabeling count_clusters(const Source& config) {
  const BoxSpec& box = config.box();
  const std::uint64_t nv = box.vertex_count();
  UnionFind uf(nv);
  ClusterLabeling out;
  BondIndex i = 0;
  for (VertexIndex v = 0; v < nv; ++v) {
    for (int axis = 0; axis < box.dim(); ++axis) {
      if (!box.has_bond(v, axis)) continue;
      if (config.is_open(i)) {
        if (uf.unite(static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(v + box.stride(axis)))) {
          ++out.merges;
        }
      }
      ++i;
    }
  }
  out.count = uf.components();
  out.component_id.resize(nv);
  out.sizes.assign(nv, 0);
  for (VertexIndex v = 0; v < nv; ++v) {
    const std::uint32_t r = uf.find(static_cast<std::uint32_t>(v));
    out.component_id[v] = r;
    out.sizes[r] = uf.size_of_root(r);
  }
  if (out.count + out.merges != nv) {
    throw SelfCheckViolation("cluster count does not match vertex count minus merges");
  }
  return out;
}

// M_n only; skips building the labeling.
template <BondSource Source>
std::uint64_t cluster_count(const Source& config) {
  const BoxSpec& box = config.box();
  const std::uint64_t nv = box.vertex_count();
  UnionFind uf(nv);
  BondIndex i = 0;
  for (VertexIndex v = 0; v < nv; ++v) {
    for (int axis = 0; axis < box.dim(); ++axis) {
      if (!box.has_bond(v, axis)) continue;
      if (config.is_open(i)) {
        uf.unite(static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(v + box.stride(axis)));
      }
      ++i;
    }
  }
  return uf.components();
}

// Breadth-first search over open bonds, skipping `excluded`. Scratch buffers
// are reused across calls; visited marks use epochs so nothing is cleared.
class OpenPathSearch {
 public:
  explicit OpenPathSearch(const BoxSpec& box) : box_(box), mark_(box.vertex_count(), 0) {}

  [[nodiscard]] const BoxSpec& box() const noexcept { return box_; }

  template <BondSource Source>
  bool connected(const Source& config, VertexIndex u, VertexIndex v,
                 std::span<const BondIndex> excluded) {
    if (u == v) return true;
    next_epoch();
    queue_.clear();
    queue_.push_back(u);
    mark_[u] = epoch_;
    for (std::size_t head = 0; head < queue_.size(); ++head) {
      const VertexIndex x = queue_[head];
      bool found = false;
      for_each_incident(box_, x, [&](VertexIndex y, BondIndex b) {
        if (found || mark_[y] == epoch_) return;
        for (BondIndex e : excluded) {
          if (e == b) return;
        }
        if (!config.is_open(b)) return;
        if (y == v) {
          found = true;
          return;
        }
        mark_[y] = epoch_;
        queue_.push_back(y);
      });
      if (found) return true;
    }
    return false;
  }

 private:
  void next_epoch() {
    if (++epoch_ == 0) {
      std::fill(mark_.begin(), mark_.end(), 0);
      epoch_ = 1;
    }
  }

  BoxSpec box_;
  std::vector<std::uint32_t> mark_;
  std::uint32_t epoch_ = 0;
  std::vector<VertexIndex> queue_;
};

template <BondSource Source>
bool connected_in_subgraph(const Source& config, VertexIndex u, VertexIndex v,
                           std::span<const BondIndex> excluded = {}) {
  const BoxSpec& box = config.box();
  if (u >= box.vertex_count() || v >= box.vertex_count()) {
    throw InvalidArgument("vertex outside B(n)");
  }
  OpenPathSearch search(box);
  return search.connected(config, u, v, excluded);
}

}  // namespace percolab
