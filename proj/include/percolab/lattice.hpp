#pragma once

// Geometry of the box B(n) = [-n, n]^d with free boundary, plus the
// canonical vertex and bond indexing every other module relies on.
//
// Vertices are indexed row-major over offset coordinates u_j = x_j + n,
// first axis most significant. Bonds are ordered lexicographically by
// (lower endpoint index, axis); the lower endpoint is the one with the
// smaller coordinate along the bond's axis.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "percolab/errors.hpp"

namespace percolab {

using VertexIndex = std::uint64_t;
using BondIndex = std::uint64_t;

// Hard ceiling on vertices and bonds for a single box. 2^31 keeps union-find
// arrays in 32-bit slots and a BondConfig under 256 MiB.
inline constexpr std::uint64_t kMaxBoxElements = std::uint64_t{1} << 31;

inline constexpr std::size_t kDefaultEnumerationCap = 24;

struct Bond {
  VertexIndex v1 = 0;
  VertexIndex v2 = 0;
  int axis = 0;

  friend bool operator==(const Bond&, const Bond&) = default;
};

class BoxSpec {
 public:
  BoxSpec() = default;

  BoxSpec(int d, int n) : d_(d), n_(n) {
    if (d < 1) throw InvalidArgument("dimension must be >= 1, got " + std::to_string(d));
    if (n < 1) throw InvalidArgument("box radius must be >= 1, got " + std::to_string(n));
    const std::uint64_t side = 2 * static_cast<std::uint64_t>(n) + 1;
    std::uint64_t stride = 1;
    strides_.assign(static_cast<std::size_t>(d), 0);
    for (int axis = d - 1; axis >= 0; --axis) {
      strides_[static_cast<std::size_t>(axis)] = stride;
      if (stride > kMaxBoxElements / side) {
        throw SizeOverflow("box d=" + std::to_string(d) + " n=" + std::to_string(n) +
                           " exceeds the vertex budget of " + std::to_string(kMaxBoxElements));
      }
      stride *= side;
    }
    vertex_count_ = stride;
    // 2 d n (2n+1)^(d-1)
    const std::uint64_t per_axis = vertex_count_ / side * (side - 1);
    if (per_axis > kMaxBoxElements / static_cast<std::uint64_t>(d)) {
      throw SizeOverflow("box d=" + std::to_string(d) + " n=" + std::to_string(n) +
                         " exceeds the bond budget of " + std::to_string(kMaxBoxElements));
    }
    bond_count_ = per_axis * static_cast<std::uint64_t>(d);
  }

  [[nodiscard]] int dim() const noexcept { return d_; }
  [[nodiscard]] int radius() const noexcept { return n_; }
  [[nodiscard]] std::uint64_t side() const noexcept { return 2 * static_cast<std::uint64_t>(n_) + 1; }
  [[nodiscard]] std::uint64_t vertex_count() const noexcept { return vertex_count_; }
  [[nodiscard]] std::uint64_t bond_count() const noexcept { return bond_count_; }
  [[nodiscard]] std::uint64_t stride(int axis) const noexcept {
    return strides_[static_cast<std::size_t>(axis)];
  }

  // Offset coordinate u in [0, 2n] of vertex v along axis.
  [[nodiscard]] std::uint64_t offset(VertexIndex v, int axis) const noexcept {
    return (v / stride(axis)) % side();
  }
  [[nodiscard]] std::int64_t coord(VertexIndex v, int axis) const noexcept {
    return static_cast<std::int64_t>(offset(v, axis)) - n_;
  }

  // Vertex at lattice coordinates x in [-n, n]^d.
  [[nodiscard]] VertexIndex vertex_at(std::span<const std::int64_t> x) const {
    if (x.size() != static_cast<std::size_t>(d_)) throw InvalidArgument("coordinate arity mismatch");
    VertexIndex v = 0;
    for (int axis = 0; axis < d_; ++axis) {
      const std::int64_t xi = x[static_cast<std::size_t>(axis)];
      if (xi < -n_ || xi > n_) throw GeometryError("coordinate outside B(n)");
      v += static_cast<std::uint64_t>(xi + n_) * stride(axis);
    }
    return v;
  }

  [[nodiscard]] VertexIndex origin() const noexcept { return (vertex_count_ - 1) / 2; }

  [[nodiscard]] bool has_bond(VertexIndex lower, int axis) const noexcept {
    return offset(lower, axis) + 1 < side();
  }

  // Canonical index of the bond whose lower endpoint is `lower` along `axis`.
  // Precondition: has_bond(lower, axis).
  [[nodiscard]] BondIndex bond_index(VertexIndex lower, int axis) const noexcept {
    BondIndex rank = bonds_before(lower);
    for (int a = 0; a < axis; ++a) {
      if (has_bond(lower, a)) ++rank;
    }
    return rank;
  }

  [[nodiscard]] BondIndex bond_index(const Bond& b) const noexcept { return bond_index(b.v1, b.axis); }

  [[nodiscard]] Bond bond(BondIndex i) const {
    if (i >= bond_count_) throw InvalidArgument("bond index out of range");
    // Largest vertex whose first bond rank is <= i.
    VertexIndex lo = 0;
    VertexIndex hi = vertex_count_;
    while (hi - lo > 1) {
      const VertexIndex mid = lo + (hi - lo) / 2;
      if (bonds_before(mid) <= i) lo = mid; else hi = mid;
    }
    BondIndex rank = bonds_before(lo);
    for (int axis = 0; axis < d_; ++axis) {
      if (!has_bond(lo, axis)) continue;
      if (rank == i) return Bond{lo, lo + stride(axis), axis};
      ++rank;
    }
    throw InvalidArgument("bond index does not resolve");  // unreachable for valid boxes
  }

  // Bond from the origin to the unit step along axis 0.
  [[nodiscard]] Bond origin_bond() const noexcept {
    const VertexIndex o = origin();
    return Bond{o, o + stride(0), 0};
  }

  [[nodiscard]] bool contains(const Bond& b) const noexcept {
    return b.axis >= 0 && b.axis < d_ && b.v1 < vertex_count_ && has_bond(b.v1, b.axis) &&
           b.v2 == b.v1 + stride(b.axis);
  }

  // Chebyshev distance of v from the box centre.
  [[nodiscard]] std::uint64_t sup_norm(VertexIndex v) const noexcept {
    std::uint64_t m = 0;
    for (int axis = 0; axis < d_; ++axis) {
      const std::int64_t x = coord(v, axis);
      m = std::max<std::uint64_t>(m, static_cast<std::uint64_t>(x < 0 ? -x : x));
    }
    return m;
  }

  friend bool operator==(const BoxSpec& a, const BoxSpec& b) noexcept {
    return a.d_ == b.d_ && a.n_ == b.n_;
  }

 private:
  // Number of bonds whose lower endpoint index is < v.
  [[nodiscard]] BondIndex bonds_before(VertexIndex v) const noexcept {
    BondIndex total = 0;
    const std::uint64_t s = side();
    for (int axis = 0; axis < d_; ++axis) {
      const std::uint64_t st = stride(axis);
      const std::uint64_t block = st * s;
      // vertices below v whose offset along axis is the last one (no bond)
      const std::uint64_t full = v / block;
      const std::uint64_t rem = v % block;
      const std::uint64_t tail = rem > (s - 1) * st ? rem - (s - 1) * st : 0;
      total += v - (full * st + tail);
    }
    return total;
  }

  int d_ = 1;
  int n_ = 1;
  std::vector<std::uint64_t> strides_{1};
  std::uint64_t vertex_count_ = 3;
  std::uint64_t bond_count_ = 2;
};

inline BoxSpec build_box(int d, int n) { return BoxSpec(d, n); }

// Calls fn(neighbour, bond_index) for every bond incident to v.
template <class Fn>
void for_each_incident(const BoxSpec& box, VertexIndex v, Fn&& fn) {
  for (int axis = 0; axis < box.dim(); ++axis) {
    const std::uint64_t u = box.offset(v, axis);
    if (u + 1 < box.side()) fn(v + box.stride(axis), box.bond_index(v, axis));
    if (u > 0) {
      const VertexIndex w = v - box.stride(axis);
      fn(w, box.bond_index(w, axis));
    }
  }
}

// One open/closed assignment over B_e(n); bit i set means bond i is open.
class BondConfig {
 public:
  BondConfig() = default;
  explicit BondConfig(const BoxSpec& box) : box_(box), open_(box.bond_count()) {}
  BondConfig(const BoxSpec& box, boost::dynamic_bitset<std::uint64_t> open)
      : box_(box), open_(std::move(open)) {
    if (open_.size() != box_.bond_count()) throw InvalidArgument("bond bit count mismatch");
  }

  static BondConfig all(const BoxSpec& box, bool open) {
    BondConfig c(box);
    if (open) c.open_.set();
    return c;
  }

  // Configuration with bond i open iff bit i of mask is set. Requires k <= 64.
  static BondConfig from_mask(const BoxSpec& box, std::uint64_t mask) {
    if (box.bond_count() > 64) throw InvalidArgument("from_mask needs at most 64 bonds");
    BondConfig c(box);
    for (BondIndex i = 0; i < box.bond_count(); ++i) c.open_[i] = ((mask >> i) & 1u) != 0;
    return c;
  }

  [[nodiscard]] const BoxSpec& box() const noexcept { return box_; }
  [[nodiscard]] std::uint64_t size() const noexcept { return open_.size(); }
  [[nodiscard]] bool is_open(BondIndex i) const { return open_[i]; }
  void set(BondIndex i, bool open) { open_[i] = open; }
  [[nodiscard]] std::uint64_t open_count() const noexcept { return open_.count(); }
  [[nodiscard]] const boost::dynamic_bitset<std::uint64_t>& bits() const noexcept { return open_; }

  friend bool operator==(const BondConfig&, const BondConfig&) = default;

 private:
  BoxSpec box_;
  boost::dynamic_bitset<std::uint64_t> open_;
};

// Range over all 2^k configurations in canonical binary order: the j-th
// configuration has bond i open iff bit i of j is set.
class ConfigEnumeration {
 public:
  class iterator {
   public:
    using value_type = BondConfig;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    iterator(const BoxSpec* box, std::uint64_t index) : box_(box), index_(index) {}

    BondConfig operator*() const { return BondConfig::from_mask(*box_, index_); }
    iterator& operator++() { ++index_; return *this; }
    iterator operator++(int) { auto tmp = *this; ++index_; return tmp; }
    bool operator==(const iterator& o) const noexcept { return index_ == o.index_; }
    [[nodiscard]] std::uint64_t index() const noexcept { return index_; }

   private:
    const BoxSpec* box_ = nullptr;
    std::uint64_t index_ = 0;
  };

  ConfigEnumeration(const BoxSpec& box, std::size_t cap) : box_(box) {
    if (box.bond_count() > cap) {
      throw CapExceeded("exact enumeration needs k=" + std::to_string(box.bond_count()) +
                        " bonds but the cap is " + std::to_string(cap));
    }
    if (box.bond_count() >= 63) throw CapExceeded("exact enumeration is limited to 62 bonds");
  }

  [[nodiscard]] std::uint64_t size() const noexcept { return std::uint64_t{1} << box_.bond_count(); }
  [[nodiscard]] iterator begin() const { return {&box_, 0}; }
  [[nodiscard]] iterator end() const { return {&box_, size()}; }
  [[nodiscard]] const BoxSpec& box() const noexcept { return box_; }

 private:
  BoxSpec box_;
};

inline ConfigEnumeration enumerate_configs(const BoxSpec& box,
                                           std::size_t cap = kDefaultEnumerationCap) {
  return ConfigEnumeration(box, cap);
}

}  // namespace percolab
