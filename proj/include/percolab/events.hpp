#pragma once

// Bond events on B(n):
//   no-bypass  G_n(b): the endpoints of b are not joined by open bonds other
//                      than b inside B(n);
//   pivotal    E_n(b): flipping b alone changes whether its endpoints are
//                      connected inside B(n);
//   two-arm  D(b, m):  vertex-disjoint open paths from v1(b) and from v2(b),
//                      neither using b, reach the boundary of v1(b) + B(m-1).
// plus Monte Carlo scans built on them.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "percolab/clusters.hpp"
#include "percolab/errors.hpp"
#include "percolab/lattice.hpp"
#include "percolab/parallel.hpp"
#include "percolab/rng.hpp"
#include "percolab/stats.hpp"

namespace percolab {

// A bond source with one bond forced to a given state.
template <BondSource Source>
class ForcedBond {
 public:
  ForcedBond(const Source& base, BondIndex bond, bool open) : base_(base), bond_(bond), open_(open) {}

  [[nodiscard]] const BoxSpec& box() const noexcept { return base_.box(); }
  [[nodiscard]] bool is_open(BondIndex i) const { return i == bond_ ? open_ : base_.is_open(i); }

 private:
  const Source& base_;
  BondIndex bond_;
  bool open_;
};

inline void require_bond(const BoxSpec& box, const Bond& b) {
  if (!box.contains(b)) throw InvalidArgument("bond is not in B_e(n)");
}

template <BondSource Source>
bool event_Gn(const Source& config, const Bond& b) {
  const BoxSpec& box = config.box();
  require_bond(box, b);
  const std::array<BondIndex, 1> masked{box.bond_index(b)};
  return !connected_in_subgraph(config, b.v1, b.v2, masked);
}

template <BondSource Source>
bool event_pivotal_En(const Source& config, const Bond& b) {
  const BoxSpec& box = config.box();
  require_bond(box, b);
  const BondIndex i = box.bond_index(b);
  const bool with_open = connected_in_subgraph(ForcedBond<Source>(config, i, true), b.v1, b.v2);
  const bool with_closed = connected_in_subgraph(ForcedBond<Source>(config, i, false), b.v1, b.v2);
  return with_open != with_closed;
}

// Unit-capacity max flow (Edmonds-Karp) over an explicit arc list.
class UnitFlowNetwork {
 public:
  void reset(std::size_t nodes) {
    head_.assign(nodes, kNone);
    arcs_.clear();
  }

  void add_arc(std::uint32_t from, std::uint32_t to) {
    arcs_.push_back({to, head_[from], 1});
    head_[from] = static_cast<std::uint32_t>(arcs_.size() - 1);
    arcs_.push_back({from, head_[to], 0});
    head_[to] = static_cast<std::uint32_t>(arcs_.size() - 1);
  }

  // Pushes augmenting paths until `limit` units flow or none remain.
  int max_flow(std::uint32_t source, std::uint32_t sink, int limit) {
    int flow = 0;
    while (flow < limit && augment(source, sink)) ++flow;
    return flow;
  }

 private:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  struct Arc {
    std::uint32_t to;
    std::uint32_t next;
    int residual;
  };

  bool augment(std::uint32_t source, std::uint32_t sink) {
    via_.assign(head_.size(), kNone);
    queue_.clear();
    queue_.push_back(source);
    via_[source] = kNone - 1;
    for (std::size_t q = 0; q < queue_.size(); ++q) {
      const std::uint32_t x = queue_[q];
      for (std::uint32_t a = head_[x]; a != kNone; a = arcs_[a].next) {
        const Arc& arc = arcs_[a];
        if (arc.residual == 0 || via_[arc.to] != kNone) continue;
        via_[arc.to] = a;
        if (arc.to == sink) {
          for (std::uint32_t y = sink; y != source;) {
            const std::uint32_t used = via_[y];
            --arcs_[used].residual;
            ++arcs_[used ^ 1u].residual;
            y = arcs_[used ^ 1u].to;
          }
          return true;
        }
        queue_.push_back(arc.to);
      }
    }
    return false;
  }

  std::vector<std::uint32_t> head_;
  std::vector<Arc> arcs_;
  std::vector<std::uint32_t> via_;
  std::vector<std::uint32_t> queue_;
};

// Two-arm detector with reusable scratch space. The arm box is split into
// in/out node pairs joined by unit arcs so that arm paths are vertex-disjoint;
// a super-source feeds v1 and v2 one unit each and every boundary vertex
// drains to the sink. D(b, m) holds iff the max flow is 2.
class TwoArmDetector {
 public:
  template <BondSource Source>
  bool operator()(const Source& config, const Bond& b, int m) {
    const BoxSpec& box = config.box();
    require_bond(box, b);
    if (m < 1) throw GeometryError("arm-box radius m must be >= 1");
    const int d = box.dim();
    const std::int64_t reach = m - 1;
    for (int axis = 0; axis < d; ++axis) {
      const std::int64_t x = box.coord(b.v1, axis);
      if (x - reach < -box.radius() || x + reach > box.radius()) {
        throw GeometryError("arm box v1(b)+B(" + std::to_string(reach) + ") does not fit inside B(" +
                            std::to_string(box.radius()) + ")");
      }
    }
    // v2 sits one step from v1; with m = 1 the arm box is {v1} alone.
    if (m == 1) return false;

    const std::uint64_t side = 2 * static_cast<std::uint64_t>(reach) + 1;
    std::uint64_t local_count = 1;
    for (int axis = 0; axis < d; ++axis) local_count *= side;
    // local index -> global vertex, row-major over the arm box
    auto to_global = [&](std::uint64_t local) {
      VertexIndex v = 0;
      for (int axis = d - 1; axis >= 0; --axis) {
        const std::uint64_t u = local % side;
        local /= side;
        const std::int64_t x = box.coord(b.v1, axis) - reach + static_cast<std::int64_t>(u);
        v += static_cast<std::uint64_t>(x + box.radius()) * box.stride(axis);
      }
      return v;
    };
    std::vector<std::uint64_t> local_stride(static_cast<std::size_t>(d));
    {
      std::uint64_t s = 1;
      for (int axis = d - 1; axis >= 0; --axis) {
        local_stride[static_cast<std::size_t>(axis)] = s;
        s *= side;
      }
    }
    const auto nodes = static_cast<std::uint32_t>(2 * local_count + 2);
    const std::uint32_t source = nodes - 2;
    const std::uint32_t sink = nodes - 1;
    const BondIndex masked = box.bond_index(b);
    net_.reset(nodes);
    std::uint64_t center = 0;
    for (int axis = 0; axis < d; ++axis) center += static_cast<std::uint64_t>(reach) * local_stride[static_cast<std::size_t>(axis)];
    const std::uint64_t second = center + local_stride[static_cast<std::size_t>(b.axis)];

    for (std::uint64_t local = 0; local < local_count; ++local) {
      const auto in = static_cast<std::uint32_t>(2 * local);
      const std::uint32_t out = in + 1;
      net_.add_arc(in, out);
      const VertexIndex v = to_global(local);
      bool on_boundary = false;
      for (int axis = 0; axis < d; ++axis) {
        const std::uint64_t u = (local / local_stride[static_cast<std::size_t>(axis)]) % side;
        if (u == 0 || u + 1 == side) on_boundary = true;
        if (u + 1 < side) {
          const BondIndex bi = box.bond_index(v, axis);
          if (bi != masked && config.is_open(bi)) {
            const auto other_in = static_cast<std::uint32_t>(2 * (local + local_stride[static_cast<std::size_t>(axis)]));
            net_.add_arc(out, other_in);
            net_.add_arc(other_in + 1, in);
          }
        }
      }
      if (on_boundary) net_.add_arc(out, sink);
    }
    net_.add_arc(source, static_cast<std::uint32_t>(2 * center));
    net_.add_arc(source, static_cast<std::uint32_t>(2 * second));
    return net_.max_flow(source, sink, 2) == 2;
  }

 private:
  UnitFlowNetwork net_;
};

template <BondSource Source>
bool event_two_arm_D(const Source& config, const Bond& b, int m) {
  TwoArmDetector detect;
  return detect(config, b, m);
}

// G_m(b0) for an ascending list of radii on one configuration of B(N),
// N >= the largest radius, with b0 the origin bond. A single breadth-first
// search from v1(b0) is widened box by box; bonds leaving the current box
// are parked until the box grows past them.
class GrowingBoxProbe {
 public:
  explicit GrowingBoxProbe(const BoxSpec& outer) : box_(outer), mark_(outer.vertex_count(), 0) {}

  // Bit j of the result is set iff G_{radii[j]}(b0) holds.
  template <BondSource Source>
  std::uint64_t operator()(const Source& config, std::span<const int> radii) {
    const Bond b0 = box_.origin_bond();
    const BondIndex masked = box_.bond_index(b0);
    next_epoch();
    queue_.clear();
    parked_.clear();
    queue_.push_back(b0.v1);
    mark_[b0.v1] = epoch_;
    std::size_t head = 0;
    std::uint64_t result = 0;
    for (std::size_t j = 0; j < radii.size(); ++j) {
      const auto limit = static_cast<std::uint64_t>(radii[j]);
      // admit parked vertices now inside the box
      std::size_t keep = 0;
      for (VertexIndex y : parked_) {
        if (mark_[y] == epoch_) continue;
        if (box_.sup_norm(y) <= limit) {
          if (y == b0.v2) return result;
          mark_[y] = epoch_;
          queue_.push_back(y);
        } else {
          parked_[keep++] = y;
        }
      }
      parked_.resize(keep);
      bool bypass = false;
      for (; head < queue_.size() && !bypass; ++head) {
        const VertexIndex x = queue_[head];
        for_each_incident(box_, x, [&](VertexIndex y, BondIndex bi) {
          if (bypass || bi == masked || mark_[y] == epoch_) return;
          if (!config.is_open(bi)) return;
          if (box_.sup_norm(y) > limit) {
            parked_.push_back(y);
            return;
          }
          if (y == b0.v2) {
            bypass = true;
            return;
          }
          mark_[y] = epoch_;
          queue_.push_back(y);
        });
      }
      if (bypass) return result;
      result |= std::uint64_t{1} << j;
    }
    return result;
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
  std::vector<VertexIndex> parked_;
};

inline void check_radii(std::span<const int> radii, int min_radius) {
  if (radii.empty()) throw InvalidArgument("radius schedule is empty");
  if (radii.size() > 64) throw InvalidArgument("radius schedule longer than 64 entries");
  for (std::size_t j = 0; j < radii.size(); ++j) {
    if (radii[j] < min_radius) {
      throw InvalidArgument("radii must be >= " + std::to_string(min_radius));
    }
    if (j > 0 && radii[j] <= radii[j - 1]) throw InvalidArgument("radii must be strictly increasing");
  }
}

// One row per radius of a nested-box scan. `drop` compares this radius with
// the previous one on the same replicates (paired), so its error is the error
// of the difference rather than of either estimate.
struct RadiusEstimate {
  int radius = 0;
  EstimateSummary estimate;
  EstimateSummary drop;  // P(radius_prev) - P(radius); zero for the first row
};

struct ScanOptions {
  int d = 2;
  double p = 0.5;
  std::vector<int> radii;
  std::uint64_t replicates = 1;
  std::uint64_t master_seed = 0;
  unsigned workers = 1;
};

namespace detail {

inline std::vector<RadiusEstimate> reduce_nested(std::span<const std::uint64_t> bits,
                                                 std::span<const int> radii, std::uint64_t seed) {
  const std::uint64_t r = bits.size();
  std::vector<RadiusEstimate> rows;
  for (std::size_t j = 0; j < radii.size(); ++j) {
    std::uint64_t hits = 0;
    std::uint64_t dropped = 0;
    std::uint64_t gained = 0;
    for (std::uint64_t word : bits) {
      const bool now = ((word >> j) & 1u) != 0;
      hits += now;
      if (j > 0) {
        const bool before = ((word >> (j - 1)) & 1u) != 0;
        dropped += before && !now;
        gained += !before && now;
      }
    }
    RadiusEstimate row;
    row.radius = radii[j];
    row.estimate = summarize_proportion(hits, r, seed);
    // paired difference of indicators takes values in {-1, 0, 1}
    const double rr = static_cast<double>(r);
    const double mean = (static_cast<double>(dropped) - static_cast<double>(gained)) / rr;
    const double second = (static_cast<double>(dropped) + static_cast<double>(gained)) / rr;
    const double var = r > 1 ? (second - mean * mean) * rr / (rr - 1.0) / rr : 0.0;
    row.drop = make_summary(mean, var, r, seed);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

// Estimates P_p(G_m(b0)) for each radius in the schedule on shared
// replicates: each replicate samples B(max radius) once and every smaller box
// sees the restriction of that configuration.
inline std::vector<RadiusEstimate> estimate_G_infinity(const ScanOptions& opt) {
  check_probability(opt.p);
  check_radii(opt.radii, 1);
  if (opt.replicates < 1) throw InvalidArgument("replicates must be >= 1");
  const BoxSpec outer(opt.d, opt.radii.back());
  std::vector<std::uint64_t> bits(opt.replicates);
  const unsigned workers = std::max(1u, opt.workers);
  std::vector<GrowingBoxProbe> probes(workers, GrowingBoxProbe(outer));
  for_each_replicate(opt.replicates, workers, [&](unsigned w, std::uint64_t i) {
    const LazyBondField field(outer, opt.p, RngContract{opt.master_seed, i});
    bits[i] = probes[w](field, opt.radii);
  });
  return detail::reduce_nested(bits, opt.radii, opt.master_seed);
}

// Estimates P_p(D(b0, m)) per radius; replicates sample B(max radius) and the
// arm boxes are centred on the origin.
inline std::vector<RadiusEstimate> two_arm_decay_scan(const ScanOptions& opt) {
  check_probability(opt.p);
  check_radii(opt.radii, 1);
  if (opt.replicates < 1) throw InvalidArgument("replicates must be >= 1");
  const BoxSpec outer(opt.d, opt.radii.back());
  const Bond b0 = outer.origin_bond();
  std::vector<std::uint64_t> bits(opt.replicates);
  const unsigned workers = std::max(1u, opt.workers);
  std::vector<TwoArmDetector> detectors(workers);
  for_each_replicate(opt.replicates, workers, [&](unsigned w, std::uint64_t i) {
    const LazyBondField field(outer, opt.p, RngContract{opt.master_seed, i});
    std::uint64_t word = 0;
    // D(b, m) is decreasing in m from m = 2 on, so a failure there settles
    // the rest. m = 1 is always false and says nothing about larger boxes.
    for (std::size_t j = 0; j < opt.radii.size(); ++j) {
      if (!detectors[w](field, b0, opt.radii[j])) {
        if (opt.radii[j] == 1) continue;
        break;
      }
      word |= std::uint64_t{1} << j;
    }
    bits[i] = word;
  });
  return detail::reduce_nested(bits, opt.radii, opt.master_seed);
}

}  // namespace percolab
