#pragma once

// Exact enumeration over all 2^k configurations of a tiny box. Every
// probability and moment comes out as a PolyP (integer coefficients in p),
// so identity checks are coefficient equality, never tolerance.

#include <array>
#include <bit>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "percolab/clusters.hpp"
#include "percolab/errors.hpp"
#include "percolab/events.hpp"
#include "percolab/lattice.hpp"
#include "percolab/parallel.hpp"
#include "percolab/poly.hpp"

namespace percolab {

// Bond states read from the bits of an integer; no allocation.
class MaskConfig {
 public:
  MaskConfig(const BoxSpec& box, std::uint64_t mask) : box_(&box), mask_(mask) {}
  [[nodiscard]] const BoxSpec& box() const noexcept { return *box_; }
  [[nodiscard]] bool is_open(BondIndex i) const noexcept { return ((mask_ >> i) & 1u) != 0; }
  [[nodiscard]] std::uint64_t mask() const noexcept { return mask_; }

 private:
  const BoxSpec* box_;
  std::uint64_t mask_;
};

struct ExactMoments {
  BoxSpec box;
  PolyP total_probability;      // must be the constant 1
  PolyP mean;                   // E_p(M_n)
  PolyP second_moment;          // E_p(M_n^2)
  PolyP variance;               // E_p(M_n^2) - E_p(M_n)^2
  std::vector<PolyP> prob_Gn;   // P_p(G_n(b_i)), canonical bond order
};

// One pass over all configurations; per-worker histograms keyed by the number
// of open bonds are merged by integer addition, so the result does not depend
// on `workers`.
inline ExactMoments compute_exact_moments(const BoxSpec& box, std::size_t cap = kDefaultEnumerationCap,
                                          unsigned workers = 1) {
  const ConfigEnumeration all = enumerate_configs(box, cap);
  const auto k = static_cast<unsigned>(box.bond_count());
  const std::uint64_t total = all.size();

  struct Histograms {
    std::vector<std::uint64_t> configs;
    std::vector<std::uint64_t> sum_m;
    std::vector<std::uint64_t> sum_m2;
    std::vector<std::vector<std::uint64_t>> g;  // [bond][open count]
  };
  workers = std::max(1u, workers);
  std::vector<Histograms> parts(workers);
  for (auto& h : parts) {
    h.configs.assign(k + 1, 0);
    h.sum_m.assign(k + 1, 0);
    h.sum_m2.assign(k + 1, 0);
    h.g.assign(k, std::vector<std::uint64_t>(k + 1, 0));
  }
  std::vector<OpenPathSearch> searches(workers, OpenPathSearch(box));
  std::vector<Bond> bonds(k);
  for (unsigned i = 0; i < k; ++i) bonds[i] = box.bond(i);

  const std::uint64_t chunk = std::max<std::uint64_t>(1, total / (std::uint64_t{workers} * 8));
  const std::uint64_t chunks = (total + chunk - 1) / chunk;
  for_each_replicate(chunks, workers, [&](unsigned w, std::uint64_t c) {
    Histograms& h = parts[w];
    const std::uint64_t end = std::min(total, (c + 1) * chunk);
    for (std::uint64_t x = c * chunk; x < end; ++x) {
      const MaskConfig config(box, x);
      const auto j = static_cast<unsigned>(std::popcount(x));
      const std::uint64_t m = cluster_count(config);
      h.configs[j] += 1;
      h.sum_m[j] += m;
      h.sum_m2[j] += m * m;
      for (unsigned i = 0; i < k; ++i) {
        const std::array<BondIndex, 1> masked{i};
        if (!searches[w].connected(config, bonds[i].v1, bonds[i].v2, masked)) h.g[i][j] += 1;
      }
    }
  });

  Histograms sum = parts[0];
  for (unsigned w = 1; w < workers; ++w) {
    for (unsigned j = 0; j <= k; ++j) {
      sum.configs[j] += parts[w].configs[j];
      sum.sum_m[j] += parts[w].sum_m[j];
      sum.sum_m2[j] += parts[w].sum_m2[j];
      for (unsigned i = 0; i < k; ++i) sum.g[i][j] += parts[w].g[i][j];
    }
  }

  const auto basis = bernstein_basis(k);
  ExactMoments out;
  out.box = box;
  out.total_probability = from_open_count_histogram(sum.configs, basis);
  out.mean = from_open_count_histogram(sum.sum_m, basis);
  out.second_moment = from_open_count_histogram(sum.sum_m2, basis);
  out.variance = out.second_moment - out.mean * out.mean;
  out.prob_Gn.reserve(k);
  for (unsigned i = 0; i < k; ++i) out.prob_Gn.push_back(from_open_count_histogram(sum.g[i], basis));
  return out;
}

inline PolyP exact_mean_Mn(const BoxSpec& box, std::size_t cap = kDefaultEnumerationCap) {
  return compute_exact_moments(box, cap).mean;
}

inline PolyP exact_variance_Mn(const BoxSpec& box, std::size_t cap = kDefaultEnumerationCap) {
  return compute_exact_moments(box, cap).variance;
}

inline PolyP exact_prob_Gn(const BoxSpec& box, const Bond& b, std::size_t cap = kDefaultEnumerationCap) {
  require_bond(box, b);
  return compute_exact_moments(box, cap).prob_Gn[box.bond_index(b)];
}

struct IdentityReport {
  std::string name;
  bool holds = false;
  PolyP lhs;
  PolyP rhs;
  std::optional<std::size_t> first_difference;
};

inline IdentityReport compare_polys(std::string name, PolyP lhs, PolyP rhs) {
  IdentityReport r;
  r.name = std::move(name);
  r.first_difference = percolab::first_difference(lhs, rhs);
  r.holds = !r.first_difference.has_value();
  r.lhs = std::move(lhs);
  r.rhs = std::move(rhs);
  return r;
}

inline void require_identity(const IdentityReport& r) {
  if (r.holds) return;
  const std::size_t j = *r.first_difference;
  throw IdentityViolation(r.name, j,
                          "lhs " + r.lhs.coefficient(j).str() + " vs rhs " + r.rhs.coefficient(j).str());
}

inline PolyP sum_prob_Gn(const ExactMoments& m) {
  PolyP s;
  for (const auto& g : m.prob_Gn) s += g;
  return s;
}

// d/dp E_p(M_n) = -sum_b P_p(G_n(b)).
inline IdentityReport russo_report(const ExactMoments& m) {
  return compare_polys("russo", m.mean.derivative(), -sum_prob_Gn(m));
}

// p^2(1-p) + p(1-p)^2, the prefactor of the variance limit.
inline PolyP variance_prefactor() {
  const PolyP p = PolyP::p();
  const PolyP q = PolyP::one_minus_p();
  return p * p * q + p * q * q;
}

// Var_p(M_n) = (p(1-p)^2 + p^2(1-p)) sum_b P_p(G_n(b)).
inline IdentityReport variance_report(const ExactMoments& m) {
  return compare_polys("variance", m.variance, variance_prefactor() * sum_prob_Gn(m));
}

inline IdentityReport verify_russo_identity(const BoxSpec& box, std::size_t cap = kDefaultEnumerationCap) {
  auto r = russo_report(compute_exact_moments(box, cap));
  require_identity(r);
  return r;
}

inline IdentityReport verify_variance_identity(const BoxSpec& box, std::size_t cap = kDefaultEnumerationCap) {
  auto r = variance_report(compute_exact_moments(box, cap));
  require_identity(r);
  return r;
}

// ---------------------------------------------------------------------------
// Martingale differences of M_n along a bond revelation order.

// Cluster counts and no-bypass indicators for every configuration.
struct ConfigTables {
  BoxSpec box;
  std::vector<std::uint32_t> clusters;  // M_n per mask
  std::vector<std::uint64_t> no_bypass; // bit i: G_n(b_i) per mask
};

inline constexpr std::size_t kMartingaleBondLimit = 20;

inline ConfigTables build_config_tables(const BoxSpec& box, std::size_t cap = kDefaultEnumerationCap) {
  const ConfigEnumeration all = enumerate_configs(box, std::min(cap, kMartingaleBondLimit));
  const auto k = static_cast<unsigned>(box.bond_count());
  ConfigTables t;
  t.box = box;
  t.clusters.resize(all.size());
  t.no_bypass.resize(all.size());
  OpenPathSearch search(box);
  std::vector<Bond> bonds(k);
  for (unsigned i = 0; i < k; ++i) bonds[i] = box.bond(i);
  for (std::uint64_t x = 0; x < all.size(); ++x) {
    const MaskConfig config(box, x);
    t.clusters[x] = static_cast<std::uint32_t>(cluster_count(config));
    std::uint64_t g = 0;
    for (unsigned i = 0; i < k; ++i) {
      const std::array<BondIndex, 1> masked{i};
      if (!search.connected(config, bonds[i].v1, bonds[i].v2, masked)) g |= std::uint64_t{1} << i;
    }
    t.no_bypass[x] = g;
  }
  return t;
}

// Conditional expectations E_p(f | first t revealed bonds) for every prefix.
// Level t holds 2^t values indexed by the revealed states, bit s = state of
// the s-th revealed bond (1 = open).
template <class Scalar>
class PrefixExpectations {
 public:
  // leaf(x) gives f on canonical mask x; order[s] is the bond revealed at step s.
  template <class Leaf>
  PrefixExpectations(unsigned k, const Scalar& p, const std::vector<unsigned>& order, Leaf&& leaf)
      : k_(k), order_(order), levels_(k + 1) {
    if (order_.size() != k) throw InvalidArgument("revelation order must list every bond once");
    std::vector<bool> seen(k, false);
    for (unsigned b : order_) {
      if (b >= k || seen[b]) throw InvalidArgument("revelation order is not a permutation");
      seen[b] = true;
    }
    const Scalar q = Scalar(1) - p;
    auto& leaves = levels_[k];
    leaves.resize(std::size_t{1} << k);
    for (std::uint64_t x = 0; x < leaves.size(); ++x) leaves[key(x)] = leaf(x);
    for (unsigned t = k; t-- > 0;) {
      const auto& up = levels_[t + 1];
      auto& here = levels_[t];
      here.resize(std::size_t{1} << t);
      const std::uint64_t bit = std::uint64_t{1} << t;
      for (std::uint64_t y = 0; y < here.size(); ++y) here[y] = p * up[y | bit] + q * up[y];
    }
  }

  // Revealed-state key of canonical mask x.
  [[nodiscard]] std::uint64_t key(std::uint64_t x) const noexcept {
    std::uint64_t out = 0;
    for (unsigned s = 0; s < k_; ++s) out |= ((x >> order_[s]) & 1u) << s;
    return out;
  }

  [[nodiscard]] const Scalar& at(unsigned t, std::uint64_t prefix_key) const {
    return levels_[t][prefix_key & ((std::uint64_t{1} << t) - 1)];
  }

  // Increment when the bond at step t is revealed, for the configuration with key `full_key`.
  [[nodiscard]] Scalar delta(unsigned t, std::uint64_t full_key) const {
    return at(t + 1, full_key) - at(t, full_key);
  }

  [[nodiscard]] const std::vector<Scalar>& level(unsigned t) const { return levels_[t]; }
  [[nodiscard]] unsigned bonds() const noexcept { return k_; }
  [[nodiscard]] const std::vector<unsigned>& order() const noexcept { return order_; }

 private:
  unsigned k_;
  std::vector<unsigned> order_;
  std::vector<std::vector<Scalar>> levels_;
};

inline std::vector<unsigned> canonical_order(unsigned k) {
  std::vector<unsigned> order(k);
  std::iota(order.begin(), order.end(), 0u);
  return order;
}

inline std::uint64_t to_mask(const BondConfig& config) {
  std::uint64_t x = 0;
  for (BondIndex i = 0; i < config.size(); ++i) {
    if (config.is_open(i)) x |= std::uint64_t{1} << i;
  }
  return x;
}

// Delta_{i,k} for each bond in canonical order, revealing bonds in canonical
// order; the deltas sum to M_n(config) - E_p(M_n).
template <class Scalar>
std::vector<Scalar> compute_martingale_deltas(const ConfigTables& tables, const Scalar& p,
                                              const BondConfig& config) {
  if (!(config.box() == tables.box)) throw InvalidArgument("configuration box differs from tables");
  const auto k = static_cast<unsigned>(tables.box.bond_count());
  const PrefixExpectations<Scalar> tree(k, p, canonical_order(k),
                                        [&](std::uint64_t x) { return Scalar(tables.clusters[x]); });
  const std::uint64_t key = tree.key(to_mask(config));
  std::vector<Scalar> out(k);
  for (unsigned t = 0; t < k; ++t) out[t] = tree.delta(t, key);
  return out;
}

template <class Scalar>
std::vector<Scalar> compute_martingale_deltas(const BoxSpec& box, const Scalar& p, const BondConfig& config,
                                              std::size_t cap = kDefaultEnumerationCap) {
  return compute_martingale_deltas(build_config_tables(box, cap), p, config);
}

struct MartingaleBondCheck {
  unsigned bond = 0;
  Rational mean_delta_sq;       // E_p(Delta_i^2)
  Rational closed_form;         // (p(1-p)^2 + p^2(1-p)) P_p(G_n(b_i))
  bool second_moment_matches = false;
  std::uint64_t nonzero_off_event = 0;    // configs with !G_n(b_i) and Delta_i != 0
  std::uint64_t off_two_values = 0;       // configs with G_n(b_i) and Delta_i not +p (closed) / -(1-p) (open)
  std::uint64_t conditional_mismatches = 0;  // Delta_i != (p - 1{open}) P(G_n(b_i) | prefix)
};

struct MartingaleReport {
  BoxSpec box;
  Rational p;
  Rational variance;               // Var_p(M_n)
  Rational sum_delta_sq;           // sum_i E_p(Delta_i^2)
  std::uint64_t nonzero_prefix_means = 0;  // prefixes where the conditional mean of Delta is not 0
  std::uint64_t configurations = 0;
  std::vector<MartingaleBondCheck> bonds;

  [[nodiscard]] bool martingale_property() const { return nonzero_prefix_means == 0; }
  [[nodiscard]] bool variance_decomposition() const { return variance == sum_delta_sq; }
  [[nodiscard]] bool vanishes_off_event() const {
    for (const auto& b : bonds) if (b.nonzero_off_event != 0) return false;
    return true;
  }
  [[nodiscard]] bool two_valued_on_event() const {
    for (const auto& b : bonds) if (b.off_two_values != 0) return false;
    return true;
  }
  [[nodiscard]] bool second_moments_match() const {
    for (const auto& b : bonds) if (!b.second_moment_matches) return false;
    return true;
  }
  [[nodiscard]] bool conditional_formula_holds() const {
    for (const auto& b : bonds) if (b.conditional_mismatches != 0) return false;
    return true;
  }
};

// Checks the martingale structure of M_n - E_p(M_n) at a rational p, for
// every configuration and every bond, in exact arithmetic.
inline MartingaleReport analyze_martingale(const ConfigTables& tables, const ExactMoments& moments,
                                           const Rational& p, std::vector<unsigned> order = {}) {
  const auto k = static_cast<unsigned>(tables.box.bond_count());
  if (order.empty()) order = canonical_order(k);
  const Rational q = Rational(1) - p;
  const PrefixExpectations<Rational> tree(k, p, order,
                                          [&](std::uint64_t x) { return Rational(tables.clusters[x]); });
  MartingaleReport rep;
  rep.box = tables.box;
  rep.p = p;
  rep.variance = moments.variance.eval(p);
  rep.configurations = tables.clusters.size();
  const Rational prefactor = variance_prefactor().eval(p);

  for (unsigned t = 0; t < k; ++t) {
    const unsigned bond = order[t];
    MartingaleBondCheck check;
    check.bond = bond;
    // P(G_n(b) | first t revealed bonds)
    const PrefixExpectations<Rational> g_tree(k, p, order, [&](std::uint64_t x) {
      return Rational(static_cast<int>((tables.no_bypass[x] >> bond) & 1u));
    });

    // Second moment and martingale property over the 2^t prefixes.
    const std::uint64_t bit = std::uint64_t{1} << t;
    Rational second = 0;
    for (std::uint64_t y = 0; y < (std::uint64_t{1} << t); ++y) {
      Rational weight = 1;
      for (unsigned s = 0; s < t; ++s) weight *= ((y >> s) & 1u) ? p : q;
      const Rational base = tree.at(t, y);
      const Rational up_open = tree.at(t + 1, y | bit) - base;
      const Rational up_closed = tree.at(t + 1, y) - base;
      if (p * up_open + q * up_closed != 0) ++rep.nonzero_prefix_means;
      second += weight * (p * up_open * up_open + q * up_closed * up_closed);
    }
    check.mean_delta_sq = second;
    check.closed_form = prefactor * moments.prob_Gn[bond].eval(p);
    check.second_moment_matches = check.mean_delta_sq == check.closed_form;

    for (std::uint64_t x = 0; x < tables.clusters.size(); ++x) {
      const std::uint64_t key = tree.key(x);
      const Rational delta = tree.delta(t, key);
      const bool open = ((x >> bond) & 1u) != 0;
      const bool g = ((tables.no_bypass[x] >> bond) & 1u) != 0;
      if (!g && delta != 0) ++check.nonzero_off_event;
      if (g && delta != (open ? Rational(-q) : p)) ++check.off_two_values;
      const Rational predicted = (p - Rational(open ? 1 : 0)) * g_tree.at(t, key);
      if (delta != predicted) ++check.conditional_mismatches;
    }
    rep.sum_delta_sq += check.mean_delta_sq;
    rep.bonds.push_back(std::move(check));
  }
  return rep;
}

}  // namespace percolab
