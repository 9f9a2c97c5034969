#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "percolab/clusters.hpp"
#include "percolab/rng.hpp"

namespace percolab {
namespace {

// Independent component count: recursive flood fill over an adjacency list.
std::uint64_t flood_fill_count(const BondConfig& c) {
  const BoxSpec& box = c.box();
  std::vector<std::vector<VertexIndex>> adj(box.vertex_count());
  for (BondIndex i = 0; i < box.bond_count(); ++i) {
    if (!c.is_open(i)) continue;
    const Bond b = box.bond(i);
    adj[b.v1].push_back(b.v2);
    adj[b.v2].push_back(b.v1);
  }
  std::vector<bool> seen(box.vertex_count(), false);
  std::uint64_t count = 0;
  std::vector<VertexIndex> stack;
  for (VertexIndex s = 0; s < box.vertex_count(); ++s) {
    if (seen[s]) continue;
    ++count;
    stack.push_back(s);
    seen[s] = true;
    while (!stack.empty()) {
      const VertexIndex x = stack.back();
      stack.pop_back();
      for (VertexIndex y : adj[x]) {
        if (!seen[y]) {
          seen[y] = true;
          stack.push_back(y);
        }
      }
    }
  }
  return count;
}

TEST(CountClusters, Examples) {
  const BoxSpec square(2, 1);
  EXPECT_EQ(count_clusters(BondConfig::all(square, false)).count, 9u);
  EXPECT_EQ(count_clusters(BondConfig::all(square, true)).count, 1u);

  const BoxSpec path(1, 1);
  BondConfig c(path);
  c.set(0, true);  // bond (-1, 0)
  EXPECT_EQ(count_clusters(c).count, 2u);
}

TEST(CountClusters, LabelingInvariants) {
  for (auto [d, n] : {std::pair{2, 6}, std::pair{3, 3}}) {
    const BoxSpec box(d, n);
    for (std::uint64_t r = 0; r < 10; ++r) {
      const auto c = sample_config(box, 0.45, {31, r});
      const auto labels = count_clusters(c);
      std::set<std::uint32_t> reps(labels.component_id.begin(), labels.component_id.end());
      EXPECT_EQ(reps.size(), labels.count);
      std::uint64_t total = 0;
      for (auto rep : reps) total += labels.sizes[rep];
      EXPECT_EQ(total, box.vertex_count());
      EXPECT_EQ(labels.count, box.vertex_count() - labels.merges);
      EXPECT_EQ(labels.count, flood_fill_count(c));
      EXPECT_EQ(labels.count, cluster_count(c));
      // shared representative iff connected
      for (VertexIndex u = 0; u < box.vertex_count(); u += 7) {
        const VertexIndex v = (u * 13 + 5) % box.vertex_count();
        EXPECT_EQ(labels.component_id[u] == labels.component_id[v], connected_in_subgraph(c, u, v));
      }
    }
  }
}

TEST(CountClusters, PathGraphLosesOneClusterPerOpenBond) {
  const BoxSpec small(1, 3);
  for (const BondConfig& c : enumerate_configs(small)) {
    EXPECT_EQ(count_clusters(c).count, 7 - c.open_count());
  }
  const BoxSpec big(1, 50);
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto c = sample_config(big, 0.3, {5, r});
    EXPECT_EQ(count_clusters(c).count, 101 - c.open_count());
  }
}

TEST(ConnectedInSubgraph, Examples) {
  const BoxSpec box(2, 2);
  const auto open = BondConfig::all(box, true);
  const auto closed = BondConfig::all(box, false);
  EXPECT_TRUE(connected_in_subgraph(open, 0, box.vertex_count() - 1));
  EXPECT_FALSE(connected_in_subgraph(closed, 0, 1));
  EXPECT_TRUE(connected_in_subgraph(closed, 4, 4));

  const BoxSpec path(1, 2);
  const auto all = BondConfig::all(path, true);
  const Bond b = path.bond(1);
  const std::array<BondIndex, 1> masked{1};
  EXPECT_FALSE(connected_in_subgraph(all, b.v1, b.v2, masked));
  EXPECT_TRUE(connected_in_subgraph(all, b.v1, b.v2));
  EXPECT_THROW((void)connected_in_subgraph(all, 0, 99), InvalidArgument);
}

}  // namespace
}  // namespace percolab
