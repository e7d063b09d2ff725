#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "cam/errors.hpp"
#include "cam/graph.hpp"
#include "cam/replica.hpp"
#include "oracles/oracles.hpp"

using namespace cam;

namespace {

LevelGraph path3() {
    LevelGraph g(0);
    for (NodeId v : {1, 2, 3}) g.add_node(v);
    g.add_edge(1, 2, 1.0);
    g.add_edge(2, 3, 1.0);
    return g;
}

LevelGraph butterfly_graph() {
    // Two triangles sharing node 3: (1,2,3) and (3,4,5).
    LevelGraph g(0);
    for (NodeId v : {1, 2, 3, 4, 5}) g.add_node(v);
    g.add_edge(1, 2, 1.0);
    g.add_edge(1, 3, 1.0);
    g.add_edge(2, 3, 1.0);
    g.add_edge(3, 4, 1.0);
    g.add_edge(3, 5, 1.0);
    g.add_edge(4, 5, 1.0);
    return g;
}

ReplicaNetwork build_full(const LevelGraph& g) {
    ReplicaNetwork rn;
    rn.level = g.level();
    std::set<NodeId> all;
    for (NodeId v : g.node_ids()) all.insert(v);
    rebuild_replicas(all, g, rn);
    return rn;
}

std::set<ReplicaEdge> redge_set(const ReplicaNetwork& rn) {
    const auto v = rn.all_redges();
    return {v.begin(), v.end()};
}

}  // namespace

TEST_CASE("ego_components splits a path midpoint and joins a triangle") {
    const auto path = path3();
    CHECK(ego_components(2, path) ==
          std::vector<std::vector<NodeId>>{{1}, {3}});
    CHECK(ego_components(1, path) == std::vector<std::vector<NodeId>>{{2}});

    LevelGraph tri(0);
    for (NodeId v : {1, 2, 3}) tri.add_node(v);
    tri.add_edge(1, 2, 1.0);
    tri.add_edge(2, 3, 1.0);
    tri.add_edge(1, 3, 1.0);
    CHECK(ego_components(1, tri) == std::vector<std::vector<NodeId>>{{2, 3}});

    LevelGraph lone(0);
    lone.add_node(7);
    CHECK(ego_components(7, lone).empty());
}

TEST_CASE("butterfly center splits into two replicas") {
    const auto g = butterfly_graph();
    const auto rn = build_full(g);

    REQUIRE(rn.replicas.at(3).size() == 2);
    const auto& first = rn.replicas.at(3)[0];
    const auto& second = rn.replicas.at(3)[1];
    CHECK(first.id == ReplicaId{3, 1});
    CHECK(first.component == std::vector<NodeId>{1, 2});
    CHECK(second.id == ReplicaId{3, 4});
    CHECK(second.component == std::vector<NodeId>{4, 5});
    CHECK(rn.ordinal(ReplicaId{3, 1}) == 1);
    CHECK(rn.ordinal(ReplicaId{3, 4}) == 2);
    for (NodeId v : {1, 2, 4, 5}) CHECK(rn.replicas.at(v).size() == 1);
    CHECK(rn.replica_count() == 6);

    // Every graph edge lifts to exactly one replica edge.
    CHECK(rn.redge_count() == g.edge_count());
    CHECK(map_edge(1, 3, rn) == make_redge(ReplicaId{1, 2}, ReplicaId{3, 1}));
    CHECK(map_edge(4, 3, rn) == make_redge(ReplicaId{4, 3}, ReplicaId{3, 4}));
    // The two personas of node 3 are not adjacent to each other.
    CHECK(rn.radj.at(ReplicaId{3, 1}).count(ReplicaId{3, 4}) == 0);

    CHECK_THROWS_AS(rn.ordinal(ReplicaId{3, 2}), ConsistencyError);
    CHECK_THROWS_AS(rn.replica(ReplicaId{9, 0}), ConsistencyError);
}

TEST_CASE("isolated nodes carry the anchor-0 sentinel replica") {
    LevelGraph g(0);
    g.add_node(4);
    ReplicaNetwork rn;
    auto delta = rebuild_replicas({4}, g, rn);
    REQUIRE(delta.added.size() == 1);
    CHECK(delta.added[0].id == ReplicaId{4, 0});
    CHECK(delta.added[0].component.empty());
    CHECK(rn.has_replica(ReplicaId{4, 0}));

    // Once the node gains a neighbor the sentinel is replaced.
    g.add_node(1);
    g.add_edge(1, 4, 1.0);
    rn.labels[ReplicaId{4, 0}] = 77;
    delta = rebuild_replicas({1, 4}, g, rn);
    CHECK(!rn.has_replica(ReplicaId{4, 0}));
    CHECK(rn.has_replica(ReplicaId{4, 1}));
    // The empty sentinel component intersects nothing, so no inheritance.
    bool inherited_77 = false;
    for (const auto& [rid, lab] : delta.added_inheriting)
        if (rid == ReplicaId{4, 1} && lab == 77) inherited_77 = true;
    CHECK(!inherited_77);
    CHECK(std::count(delta.removed.begin(), delta.removed.end(), ReplicaId{4, 0}) == 1);
    CHECK(rn.labels.count(ReplicaId{4, 0}) == 0);
}

TEST_CASE("an empty affected set is a no-op") {
    const auto g = path3();
    ReplicaNetwork rn = build_full(g);
    const auto before = oracle::rn_digest(rn);
    const auto delta = rebuild_replicas({}, g, rn);
    CHECK(delta.added.empty());
    CHECK(delta.removed.empty());
    CHECK(delta.updated.empty());
    CHECK(delta.ego_recomputations == 0);
    CHECK(oracle::rn_digest(rn) == before);
}

TEST_CASE("closing a path into a triangle merges replicas with inheritance") {
    auto g = path3();
    ReplicaNetwork rn = build_full(g);
    rn.labels[ReplicaId{1, 2}] = 11;
    rn.labels[ReplicaId{2, 1}] = 10;
    rn.labels[ReplicaId{2, 3}] = 20;
    rn.labels[ReplicaId{3, 2}] = 30;
    const auto old_redges = redge_set(rn);

    g.add_edge(1, 3, 1.0);
    // Affected: both endpoints plus their common neighbor 2.
    const auto delta = rebuild_replicas({1, 2, 3}, g, rn, true);

    CHECK(delta.ego_recomputations == 3);
    CHECK(delta.ego_recomputed_nodes == std::vector<NodeId>{1, 2, 3});

    // Node 2: [1] and [3] merged into [1,3]; anchor 1 survives, anchor 3 dies.
    CHECK(rn.replicas.at(2).size() == 1);
    CHECK(rn.replicas.at(2)[0].component == std::vector<NodeId>{1, 3});
    CHECK(std::count(delta.updated.begin(), delta.updated.end(), ReplicaId{2, 1}) == 1);
    CHECK(std::count(delta.removed.begin(), delta.removed.end(), ReplicaId{2, 3}) == 1);
    CHECK(rn.labels.at(ReplicaId{2, 1}) == 10);
    CHECK(rn.labels.count(ReplicaId{2, 3}) == 0);
    bool removed_20 = false;
    for (const auto& [rid, lab] : delta.removed_labels)
        if (rid == ReplicaId{2, 3} && lab == 20) removed_20 = true;
    CHECK(removed_20);

    // Node 3: fresh identity (3,1) inherits from the intersecting (3,2).
    bool inherited_30 = false;
    for (const auto& [rid, lab] : delta.added_inheriting)
        if (rid == ReplicaId{3, 1} && lab == 30) inherited_30 = true;
    CHECK(inherited_30);
    CHECK(rn.labels.at(ReplicaId{3, 1}) == 30);

    // Node 1 keeps identity (1,2) with a grown component.
    CHECK(rn.labels.at(ReplicaId{1, 2}) == 11);
    CHECK(rn.replicas.at(1)[0].component == std::vector<NodeId>{2, 3});

    // Replica edge count tracks the graph, and the reported diffs reconcile.
    CHECK(rn.redge_count() == g.edge_count());
    std::set<ReplicaEdge> reconstructed = old_redges;
    for (const auto& e : delta.redges_removed) reconstructed.erase(e);
    for (const auto& e : delta.redges_added) reconstructed.insert(e);
    CHECK(reconstructed == redge_set(rn));

    // Matches an offline rebuild.
    CHECK(oracle::rn_digest(rn) == oracle::rn_digest(oracle::offline_ego_split(g)));
}

TEST_CASE("splitting a triangle spawns an inheriting identity") {
    LevelGraph g(0);
    for (NodeId v : {1, 2, 3}) g.add_node(v);
    g.add_edge(1, 2, 1.0);
    g.add_edge(2, 3, 1.0);
    g.add_edge(1, 3, 1.0);
    ReplicaNetwork rn = build_full(g);
    rn.labels[ReplicaId{2, 1}] = 5;

    g.remove_edge(1, 3);
    const auto delta = rebuild_replicas({1, 2, 3}, g, rn);

    // Node 2's ego [1,3] split into [1] and [3]; the new (2,3) inherits 5.
    CHECK(rn.replicas.at(2).size() == 2);
    CHECK(rn.labels.at(ReplicaId{2, 1}) == 5);
    bool inherited = false;
    for (const auto& [rid, lab] : delta.added_inheriting)
        if (rid == ReplicaId{2, 3} && lab == 5) inherited = true;
    CHECK(inherited);
    CHECK(rn.redge_count() == g.edge_count());
    CHECK(oracle::rn_digest(rn) == oracle::rn_digest(oracle::offline_ego_split(g)));
}

TEST_CASE("incremental rebuilds track the offline oracle through random evolution") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        LevelGraph g(0);
        ReplicaNetwork rn;
        NodeId next = 1;
        for (int batch = 0; batch < 8; ++batch) {
            std::set<NodeId> affected;
            for (int i = 0; i < 5; ++i) {
                g.add_node(next);
                affected.insert(next);
                ++next;
            }
            const auto ids = g.node_ids();
            for (int i = 0; i < 9; ++i) {
                const NodeId u = ids[rng() % ids.size()];
                const NodeId v = ids[rng() % ids.size()];
                if (u == v) continue;
                g.add_edge(u, v, 1.0);
                affected.insert(u);
                affected.insert(v);
                for (const auto& [w, weight] : g.neighbors(u))
                    if (g.has_edge(w, v)) affected.insert(w);
            }
            rebuild_replicas(affected, g, rn);
            CHECK(rn.redge_count() == g.edge_count());
            REQUIRE(oracle::rn_digest(rn) ==
                    oracle::rn_digest(oracle::offline_ego_split(g)));
        }
    }
}
