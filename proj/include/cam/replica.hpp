#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <vector>

#include "cam/graph.hpp"
#include "cam/types.hpp"

namespace cam {

// A replica is one persona of a node: one connected component of the node's
// ego network (the subgraph induced by its neighbors, the node excluded).
// Identity is (node, anchor) where anchor is the smallest member id of the
// component; this keeps replicas stable across updates that leave their
// component alone. Isolated nodes carry a single replica with anchor 0
// (node ids start at 1, so 0 cannot collide).
struct ReplicaId {
    NodeId node = 0;
    NodeId anchor = 0;
    auto operator<=>(const ReplicaId&) const = default;
};

struct Replica {
    ReplicaId id;
    std::vector<NodeId> component;  // sorted; empty for the isolated sentinel
};

struct ReplicaEdge {
    ReplicaId a;
    ReplicaId b;
    auto operator<=>(const ReplicaEdge&) const = default;
};

inline ReplicaEdge make_redge(ReplicaId x, ReplicaId y) {
    return x < y ? ReplicaEdge{x, y} : ReplicaEdge{y, x};
}

// Replica-level view of one LevelGraph, plus the cluster labels living on it.
// |redges| always equals |edges| of the underlying graph.
struct ReplicaNetwork {
    int level = 0;
    std::map<NodeId, std::vector<Replica>> replicas;       // per node, sorted by anchor
    std::map<ReplicaId, std::set<ReplicaId>> radj;
    std::map<ReplicaId, Label> labels;                     // total after each pass

    bool has_replica(const ReplicaId& r) const;
    const Replica& replica(const ReplicaId& r) const;
    // 1-based position of r among its node's replicas (the superscript in
    // the v^i notation); canonical order is by anchor.
    std::size_t ordinal(const ReplicaId& r) const;
    std::size_t replica_count() const;
    std::size_t redge_count() const;
    std::vector<ReplicaId> all_replica_ids() const;
    std::vector<ReplicaEdge> all_redges() const;
};

// What one incremental pass changed; feeds label bookkeeping and seeds.
struct ReplicaDelta {
    std::vector<Replica> added;                 // brand-new identities, unlabeled
    std::vector<std::pair<ReplicaId, Label>> added_inheriting;  // new identity, label carried over
    std::vector<ReplicaId> removed;             // with the label they held
    std::vector<std::pair<ReplicaId, Label>> removed_labels;
    std::vector<ReplicaId> updated;             // same identity, component changed
    std::vector<ReplicaEdge> redges_added;
    std::vector<ReplicaEdge> redges_removed;
    std::size_t ego_recomputations = 0;
    std::vector<NodeId> ego_recomputed_nodes;   // filled when recording touches
};

// Connected components of v's ego network, each sorted, components ordered by
// smallest member.
std::vector<std::vector<NodeId>> ego_components(NodeId v, const LevelGraph& g);

// Lifts a graph edge to the replica pair that hosts it: u's replica whose
// component contains v, and v's replica whose component contains u.
ReplicaEdge map_edge(NodeId u, NodeId v, const ReplicaNetwork& rn);

// Recomputes replicas for exactly the affected nodes (ego_components is called
// once per affected node that is still in g; nodes gone from g are cleaned
// up). Replica edges incident to affected nodes are rebuilt via map_edge.
// Label reconciliation: a changed component keeps its label through its
// anchor; a brand-new identity inherits the label of the intersecting old
// replica with the smallest anchor, if any. rn is updated in place.
ReplicaDelta rebuild_replicas(const std::set<NodeId>& affected,
                              const LevelGraph& g,
                              ReplicaNetwork& rn,
                              bool record_touches = false);

}  // namespace cam
