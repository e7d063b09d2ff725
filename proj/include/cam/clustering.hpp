#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <vector>

#include "cam/config.hpp"
#include "cam/replica.hpp"
#include "cam/types.hpp"

namespace cam {

// Label bookkeeping for one level's replica network. members mirrors
// rn.labels; dirty collects labels whose member set or incident replica
// edges changed since the last finalize.
struct ClusterRegistry {
    int level = 0;
    std::map<Label, std::set<ReplicaId>> members;
    std::set<Label> established;  // label has an abstraction node one level up
    std::set<Label> dirty;
    Label next_label = 1;

    Label mint() { return next_label++; }
    std::size_t live_clusters() const;
    void move_member(ReplicaId r, Label from, Label to);
};

enum class ChangeKind { created, updated, dissolved };

struct ClusterChange {
    Label label = 0;
    ChangeKind kind = ChangeKind::updated;
    std::vector<NodeId> member_nodes;  // projection to original ids, sorted; empty when dissolved
};

struct LpStats {
    std::size_t rounds = 0;
    std::size_t label_changes = 0;
    std::size_t label_votes = 0;  // neighbor-label reads
    bool converged = true;
    std::vector<ReplicaId> evaluated;  // filled when recording touches
    std::vector<ReplicaId> relabeled;
};

// Mirrors a structural replica delta into the registry: inherited labels gain
// members, removed replicas lose them, and labels touching changed replica
// edges become dirty (their inter-cluster edges need recomputation).
void apply_replica_delta(const ReplicaDelta& delta, const ReplicaNetwork& rn,
                         ClusterRegistry& reg);

// Fresh singleton label for every replica that has none; inherited labels are
// left alone.
std::vector<ReplicaId> init_labels(ReplicaNetwork& rn, ClusterRegistry& reg);

// Seeded label propagation: deterministic ordered sweeps (ascending replica
// id, in-place reads) over the active set; a replica adopts the majority
// label among its neighbors, keeps its own on a tie for the max, otherwise
// takes the smallest tied label. Neighbors of a changed replica join the next
// round; work never leaves the ripple closure of the seed. Returns every
// label whose membership or edges changed since the last finalize.
std::set<Label> propagate(const std::set<ReplicaId>& seed, ReplicaNetwork& rn,
                          ClusterRegistry& reg, const EngineConfig& cfg,
                          LpStats* stats = nullptr, bool record_touches = false);

// Connectivity repair plus reporting: disconnected modified clusters are
// split (the component with the smallest member keeps the label), empty
// established clusters dissolve, and each surviving modified cluster is
// reported with its original node ids. Clears the dirty set.
std::vector<ClusterChange> finalize(const std::set<Label>& modified, ReplicaNetwork& rn,
                                    ClusterRegistry& reg);

}  // namespace cam
