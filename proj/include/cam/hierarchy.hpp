#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "cam/chunking.hpp"
#include "cam/clustering.hpp"
#include "cam/config.hpp"
#include "cam/graph.hpp"
#include "cam/providers.hpp"
#include "cam/replica.hpp"
#include "cam/types.hpp"

namespace cam {

// One stratum: its graph, the node payloads, the replica view, the clusters,
// and the map from cluster label to the abstraction node one level up.
struct Level {
    LevelGraph graph{0};
    std::map<NodeId, MemoryNode> nodes;
    ReplicaNetwork rn;
    ClusterRegistry reg;
    std::map<Label, NodeId> abs_of_label;
};

struct MemoryHierarchy {
    EngineConfig config;
    std::vector<Level> levels;
    NodeId next_node_id = 1;
    std::map<NodeId, int> level_of;

    const MemoryNode* find_node(NodeId id) const;
    std::size_t total_nodes() const;

    // Parents of a node: the abstraction ids of its replicas' clusters.
    // Empty at the top level. Throws on unknown (level, node).
    std::set<NodeId> psi(int level, NodeId id) const;
};

struct LevelReport {
    int level = 0;
    std::size_t nodes_added = 0, nodes_removed = 0, nodes_updated = 0;
    std::size_t edges_added = 0, edges_removed = 0;
    std::size_t affected = 0;
    std::size_t replicas_recomputed = 0;  // ego_components invocations
    std::size_t replicas_added = 0, replicas_removed = 0;
    std::size_t clusters_modified = 0;
    std::size_t summaries_regenerated = 0;
    std::size_t lp_rounds = 0, label_changes = 0, label_votes = 0;
    double expand_s = 0, replicas_s = 0, clusters_s = 0, refresh_s = 0;

    // Touch traces, filled when integrate_batch(..., record_touches=true).
    std::vector<NodeId> affected_nodes;
    std::vector<NodeId> ego_recomputed_nodes;
    std::vector<ReplicaId> seed_replicas;
    std::vector<ReplicaId> evaluated_replicas;
    std::vector<ReplicaId> relabeled_replicas;
};

struct UpdateReport {
    std::size_t chunks_ingested = 0;
    std::size_t embed_calls = 0, summarize_calls = 0;
    double embed_s = 0, total_s = 0;
    std::vector<LevelReport> levels;
};

// The engine owns one committed hierarchy snapshot. integrate_batch works on
// a copy and swaps it in only on success, so a provider failure leaves the
// committed state untouched and concurrent readers always see a full batch.
class MemoryEngine {
public:
    MemoryEngine(EngineConfig cfg, std::shared_ptr<Provider> provider);
    MemoryEngine(std::shared_ptr<const MemoryHierarchy> restored,
                 std::shared_ptr<Provider> provider);

    UpdateReport integrate_batch(const std::vector<Chunk>& chunks,
                                 bool record_touches = false);

    std::shared_ptr<const MemoryHierarchy> hierarchy() const { return committed_; }
    Provider& provider() { return *provider_; }

private:
    std::shared_ptr<const MemoryHierarchy> committed_;
    std::shared_ptr<Provider> provider_;
};

bool level_should_grow(const MemoryHierarchy& h, int level);

// Full-walk structural validation; returns human-readable problems, empty
// when the hierarchy is sound.
std::vector<std::string> consistency_check(const MemoryHierarchy& h);

}  // namespace cam
