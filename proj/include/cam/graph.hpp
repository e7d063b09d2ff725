#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cam/config.hpp"
#include "cam/types.hpp"

namespace cam {

enum class NodeKind { chunk, abstraction };

struct MemoryNode {
    NodeId id = 0;
    int level = 0;
    NodeKind kind = NodeKind::chunk;
    std::string text;
    EmbeddingRef embedding;

    // chunk only
    std::string doc_id;
    std::size_t seq_index = 0;

    // abstraction only: the cluster (at level-1) it abstracts, and that
    // cluster's node set, sorted.
    Label source_label = 0;
    std::vector<NodeId> members;
};

struct Edge {
    NodeId u = 0;
    NodeId v = 0;
    double w = 0.0;
};

// Undirected weighted graph of one level. Nodes may be isolated; adjacency
// keys exist for every node.
class LevelGraph {
public:
    explicit LevelGraph(int level = 0) : level_(level) {}

    int level() const { return level_; }

    void add_node(NodeId id);
    void remove_node(NodeId id);
    bool has_node(NodeId id) const { return adj_.count(id) != 0; }

    // Symmetric; rejects self-loops; inserting an existing edge overwrites w.
    void add_edge(NodeId u, NodeId v, double w);
    void remove_edge(NodeId u, NodeId v);
    bool has_edge(NodeId u, NodeId v) const;

    const std::map<NodeId, double>& neighbors(NodeId id) const;
    const std::map<NodeId, std::map<NodeId, double>>& adjacency() const { return adj_; }

    std::size_t node_count() const { return adj_.size(); }
    std::size_t edge_count() const;
    std::vector<NodeId> node_ids() const;

private:
    int level_;
    std::map<NodeId, std::map<NodeId, double>> adj_;
};

// Immutable result of scoring one batch against the current level-0 graph.
struct ExpansionDelta {
    std::vector<MemoryNode> new_nodes;
    std::vector<Edge> new_edges;  // canonical: u < v, sorted
};

// Composite relevance of two level-0 chunks: alpha * semantic cosine plus
// (1 - alpha) * positional Gaussian. The positional term is zero across
// documents; negative cosine clamps to zero.
double pair_score(const MemoryNode& a, const MemoryNode& b, const EngineConfig& cfg);

// For each new chunk, scores it against every prior node and every other new
// chunk, keeps candidates scoring above theta, and links the top k. Pure:
// the graph is not modified; reciprocal picks dedupe to one edge.
ExpansionDelta expand(const LevelGraph& level0,
                      const std::map<NodeId, MemoryNode>& existing,
                      const std::vector<MemoryNode>& new_chunks,
                      const EngineConfig& cfg);

// A = new nodes plus pre-existing endpoints of new edges.
std::set<NodeId> affected_set(const ExpansionDelta& delta, const LevelGraph& level0);

}  // namespace cam
