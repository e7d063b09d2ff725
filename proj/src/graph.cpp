#include "cam/graph.hpp"

#include <algorithm>
#include <cmath>

#include "cam/embedding.hpp"
#include "cam/errors.hpp"
#include "cam/parallel.hpp"

namespace cam {

void LevelGraph::add_node(NodeId id) {
    adj_.try_emplace(id);
}

void LevelGraph::remove_node(NodeId id) {
    auto it = adj_.find(id);
    if (it == adj_.end()) return;
    for (const auto& [nbr, w] : it->second) adj_[nbr].erase(id);
    adj_.erase(it);
}

void LevelGraph::add_edge(NodeId u, NodeId v, double w) {
    if (u == v) throw ConsistencyError("self-loop rejected: node " + std::to_string(u));
    if (!has_node(u) || !has_node(v))
        throw ConsistencyError("edge endpoint missing: " + std::to_string(u) + "-" +
                               std::to_string(v));
    adj_[u][v] = w;
    adj_[v][u] = w;
}

void LevelGraph::remove_edge(NodeId u, NodeId v) {
    auto it = adj_.find(u);
    if (it != adj_.end()) it->second.erase(v);
    it = adj_.find(v);
    if (it != adj_.end()) it->second.erase(u);
}

bool LevelGraph::has_edge(NodeId u, NodeId v) const {
    auto it = adj_.find(u);
    return it != adj_.end() && it->second.count(v) != 0;
}

const std::map<NodeId, double>& LevelGraph::neighbors(NodeId id) const {
    auto it = adj_.find(id);
    if (it == adj_.end())
        throw ConsistencyError("unknown node " + std::to_string(id) + " at level " +
                               std::to_string(level_));
    return it->second;
}

std::size_t LevelGraph::edge_count() const {
    std::size_t twice = 0;
    for (const auto& [id, nbrs] : adj_) twice += nbrs.size();
    return twice / 2;
}

std::vector<NodeId> LevelGraph::node_ids() const {
    std::vector<NodeId> ids;
    ids.reserve(adj_.size());
    for (const auto& [id, nbrs] : adj_) ids.push_back(id);
    return ids;
}

double pair_score(const MemoryNode& a, const MemoryNode& b, const EngineConfig& cfg) {
    if (a.level != 0 || b.level != 0)
        throw std::invalid_argument("pair_score is defined on level-0 chunks");
    if (!a.embedding || !b.embedding)
        throw std::invalid_argument("pair_score requires embedded chunks");
    if (a.embedding->size() != b.embedding->size())
        throw std::invalid_argument("pair_score dimension mismatch: " +
                                    std::to_string(a.embedding->size()) + " vs " +
                                    std::to_string(b.embedding->size()));
    double sem = cosine(*a.embedding, *b.embedding);
    if (sem < 0.0) sem = 0.0;
    double prox = 0.0;
    if (a.doc_id == b.doc_id) {
        const double d = static_cast<double>(a.seq_index) - static_cast<double>(b.seq_index);
        prox = std::exp(-(d * d) / (2.0 * cfg.sigma * cfg.sigma));
    }
    return cfg.alpha * sem + (1.0 - cfg.alpha) * prox;
}

ExpansionDelta expand(const LevelGraph& level0,
                      const std::map<NodeId, MemoryNode>& existing,
                      const std::vector<MemoryNode>& new_chunks,
                      const EngineConfig& cfg) {
    ExpansionDelta delta;
    delta.new_nodes = new_chunks;
    if (new_chunks.empty()) return delta;

    for (const auto& n : new_chunks) {
        if (level0.has_node(n.id) || existing.count(n.id))
            throw ConsistencyError("expand: node " + std::to_string(n.id) + " already present");
    }

    // Each new chunk picks its top-k qualifying partners independently.
    std::vector<std::vector<std::pair<NodeId, double>>> picks(new_chunks.size());
    parallel_for(new_chunks.size(), [&](std::size_t i) {
        const MemoryNode& v = new_chunks[i];
        std::vector<std::pair<double, NodeId>> qualifying;
        auto consider = [&](const MemoryNode& cand) {
            const double s = pair_score(v, cand, cfg);
            if (s > cfg.theta) qualifying.emplace_back(s, cand.id);
        };
        for (const auto& [id, node] : existing) consider(node);
        for (const auto& other : new_chunks) {
            if (other.id != v.id) consider(other);
        }
        std::sort(qualifying.begin(), qualifying.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        if (qualifying.size() > cfg.k) qualifying.resize(cfg.k);
        for (const auto& [s, id] : qualifying) picks[i].emplace_back(id, s);
    });

    std::map<std::pair<NodeId, NodeId>, double> edges;
    for (std::size_t i = 0; i < new_chunks.size(); ++i) {
        for (const auto& [id, s] : picks[i]) {
            const NodeId a = std::min(new_chunks[i].id, id);
            const NodeId b = std::max(new_chunks[i].id, id);
            edges[{a, b}] = s;
        }
    }
    delta.new_edges.reserve(edges.size());
    for (const auto& [uv, w] : edges) delta.new_edges.push_back({uv.first, uv.second, w});
    return delta;
}

std::set<NodeId> affected_set(const ExpansionDelta& delta, const LevelGraph& level0) {
    std::set<NodeId> a;
    for (const auto& n : delta.new_nodes) a.insert(n.id);
    for (const auto& e : delta.new_edges) {
        if (level0.has_node(e.u)) a.insert(e.u);
        if (level0.has_node(e.v)) a.insert(e.v);
    }
    return a;
}

}  // namespace cam
