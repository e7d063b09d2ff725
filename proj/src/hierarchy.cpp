#include "cam/hierarchy.hpp"

#include <algorithm>
#include <chrono>

#include "cam/embedding.hpp"
#include "cam/errors.hpp"

namespace cam {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// What refresh_abstractions did to the level above.
struct SuperDelta {
    std::set<NodeId> affected;
    std::size_t nodes_added = 0, nodes_removed = 0, nodes_updated = 0;
    std::size_t edges_added = 0, edges_removed = 0;
    bool structural() const {
        return nodes_added || nodes_removed || edges_added || edges_removed;
    }
};

std::vector<NodeId> project_members(const std::set<ReplicaId>& reps) {
    std::set<NodeId> nodes;
    for (const auto& r : reps) nodes.insert(r.node);
    return {nodes.begin(), nodes.end()};
}

// Creates/updates/removes abstraction nodes at level+1 for the changed
// clusters of `level`, then recomputes their inter-cluster edges from the
// replica adjacency. Summaries are regenerated only when a cluster's
// projected member set actually changed; singletons promote verbatim.
SuperDelta refresh_abstractions(MemoryHierarchy& h, int level,
                                const std::vector<ClusterChange>& changes,
                                Provider& provider, UpdateReport& report,
                                LevelReport& lrep) {
    Level& src = h.levels[static_cast<std::size_t>(level)];
    Level& dst = h.levels[static_cast<std::size_t>(level) + 1];
    SuperDelta delta;

    // Pass 1: node lifecycle. Summary embeddings are batched into one call.
    std::vector<NodeId> pending_embed;
    std::vector<std::string> pending_texts;
    for (const auto& ch : changes) {
        if (ch.kind == ChangeKind::dissolved) {
            auto it = src.abs_of_label.find(ch.label);
            if (it == src.abs_of_label.end()) continue;
            const NodeId abs_id = it->second;
            delta.affected.insert(abs_id);  // gone from the graph; replicas need cleanup
            for (const auto& [nbr, w] : dst.graph.neighbors(abs_id)) {
                delta.affected.insert(nbr);
                ++delta.edges_removed;
            }
            dst.graph.remove_node(abs_id);
            dst.nodes.erase(abs_id);
            h.level_of.erase(abs_id);
            src.abs_of_label.erase(it);
            src.reg.established.erase(ch.label);
            ++delta.nodes_removed;
            continue;
        }

        auto make_text = [&](const std::vector<NodeId>& members) -> std::string {
            if (members.size() == 1) return src.nodes.at(members[0]).text;
            std::vector<std::string> texts;
            texts.reserve(members.size());
            for (const NodeId m : members) texts.push_back(src.nodes.at(m).text);
            ++report.summarize_calls;
            ++lrep.summaries_regenerated;
            return provider.summarize(texts, level + 1);
        };

        auto it = src.abs_of_label.find(ch.label);
        if (it == src.abs_of_label.end()) {
            MemoryNode node;
            node.id = h.next_node_id++;
            node.level = level + 1;
            node.kind = NodeKind::abstraction;
            node.source_label = ch.label;
            node.members = ch.member_nodes;
            node.text = make_text(ch.member_nodes);
            if (ch.member_nodes.size() == 1) {
                node.embedding = src.nodes.at(ch.member_nodes[0]).embedding;
            } else {
                pending_embed.push_back(node.id);
                pending_texts.push_back(node.text);
            }
            dst.graph.add_node(node.id);
            h.level_of[node.id] = level + 1;
            src.abs_of_label[ch.label] = node.id;
            src.reg.established.insert(ch.label);
            delta.affected.insert(node.id);
            ++delta.nodes_added;
            dst.nodes.emplace(node.id, std::move(node));
        } else {
            MemoryNode& node = dst.nodes.at(it->second);
            if (node.members != ch.member_nodes) {
                node.members = ch.member_nodes;
                node.text = make_text(ch.member_nodes);
                if (ch.member_nodes.size() == 1) {
                    node.embedding = src.nodes.at(ch.member_nodes[0]).embedding;
                } else {
                    pending_embed.push_back(node.id);
                    pending_texts.push_back(node.text);
                }
                ++delta.nodes_updated;
            }
        }
    }
    if (!pending_embed.empty()) {
        ++report.embed_calls;
        auto embs = provider.embed_batch(pending_texts);
        for (std::size_t i = 0; i < pending_embed.size(); ++i) {
            dst.nodes.at(pending_embed[i]).embedding =
                std::make_shared<const Embedding>(std::move(embs[i]));
        }
    }

    // Pass 2: inter-cluster edges of every surviving changed cluster. An
    // edge (X, Y) exists iff some replica edge joins a replica labeled X to
    // one labeled Y, so recomputing from X's side replaces X's whole row.
    for (const auto& ch : changes) {
        if (ch.kind == ChangeKind::dissolved) continue;
        auto ait = src.abs_of_label.find(ch.label);
        if (ait == src.abs_of_label.end())
            throw ConsistencyError("changed cluster lacks an abstraction node");
        const NodeId x = ait->second;

        std::set<NodeId> fresh;
        auto mem = src.reg.members.find(ch.label);
        if (mem != src.reg.members.end()) {
            for (const auto& r : mem->second) {
                auto adj = src.rn.radj.find(r);
                if (adj == src.rn.radj.end()) continue;
                for (const auto& nbr : adj->second) {
                    const Label other = src.rn.labels.at(nbr);
                    if (other == ch.label) continue;
                    auto oit = src.abs_of_label.find(other);
                    if (oit == src.abs_of_label.end())
                        throw ConsistencyError("neighbor cluster lacks an abstraction node");
                    fresh.insert(oit->second);
                }
            }
        }

        std::set<NodeId> stale;
        for (const auto& [nbr, w] : dst.graph.neighbors(x)) stale.insert(nbr);

        for (const NodeId y : stale) {
            if (fresh.count(y)) continue;
            // Removing (x, y): x, y and their common neighbors see new egos.
            delta.affected.insert(x);
            delta.affected.insert(y);
            for (const auto& [z, w] : dst.graph.neighbors(x)) {
                if (z != y && dst.graph.has_edge(z, y)) delta.affected.insert(z);
            }
            dst.graph.remove_edge(x, y);
            ++delta.edges_removed;
        }
        for (const NodeId y : fresh) {
            if (stale.count(y)) continue;
            dst.graph.add_edge(x, y, 1.0);
            ++delta.edges_added;
            delta.affected.insert(x);
            delta.affected.insert(y);
            for (const auto& [z, w] : dst.graph.neighbors(x)) {
                if (z != y && dst.graph.has_edge(z, y)) delta.affected.insert(z);
            }
        }
    }

    // Affected ids that no longer exist (dissolved) still need replica cleanup.
    return delta;
}

}  // namespace

const MemoryNode* MemoryHierarchy::find_node(NodeId id) const {
    auto it = level_of.find(id);
    if (it == level_of.end()) return nullptr;
    const Level& lvl = levels[static_cast<std::size_t>(it->second)];
    auto nit = lvl.nodes.find(id);
    return nit == lvl.nodes.end() ? nullptr : &nit->second;
}

std::size_t MemoryHierarchy::total_nodes() const {
    std::size_t n = 0;
    for (const auto& l : levels) n += l.nodes.size();
    return n;
}

std::set<NodeId> MemoryHierarchy::psi(int level, NodeId id) const {
    if (level < 0 || level >= static_cast<int>(levels.size()))
        throw ConsistencyError("psi: unknown level " + std::to_string(level));
    const Level& lvl = levels[static_cast<std::size_t>(level)];
    auto rit = lvl.rn.replicas.find(id);
    if (!lvl.nodes.count(id) || rit == lvl.rn.replicas.end())
        throw ConsistencyError("psi: unknown node " + std::to_string(id) + " at level " +
                               std::to_string(level));
    std::set<NodeId> parents;
    for (const auto& rep : rit->second) {
        const Label l = lvl.rn.labels.at(rep.id);
        auto ait = lvl.abs_of_label.find(l);
        if (ait != lvl.abs_of_label.end()) parents.insert(ait->second);
    }
    return parents;
}

bool level_should_grow(const MemoryHierarchy& h, int level) {
    const Level& lvl = h.levels[static_cast<std::size_t>(level)];
    const std::size_t clusters = lvl.reg.live_clusters();
    const std::size_t nodes = lvl.graph.node_count();
    // Growth must compress: a level of all-singleton clusters would reproduce
    // itself forever.
    return clusters > h.config.min_level_size && nodes > h.config.min_level_size &&
           clusters < nodes;
}

MemoryEngine::MemoryEngine(EngineConfig cfg, std::shared_ptr<Provider> provider)
    : provider_(std::move(provider)) {
    cfg.validate_or_throw();
    auto h = std::make_shared<MemoryHierarchy>();
    h->config = cfg;
    h->levels.emplace_back();
    committed_ = std::move(h);
}

MemoryEngine::MemoryEngine(std::shared_ptr<const MemoryHierarchy> restored,
                           std::shared_ptr<Provider> provider)
    : committed_(std::move(restored)), provider_(std::move(provider)) {
    if (!committed_ || committed_->levels.empty())
        throw ConsistencyError("restored hierarchy has no levels");
}

UpdateReport MemoryEngine::integrate_batch(const std::vector<Chunk>& chunks,
                                           bool record_touches) {
    UpdateReport report;
    if (chunks.empty()) return report;
    const auto t_total = std::chrono::steady_clock::now();

    auto working = std::make_shared<MemoryHierarchy>(*committed_);
    MemoryHierarchy& h = *working;

    // Step 1: embed and wire the new chunks into the foundational graph.
    auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& c : chunks) texts.push_back(c.text);
    ++report.embed_calls;
    auto embeddings = provider_->embed_batch(texts);
    if (embeddings.size() != chunks.size())
        throw ProviderError("embed_batch returned " + std::to_string(embeddings.size()) +
                            " vectors for " + std::to_string(chunks.size()) + " texts");
    report.embed_s = seconds_since(t0);
    report.chunks_ingested = chunks.size();

    std::vector<MemoryNode> fresh;
    fresh.reserve(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        MemoryNode n;
        n.id = h.next_node_id++;
        n.level = 0;
        n.kind = NodeKind::chunk;
        n.text = chunks[i].text;
        n.doc_id = chunks[i].doc_id;
        n.seq_index = chunks[i].seq_index;
        n.embedding = std::make_shared<const Embedding>(std::move(embeddings[i]));
        fresh.push_back(std::move(n));
    }

    Level& l0 = h.levels[0];
    t0 = std::chrono::steady_clock::now();
    ExpansionDelta delta0 = expand(l0.graph, l0.nodes, fresh, h.config);
    std::set<NodeId> affected = affected_set(delta0, l0.graph);
    for (const auto& n : delta0.new_nodes) {
        l0.graph.add_node(n.id);
        h.level_of[n.id] = 0;
        l0.nodes.emplace(n.id, n);
    }
    for (const auto& e : delta0.new_edges) l0.graph.add_edge(e.u, e.v, e.w);

    {
        LevelReport lr;
        lr.level = 0;
        lr.nodes_added = delta0.new_nodes.size();
        lr.edges_added = delta0.new_edges.size();
        lr.expand_s = seconds_since(t0);
        report.levels.push_back(std::move(lr));
    }

    // Steps 2-3 per level, recursing while the structure above changes.
    int level = 0;
    while (true) {
        if (report.levels.size() <= static_cast<std::size_t>(level)) {
            LevelReport lr;
            lr.level = level;
            report.levels.push_back(std::move(lr));
        }
        LevelReport& lrep = report.levels[static_cast<std::size_t>(level)];
        Level& lvl = h.levels[static_cast<std::size_t>(level)];
        lrep.affected = affected.size();
        if (record_touches) lrep.affected_nodes.assign(affected.begin(), affected.end());

        t0 = std::chrono::steady_clock::now();
        ReplicaDelta rdelta = rebuild_replicas(affected, lvl.graph, lvl.rn, record_touches);
        lrep.replicas_s = seconds_since(t0);
        lrep.replicas_recomputed = rdelta.ego_recomputations;
        lrep.replicas_added = rdelta.added.size() + rdelta.added_inheriting.size();
        lrep.replicas_removed = rdelta.removed.size();
        if (record_touches) lrep.ego_recomputed_nodes = rdelta.ego_recomputed_nodes;

        t0 = std::chrono::steady_clock::now();
        apply_replica_delta(rdelta, lvl.rn, lvl.reg);
        init_labels(lvl.rn, lvl.reg);

        std::set<ReplicaId> seed;
        for (const auto& rep : rdelta.added) seed.insert(rep.id);
        for (const auto& [rid, lab] : rdelta.added_inheriting) seed.insert(rid);
        for (const auto& rid : rdelta.updated) seed.insert(rid);
        auto seed_endpoint = [&](const ReplicaId& r) {
            if (lvl.rn.has_replica(r)) seed.insert(r);
        };
        for (const auto& e : rdelta.redges_added) {
            seed_endpoint(e.a);
            seed_endpoint(e.b);
        }
        for (const auto& e : rdelta.redges_removed) {
            seed_endpoint(e.a);
            seed_endpoint(e.b);
        }
        if (record_touches) lrep.seed_replicas.assign(seed.begin(), seed.end());

        LpStats lp;
        std::set<Label> modified = propagate(seed, lvl.rn, lvl.reg, h.config, &lp, record_touches);
        lrep.lp_rounds = lp.rounds;
        lrep.label_changes = lp.label_changes;
        lrep.label_votes = lp.label_votes;
        if (record_touches) {
            lrep.evaluated_replicas = lp.evaluated;
            lrep.relabeled_replicas = lp.relabeled;
        }
        std::vector<ClusterChange> changes = finalize(modified, lvl.rn, lvl.reg);
        lrep.clusters_modified = changes.size();
        lrep.clusters_s = seconds_since(t0);

        if (changes.empty()) break;

        const bool has_above = static_cast<std::size_t>(level) + 1 < h.levels.size();
        if (!has_above) {
            if (!level_should_grow(h, level)) break;
            h.levels.emplace_back();
            Level& above = h.levels.back();
            above.graph = LevelGraph(level + 1);
            above.rn.level = level + 1;
            above.reg.level = level + 1;
            // First growth: every live cluster gets an abstraction, not just
            // this batch's churn.
            changes.clear();
            for (const auto& [lab, mem] : h.levels[static_cast<std::size_t>(level)].reg.members) {
                if (mem.empty()) continue;
                changes.push_back({lab, ChangeKind::created, project_members(mem)});
            }
            lrep.clusters_modified = changes.size();
        }

        t0 = std::chrono::steady_clock::now();
        // Note: vector may reallocate inside refresh if it appends levels; it
        // does not, but lvl/lrep references are not used past this point.
        SuperDelta sdelta = refresh_abstractions(h, level, changes, *provider_, report,
                                                 report.levels[static_cast<std::size_t>(level)]);
        report.levels[static_cast<std::size_t>(level)].refresh_s = seconds_since(t0);

        {
            if (report.levels.size() <= static_cast<std::size_t>(level) + 1) {
                LevelReport lr;
                lr.level = level + 1;
                report.levels.push_back(std::move(lr));
            }
            LevelReport& up = report.levels[static_cast<std::size_t>(level) + 1];
            up.nodes_added += sdelta.nodes_added;
            up.nodes_removed += sdelta.nodes_removed;
            up.nodes_updated += sdelta.nodes_updated;
            up.edges_added += sdelta.edges_added;
            up.edges_removed += sdelta.edges_removed;
        }

        if (!sdelta.structural()) break;
        affected = std::move(sdelta.affected);
        ++level;
    }

    report.total_s = seconds_since(t_total);
    committed_ = std::move(working);  // atomic swap: readers see old or new, never partial
    return report;
}

std::vector<std::string> consistency_check(const MemoryHierarchy& h) {
    std::vector<std::string> bad;
    auto complain = [&](const std::string& msg) { bad.push_back(msg); };

    std::size_t dim = 0;
    for (std::size_t li = 0; li < h.levels.size(); ++li) {
        const Level& lvl = h.levels[li];
        const int level = static_cast<int>(li);

        for (const auto& [id, nbrs] : lvl.graph.adjacency()) {
            if (!lvl.nodes.count(id))
                complain("level " + std::to_string(level) + ": graph node " + std::to_string(id) +
                         " has no payload");
            for (const auto& [n, w] : nbrs) {
                if (n == id) complain("self loop at " + std::to_string(id));
                if (w < 0.0 || w > 1.0)
                    complain("edge weight out of range at " + std::to_string(id));
                if (level == 0 && w < h.config.theta)
                    complain("level-0 edge below theta at " + std::to_string(id) + "-" +
                             std::to_string(n));
            }
        }
        for (const auto& [id, node] : lvl.nodes) {
            if (!lvl.graph.has_node(id))
                complain("payload node " + std::to_string(id) + " missing from graph");
            if (node.level != level)
                complain("node " + std::to_string(id) + " carries wrong level");
            if (level == 0 && node.kind != NodeKind::chunk)
                complain("level-0 node " + std::to_string(id) + " is not a chunk");
            if (level > 0 && node.kind != NodeKind::abstraction)
                complain("level-" + std::to_string(level) + " node " + std::to_string(id) +
                         " is not an abstraction");
            auto lof = h.level_of.find(id);
            if (lof == h.level_of.end() || lof->second != level)
                complain("level_of mismatch for " + std::to_string(id));
            if (!node.embedding) {
                complain("node " + std::to_string(id) + " lacks an embedding");
            } else {
                if (dim == 0) dim = node.embedding->size();
                if (node.embedding->size() != dim)
                    complain("embedding dimension mismatch at " + std::to_string(id));
            }
            if (node.id >= h.next_node_id) complain("node id above next_node_id");
            if (level > 0) {
                if (node.members.empty())
                    complain("abstraction " + std::to_string(id) + " has no members");
                for (const NodeId m : node.members) {
                    if (!h.levels[li - 1].nodes.count(m))
                        complain("abstraction " + std::to_string(id) + " member " +
                                 std::to_string(m) + " missing one level down");
                }
            }
        }

        // Replica view: partition of each ego network, canonical anchors.
        for (const auto& [id, nbrs] : lvl.graph.adjacency()) {
            auto rit = lvl.rn.replicas.find(id);
            if (rit == lvl.rn.replicas.end()) {
                complain("node " + std::to_string(id) + " has no replicas");
                continue;
            }
            const auto& reps = rit->second;
            if (reps.empty()) complain("node " + std::to_string(id) + " has zero replicas");
            std::set<NodeId> covered;
            NodeId prev_anchor = 0;
            bool first = true;
            for (const auto& rep : reps) {
                if (!first && rep.id.anchor <= prev_anchor)
                    complain("replicas of " + std::to_string(id) + " out of order");
                prev_anchor = rep.id.anchor;
                first = false;
                if (rep.component.empty()) {
                    if (rep.id.anchor != 0 || reps.size() != 1 || !nbrs.empty())
                        complain("bad isolated replica at " + std::to_string(id));
                    continue;
                }
                if (rep.id.anchor != rep.component.front())
                    complain("replica anchor not the min member at " + std::to_string(id));
                for (const NodeId m : rep.component) {
                    if (!nbrs.count(m))
                        complain("replica component member " + std::to_string(m) +
                                 " is not a neighbor of " + std::to_string(id));
                    if (!covered.insert(m).second)
                        complain("replica components of " + std::to_string(id) + " overlap");
                }
            }
            if (!nbrs.empty() && covered.size() != nbrs.size())
                complain("replica components of " + std::to_string(id) +
                         " do not cover the neighbor set");
        }
        for (const auto& [rid, nbrs] : lvl.rn.radj) {
            if (!lvl.rn.has_replica(rid)) {
                complain("radj key is a dead replica");
                continue;
            }
            for (const auto& n : nbrs) {
                if (!lvl.rn.has_replica(n)) complain("radj points at a dead replica");
                auto back = lvl.rn.radj.find(n);
                if (back == lvl.rn.radj.end() || !back->second.count(rid))
                    complain("radj asymmetry");
                if (n.node == rid.node) complain("replica edge within one node");
            }
        }
        if (lvl.rn.redge_count() != lvl.graph.edge_count())
            complain("level " + std::to_string(level) + ": |redges| " +
                     std::to_string(lvl.rn.redge_count()) + " != |edges| " +
                     std::to_string(lvl.graph.edge_count()));

        // Labels: total, mirrored by the registry, clusters connected.
        for (const auto& [id, reps] : lvl.rn.replicas) {
            for (const auto& rep : reps) {
                auto lab = lvl.rn.labels.find(rep.id);
                if (lab == lvl.rn.labels.end()) {
                    complain("unlabeled replica of node " + std::to_string(id));
                    continue;
                }
                auto mem = lvl.reg.members.find(lab->second);
                if (mem == lvl.reg.members.end() || !mem->second.count(rep.id))
                    complain("registry misses replica of node " + std::to_string(id));
            }
        }
        for (const auto& [lab, mem] : lvl.reg.members) {
            if (lab >= lvl.reg.next_label) complain("label above next_label");
            for (const auto& r : mem) {
                auto it = lvl.rn.labels.find(r);
                if (it == lvl.rn.labels.end() || it->second != lab)
                    complain("registry member with wrong label");
            }
            if (mem.size() > 1) {
                // Connectivity within the cluster.
                std::set<ReplicaId> seen;
                std::vector<ReplicaId> stack{*mem.begin()};
                seen.insert(*mem.begin());
                while (!stack.empty()) {
                    const ReplicaId cur = stack.back();
                    stack.pop_back();
                    auto adj = lvl.rn.radj.find(cur);
                    if (adj == lvl.rn.radj.end()) continue;
                    for (const auto& nbr : adj->second) {
                        if (mem.count(nbr) && seen.insert(nbr).second) stack.push_back(nbr);
                    }
                }
                if (seen.size() != mem.size())
                    complain("cluster " + std::to_string(lab) + " at level " +
                             std::to_string(level) + " is disconnected");
            }
        }
        for (const auto& [lab, abs_id] : lvl.abs_of_label) {
            if (!lvl.reg.established.count(lab))
                complain("abstraction mapping for unestablished label");
            if (li + 1 >= h.levels.size()) {
                complain("abstraction mapping above the top level");
                continue;
            }
            auto nit = h.levels[li + 1].nodes.find(abs_id);
            if (nit == h.levels[li + 1].nodes.end()) {
                complain("abstraction node " + std::to_string(abs_id) + " missing");
                continue;
            }
            if (nit->second.source_label != lab)
                complain("abstraction " + std::to_string(abs_id) + " source label mismatch");
            auto mem = lvl.reg.members.find(lab);
            if (mem == lvl.reg.members.end() || mem->second.empty()) {
                complain("established label " + std::to_string(lab) + " has no members");
            } else if (nit->second.members != project_members(mem->second)) {
                complain("abstraction " + std::to_string(abs_id) +
                         " members diverge from its cluster");
            }
        }
        for (const Label lab : lvl.reg.established) {
            if (!lvl.abs_of_label.count(lab))
                complain("established label " + std::to_string(lab) + " lacks an abstraction");
        }
    }

    for (const auto& [id, level] : h.level_of) {
        if (level < 0 || static_cast<std::size_t>(level) >= h.levels.size() ||
            !h.levels[static_cast<std::size_t>(level)].nodes.count(id))
            complain("level_of points at a missing node " + std::to_string(id));
    }
    return bad;
}

}  // namespace cam
