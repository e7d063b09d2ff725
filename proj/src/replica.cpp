#include "cam/replica.hpp"

#include <algorithm>

#include "cam/errors.hpp"
#include "cam/parallel.hpp"

namespace cam {

bool ReplicaNetwork::has_replica(const ReplicaId& r) const {
    auto it = replicas.find(r.node);
    if (it == replicas.end()) return false;
    for (const auto& rep : it->second)
        if (rep.id == r) return true;
    return false;
}

const Replica& ReplicaNetwork::replica(const ReplicaId& r) const {
    auto it = replicas.find(r.node);
    if (it != replicas.end()) {
        for (const auto& rep : it->second)
            if (rep.id == r) return rep;
    }
    throw ConsistencyError("unknown replica (" + std::to_string(r.node) + "," +
                           std::to_string(r.anchor) + ")");
}

std::size_t ReplicaNetwork::ordinal(const ReplicaId& r) const {
    auto it = replicas.find(r.node);
    if (it != replicas.end()) {
        for (std::size_t i = 0; i < it->second.size(); ++i)
            if (it->second[i].id == r) return i + 1;
    }
    throw ConsistencyError("unknown replica (" + std::to_string(r.node) + "," +
                           std::to_string(r.anchor) + ")");
}

std::size_t ReplicaNetwork::replica_count() const {
    std::size_t n = 0;
    for (const auto& [node, reps] : replicas) n += reps.size();
    return n;
}

std::size_t ReplicaNetwork::redge_count() const {
    std::size_t twice = 0;
    for (const auto& [r, nbrs] : radj) twice += nbrs.size();
    return twice / 2;
}

std::vector<ReplicaId> ReplicaNetwork::all_replica_ids() const {
    std::vector<ReplicaId> out;
    for (const auto& [node, reps] : replicas)
        for (const auto& rep : reps) out.push_back(rep.id);
    return out;
}

std::vector<ReplicaEdge> ReplicaNetwork::all_redges() const {
    std::vector<ReplicaEdge> out;
    for (const auto& [r, nbrs] : radj)
        for (const auto& n : nbrs)
            if (r < n) out.push_back({r, n});
    return out;
}

std::vector<std::vector<NodeId>> ego_components(NodeId v, const LevelGraph& g) {
    const auto& nbrs = g.neighbors(v);
    std::vector<NodeId> members;
    members.reserve(nbrs.size());
    for (const auto& [n, w] : nbrs) members.push_back(n);

    // Union-find over the neighbor set, joined by edges internal to it.
    std::map<NodeId, NodeId> parent;
    for (NodeId m : members) parent[m] = m;
    auto find = [&](NodeId x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (NodeId m : members) {
        for (const auto& [n, w] : g.neighbors(m)) {
            if (n != v && parent.count(n)) {
                const NodeId ra = find(m);
                const NodeId rb = find(n);
                if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
            }
        }
    }
    std::map<NodeId, std::vector<NodeId>> by_root;
    for (NodeId m : members) by_root[find(m)].push_back(m);
    std::vector<std::vector<NodeId>> comps;
    comps.reserve(by_root.size());
    for (auto& [root, comp] : by_root) comps.push_back(std::move(comp));  // already sorted
    return comps;
}

ReplicaEdge map_edge(NodeId u, NodeId v, const ReplicaNetwork& rn) {
    auto host = [&](NodeId a, NodeId b) -> ReplicaId {
        auto it = rn.replicas.find(a);
        if (it != rn.replicas.end()) {
            for (const auto& rep : it->second) {
                if (std::binary_search(rep.component.begin(), rep.component.end(), b))
                    return rep.id;
            }
        }
        throw ConsistencyError("map_edge: no replica of " + std::to_string(a) +
                               " holds neighbor " + std::to_string(b));
    };
    return make_redge(host(u, v), host(v, u));
}

namespace {

struct NodeRebuild {
    NodeId node = 0;
    bool present = false;
    std::vector<Replica> fresh;  // new replica set, sorted by anchor
};

}  // namespace

ReplicaDelta rebuild_replicas(const std::set<NodeId>& affected,
                              const LevelGraph& g,
                              ReplicaNetwork& rn,
                              bool record_touches) {
    ReplicaDelta delta;
    if (affected.empty()) return delta;

    const std::vector<NodeId> order(affected.begin(), affected.end());

    // Phase 1: recompute ego components per affected node (parallel; merged
    // in node order, so scheduling cannot change the outcome).
    std::vector<NodeRebuild> rebuilt(order.size());
    parallel_for(order.size(), [&](std::size_t i) {
        NodeRebuild& r = rebuilt[i];
        r.node = order[i];
        r.present = g.has_node(r.node);
        if (!r.present) return;
        auto comps = ego_components(r.node, g);
        if (comps.empty()) {
            r.fresh.push_back(Replica{ReplicaId{r.node, 0}, {}});
        } else {
            for (auto& c : comps) {
                const NodeId anchor = c.front();
                r.fresh.push_back(Replica{ReplicaId{r.node, anchor}, std::move(c)});
            }
        }
    });
    for (const auto& r : rebuilt) {
        if (r.present) {
            ++delta.ego_recomputations;
            if (record_touches) delta.ego_recomputed_nodes.push_back(r.node);
        }
    }

    // Collect the replica edges currently incident to any affected node; they
    // are all rebuilt below and the delta reports the net difference.
    std::set<ReplicaEdge> old_incident;
    for (NodeId v : order) {
        auto it = rn.replicas.find(v);
        if (it == rn.replicas.end()) continue;
        for (const auto& rep : it->second) {
            auto ra = rn.radj.find(rep.id);
            if (ra == rn.radj.end()) continue;
            for (const auto& nbr : ra->second) old_incident.insert(make_redge(rep.id, nbr));
        }
    }

    // Phase 2: reconcile replica identities and labels, node by node.
    for (const auto& r : rebuilt) {
        std::vector<Replica> old;
        if (auto it = rn.replicas.find(r.node); it != rn.replicas.end()) old = it->second;

        if (!r.present) {
            for (const auto& rep : old) {
                delta.removed.push_back(rep.id);
                auto lab = rn.labels.find(rep.id);
                if (lab != rn.labels.end()) {
                    delta.removed_labels.emplace_back(rep.id, lab->second);
                    rn.labels.erase(lab);
                }
                rn.radj.erase(rep.id);
            }
            rn.replicas.erase(r.node);
            continue;
        }

        std::map<NodeId, const Replica*> old_by_anchor;
        for (const auto& rep : old) old_by_anchor[rep.id.anchor] = &rep;

        std::vector<Replica> next = r.fresh;
        std::set<NodeId> used_anchors;
        for (auto& fresh : next) {
            used_anchors.insert(fresh.id.anchor);
            auto hit = old_by_anchor.find(fresh.id.anchor);
            if (hit != old_by_anchor.end()) {
                if (hit->second->component != fresh.component) delta.updated.push_back(fresh.id);
                continue;  // identity (and label) survives
            }
            // New identity: inherit from the intersecting old replica with the
            // smallest anchor, if any (split/merge reconciliation).
            const Replica* donor = nullptr;
            for (const auto& rep : old) {
                bool intersects = false;
                for (NodeId m : fresh.component) {
                    if (std::binary_search(rep.component.begin(), rep.component.end(), m)) {
                        intersects = true;
                        break;
                    }
                }
                if (intersects && (!donor || rep.id.anchor < donor->id.anchor)) donor = &rep;
            }
            if (donor) {
                auto lab = rn.labels.find(donor->id);
                if (lab != rn.labels.end()) {
                    rn.labels[fresh.id] = lab->second;
                    delta.added_inheriting.emplace_back(fresh.id, lab->second);
                } else {
                    delta.added.push_back(fresh);
                }
            } else {
                delta.added.push_back(fresh);
            }
        }
        for (const auto& rep : old) {
            if (used_anchors.count(rep.id.anchor)) continue;
            delta.removed.push_back(rep.id);
            auto lab = rn.labels.find(rep.id);
            if (lab != rn.labels.end()) {
                delta.removed_labels.emplace_back(rep.id, lab->second);
                rn.labels.erase(lab);
            }
            rn.radj.erase(rep.id);
        }
        rn.replicas[r.node] = std::move(next);
    }

    // Phase 3: rebuild every replica edge incident to an affected node.
    for (const auto& e : old_incident) {
        rn.radj[e.a].erase(e.b);
        rn.radj[e.b].erase(e.a);
    }
    std::set<ReplicaEdge> new_incident;
    for (NodeId v : order) {
        if (!g.has_node(v)) continue;
        for (const auto& [u, w] : g.neighbors(v)) new_incident.insert(map_edge(v, u, rn));
    }
    for (const auto& e : new_incident) {
        rn.radj[e.a].insert(e.b);
        rn.radj[e.b].insert(e.a);
    }
    // radj keys may linger empty for replicas that lost all edges; that is
    // fine (isolated replicas are legal), but drop keys of dead replicas.
    for (auto it = rn.radj.begin(); it != rn.radj.end();) {
        if (it->second.empty() && !rn.has_replica(it->first)) {
            it = rn.radj.erase(it);
        } else {
            ++it;
        }
    }

    std::set_difference(old_incident.begin(), old_incident.end(), new_incident.begin(),
                        new_incident.end(), std::back_inserter(delta.redges_removed));
    std::set_difference(new_incident.begin(), new_incident.end(), old_incident.begin(),
                        old_incident.end(), std::back_inserter(delta.redges_added));
    return delta;
}

}  // namespace cam
