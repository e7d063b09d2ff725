#include "cam/clustering.hpp"

#include <algorithm>

#include "cam/errors.hpp"

namespace cam {

std::size_t ClusterRegistry::live_clusters() const {
    std::size_t n = 0;
    for (const auto& [l, m] : members)
        if (!m.empty()) ++n;
    return n;
}

void ClusterRegistry::move_member(ReplicaId r, Label from, Label to) {
    if (from == to) return;
    auto it = members.find(from);
    if (it != members.end()) it->second.erase(r);
    members[to].insert(r);
    dirty.insert(from);
    dirty.insert(to);
}

void apply_replica_delta(const ReplicaDelta& delta, const ReplicaNetwork& rn,
                         ClusterRegistry& reg) {
    for (const auto& [rid, label] : delta.added_inheriting) {
        reg.members[label].insert(rid);
        reg.dirty.insert(label);
    }
    for (const auto& [rid, label] : delta.removed_labels) {
        auto it = reg.members.find(label);
        if (it != reg.members.end()) it->second.erase(rid);
        reg.dirty.insert(label);
    }
    auto mark_endpoints = [&](const ReplicaEdge& e) {
        for (const auto& rid : {e.a, e.b}) {
            auto lab = rn.labels.find(rid);
            if (lab != rn.labels.end()) reg.dirty.insert(lab->second);
        }
    };
    for (const auto& e : delta.redges_added) mark_endpoints(e);
    for (const auto& e : delta.redges_removed) mark_endpoints(e);
    // Updated replicas may sit on cluster boundaries whose inter-cluster
    // edges shifted even without membership churn.
    for (const auto& rid : delta.updated) {
        auto lab = rn.labels.find(rid);
        if (lab != rn.labels.end()) reg.dirty.insert(lab->second);
    }
}

std::vector<ReplicaId> init_labels(ReplicaNetwork& rn, ClusterRegistry& reg) {
    std::vector<ReplicaId> fresh;
    for (auto& [node, reps] : rn.replicas) {
        for (const auto& rep : reps) {
            if (rn.labels.count(rep.id)) continue;
            const Label l = reg.mint();
            rn.labels[rep.id] = l;
            reg.members[l].insert(rep.id);
            reg.dirty.insert(l);
            fresh.push_back(rep.id);
        }
    }
    return fresh;
}

std::set<Label> propagate(const std::set<ReplicaId>& seed, ReplicaNetwork& rn,
                          ClusterRegistry& reg, const EngineConfig& cfg,
                          LpStats* stats, bool record_touches) {
    LpStats local;
    LpStats& st = stats ? *stats : local;

    std::set<ReplicaId> active;
    for (const auto& r : seed) {
        if (rn.has_replica(r)) active.insert(r);
    }

    while (!active.empty() && st.rounds < cfg.max_lp_iters) {
        ++st.rounds;
        std::set<ReplicaId> next;
        for (const auto& r : active) {
            if (!rn.has_replica(r)) continue;
            if (record_touches) st.evaluated.push_back(r);
            auto adj = rn.radj.find(r);
            if (adj == rn.radj.end() || adj->second.empty()) continue;  // isolated: keep
            std::map<Label, std::size_t> votes;
            for (const auto& nbr : adj->second) {
                auto lab = rn.labels.find(nbr);
                if (lab == rn.labels.end())
                    throw ConsistencyError("unlabeled replica voted on during propagation");
                ++votes[lab->second];
                ++st.label_votes;
            }
            std::size_t best = 0;
            for (const auto& [l, c] : votes) best = std::max(best, c);
            const Label cur = rn.labels.at(r);
            auto cur_it = votes.find(cur);
            if (cur_it != votes.end() && cur_it->second == best) continue;  // tied for max: keep
            Label winner = 0;
            bool have = false;
            for (const auto& [l, c] : votes) {
                if (c == best && (!have || l < winner)) {
                    winner = l;
                    have = true;
                }
            }
            if (!have || winner == cur) continue;
            rn.labels[r] = winner;
            reg.move_member(r, cur, winner);
            ++st.label_changes;
            if (record_touches) st.relabeled.push_back(r);
            for (const auto& nbr : adj->second) next.insert(nbr);
        }
        active = std::move(next);
    }
    st.converged = active.empty();
    return reg.dirty;
}

namespace {

// Connected components of the subgraph induced by `members`, ordered by
// smallest replica id.
std::vector<std::vector<ReplicaId>> member_components(const std::set<ReplicaId>& members,
                                                      const ReplicaNetwork& rn) {
    std::vector<std::vector<ReplicaId>> comps;
    std::set<ReplicaId> seen;
    for (const auto& start : members) {
        if (seen.count(start)) continue;
        std::vector<ReplicaId> comp;
        std::vector<ReplicaId> stack{start};
        seen.insert(start);
        while (!stack.empty()) {
            const ReplicaId cur = stack.back();
            stack.pop_back();
            comp.push_back(cur);
            auto adj = rn.radj.find(cur);
            if (adj == rn.radj.end()) continue;
            for (const auto& nbr : adj->second) {
                if (members.count(nbr) && !seen.count(nbr)) {
                    seen.insert(nbr);
                    stack.push_back(nbr);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;  // discovery order over a std::set is smallest-first
}

}  // namespace

std::vector<ClusterChange> finalize(const std::set<Label>& modified, ReplicaNetwork& rn,
                                    ClusterRegistry& reg) {
    std::set<Label> report(modified.begin(), modified.end());
    for (const auto& l : reg.dirty) report.insert(l);

    // Repair: split disconnected modified clusters.
    std::set<Label> repaired = report;
    for (const Label l : std::vector<Label>(repaired.begin(), repaired.end())) {
        auto it = reg.members.find(l);
        if (it == reg.members.end() || it->second.size() <= 1) continue;
        auto comps = member_components(it->second, rn);
        if (comps.size() <= 1) continue;
        for (std::size_t i = 1; i < comps.size(); ++i) {
            const Label fresh = reg.mint();
            for (const auto& r : comps[i]) {
                rn.labels[r] = fresh;
                reg.members[l].erase(r);
                reg.members[fresh].insert(r);
            }
            reg.dirty.insert(fresh);
            report.insert(fresh);
        }
        reg.dirty.insert(l);
    }

    std::vector<ClusterChange> out;
    for (const Label l : report) {
        auto it = reg.members.find(l);
        const bool empty = it == reg.members.end() || it->second.empty();
        if (empty) {
            if (reg.established.count(l)) {
                out.push_back({l, ChangeKind::dissolved, {}});
                reg.established.erase(l);
            }
            if (it != reg.members.end()) reg.members.erase(it);
            continue;
        }
        ClusterChange c;
        c.label = l;
        c.kind = reg.established.count(l) ? ChangeKind::updated : ChangeKind::created;
        std::set<NodeId> nodes;
        for (const auto& r : it->second) nodes.insert(r.node);
        c.member_nodes.assign(nodes.begin(), nodes.end());
        out.push_back(std::move(c));
    }
    reg.dirty.clear();
    return out;
}

}  // namespace cam
