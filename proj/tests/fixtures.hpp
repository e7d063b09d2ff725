#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "cam/config.hpp"
#include "cam/graph.hpp"
#include "cam/hierarchy.hpp"
#include "cam/replica.hpp"
#include "cam/types.hpp"

// Hand-assembled hierarchies for states the ingest pipeline cannot easily
// reach, e.g. an edge between abstractions. Everything here must satisfy
// consistency_check; tests assert that before relying on the fixture.
namespace testfix {

inline cam::Embedding axis(std::size_t dim, std::size_t i) {
    cam::Embedding e(dim, 0.0);
    e[i] = 1.0;
    return e;
}

// Two isolated chunks, each promoted to its own abstraction, and one edge
// between the two abstractions. Node ids: chunks 1, 2; abstractions 10, 11.
// Embeddings are the first four axes of a 4-d space in node order.
inline std::shared_ptr<cam::MemoryHierarchy> make_bilevel_fixture() {
    using namespace cam;
    auto h = std::make_shared<MemoryHierarchy>();
    h->config = EngineConfig{};
    h->config.s = 1;
    h->next_node_id = 12;
    h->levels.resize(2);

    Level& l0 = h->levels[0];
    Level& l1 = h->levels[1];
    l0.rn.level = 0;
    l1.rn.level = 1;
    l0.reg.level = 0;
    l1.reg.level = 1;

    auto put_chunk = [&](NodeId id, std::string doc, std::string text, std::size_t ax) {
        MemoryNode n;
        n.id = id;
        n.level = 0;
        n.kind = NodeKind::chunk;
        n.doc_id = std::move(doc);
        n.seq_index = 0;
        n.text = std::move(text);
        n.embedding = std::make_shared<const Embedding>(axis(4, ax));
        l0.graph.add_node(id);
        l0.nodes.emplace(id, std::move(n));
        h->level_of[id] = 0;
    };
    put_chunk(1, "doca", "alpha chunk", 0);
    put_chunk(2, "docb", "beta chunk", 1);

    auto put_abs = [&](NodeId id, Label source, NodeId member, std::string text,
                       std::size_t ax) {
        MemoryNode n;
        n.id = id;
        n.level = 1;
        n.kind = NodeKind::abstraction;
        n.source_label = source;
        n.members = {member};
        n.text = std::move(text);
        n.embedding = std::make_shared<const Embedding>(axis(4, ax));
        l1.graph.add_node(id);
        l1.nodes.emplace(id, std::move(n));
        h->level_of[id] = 1;
    };
    put_abs(10, 1, 1, "alpha summary", 2);
    put_abs(11, 2, 2, "beta summary", 3);
    l1.graph.add_edge(10, 11, 1.0);

    // Level 0: two isolated sentinels, one established singleton cluster each.
    l0.rn.replicas[1] = {Replica{ReplicaId{1, 0}, {}}};
    l0.rn.replicas[2] = {Replica{ReplicaId{2, 0}, {}}};
    l0.rn.labels[ReplicaId{1, 0}] = 1;
    l0.rn.labels[ReplicaId{2, 0}] = 2;
    l0.reg.members[1] = {ReplicaId{1, 0}};
    l0.reg.members[2] = {ReplicaId{2, 0}};
    l0.reg.established = {1, 2};
    l0.reg.next_label = 3;
    l0.abs_of_label[1] = 10;
    l0.abs_of_label[2] = 11;

    // Level 1: the edge lifts to one replica pair; two unestablished clusters.
    const ReplicaId r10{10, 11}, r11{11, 10};
    l1.rn.replicas[10] = {Replica{r10, {11}}};
    l1.rn.replicas[11] = {Replica{r11, {10}}};
    l1.rn.radj[r10] = {r11};
    l1.rn.radj[r11] = {r10};
    l1.rn.labels[r10] = 1;
    l1.rn.labels[r11] = 2;
    l1.reg.members[1] = {r10};
    l1.reg.members[2] = {r11};
    l1.reg.next_label = 3;

    return h;
}

}  // namespace testfix
