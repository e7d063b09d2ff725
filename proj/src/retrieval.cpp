#include "cam/retrieval.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "cam/chunking.hpp"
#include "cam/embedding.hpp"
#include "cam/errors.hpp"

namespace cam {

namespace {

struct Scored {
    double score;
    NodeId id;
};

}  // namespace

std::vector<NodeId> localize(const MemoryHierarchy& h, const Embedding& query,
                             std::size_t s) {
    if (h.total_nodes() == 0) throw EmptyMemoryError("memory is empty; ingest before querying");
    std::vector<Scored> scored;
    scored.reserve(h.total_nodes());
    for (const auto& level : h.levels)
        for (const auto& [id, node] : level.nodes)
            scored.push_back({cosine(query, *node.embedding), id});
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (scored.size() > s) scored.resize(s);
    std::vector<NodeId> out;
    out.reserve(scored.size());
    for (const auto& sc : scored) out.push_back(sc.id);
    return out;
}

RetrievalTrace retrieve(const MemoryHierarchy& h, Provider& provider,
                        const std::string& query, std::size_t context_budget) {
    RetrievalTrace trace;
    trace.query = query;

    const Embedding query_emb = provider.embed_batch({query}).at(0);
    trace.localized = localize(h, query_emb, h.config.s);

    std::set<NodeId> offered;
    std::set<NodeId> activated_set;

    auto run_round = [&](const std::vector<NodeId>& candidates) -> bool {
        RetrievalRound round;
        round.candidates = candidates;
        std::vector<std::pair<NodeId, std::string>> payload;
        payload.reserve(candidates.size());
        for (NodeId id : candidates) {
            offered.insert(id);
            payload.emplace_back(id, h.find_node(id)->text);
        }
        const std::vector<NodeId> picked = provider.select_relevant(query, payload);
        for (NodeId id : picked) {
            // Ignore ids the provider invented; only offered candidates count.
            if (std::find(candidates.begin(), candidates.end(), id) == candidates.end()) continue;
            if (activated_set.insert(id).second) {
                round.activated.push_back(id);
                trace.final_activation.push_back(id);
            }
        }
        const bool grew = !round.activated.empty();
        trace.candidate_rounds.push_back(std::move(round));
        return grew;
    };

    bool growing = run_round(trace.localized);

    for (std::size_t hop = 1; growing && hop <= h.config.max_hops; ++hop) {
        std::set<NodeId> frontier;
        for (NodeId id : trace.final_activation) {
            const MemoryNode* node = h.find_node(id);
            const Level& level = h.levels[node->level];
            for (const auto& [nb, w] : level.graph.neighbors(id)) {
                (void)w;
                if (!offered.count(nb)) frontier.insert(nb);
            }
            for (NodeId member : node->members)
                if (!offered.count(member)) frontier.insert(member);
        }
        if (frontier.empty()) break;
        trace.hops_used = hop;
        growing = run_round(std::vector<NodeId>(frontier.begin(), frontier.end()));
    }

    // Context: abstractions first, chunks last, ties resolved by document
    // order, so the tail cut keeps the coarse narrative.
    std::vector<NodeId> ordered = trace.final_activation;
    std::sort(ordered.begin(), ordered.end(), [&](NodeId a, NodeId b) {
        const MemoryNode* na = h.find_node(a);
        const MemoryNode* nb = h.find_node(b);
        if (na->level != nb->level) return na->level > nb->level;
        if (na->doc_id != nb->doc_id) return na->doc_id < nb->doc_id;
        if (na->seq_index != nb->seq_index) return na->seq_index < nb->seq_index;
        return a < b;
    });

    std::size_t used = 0;
    for (NodeId id : ordered) {
        const MemoryNode* node = h.find_node(id);
        const std::size_t words = split_words(node->text).size();
        if (used + words > context_budget) break;  // drop the tail, never split a block
        used += words;
        trace.context_nodes.push_back(id);
        trace.context_blocks.push_back(node->text);
    }

    trace.answer = provider.answer(query, trace.context_blocks);
    return trace;
}

}  // namespace cam
