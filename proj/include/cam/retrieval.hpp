#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cam/hierarchy.hpp"
#include "cam/providers.hpp"
#include "cam/types.hpp"

namespace cam {

struct RetrievalRound {
    std::vector<NodeId> candidates;
    std::vector<NodeId> activated;
};

struct RetrievalTrace {
    std::string query;
    std::vector<NodeId> localized;               // D, best first
    std::vector<RetrievalRound> candidate_rounds;// round 0 offers D itself
    std::vector<NodeId> final_activation;        // P, in activation order
    std::size_t hops_used = 0;
    std::vector<NodeId> context_nodes;           // ordered, after budget truncation
    std::vector<std::string> context_blocks;     // texts of context_nodes
    std::string answer;
};

// Exact top-s by cosine over every node of every level; ties break by
// ascending node id. Throws EmptyMemoryError on an empty hierarchy.
std::vector<NodeId> localize(const MemoryHierarchy& h, const Embedding& query,
                             std::size_t s);

// Localize, then alternate selector filtering with frontier growth (same-level
// neighbors plus one-level-down members of everything activated so far); a
// node is offered to the selector at most once. Ends by assembling the
// level-descending context and asking the provider for an answer.
RetrievalTrace retrieve(const MemoryHierarchy& h, Provider& provider,
                        const std::string& query, std::size_t context_budget = 8000);

}  // namespace cam
