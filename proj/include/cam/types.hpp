#pragma once

#include <cstdint>
#include <memory>
#include <vector>

namespace cam {

// Node ids are minted by the hierarchy in creation order, starting at 1.
// 0 is reserved (see ReplicaId::anchor).
using NodeId = std::uint64_t;

// Cluster labels are minted per level, starting at 1; unique within a level.
using Label = std::uint64_t;

using Embedding = std::vector<double>;

// Embeddings are immutable once computed; snapshots of the hierarchy share
// them, which keeps the per-batch working copy cheap.
using EmbeddingRef = std::shared_ptr<const Embedding>;

}  // namespace cam
