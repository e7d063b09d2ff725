#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cam/types.hpp"

namespace cam {

// Model access used by the engine. Implementations must be safe to call from
// the single writer thread; they may be called concurrently by readers.
struct Provider {
    virtual ~Provider() = default;

    virtual std::size_t dimension() const = 0;

    // One vector per input text, all of dimension(). Empty input -> empty output.
    virtual std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) = 0;

    // Condenses member texts into the abstraction text for `level`.
    virtual std::string summarize(const std::vector<std::string>& texts, int level) = 0;

    // Subset of candidate ids judged relevant to the query, ascending, deduped.
    virtual std::vector<NodeId> select_relevant(
        const std::string& query,
        const std::vector<std::pair<NodeId, std::string>>& candidates) = 0;

    virtual std::string answer(const std::string& query,
                               const std::vector<std::string>& context_blocks) = 0;
};

// Offline stand-in: embeddings hash whitespace tokens into buckets, the
// summarizer keeps first sentences, the selector thresholds stub cosine, the
// answerer echoes the best context blocks. Fully deterministic.
class StubProvider : public Provider {
public:
    explicit StubProvider(std::size_t dim = 256, double tau_sel = 0.30)
        : dim_(dim), tau_sel_(tau_sel) {}

    std::size_t dimension() const override { return dim_; }
    std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) override;
    std::string summarize(const std::vector<std::string>& texts, int level) override;
    std::vector<NodeId> select_relevant(
        const std::string& query,
        const std::vector<std::pair<NodeId, std::string>>& candidates) override;
    std::string answer(const std::string& query,
                       const std::vector<std::string>& context_blocks) override;

    Embedding embed_one(const std::string& text) const;

private:
    std::size_t dim_;
    double tau_sel_;
};

// First sentence of `text`: everything up to and including the first period,
// else the first 20 words. Used by the stub summarizer.
std::string first_sentence(const std::string& text);

// The stub embedder's token hash (FNV-1a, 64-bit, fixed offset basis).
// Exposed so synthetic corpora can place tokens in chosen buckets.
std::uint64_t fnv1a64(const std::string& s);

namespace prompts {
extern const char* const kSummarize;
extern const char* const kSelect;
extern const char* const kAnswer;
}  // namespace prompts

}  // namespace cam
