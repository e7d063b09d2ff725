#include "cam/providers.hpp"

#include <algorithm>
#include <cstdint>

#include "cam/chunking.hpp"
#include "cam/embedding.hpp"

namespace cam {

// FNV-1a, 64-bit. The offset basis doubles as the fixed seed: stub vectors
// must be bit-identical across runs and platforms.
std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

Embedding StubProvider::embed_one(const std::string& text) const {
    Embedding v(dim_, 0.0);
    for (const auto& tok : split_words(text)) {
        v[fnv1a64(tok) % dim_] += 1.0;
    }
    l2_normalize(v);
    return v;
}

std::vector<Embedding> StubProvider::embed_batch(const std::vector<std::string>& texts) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

std::string first_sentence(const std::string& text) {
    const auto dot = text.find('.');
    std::string s;
    if (dot != std::string::npos) {
        s = text.substr(0, dot + 1);
    } else {
        const auto words = split_words(text);
        const std::size_t n = std::min<std::size_t>(words.size(), 20);
        for (std::size_t i = 0; i < n; ++i) {
            if (i) s += ' ';
            s += words[i];
        }
        return s;
    }
    // Trim leading/trailing whitespace left around the period.
    const auto words = split_words(s);
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out += ' ';
        out += words[i];
    }
    return out;
}

std::string StubProvider::summarize(const std::vector<std::string>& texts, int level) {
    std::string out = "SUMMARY[" + std::to_string(level) + "]:";
    for (const auto& t : texts) {
        const auto s = first_sentence(t);
        if (!s.empty()) out += ' ' + s;
    }
    return out;
}

std::vector<NodeId> StubProvider::select_relevant(
    const std::string& query,
    const std::vector<std::pair<NodeId, std::string>>& candidates) {
    const Embedding q = embed_one(query);
    std::vector<NodeId> picked;
    for (const auto& [id, text] : candidates) {
        if (cosine(q, embed_one(text)) >= tau_sel_) picked.push_back(id);
    }
    std::sort(picked.begin(), picked.end());
    picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
    return picked;
}

std::string StubProvider::answer(const std::string& query,
                                 const std::vector<std::string>& context_blocks) {
    if (context_blocks.empty()) return "NO_CONTEXT";
    const Embedding q = embed_one(query);
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(context_blocks.size());
    for (std::size_t i = 0; i < context_blocks.size(); ++i) {
        scored.emplace_back(cosine(q, embed_one(context_blocks[i])), i);
    }
    // Best first; earlier block wins ties.
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first > b.first;
    });
    const std::size_t n = std::min<std::size_t>(3, scored.size());
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n; ++i) keep.push_back(scored[i].second);
    std::sort(keep.begin(), keep.end());
    std::string out;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (i) out += "\n\n";
        out += context_blocks[keep[i]];
    }
    return out;
}

namespace prompts {

const char* const kSummarize =
    "You maintain a layered memory of text fragments. Write one plain paragraph that "
    "condenses the numbered fragments below, keeping named entities, concrete claims, and "
    "the relations between them. Do not introduce facts that are not in the fragments. "
    "This summary sits at memory level {level}.\n\nFragments:\n{fragments}";

const char* const kSelect =
    "You filter a candidate list for a query. Reply with a JSON array holding the numbers "
    "of every candidate that could help answer the query, for example [1,4]. Reply with [] "
    "if none apply. Reply with the array only.\n\nQuery: {query}\n\nCandidates:\n{candidates}";

const char* const kAnswer =
    "Answer the query using only the context blocks below. If the context is not "
    "sufficient, reply exactly NO_CONTEXT.\n\nQuery: {query}\n\nContext:\n{context}";

}  // namespace prompts

}  // namespace cam
