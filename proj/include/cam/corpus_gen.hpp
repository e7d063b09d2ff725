#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "cam/chunking.hpp"

namespace cam {

// Deterministic synthetic corpora for tests and benchmarks. Chunks are built
// token by token against the stub embedder's hash so that pair scores — and
// therefore the level-0 graph — are known by construction instead of by luck:
//  - each of the 4 topics owns 8 reserved embedding buckets;
//  - filler tokens are mined into the remaining buckets under a combinatorial
//    design that lets any two chunks of a document share at most one filler
//    bucket, so filler never creates or destroys an edge on its own.
// Documents are 50 chunks long. Most chunks are "pure" (8 topic tokens ending
// in a period + 8 fillers); the chunks at `weak_slots` are diluted (8 topic
// tokens + 24 fillers), which severs the document into three segments joined
// only by single bridge edges across each weak pair.
struct TopicCorpus {
    std::vector<Chunk> chunks;                 // doc-major, seq order
    std::size_t chunks_per_doc = 0;
    std::size_t n_topics = 0;
    std::vector<std::string> topic_names;      // one per topic
    std::vector<std::string> topic_sentences;  // the 8 topic tokens, period attached
    std::set<std::size_t> weak_slots;          // diluted positions within each doc
    std::uint64_t seed = 0;

    std::size_t doc_of(std::size_t chunk_index) const { return chunk_index / chunks_per_doc; }
    std::size_t topic_of(std::size_t chunk_index) const { return doc_of(chunk_index) % n_topics; }
};

// `n_chunks` chunks across ceil(n/50) documents; document d carries topic
// d mod 4. `seed` re-spells the filler tokens without changing any bucket,
// so the graph structure is seed-invariant while the text is not.
TopicCorpus make_topic_corpus(std::size_t n_chunks, std::uint64_t seed = 0);

// A query built from one topic sentence plus a filler token unique to a
// single chunk ("needle"); that chunk is the intended top hit.
struct NeedleQuery {
    std::string query;
    std::size_t topic = 0;
    std::size_t chunk_index = 0;  // index into corpus.chunks
};

// `per_topic` queries for each of the corpus's first 4 documents. Requires a
// corpus of at least 4 full documents.
std::vector<NeedleQuery> make_needle_queries(const TopicCorpus& corpus, std::size_t per_topic);

// Five chunks of one document shaped so the level-0 graph is two triangles
// sharing chunk 2: chunks 0,1 are pure "red", 3,4 pure "blue", and 2 carries
// both palettes. Exercises the overlapping-community paths end to end.
std::vector<Chunk> make_butterfly_chunks();

}  // namespace cam
