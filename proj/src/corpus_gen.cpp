#include "cam/corpus_gen.hpp"

#include <algorithm>
#include <iterator>
#include <stdexcept>
#include <utility>

#include "cam/providers.hpp"

namespace cam {

namespace {

constexpr std::size_t kDim = 256;  // stub embedder bucket count
constexpr std::size_t kChunksPerDoc = 50;
constexpr std::size_t kTopics = 4;
constexpr std::size_t kTopicTokens = 8;
constexpr std::size_t kPureFillers = 8;
constexpr std::size_t kWeakFillers = 24;

const std::set<std::size_t> kWeakSlots = {16, 17, 33, 34};

// Pure slots eligible to carry a needle token, in preference order. All are
// at distance >= 3 from every weak slot so the extra token never shifts a
// borderline weak-chunk score.
constexpr std::size_t kNeedleSlots[] = {3, 8, 22, 27, 40, 45, 10, 24, 42, 47};

// Smallest numeric suffix that lands `prefix<n>postfix` in `bucket`.
std::string mine_token(const std::string& prefix, std::size_t bucket, const std::string& postfix = "") {
    for (std::uint64_t n = 0;; ++n) {
        std::string tok = prefix + std::to_string(n) + postfix;
        if (fnv1a64(tok) % kDim == bucket) return tok;
    }
}

struct BucketPlan {
    std::vector<std::vector<std::size_t>> filler;  // per slot, filler buckets
    std::vector<std::size_t> needle_slots;         // preference order
    std::vector<std::size_t> needle_bucket;        // parallel to needle_slots
};

// Fixed assignment of embedding buckets.
//   0..31    topic tokens (8 per topic)
//   32..152  pure-chunk fillers: the points of the affine plane over Z_11;
//            each pure slot takes the first 8 points of a distinct line, so
//            two pure chunks never share more than one filler bucket
//   153..228 weak-chunk fillers in dedicated ranges; the two weak chunks of
//            a boundary are disjoint, and the second boundary reuses at most
//            10 buckets of the first (their slots sit 17 apart, where even a
//            10-bucket overlap keeps the score far below theta)
//   229..255 needle tokens, skipping any bucket the summary prefix token
//            hashes into so query scores stay exact
// Net effect: filler can never create or destroy an edge on its own, so the
// level-0 graph over these chunks is known by construction.
const BucketPlan& bucket_plan() {
    static const BucketPlan plan = [] {
        BucketPlan p;
        p.filler.resize(kChunksPerDoc);
        std::size_t line_idx = 0;
        for (std::size_t s = 0; s < kChunksPerDoc; ++s) {
            auto& row = p.filler[s];
            if (!kWeakSlots.count(s)) {
                const std::size_t m = line_idx / 11, c = line_idx % 11;
                ++line_idx;
                for (std::size_t x = 0; x < kPureFillers; ++x)
                    row.push_back(32 + 11 * x + (m * x + c) % 11);
            }
        }
        auto range = [](std::size_t from, std::size_t n) {
            std::vector<std::size_t> out;
            for (std::size_t j = 0; j < n; ++j) out.push_back(from + j);
            return out;
        };
        p.filler[16] = range(153, 24);
        p.filler[17] = range(177, 24);
        p.filler[33] = range(201, 14);
        for (std::size_t j = 0; j < 10; ++j) p.filler[33].push_back(153 + j);
        p.filler[34] = range(215, 14);
        for (std::size_t j = 0; j < 10; ++j) p.filler[34].push_back(177 + j);

        std::set<std::size_t> taboo;
        for (int level = 1; level <= 8; ++level)
            taboo.insert(fnv1a64("SUMMARY[" + std::to_string(level) + "]:") % kDim);
        p.needle_slots.assign(std::begin(kNeedleSlots), std::end(kNeedleSlots));
        for (std::size_t b = 229; b < kDim && p.needle_bucket.size() < p.needle_slots.size(); ++b)
            if (!taboo.count(b)) p.needle_bucket.push_back(b);
        if (p.needle_bucket.size() < p.needle_slots.size())
            throw std::logic_error("no room for needle buckets");

        // Overlap audit of the whole plan; any violation would silently bend
        // the fixture's graph, so fail loudly instead.
        for (std::size_t a = 0; a < kChunksPerDoc; ++a) {
            for (std::size_t b = a + 1; b < kChunksPerDoc; ++b) {
                const std::set<std::size_t> sa(p.filler[a].begin(), p.filler[a].end());
                std::size_t shared = 0;
                for (std::size_t x : p.filler[b]) shared += sa.count(x);
                const bool wa = kWeakSlots.count(a) != 0, wb = kWeakSlots.count(b) != 0;
                std::size_t allowed = 1;
                if (wa && wb) allowed = (b - a == 1) ? 0 : 10;
                else if (wa || wb) allowed = 0;
                if (shared > allowed) throw std::logic_error("filler overlap audit failed");
            }
        }
        return p;
    }();
    return plan;
}

const std::vector<std::string>& topic_names() {
    static const std::vector<std::string> names = {"arbor", "basalt", "casein", "delta"};
    return names;
}

// Topic t owns buckets [t*8, t*8+8); the final token carries the period so
// the whole sentence round-trips through the summarizer verbatim.
const std::vector<std::vector<std::string>>& topic_tokens() {
    static const auto toks = [] {
        std::vector<std::vector<std::string>> out(kTopics);
        for (std::size_t t = 0; t < kTopics; ++t) {
            for (std::size_t i = 0; i < kTopicTokens; ++i) {
                const std::string prefix = topic_names()[t] + "_" + std::to_string(i) + "_";
                const std::string postfix = (i + 1 == kTopicTokens) ? "." : "";
                out[t].push_back(mine_token(prefix, t * kTopicTokens + i, postfix));
            }
        }
        return out;
    }();
    return toks;
}

std::string join_tokens(const std::vector<std::string>& toks) {
    std::string out;
    for (const auto& t : toks) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

std::string filler_token(std::uint64_t seed, std::size_t doc, std::size_t slot, std::size_t j,
                         std::size_t bucket) {
    return mine_token("f" + std::to_string(seed) + "_" + std::to_string(doc) + "_" +
                          std::to_string(slot) + "_" + std::to_string(j) + "_",
                      bucket);
}

std::string needle_token(std::uint64_t seed, std::size_t doc, std::size_t slot, std::size_t bucket) {
    return mine_token("n" + std::to_string(seed) + "_" + std::to_string(doc) + "_" +
                          std::to_string(slot) + "_",
                      bucket);
}

std::size_t count_words(const std::string& text) { return split_words(text).size(); }

}  // namespace

TopicCorpus make_topic_corpus(std::size_t n_chunks, std::uint64_t seed) {
    const auto& plan = bucket_plan();
    TopicCorpus corpus;
    corpus.chunks_per_doc = kChunksPerDoc;
    corpus.n_topics = kTopics;
    corpus.topic_names = topic_names();
    for (std::size_t t = 0; t < kTopics; ++t)
        corpus.topic_sentences.push_back(join_tokens(topic_tokens()[t]));
    corpus.weak_slots = kWeakSlots;
    corpus.seed = seed;

    const std::size_t n_docs = (n_chunks + kChunksPerDoc - 1) / kChunksPerDoc;
    corpus.chunks.reserve(n_chunks);
    for (std::size_t d = 0; d < n_docs; ++d) {
        const std::size_t topic = d % kTopics;
        const std::string doc_id = "doc" + std::to_string(d);
        for (std::size_t s = 0; s < kChunksPerDoc && corpus.chunks.size() < n_chunks; ++s) {
            std::string text = corpus.topic_sentences[topic];
            for (std::size_t j = 0; j < plan.filler[s].size(); ++j)
                text += " " + filler_token(seed, d, s, j, plan.filler[s][j]);
            const auto it = std::find(plan.needle_slots.begin(), plan.needle_slots.end(), s);
            if (it != plan.needle_slots.end()) {
                const std::size_t idx = static_cast<std::size_t>(it - plan.needle_slots.begin());
                text += " " + needle_token(seed, d, s, plan.needle_bucket[idx]);
            }
            Chunk ch;
            ch.doc_id = doc_id;
            ch.seq_index = s;
            ch.text = text;
            ch.approx_tokens = count_words(text);
            corpus.chunks.push_back(std::move(ch));
        }
    }
    return corpus;
}

std::vector<NeedleQuery> make_needle_queries(const TopicCorpus& corpus, std::size_t per_topic) {
    const auto& plan = bucket_plan();
    if (corpus.chunks.size() < kTopics * corpus.chunks_per_doc)
        throw std::invalid_argument("needle queries require at least 4 full documents");
    if (per_topic > plan.needle_slots.size())
        throw std::invalid_argument("at most " + std::to_string(plan.needle_slots.size()) +
                                    " needle queries per topic");
    std::vector<NeedleQuery> out;
    for (std::size_t t = 0; t < kTopics; ++t) {
        for (std::size_t i = 0; i < per_topic; ++i) {
            const std::size_t slot = plan.needle_slots[i];
            const std::string tok = needle_token(corpus.seed, t, slot, plan.needle_bucket[i]);
            NeedleQuery q;
            q.query = corpus.topic_sentences[t] + " " + tok + " " + tok + " " + tok + " " + tok;
            q.topic = t;
            q.chunk_index = t * corpus.chunks_per_doc + slot;
            out.push_back(std::move(q));
        }
    }
    return out;
}

std::vector<Chunk> make_butterfly_chunks() {
    // Red tokens sit in buckets 0..7, blue in 8..15, fillers in 16..47; all
    // buckets distinct, so every cosine below is exact: 1/2 between a pure
    // chunk and the mixed one, 0 across palettes.
    static const auto texts = [] {
        std::vector<std::string> red, blue;
        for (std::size_t i = 0; i < 8; ++i) {
            red.push_back(mine_token("red_" + std::to_string(i) + "_", i));
            blue.push_back(mine_token("blue_" + std::to_string(i) + "_", 8 + i));
        }
        auto fillers = [](std::size_t k) {
            std::vector<std::string> out;
            for (std::size_t j = 0; j < 8; ++j)
                out.push_back(mine_token("bf_" + std::to_string(k) + "_" + std::to_string(j) + "_",
                                         16 + k * 8 + j));
            return join_tokens(out);
        };
        std::vector<std::string> t(5);
        t[0] = join_tokens(red) + " " + fillers(0);
        t[1] = join_tokens(red) + " " + fillers(1);
        t[2] = join_tokens(red) + " " + join_tokens(blue);
        t[3] = join_tokens(blue) + " " + fillers(2);
        t[4] = join_tokens(blue) + " " + fillers(3);
        return t;
    }();
    std::vector<Chunk> chunks;
    for (std::size_t s = 0; s < texts.size(); ++s) {
        Chunk ch;
        ch.doc_id = "butterfly";
        ch.seq_index = s;
        ch.text = texts[s];
        ch.approx_tokens = count_words(texts[s]);
        chunks.push_back(std::move(ch));
    }
    return chunks;
}

}  // namespace cam
