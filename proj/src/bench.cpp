#include "cam/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "cam/corpus_gen.hpp"
#include "cam/hierarchy.hpp"
#include "cam/providers.hpp"

namespace cam {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Ingests `chunks` in batches of `batch_size` into a fresh engine; returns
// per-batch wall seconds and level-0 ego recomputation counts.
std::pair<std::vector<double>, std::vector<std::size_t>> ingest_batched(
    const std::vector<Chunk>& chunks, std::size_t batch_size) {
    MemoryEngine engine(EngineConfig{}, std::make_shared<StubProvider>());
    std::vector<double> times;
    std::vector<std::size_t> recomputed;
    for (const auto& batch : make_batches(chunks, batch_size)) {
        const auto t0 = std::chrono::steady_clock::now();
        const UpdateReport report = engine.integrate_batch(batch);
        times.push_back(seconds_since(t0));
        recomputed.push_back(report.levels.empty() ? 0 : report.levels[0].replicas_recomputed);
    }
    return {std::move(times), std::move(recomputed)};
}

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double p95_of(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const std::size_t rank = (xs.size() * 95 + 99) / 100;  // ceil(0.95 n), 1-based
    return xs[std::min(rank, xs.size()) - 1];
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchOptions& opts) {
    if (opts.chunks == 0) throw std::invalid_argument("bench needs at least one chunk");
    if (opts.batch_sizes.empty()) throw std::invalid_argument("bench needs at least one batch size");
    const TopicCorpus corpus = make_topic_corpus(opts.chunks, opts.seed);

    const auto t0 = std::chrono::steady_clock::now();
    {
        MemoryEngine offline(EngineConfig{}, std::make_shared<StubProvider>());
        offline.integrate_batch(corpus.chunks);
    }
    const double offline_s = seconds_since(t0);

    std::vector<BenchRow> rows;
    for (std::size_t bs : opts.batch_sizes) {
        const auto [times, recomputed] = ingest_batched(corpus.chunks, bs);
        BenchRow row;
        row.batch_size = bs;
        row.mean_batch_s = mean_of(times);
        row.p95_batch_s = p95_of(times);
        row.replicas_recomputed_mean =
            recomputed.empty() ? 0.0
                               : static_cast<double>(std::accumulate(recomputed.begin(),
                                                                     recomputed.end(), std::size_t{0})) /
                                     static_cast<double>(recomputed.size());
        row.offline_rebuild_s = offline_s;
        row.speedup = row.mean_batch_s > 0.0 ? offline_s / row.mean_batch_s : 0.0;
        rows.push_back(row);
    }
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::string out =
        "batch_size,mean_batch_s,p95_batch_s,replicas_recomputed_mean,offline_rebuild_s,speedup\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.3f,%.6f,%.3f\n", r.batch_size,
                      r.mean_batch_s, r.p95_batch_s, r.replicas_recomputed_mean, r.offline_rebuild_s,
                      r.speedup);
        out += buf;
    }
    return out;
}

}  // namespace cam
