#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace cam {

// One row per batch size: wall-clock per batch over a synthetic corpus
// ingested with stub providers, plus the cost of rebuilding the same corpus
// offline in a single batch. `replicas_recomputed_mean` counts level-0 ego
// recomputations per batch — the quantity the locality bound caps.
struct BenchRow {
    std::size_t batch_size = 0;
    double mean_batch_s = 0.0;
    double p95_batch_s = 0.0;
    double replicas_recomputed_mean = 0.0;
    double offline_rebuild_s = 0.0;
    double speedup = 0.0;  // offline_rebuild_s / mean_batch_s
};

struct BenchOptions {
    std::size_t chunks = 2000;
    std::vector<std::size_t> batch_sizes = {1, 50, 200};
    std::uint64_t seed = 0;
};

std::vector<BenchRow> run_bench(const BenchOptions& opts);

// CSV with the pinned header
// batch_size,mean_batch_s,p95_batch_s,replicas_recomputed_mean,offline_rebuild_s,speedup
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace cam
