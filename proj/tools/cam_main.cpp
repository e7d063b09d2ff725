#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cam/bench.hpp"
#include "cam/chunking.hpp"
#include "cam/errors.hpp"
#include "cam/hierarchy.hpp"
#include "cam/providers.hpp"
#include "cam/remote_provider.hpp"
#include "cam/retrieval.hpp"
#include "cam/snapshot.hpp"
#include "cli_config.hpp"

namespace {

using cam::cli::Settings;
using json = nlohmann::ordered_json;

std::shared_ptr<cam::Provider> make_provider(const Settings& s, double tau_sel) {
    if (s.stub_providers) return std::make_shared<cam::StubProvider>(256, tau_sel);
    if (s.api_key.empty())
        throw cam::ConfigError(
            "no API key: set CAM_API_KEY (or api_key in cam.toml) or pass --stub-providers");
    cam::RemoteProviderConfig rc;
    rc.endpoint_url = s.api_base;
    rc.api_key = s.api_key;
    rc.embed_model = s.embed_model;
    rc.chat_model = s.chat_model;
    rc.dimension = s.embed_dimension;
    rc.timeout_s = s.timeout_s;
    rc.max_retries = s.max_retries;
    return std::make_shared<cam::RemoteProvider>(rc);
}

json config_json(const cam::EngineConfig& c) {
    return json{{"alpha", c.alpha},
                {"sigma", c.sigma},
                {"theta", c.theta},
                {"k", c.k},
                {"top_s", c.s},
                {"max_lp_iters", c.max_lp_iters},
                {"max_hops", c.max_hops},
                {"chunk_size", c.chunk_size},
                {"min_level_size", c.min_level_size},
                {"tau_sel", c.tau_sel}};
}

std::vector<cam::Document> read_input(const std::string& path) {
    if (path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl") return cam::read_jsonl(path);
    return {cam::read_text_file(path)};
}

int cmd_ingest(const Settings& s, const std::string& input, const std::string& out,
               const std::string& resume) {
    std::unique_ptr<cam::MemoryEngine> engine;
    if (!resume.empty()) {
        // A resumed memory keeps the config it was built with.
        auto h = cam::load_snapshot(resume);
        auto provider = make_provider(s, h->config.tau_sel);
        engine = std::make_unique<cam::MemoryEngine>(std::move(h), std::move(provider));
    } else {
        s.engine.validate_or_throw();
        engine = std::make_unique<cam::MemoryEngine>(s.engine, make_provider(s, s.engine.tau_sel));
    }
    const cam::EngineConfig cfg = engine->hierarchy()->config;

    std::vector<cam::Chunk> chunks;
    for (const auto& doc : read_input(input)) {
        for (auto& ch : cam::split_document(doc, cfg.chunk_size)) chunks.push_back(std::move(ch));
    }

    json agg = {{"chunks_ingested", 0},
                {"batches", 0},
                {"embed_calls", 0},
                {"summarize_calls", 0},
                {"total_s", 0.0},
                {"levels", json::array()},
                {"config", config_json(cfg)}};
    std::map<int, json> per_level;
    for (const auto& batch : cam::make_batches(chunks, s.batch_size)) {
        const cam::UpdateReport r = engine->integrate_batch(batch);
        agg["chunks_ingested"] = agg["chunks_ingested"].get<std::size_t>() + r.chunks_ingested;
        agg["batches"] = agg["batches"].get<std::size_t>() + 1;
        agg["embed_calls"] = agg["embed_calls"].get<std::size_t>() + r.embed_calls;
        agg["summarize_calls"] = agg["summarize_calls"].get<std::size_t>() + r.summarize_calls;
        agg["total_s"] = agg["total_s"].get<double>() + r.total_s;
        for (const auto& lr : r.levels) {
            auto& row = per_level
                            .try_emplace(lr.level, json{{"level", lr.level},
                                                        {"nodes_added", 0},
                                                        {"nodes_removed", 0},
                                                        {"edges_added", 0},
                                                        {"edges_removed", 0},
                                                        {"replicas_recomputed", 0},
                                                        {"summaries_regenerated", 0}})
                            .first->second;
            row["nodes_added"] = row["nodes_added"].get<std::size_t>() + lr.nodes_added;
            row["nodes_removed"] = row["nodes_removed"].get<std::size_t>() + lr.nodes_removed;
            row["edges_added"] = row["edges_added"].get<std::size_t>() + lr.edges_added;
            row["edges_removed"] = row["edges_removed"].get<std::size_t>() + lr.edges_removed;
            row["replicas_recomputed"] =
                row["replicas_recomputed"].get<std::size_t>() + lr.replicas_recomputed;
            row["summaries_regenerated"] =
                row["summaries_regenerated"].get<std::size_t>() + lr.summaries_regenerated;
        }
    }
    for (const auto& [level, row] : per_level) agg["levels"].push_back(row);
    agg["total_nodes"] = engine->hierarchy()->total_nodes();
    agg["hierarchy_levels"] = engine->hierarchy()->levels.size();
    if (!out.empty()) {
        cam::save_snapshot(*engine->hierarchy(), out);
        agg["snapshot"] = out;
    }
    std::cout << agg.dump(2) << "\n";
    return 0;
}

json id_array(const std::vector<cam::NodeId>& ids) {
    json a = json::array();
    for (auto id : ids) a.push_back(id);
    return a;
}

int cmd_query(const Settings& s, const std::string& query, const std::string& snapshot_path,
              bool explain, bool override_top_s, bool override_max_hops) {
    s.engine.validate_or_throw();
    auto h = cam::load_snapshot(snapshot_path);
    // Flag overrides apply to this lookup only; the snapshot keeps its config.
    if (override_top_s) h->config.s = s.engine.s;
    if (override_max_hops) h->config.max_hops = s.engine.max_hops;
    auto provider = make_provider(s, h->config.tau_sel);
    const cam::RetrievalTrace trace = cam::retrieve(*h, *provider, query);
    std::cout << trace.answer << "\n";
    if (explain) {
        json rounds = json::array();
        for (const auto& r : trace.candidate_rounds)
            rounds.push_back(
                {{"candidates", id_array(r.candidates)}, {"activated", id_array(r.activated)}});
        const json out = {{"query", trace.query},
                          {"localized", id_array(trace.localized)},
                          {"candidate_rounds", rounds},
                          {"final_activation", id_array(trace.final_activation)},
                          {"hops_used", trace.hops_used},
                          {"context_nodes", id_array(trace.context_nodes)},
                          {"context_blocks", trace.context_blocks},
                          {"answer", trace.answer}};
        std::cout << out.dump(2) << "\n";
    }
    return 0;
}

int cmd_stats(const std::string& snapshot_path) {
    const auto h = cam::load_snapshot(snapshot_path);
    json levels = json::array();
    for (std::size_t l = 0; l < h->levels.size(); ++l) {
        const auto& lv = h->levels[l];
        levels.push_back({{"level", l},
                          {"nodes", lv.graph.node_count()},
                          {"edges", lv.graph.edge_count()},
                          {"replicas", lv.rn.replica_count()},
                          {"replica_edges", lv.rn.redge_count()},
                          {"clusters", lv.reg.live_clusters()},
                          {"abstractions", lv.abs_of_label.size()}});
    }
    const json out = {{"format_version", cam::kFormatVersion},
                      {"digest", cam::snapshot_digest(*h)},
                      {"levels", h->levels.size()},
                      {"total_nodes", h->total_nodes()},
                      {"next_node_id", h->next_node_id},
                      {"config", config_json(h->config)},
                      {"per_level", levels}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_bench(const Settings& s, std::size_t chunks, const std::string& batch_sizes_csv) {
    cam::BenchOptions opts;
    opts.chunks = chunks;
    opts.seed = s.seed;
    opts.batch_sizes.clear();
    std::size_t pos = 0;
    while (pos <= batch_sizes_csv.size()) {
        const auto comma = batch_sizes_csv.find(',', pos);
        const std::string tok = batch_sizes_csv.substr(
            pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            std::size_t used = 0;
            const long long v = std::stoll(tok, &used);
            if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
            opts.batch_sizes.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw cam::ConfigError("--batch-sizes needs positive integers, got \"" + tok + "\"");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    std::cout << cam::bench_csv(cam::run_bench(opts));
    return 0;
}

int cmd_snapshot(const std::string& snapshot_path) {
    const auto h = cam::load_snapshot(snapshot_path);
    const json out = {{"ok", true},
                      {"format_version", cam::kFormatVersion},
                      {"digest", cam::snapshot_digest(*h)},
                      {"levels", h->levels.size()},
                      {"total_nodes", h->total_nodes()}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

void add_engine_flags(CLI::App* cmd, Settings& s) {
    cmd->add_option("--alpha", s.engine.alpha, "semantic weight in the pair score");
    cmd->add_option("--sigma", s.engine.sigma, "positional decay width");
    cmd->add_option("--theta", s.engine.theta, "edge admission threshold");
    cmd->add_option("--k", s.engine.k, "max edges per new chunk");
    cmd->add_option("--top-s", s.engine.s, "localization fan-in");
    cmd->add_option("--max-hops", s.engine.max_hops, "exploration round cap");
    cmd->add_option("--chunk-size", s.engine.chunk_size, "words per chunk");
    cmd->add_flag("--stub-providers", s.stub_providers, "use deterministic offline providers");
    cmd->add_option("--seed", s.seed, "seed for synthetic corpora");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cam: hierarchical agentic memory over text chunks"};
    app.require_subcommand(1);

    Settings s;
    std::string input, out, resume, query_text, snapshot_path, batch_sizes = "1,50,200";
    std::size_t chunks = 2000;
    bool explain = false;

    try {
        s = cam::cli::load_settings();
    } catch (const cam::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    auto* ingest = app.add_subcommand("ingest", "ingest documents and grow the memory");
    ingest->add_option("--input", input, ".jsonl file or plain text file")->required();
    ingest->add_option("--out", out, "write the resulting snapshot here");
    ingest->add_option("--snapshot", resume, "resume from this snapshot");
    ingest->add_option("--batch-size", s.batch_size, "chunks per update batch");
    add_engine_flags(ingest, s);

    auto* query = app.add_subcommand("query", "answer a query from a snapshot");
    query->add_option("query", query_text, "the query text")->required();
    query->add_option("--snapshot", snapshot_path, "memory snapshot to load")->required();
    query->add_flag("--explain", explain, "also print the retrieval trace as JSON");
    add_engine_flags(query, s);

    auto* stats = app.add_subcommand("stats", "print per-level structure counts");
    stats->add_option("--snapshot", snapshot_path, "memory snapshot to load")->required();

    auto* bench = app.add_subcommand("bench", "time batched ingestion with stub providers");
    bench->add_option("--chunks", chunks, "synthetic corpus size");
    bench->add_option("--batch-sizes", batch_sizes, "comma-separated batch sizes");
    bench->add_option("--seed", s.seed, "corpus seed");

    auto* snapshot = app.add_subcommand("snapshot", "verify a snapshot and print its digest");
    snapshot->add_option("--snapshot", snapshot_path, "memory snapshot to verify")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(s, input, out, resume);
        if (query->parsed())
            return cmd_query(s, query_text, snapshot_path, explain, query->count("--top-s") > 0,
                             query->count("--max-hops") > 0);
        if (stats->parsed()) return cmd_stats(snapshot_path);
        if (bench->parsed()) return cmd_bench(s, chunks, batch_sizes);
        if (snapshot->parsed()) return cmd_snapshot(snapshot_path);
    } catch (const cam::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cam::EmptyMemoryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const cam::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
