#include "cam/snapshot.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "cam/errors.hpp"

namespace cam {

namespace {

using ojson = nlohmann::ordered_json;

// 17 significant digits round-trip any double exactly.
std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

double parse_double(const std::string& s) {
    return std::strtod(s.c_str(), nullptr);
}

ojson config_json(const EngineConfig& c) {
    ojson j;
    j["alpha"] = fmt_double(c.alpha);
    j["sigma"] = fmt_double(c.sigma);
    j["theta"] = fmt_double(c.theta);
    j["k"] = c.k;
    j["s"] = c.s;
    j["max_lp_iters"] = c.max_lp_iters;
    j["max_hops"] = c.max_hops;
    j["chunk_size"] = c.chunk_size;
    j["min_level_size"] = c.min_level_size;
    j["tau_sel"] = fmt_double(c.tau_sel);
    return j;
}

EngineConfig config_from_json(const nlohmann::json& j) {
    EngineConfig c;
    c.alpha = parse_double(j.at("alpha").get<std::string>());
    c.sigma = parse_double(j.at("sigma").get<std::string>());
    c.theta = parse_double(j.at("theta").get<std::string>());
    c.k = j.at("k").get<std::size_t>();
    c.s = j.at("s").get<std::size_t>();
    c.max_lp_iters = j.at("max_lp_iters").get<std::size_t>();
    c.max_hops = j.at("max_hops").get<std::size_t>();
    c.chunk_size = j.at("chunk_size").get<std::size_t>();
    c.min_level_size = j.at("min_level_size").get<std::size_t>();
    c.tau_sel = parse_double(j.at("tau_sel").get<std::string>());
    return c;
}

void append_section(std::string& out, const char* name, const std::vector<ojson>& records) {
    out += "#SECTION ";
    out += name;
    out += ' ';
    out += std::to_string(records.size());
    out += '\n';
    for (const auto& r : records) {
        out += r.dump();
        out += '\n';
    }
}

struct LineReader {
    std::istringstream in;
    std::size_t lineno = 0;

    explicit LineReader(const std::string& bytes) : in(bytes) {}

    std::string next() {
        std::string line;
        if (!std::getline(in, line))
            throw IntegrityError("snapshot truncated at line " + std::to_string(lineno + 1));
        ++lineno;
        return line;
    }
};

nlohmann::json parse_record(const std::string& line, std::size_t lineno) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError("snapshot line " + std::to_string(lineno) +
                             " is not valid JSON: " + e.what());
    }
}

std::size_t expect_section(LineReader& r, const std::string& name) {
    const std::string line = r.next();
    const std::string prefix = "#SECTION " + name + " ";
    if (line.rfind(prefix, 0) != 0)
        throw IntegrityError("snapshot line " + std::to_string(r.lineno) + ": expected \"" +
                             prefix + "<count>\", got \"" + line + "\"");
    return std::strtoull(line.c_str() + prefix.size(), nullptr, 10);
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
        throw Error("sha256 computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

std::string serialize_snapshot(const MemoryHierarchy& h) {
    ojson header;
    header["format_version"] = kFormatVersion;
    header["config"] = config_json(h.config);
    ojson counters;
    counters["next_node_id"] = h.next_node_id;
    ojson next_labels = ojson::array();
    for (const auto& lvl : h.levels) next_labels.push_back(lvl.reg.next_label);
    counters["next_label"] = std::move(next_labels);
    header["counters"] = std::move(counters);

    std::string out = header.dump();
    out += '\n';

    std::vector<ojson> nodes, edges, replicas, redges, labels, psi;
    for (std::size_t li = 0; li < h.levels.size(); ++li) {
        const Level& lvl = h.levels[li];
        const int level = static_cast<int>(li);
        for (const auto& [id, node] : lvl.nodes) {
            ojson r;
            r["level"] = level;
            r["id"] = id;
            r["kind"] = node.kind == NodeKind::chunk ? "chunk" : "abstraction";
            r["text"] = node.text;
            r["doc_id"] = node.doc_id;
            r["seq_index"] = node.seq_index;
            r["source_label"] = node.source_label;
            r["members"] = node.members;
            ojson emb = ojson::array();
            if (node.embedding)
                for (double x : *node.embedding) emb.push_back(fmt_double(x));
            r["embedding"] = std::move(emb);
            nodes.push_back(std::move(r));
        }
        for (const auto& [u, nbrs] : lvl.graph.adjacency()) {
            for (const auto& [v, w] : nbrs) {
                if (u >= v) continue;
                ojson r;
                r["level"] = level;
                r["u"] = u;
                r["v"] = v;
                r["w"] = fmt_double(w);
                edges.push_back(std::move(r));
            }
        }
        for (const auto& [node, reps] : lvl.rn.replicas) {
            for (const auto& rep : reps) {
                ojson r;
                r["level"] = level;
                r["node"] = node;
                r["anchor"] = rep.id.anchor;
                r["component"] = rep.component;
                replicas.push_back(std::move(r));
            }
        }
        for (const auto& e : lvl.rn.all_redges()) {
            ojson r;
            r["level"] = level;
            r["a_node"] = e.a.node;
            r["a_anchor"] = e.a.anchor;
            r["b_node"] = e.b.node;
            r["b_anchor"] = e.b.anchor;
            redges.push_back(std::move(r));
        }
        for (const auto& [rid, label] : lvl.rn.labels) {
            ojson r;
            r["level"] = level;
            r["node"] = rid.node;
            r["anchor"] = rid.anchor;
            r["label"] = label;
            labels.push_back(std::move(r));
        }
        for (const auto& [label, abs_id] : lvl.abs_of_label) {
            ojson r;
            r["level"] = level;
            r["label"] = label;
            r["abs"] = abs_id;
            psi.push_back(std::move(r));
        }
    }
    append_section(out, "NODES", nodes);
    append_section(out, "EDGES", edges);
    append_section(out, "REPLICAS", replicas);
    append_section(out, "REDGES", redges);
    append_section(out, "LABELS", labels);
    append_section(out, "PSI", psi);

    out += "#SHA256 " + sha256_hex(out) + '\n';
    return out;
}

void save_snapshot(const MemoryHierarchy& h, const std::filesystem::path& path) {
    const auto problems = consistency_check(h);
    if (!problems.empty())
        throw ConsistencyError("refusing to save an inconsistent hierarchy: " + problems.front());

    const std::string bytes = serialize_snapshot(h);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write snapshot temp file: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw Error("short write to snapshot temp file: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);  // atomic within one filesystem
}

std::shared_ptr<MemoryHierarchy> load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open snapshot: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();

    // Checksum first: everything else assumes intact bytes.
    const std::string marker = "#SHA256 ";
    const auto pos = bytes.rfind(marker);
    if (pos == std::string::npos || (pos != 0 && bytes[pos - 1] != '\n'))
        throw IntegrityError("snapshot has no checksum trailer (truncated?)");
    std::string expected = bytes.substr(pos + marker.size());
    while (!expected.empty() && (expected.back() == '\n' || expected.back() == '\r'))
        expected.pop_back();
    const std::string computed = sha256_hex(bytes.substr(0, pos));
    if (expected != computed)
        throw IntegrityError("snapshot digest mismatch: expected " + expected + ", computed " +
                             computed);

    LineReader reader(bytes.substr(0, pos));
    const std::string header_line = reader.next();
    const auto header = parse_record(header_line, reader.lineno);
    const int version = header.at("format_version").get<int>();
    if (version != kFormatVersion)
        throw VersionError("unsupported snapshot format version " + std::to_string(version) +
                           " (this build reads version " + std::to_string(kFormatVersion) + ")");

    auto h = std::make_shared<MemoryHierarchy>();
    try {
        h->config = config_from_json(header.at("config"));
        const auto& counters = header.at("counters");
        h->next_node_id = counters.at("next_node_id").get<NodeId>();
        const auto& next_labels = counters.at("next_label");
        h->levels.resize(next_labels.size());
        for (std::size_t li = 0; li < h->levels.size(); ++li) {
            Level& lvl = h->levels[li];
            lvl.graph = LevelGraph(static_cast<int>(li));
            lvl.rn.level = static_cast<int>(li);
            lvl.reg.level = static_cast<int>(li);
            lvl.reg.next_label = next_labels[li].get<Label>();
        }

        auto level_at = [&](const nlohmann::json& r) -> Level& {
            const auto li = r.at("level").get<std::size_t>();
            if (li >= h->levels.size())
                throw IntegrityError("snapshot record names level " + std::to_string(li) +
                                     " but only " + std::to_string(h->levels.size()) +
                                     " levels exist");
            return h->levels[li];
        };

        std::size_t n = expect_section(reader, "NODES");
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = parse_record(reader.next(), reader.lineno);
            Level& lvl = level_at(r);
            MemoryNode node;
            node.id = r.at("id").get<NodeId>();
            node.level = r.at("level").get<int>();
            const std::string kind = r.at("kind").get<std::string>();
            node.kind = kind == "chunk" ? NodeKind::chunk : NodeKind::abstraction;
            node.text = r.at("text").get<std::string>();
            node.doc_id = r.at("doc_id").get<std::string>();
            node.seq_index = r.at("seq_index").get<std::size_t>();
            node.source_label = r.at("source_label").get<Label>();
            node.members = r.at("members").get<std::vector<NodeId>>();
            Embedding emb;
            for (const auto& x : r.at("embedding")) emb.push_back(parse_double(x.get<std::string>()));
            node.embedding = std::make_shared<const Embedding>(std::move(emb));
            lvl.graph.add_node(node.id);
            h->level_of[node.id] = node.level;
            lvl.nodes.emplace(node.id, std::move(node));
        }

        n = expect_section(reader, "EDGES");
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = parse_record(reader.next(), reader.lineno);
            level_at(r).graph.add_edge(r.at("u").get<NodeId>(), r.at("v").get<NodeId>(),
                                       parse_double(r.at("w").get<std::string>()));
        }

        n = expect_section(reader, "REPLICAS");
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = parse_record(reader.next(), reader.lineno);
            Replica rep;
            rep.id = {r.at("node").get<NodeId>(), r.at("anchor").get<NodeId>()};
            rep.component = r.at("component").get<std::vector<NodeId>>();
            level_at(r).rn.replicas[rep.id.node].push_back(std::move(rep));
        }

        n = expect_section(reader, "REDGES");
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = parse_record(reader.next(), reader.lineno);
            const ReplicaId a{r.at("a_node").get<NodeId>(), r.at("a_anchor").get<NodeId>()};
            const ReplicaId b{r.at("b_node").get<NodeId>(), r.at("b_anchor").get<NodeId>()};
            auto& rn = level_at(r).rn;
            rn.radj[a].insert(b);
            rn.radj[b].insert(a);
        }

        n = expect_section(reader, "LABELS");
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = parse_record(reader.next(), reader.lineno);
            const ReplicaId rid{r.at("node").get<NodeId>(), r.at("anchor").get<NodeId>()};
            const Label label = r.at("label").get<Label>();
            Level& lvl = level_at(r);
            lvl.rn.labels[rid] = label;
            lvl.reg.members[label].insert(rid);
        }

        n = expect_section(reader, "PSI");
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = parse_record(reader.next(), reader.lineno);
            Level& lvl = level_at(r);
            const Label label = r.at("label").get<Label>();
            lvl.abs_of_label[label] = r.at("abs").get<NodeId>();
            lvl.reg.established.insert(label);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError(std::string("snapshot record malformed: ") + e.what());
    } catch (const ConsistencyError& e) {
        throw IntegrityError(std::string("snapshot contains a dangling reference: ") + e.what());
    }

    const auto problems = consistency_check(*h);
    if (!problems.empty()) {
        std::string msg = "snapshot fails the consistency walk:";
        for (std::size_t i = 0; i < problems.size() && i < 5; ++i) msg += " " + problems[i] + ";";
        throw IntegrityError(msg);
    }
    return h;
}

}  // namespace cam
