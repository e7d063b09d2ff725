#include "cam/chunking.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cam/errors.hpp"

namespace cam {

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!cur.empty()) {
                words.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(static_cast<char>(c));
        }
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
}

std::vector<Chunk> split_document(const Document& doc, std::size_t chunk_size) {
    if (chunk_size < 16)
        throw ConfigError("chunk_size must be >= 16, got " + std::to_string(chunk_size));
    std::vector<Chunk> chunks;
    const auto words = split_words(doc.text);
    for (std::size_t start = 0; start < words.size(); start += chunk_size) {
        const std::size_t end = std::min(words.size(), start + chunk_size);
        std::string text;
        for (std::size_t i = start; i < end; ++i) {
            if (i > start) text += ' ';
            text += words[i];
        }
        Chunk c;
        c.doc_id = doc.doc_id;
        c.seq_index = chunks.size();
        c.text = std::move(text);
        c.approx_tokens = end - start;
        chunks.push_back(std::move(c));
    }
    return chunks;
}

std::vector<std::vector<Chunk>> make_batches(const std::vector<Chunk>& chunks,
                                             std::size_t batch_size) {
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    std::vector<std::vector<Chunk>> batches;
    for (std::size_t start = 0; start < chunks.size(); start += batch_size) {
        const std::size_t end = std::min(chunks.size(), start + batch_size);
        batches.emplace_back(chunks.begin() + static_cast<std::ptrdiff_t>(start),
                             chunks.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

std::vector<Document> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open input file: " + path.string());
    std::vector<Document> docs;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(path.string() + ":" + std::to_string(lineno) +
                        ": malformed JSON line: " + e.what());
        }
        if (!j.is_object() || !j.contains("doc_id") || !j.contains("text") ||
            !j["doc_id"].is_string() || !j["text"].is_string())
            throw Error(path.string() + ":" + std::to_string(lineno) +
                        ": expected {\"doc_id\": string, \"text\": string}");
        Document d{j["doc_id"].get<std::string>(), j["text"].get<std::string>()};
        if (!seen.insert(d.doc_id).second)
            throw Error(path.string() + ":" + std::to_string(lineno) +
                        ": duplicate doc_id \"" + d.doc_id + "\"");
        docs.push_back(std::move(d));
    }
    return docs;
}

Document read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open input file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return Document{path.stem().string(), ss.str()};
}

}  // namespace cam
