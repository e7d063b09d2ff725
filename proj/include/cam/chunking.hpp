#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "cam/types.hpp"

namespace cam {

struct Document {
    std::string doc_id;
    std::string text;
};

// One ingestible unit of text. seq_index is the chunk's position inside its
// document; the pair (doc_id, seq_index) drives the positional score term.
struct Chunk {
    std::string doc_id;
    std::size_t seq_index = 0;
    std::string text;
    std::size_t approx_tokens = 0;  // whitespace word count
};

// Splits on word boundaries only: every chunk holds at most chunk_size words
// and rejoining the chunks reproduces the document's word sequence.
// chunk_size must be >= 16.
std::vector<Chunk> split_document(const Document& doc, std::size_t chunk_size);

std::vector<std::vector<Chunk>> make_batches(const std::vector<Chunk>& chunks,
                                             std::size_t batch_size);

// JSON-Lines input: one {"doc_id": ..., "text": ...} object per line.
// Duplicate doc_ids and malformed lines are reported with line numbers.
std::vector<Document> read_jsonl(const std::filesystem::path& path);

// Whole file as one document; doc_id is the file's stem.
Document read_text_file(const std::filesystem::path& path);

std::vector<std::string> split_words(const std::string& text);

}  // namespace cam
