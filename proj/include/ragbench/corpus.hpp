#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ragbench/text.hpp"

namespace ragbench {

struct Document {
    std::string doc_id;
    std::string title;
    std::string text;
    std::string source_path;
};

struct TokenSpan {
    std::size_t start = 0;  // first token index
    std::size_t end = 0;    // one past the last token index
};

struct Chunk {
    std::string chunk_id;
    std::string doc_id;
    std::string text;
    TokenSpan token_span;
    std::size_t token_count = 0;
};

struct ChunkingParams {
    std::size_t chunk_size = 256;
    std::size_t overlap = 50;
};

struct CorpusLoad {
    std::vector<Document> documents;
    std::vector<std::string> warnings;
};

/// Loads every .txt/.md/.markdown file under `directory` (recursively), in
/// lexicographic order of relative path. Markdown is reduced to plain text.
/// Files whose normalized text is empty are skipped with a warning.
CorpusLoad load_corpus(const std::string& directory);

/// Plain-text rendering of Markdown: markup removed, headings and list
/// items kept as separate paragraphs.
std::string strip_markdown(const std::string& markdown);

/// Line-ending and blank-line normalization; trims the result.
std::string normalize_text(const std::string& raw);

/// Packs sentence-aligned token windows. `sentence_starts` must begin with
/// 0 and be strictly increasing, all < `token_count`. Returns [start, end)
/// token spans. Sentences longer than chunk_size are split at token
/// boundaries.
std::vector<TokenSpan> pack_sentences(const std::vector<std::size_t>& sentence_starts, std::size_t token_count,
                                      const ChunkingParams& params);

/// Sentence-packed chunks of one document. Throws ConfigError when
/// overlap >= chunk_size or chunk_size == 0.
std::vector<Chunk> chunk_document(const Document& doc, const ChunkingParams& params = {});

std::vector<Chunk> chunk_corpus(const std::vector<Document>& docs, const ChunkingParams& params = {});

/// "<doc_id>#<index>", index zero-padded to five digits so that
/// lexicographic order follows position.
std::string make_chunk_id(const std::string& doc_id, std::size_t index);

}  // namespace ragbench
