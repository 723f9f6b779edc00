#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ragbench/corpus.hpp"
#include "ragbench/modelgw.hpp"

namespace ragbench {

enum class ScoreSource { vector, keyword, reranker, fused };

std::string to_string(ScoreSource s);
ScoreSource score_source_from_string(std::string_view s);

struct ScoredChunk {
    std::string chunk_id;
    double score = 0.0;
    ScoreSource source = ScoreSource::vector;
};

/// Descending score, ties by ascending chunk_id.
bool ranks_before(const ScoredChunk& a, const ScoredChunk& b);

/// Exact cosine search over unit-normalized embeddings.
class VectorIndex {
public:
    struct Entry {
        std::string chunk_id;
        model::Embedding embedding;
    };

    explicit VectorIndex(std::size_t dimension = 0) : dimension_(dimension) {}

    /// Normalizes `embedding` to unit length. Throws IndexError on a
    /// dimension mismatch, a duplicate id or a zero vector.
    void add(std::string chunk_id, model::Embedding embedding);
    /// Stores an already normalized vector bit for bit (snapshot restore).
    void add_normalized(std::string chunk_id, model::Embedding embedding);

    /// Top-k by cosine similarity. The query is normalized here as well, so
    /// scores lie in [-1, 1]; a zero query scores 0 everywhere.
    std::vector<ScoredChunk> search(std::span<const double> query, std::size_t k) const;

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }

private:
    std::size_t dimension_;
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> ids_;
};

struct BM25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Inverted index with BM25 scoring. Terms are lowercased word tokens;
/// punctuation is not indexed and a chunk's length is its indexed-term count.
class KeywordIndex {
public:
    struct Posting {
        std::string chunk_id;
        std::uint32_t tf = 0;
    };

    explicit KeywordIndex(BM25Params params = {});

    /// Single-writer. Throws IndexError on a duplicate id.
    void add(const std::string& chunk_id, std::string_view text);
    /// Restores a chunk from snapshot data: its length and term frequencies.
    void add_raw(const std::string& chunk_id, std::uint32_t length,
                 const std::vector<std::pair<std::string, std::uint32_t>>& term_freqs);

    /// Sum over unique query terms of
    ///   idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avglen)),
    ///   idf(t) = ln((N - n_t + 0.5) / (n_t + 0.5) + 1).
    /// Zero-score chunks are omitted.
    std::vector<ScoredChunk> search(std::string_view query, std::size_t k) const;

    double idf(const std::string& term) const;
    std::vector<Posting> postings(const std::string& term) const;
    std::vector<std::string> vocabulary() const;
    std::uint32_t doc_length(const std::string& chunk_id) const;
    double avg_doc_length() const;
    std::size_t size() const { return chunk_ids_.size(); }
    const std::vector<std::string>& chunk_ids() const { return chunk_ids_; }
    const BM25Params& params() const { return params_; }

private:
    BM25Params params_;
    std::vector<std::string> chunk_ids_;
    std::vector<std::uint32_t> lengths_;
    std::uint64_t total_length_ = 0;
    std::unordered_map<std::string, std::size_t> ids_;
    std::map<std::string, std::vector<std::pair<std::uint32_t, std::uint32_t>>> postings_;  // term -> (doc, tf)
};

/// Everything retrieval needs: chunk metadata plus both indexes.
struct IndexSet {
    std::vector<Chunk> chunks;
    VectorIndex vectors;
    KeywordIndex keywords;
    std::string embedder_model;
    ChunkingParams chunking;

    /// Throws IndexError for an unknown id.
    const Chunk& chunk(const std::string& chunk_id) const;
    bool contains(const std::string& chunk_id) const { return by_id_.contains(chunk_id); }
    void rebuild_lookup();

private:
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Embeds every chunk (batches of `batch_size`) and builds both indexes.
/// Throws IndexError("empty corpus") for no chunks; an embedder failure
/// aborts with the failing chunk_id in the message.
IndexSet build_indexes(std::vector<Chunk> chunks, model::EmbeddingPort& embedder, BM25Params bm25 = {},
                       std::size_t batch_size = 32);

// Snapshot file: a JSON document with "magic" and "version" header fields,
// chunk metadata, embeddings, and the keyword index.
inline constexpr std::string_view kSnapshotMagic = "ragbench-index";
inline constexpr int kSnapshotVersion = 1;

void save_snapshot(const IndexSet& index, const std::string& path);
IndexSet load_snapshot(const std::string& path);

}  // namespace ragbench
