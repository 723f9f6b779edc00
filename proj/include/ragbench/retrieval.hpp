#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ragbench/error.hpp"
#include "ragbench/indexing.hpp"
#include "ragbench/modelgw.hpp"

namespace ragbench {

enum class Strategy { naive, rerank, hybrid };
enum class FusionMode { AND, OR };

std::string to_string(Strategy s);
std::string to_string(FusionMode m);
Strategy strategy_from_string(std::string_view s);
FusionMode fusion_mode_from_string(std::string_view s);

struct RetrievalConfig {
    Strategy strategy = Strategy::naive;
    std::size_t top_k_final = 4;
    std::size_t candidate_k = 20;
    FusionMode fusion_mode = FusionMode::OR;
    std::size_t rerank_batch_size = 32;

    /// Throws ConfigError unless 1 <= top_k_final <= candidate_k and
    /// rerank_batch_size >= 1.
    void validate() const;
};

struct RetrievedChunk {
    ScoredChunk scored;
    std::string doc_id;
    std::string text;
};

struct RetrievalResult {
    std::string query;
    Strategy strategy = Strategy::naive;
    std::vector<RetrievedChunk> chunks;  // descending score
    std::chrono::microseconds timing{0};
    std::size_t candidate_count = 0;
    bool fusion_fallback = false;  // AND fusion was empty and fell back to OR
};

class RetrievalError : public Error {
public:
    using Error::Error;
};

/// Reranker failure; carries the candidate set that was being scored.
class RerankError : public ModelError {
public:
    RerankError(const std::string& what, std::vector<std::string> candidates)
        : ModelError(what), candidates(std::move(candidates)) {}
    std::vector<std::string> candidates;
};

struct FusedCandidates {
    std::vector<std::string> chunk_ids;  // ascending, unique
    bool fell_back = false;
};

/// Set fusion of two candidate lists: OR is the union, AND the
/// intersection; an empty intersection degrades to the union with
/// `fell_back` set.
FusedCandidates fuse_candidates(const std::vector<ScoredChunk>& vector_hits,
                                const std::vector<ScoredChunk>& keyword_hits, FusionMode mode);

/// Scores candidates with the cross-encoder and keeps the best `final_k`
/// (descending, ties by ascending chunk_id).
std::vector<ScoredChunk> rerank_candidates(std::string_view query, const std::vector<std::string>& candidate_ids,
                                           const IndexSet& index, model::RerankPort& reranker, std::size_t final_k,
                                           std::size_t batch_size);

RetrievalResult retrieve_naive(std::string_view query, const IndexSet& index, model::EmbeddingPort& embedder,
                               std::size_t k = 4);

RetrievalResult retrieve_rerank(std::string_view query, const IndexSet& index, model::EmbeddingPort& embedder,
                                model::RerankPort& reranker, std::size_t candidate_k = 20, std::size_t final_k = 4,
                                std::size_t batch_size = 32);

RetrievalResult retrieve_hybrid(std::string_view query, const IndexSet& index, model::EmbeddingPort& embedder,
                                model::RerankPort& reranker, FusionMode mode = FusionMode::OR,
                                std::size_t candidate_k = 20, std::size_t final_k = 4, std::size_t batch_size = 32);

/// A configured strategy bound to its indexes and ports.
class Retriever {
public:
    Retriever(const IndexSet& index, model::EmbeddingPort& embedder, model::RerankPort* reranker,
              RetrievalConfig config);

    RetrievalResult retrieve(std::string_view query) const;
    const RetrievalConfig& config() const { return config_; }

private:
    const IndexSet& index_;
    model::EmbeddingPort& embedder_;
    model::RerankPort* reranker_;
    RetrievalConfig config_;
};

}  // namespace ragbench
