#include "ragbench/retrieval.hpp"

#include "ragbench/text.hpp"

#include <algorithm>

namespace ragbench {

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::naive: return "naive";
        case Strategy::rerank: return "rerank";
        case Strategy::hybrid: return "hybrid";
    }
    return "naive";
}

std::string to_string(FusionMode m) { return m == FusionMode::AND ? "AND" : "OR"; }

Strategy strategy_from_string(std::string_view s) {
    const auto lower = text::to_lower(s);
    if (lower == "naive") return Strategy::naive;
    if (lower == "rerank") return Strategy::rerank;
    if (lower == "hybrid") return Strategy::hybrid;
    throw ConfigError("unknown retrieval strategy '" + std::string(s) + "'");
}

FusionMode fusion_mode_from_string(std::string_view s) {
    const auto lower = text::to_lower(s);
    if (lower == "and") return FusionMode::AND;
    if (lower == "or") return FusionMode::OR;
    throw ConfigError("unknown fusion mode '" + std::string(s) + "'");
}

void RetrievalConfig::validate() const {
    if (top_k_final < 1) throw ConfigError("top_k_final must be at least 1");
    if (top_k_final > candidate_k) throw ConfigError("top_k_final must not exceed candidate_k");
    if (rerank_batch_size < 1) throw ConfigError("rerank_batch_size must be at least 1");
}

namespace {

using Clock = std::chrono::steady_clock;

void require_query(std::string_view query) {
    if (text::trim(query).empty()) throw RetrievalError("empty query");
}

model::Embedding embed_query(std::string_view query, model::EmbeddingPort& embedder) {
    try {
        return embedder.embed({std::string(query)}).front();
    } catch (const ModelError& e) {
        throw ModelError(std::string("query embedding failed: ") + e.what());
    }
}

RetrievalResult resolve(std::string_view query, Strategy strategy, const std::vector<ScoredChunk>& hits,
                        const IndexSet& index, Clock::time_point started) {
    RetrievalResult r;
    r.query = std::string(query);
    r.strategy = strategy;
    for (const auto& h : hits) {
        const Chunk& c = index.chunk(h.chunk_id);
        r.chunks.push_back({h, c.doc_id, c.text});
    }
    r.timing = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - started);
    return r;
}

std::vector<std::string> ids_of(const std::vector<ScoredChunk>& hits) {
    std::vector<std::string> ids;
    ids.reserve(hits.size());
    for (const auto& h : hits) ids.push_back(h.chunk_id);
    return ids;
}

}  // namespace

FusedCandidates fuse_candidates(const std::vector<ScoredChunk>& vector_hits,
                                const std::vector<ScoredChunk>& keyword_hits, FusionMode mode) {
    auto a = ids_of(vector_hits);
    auto b = ids_of(keyword_hits);
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());

    FusedCandidates out;
    if (mode == FusionMode::AND) {
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out.chunk_ids));
        if (!out.chunk_ids.empty()) return out;
        out.fell_back = true;
    }
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out.chunk_ids));
    return out;
}

std::vector<ScoredChunk> rerank_candidates(std::string_view query, const std::vector<std::string>& candidate_ids,
                                           const IndexSet& index, model::RerankPort& reranker, std::size_t final_k,
                                           std::size_t batch_size) {
    if (candidate_ids.empty()) return {};
    std::vector<std::string> passages;
    passages.reserve(candidate_ids.size());
    for (const auto& id : candidate_ids) passages.push_back(index.chunk(id).text);
    std::vector<double> scores;
    try {
        scores = reranker.rerank_scores(query, passages, batch_size);
    } catch (const ModelError& e) {
        std::string msg = std::string("reranking failed over ") + std::to_string(candidate_ids.size()) +
                          " candidates: " + e.what();
        throw RerankError(msg, candidate_ids);
    }
    std::vector<ScoredChunk> scored;
    for (std::size_t i = 0; i < candidate_ids.size(); ++i) {
        scored.push_back({candidate_ids[i], scores[i], ScoreSource::reranker});
    }
    std::sort(scored.begin(), scored.end(), ranks_before);
    if (scored.size() > final_k) scored.resize(final_k);
    return scored;
}

RetrievalResult retrieve_naive(std::string_view query, const IndexSet& index, model::EmbeddingPort& embedder,
                               std::size_t k) {
    const auto started = Clock::now();
    require_query(query);
    if (k < 1) throw ConfigError("k must be at least 1");
    const auto q = embed_query(query, embedder);
    const auto hits = index.vectors.search(q, k);
    auto r = resolve(query, Strategy::naive, hits, index, started);
    r.candidate_count = hits.size();
    return r;
}

RetrievalResult retrieve_rerank(std::string_view query, const IndexSet& index, model::EmbeddingPort& embedder,
                                model::RerankPort& reranker, std::size_t candidate_k, std::size_t final_k,
                                std::size_t batch_size) {
    const auto started = Clock::now();
    require_query(query);
    RetrievalConfig{Strategy::rerank, final_k, candidate_k, FusionMode::OR, batch_size}.validate();
    const auto q = embed_query(query, embedder);
    const auto candidates = index.vectors.search(q, candidate_k);
    const auto hits = rerank_candidates(query, ids_of(candidates), index, reranker, final_k, batch_size);
    auto r = resolve(query, Strategy::rerank, hits, index, started);
    r.candidate_count = candidates.size();
    return r;
}

RetrievalResult retrieve_hybrid(std::string_view query, const IndexSet& index, model::EmbeddingPort& embedder,
                                model::RerankPort& reranker, FusionMode mode, std::size_t candidate_k,
                                std::size_t final_k, std::size_t batch_size) {
    const auto started = Clock::now();
    require_query(query);
    RetrievalConfig{Strategy::hybrid, final_k, candidate_k, mode, batch_size}.validate();
    const auto q = embed_query(query, embedder);
    const auto vector_hits = index.vectors.search(q, candidate_k);
    const auto keyword_hits = index.keywords.search(query, candidate_k);
    const auto fused = fuse_candidates(vector_hits, keyword_hits, mode);
    const auto hits = rerank_candidates(query, fused.chunk_ids, index, reranker, final_k, batch_size);
    auto r = resolve(query, Strategy::hybrid, hits, index, started);
    r.candidate_count = fused.chunk_ids.size();
    r.fusion_fallback = fused.fell_back;
    return r;
}

Retriever::Retriever(const IndexSet& index, model::EmbeddingPort& embedder, model::RerankPort* reranker,
                     RetrievalConfig config)
    : index_(index), embedder_(embedder), reranker_(reranker), config_(config) {
    config_.validate();
    if (config_.strategy != Strategy::naive && reranker_ == nullptr) {
        throw ConfigError(to_string(config_.strategy) + " retrieval needs a reranker");
    }
}

RetrievalResult Retriever::retrieve(std::string_view query) const {
    switch (config_.strategy) {
        case Strategy::naive:
            return retrieve_naive(query, index_, embedder_, config_.top_k_final);
        case Strategy::rerank:
            return retrieve_rerank(query, index_, embedder_, *reranker_, config_.candidate_k, config_.top_k_final,
                                   config_.rerank_batch_size);
        case Strategy::hybrid:
            return retrieve_hybrid(query, index_, embedder_, *reranker_, config_.fusion_mode, config_.candidate_k,
                                   config_.top_k_final, config_.rerank_batch_size);
    }
    throw RetrievalError("unknown strategy");
}

}  // namespace ragbench
