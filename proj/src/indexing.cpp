#include "ragbench/indexing.hpp"

#include "ragbench/error.hpp"
#include "ragbench/text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ragbench {

std::string to_string(ScoreSource s) {
    switch (s) {
        case ScoreSource::vector: return "vector";
        case ScoreSource::keyword: return "keyword";
        case ScoreSource::reranker: return "reranker";
        case ScoreSource::fused: return "fused";
    }
    return "vector";
}

ScoreSource score_source_from_string(std::string_view s) {
    if (s == "vector") return ScoreSource::vector;
    if (s == "keyword") return ScoreSource::keyword;
    if (s == "reranker") return ScoreSource::reranker;
    if (s == "fused") return ScoreSource::fused;
    throw Error("unknown score source: " + std::string(s));
}

bool ranks_before(const ScoredChunk& a, const ScoredChunk& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk_id < b.chunk_id;
}

namespace {

std::vector<ScoredChunk> top_k(std::vector<ScoredChunk> all, std::size_t k) {
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), ranks_before);
    all.resize(k);
    return all;
}

}  // namespace

void VectorIndex::add(std::string chunk_id, model::Embedding embedding) {
    if (dimension_ == 0) dimension_ = embedding.size();
    if (embedding.size() != dimension_) {
        throw IndexError("embedding for " + chunk_id + " has dimension " + std::to_string(embedding.size()) +
                         ", index expects " + std::to_string(dimension_));
    }
    if (ids_.contains(chunk_id)) throw IndexError("duplicate chunk id " + chunk_id);
    const double norm = std::sqrt(std::inner_product(embedding.begin(), embedding.end(), embedding.begin(), 0.0));
    if (!(norm > 0.0) || !std::isfinite(norm)) throw IndexError("cannot normalize embedding for " + chunk_id);
    for (double& x : embedding) x /= norm;
    ids_.emplace(chunk_id, entries_.size());
    entries_.push_back({std::move(chunk_id), std::move(embedding)});
}

void VectorIndex::add_normalized(std::string chunk_id, model::Embedding embedding) {
    if (dimension_ == 0) dimension_ = embedding.size();
    if (embedding.size() != dimension_) {
        throw IndexError("embedding for " + chunk_id + " has dimension " + std::to_string(embedding.size()) +
                         ", index expects " + std::to_string(dimension_));
    }
    if (ids_.contains(chunk_id)) throw IndexError("duplicate chunk id " + chunk_id);
    const double norm = std::sqrt(std::inner_product(embedding.begin(), embedding.end(), embedding.begin(), 0.0));
    if (!std::isfinite(norm) || std::fabs(norm - 1.0) > 1e-6) {
        throw IndexError("stored embedding for " + chunk_id + " is not unit length");
    }
    ids_.emplace(chunk_id, entries_.size());
    entries_.push_back({std::move(chunk_id), std::move(embedding)});
}

std::vector<ScoredChunk> VectorIndex::search(std::span<const double> query, std::size_t k) const {
    if (k == 0) throw IndexError("k must be at least 1");
    if (query.size() != dimension_) {
        throw IndexError("query dimension " + std::to_string(query.size()) + " does not match index dimension " +
                         std::to_string(dimension_));
    }
    const double norm = std::sqrt(std::inner_product(query.begin(), query.end(), query.begin(), 0.0));
    std::vector<ScoredChunk> scored;
    scored.reserve(entries_.size());
    for (const auto& e : entries_) {
        double dot = 0.0;
        if (norm > 0.0) dot = std::inner_product(query.begin(), query.end(), e.embedding.begin(), 0.0) / norm;
        scored.push_back({e.chunk_id, dot, ScoreSource::vector});
    }
    return top_k(std::move(scored), k);
}

KeywordIndex::KeywordIndex(BM25Params params) : params_(params) {
    if (params_.k1 < 0) throw ConfigError("bm25 k1 must be >= 0");
    if (params_.b < 0 || params_.b > 1) throw ConfigError("bm25 b must be within [0, 1]");
}

void KeywordIndex::add(const std::string& chunk_id, std::string_view text) {
    std::map<std::string, std::uint32_t> tf;
    std::uint32_t length = 0;
    for (auto& term : text::terms(text)) {
        ++tf[std::move(term)];
        ++length;
    }
    add_raw(chunk_id, length, {tf.begin(), tf.end()});
}

void KeywordIndex::add_raw(const std::string& chunk_id, std::uint32_t length,
                           const std::vector<std::pair<std::string, std::uint32_t>>& term_freqs) {
    if (ids_.contains(chunk_id)) throw IndexError("duplicate chunk id " + chunk_id);
    const auto doc = static_cast<std::uint32_t>(chunk_ids_.size());
    ids_.emplace(chunk_id, doc);
    chunk_ids_.push_back(chunk_id);
    lengths_.push_back(length);
    total_length_ += length;
    for (const auto& [term, count] : term_freqs) {
        if (count > 0) postings_[term].emplace_back(doc, count);
    }
}

double KeywordIndex::idf(const std::string& term) const {
    auto it = postings_.find(term);
    const double n_t = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
    const double n = static_cast<double>(chunk_ids_.size());
    return std::log((n - n_t + 0.5) / (n_t + 0.5) + 1.0);
}

double KeywordIndex::avg_doc_length() const {
    return chunk_ids_.empty() ? 0.0 : static_cast<double>(total_length_) / static_cast<double>(chunk_ids_.size());
}

std::vector<ScoredChunk> KeywordIndex::search(std::string_view query, std::size_t k) const {
    if (k == 0) throw IndexError("k must be at least 1");
    std::vector<std::string> unique;
    for (auto& t : text::terms(query)) {
        if (std::find(unique.begin(), unique.end(), t) == unique.end()) unique.push_back(std::move(t));
    }
    const double avg = avg_doc_length();
    std::vector<double> acc(chunk_ids_.size(), 0.0);
    std::vector<bool> touched(chunk_ids_.size(), false);
    for (const auto& term : unique) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double w = idf(term);
        for (const auto& [doc, tf] : it->second) {
            const double f = tf;
            const double norm = avg > 0 ? static_cast<double>(lengths_[doc]) / avg : 0.0;
            acc[doc] += w * f * (params_.k1 + 1.0) / (f + params_.k1 * (1.0 - params_.b + params_.b * norm));
            touched[doc] = true;
        }
    }
    std::vector<ScoredChunk> scored;
    for (std::size_t d = 0; d < acc.size(); ++d) {
        if (touched[d] && acc[d] > 0.0) scored.push_back({chunk_ids_[d], acc[d], ScoreSource::keyword});
    }
    return top_k(std::move(scored), k);
}

std::vector<KeywordIndex::Posting> KeywordIndex::postings(const std::string& term) const {
    std::vector<Posting> out;
    auto it = postings_.find(term);
    if (it == postings_.end()) return out;
    for (const auto& [doc, tf] : it->second) out.push_back({chunk_ids_[doc], tf});
    return out;
}

std::vector<std::string> KeywordIndex::vocabulary() const {
    std::vector<std::string> out;
    out.reserve(postings_.size());
    for (const auto& [term, _] : postings_) out.push_back(term);
    return out;
}

std::uint32_t KeywordIndex::doc_length(const std::string& chunk_id) const {
    auto it = ids_.find(chunk_id);
    if (it == ids_.end()) throw IndexError("unknown chunk id " + chunk_id);
    return lengths_[it->second];
}

const Chunk& IndexSet::chunk(const std::string& chunk_id) const {
    auto it = by_id_.find(chunk_id);
    if (it == by_id_.end()) throw IndexError("unknown chunk id " + chunk_id);
    return chunks[it->second];
}

void IndexSet::rebuild_lookup() {
    by_id_.clear();
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        if (!by_id_.emplace(chunks[i].chunk_id, i).second) {
            throw IndexError("duplicate chunk id " + chunks[i].chunk_id);
        }
    }
}

IndexSet build_indexes(std::vector<Chunk> chunks, model::EmbeddingPort& embedder, BM25Params bm25,
                       std::size_t batch_size) {
    if (chunks.empty()) throw IndexError("empty corpus");
    if (batch_size == 0) batch_size = 1;
    IndexSet set;
    set.keywords = KeywordIndex(bm25);
    set.embedder_model = embedder.model_name();

    for (std::size_t offset = 0; offset < chunks.size(); offset += batch_size) {
        const std::size_t end = std::min(chunks.size(), offset + batch_size);
        std::vector<std::string> texts;
        for (std::size_t i = offset; i < end; ++i) texts.push_back(chunks[i].text);
        std::vector<model::Embedding> vectors;
        try {
            vectors = embedder.embed(texts);
        } catch (const ModelError&) {
            // Re-embed one at a time to name the offending chunk.
            for (std::size_t i = offset; i < end; ++i) {
                try {
                    vectors.push_back(embedder.embed({chunks[i].text}).front());
                } catch (const ModelError& e) {
                    throw IndexError("embedding failed for chunk " + chunks[i].chunk_id + ": " + e.what());
                }
            }
        }
        for (std::size_t i = offset; i < end; ++i) {
            set.vectors.add(chunks[i].chunk_id, std::move(vectors[i - offset]));
            set.keywords.add(chunks[i].chunk_id, chunks[i].text);
        }
    }
    set.chunks = std::move(chunks);
    set.rebuild_lookup();
    return set;
}

}  // namespace ragbench
