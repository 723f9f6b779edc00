#include <doctest.h>

#include "ragbench/error.hpp"
#include "ragbench/retrieval.hpp"
#include "ragbench/text.hpp"

#include <algorithm>
#include <random>
#include <set>

using namespace ragbench;

namespace {

std::vector<ScoredChunk> hits(const std::vector<std::string>& ids) {
    std::vector<ScoredChunk> out;
    double s = 1.0;
    for (const auto& id : ids) out.push_back({id, s -= 0.01, ScoreSource::vector});
    return out;
}

std::vector<std::string> sorted(std::set<std::string> s) { return {s.begin(), s.end()}; }

IndexSet small_index(model::EmbeddingPort& embedder) {
    const std::vector<std::string> texts = {
        "Solar panels on the Valdoria grid produce 120 megawatts.",
        "Wind farms along the coast add 80 megawatts of power.",
        "The river delta floods every spring.",
        "Coffee arrived in Valdoria in 1821.",
        "The rail network spans 640 kilometres of track.",
        "Solar output peaks in July while wind peaks in winter.",
    };
    std::vector<Chunk> chunks;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        Chunk c;
        c.doc_id = "doc" + std::to_string(i);
        c.chunk_id = make_chunk_id(c.doc_id, 0);
        c.text = texts[i];
        c.token_count = text::tokenize(c.text).size();
        c.token_span = {0, c.token_count};
        chunks.push_back(c);
    }
    return build_indexes(chunks, embedder);
}

class BrokenReranker final : public model::RerankPort {
public:
    std::string model_name() const override { return "broken"; }

protected:
    std::vector<double> score_batch(std::string_view, std::span<const std::string>) override {
        throw ModelError("reranker down");
    }
};

class CountingReranker final : public model::RerankPort {
public:
    std::string model_name() const override { return "counting"; }
    std::size_t batches = 0;
    std::size_t largest = 0;

protected:
    std::vector<double> score_batch(std::string_view query, std::span<const std::string> passages) override {
        ++batches;
        largest = std::max(largest, passages.size());
        std::vector<double> out;
        for (const auto& p : passages) out.push_back(model::MockReranker::overlap_score(query, p));
        return out;
    }
};

}  // namespace

TEST_SUITE("retrieval") {

TEST_CASE("OR is the union and AND the intersection of candidate sets") {
    std::mt19937 rng(21);
    std::uniform_int_distribution<int> pick(0, 29);
    for (int trial = 0; trial < 200; ++trial) {
        std::set<std::string> a, b;
        const int na = pick(rng) % 12, nb = pick(rng) % 12;
        for (int i = 0; i < na; ++i) a.insert("c" + std::to_string(pick(rng)));
        for (int i = 0; i < nb; ++i) b.insert("c" + std::to_string(pick(rng)));
        std::vector<std::string> va(a.begin(), a.end()), vb(b.begin(), b.end());
        std::shuffle(va.begin(), va.end(), rng);
        std::shuffle(vb.begin(), vb.end(), rng);

        std::set<std::string> uni = a, inter;
        uni.insert(b.begin(), b.end());
        for (const auto& x : a) {
            if (b.count(x)) inter.insert(x);
        }
        const auto o = fuse_candidates(hits(va), hits(vb), FusionMode::OR);
        CHECK(o.chunk_ids == sorted(uni));
        CHECK_FALSE(o.fell_back);
        const auto n = fuse_candidates(hits(va), hits(vb), FusionMode::AND);
        if (inter.empty()) {
            CHECK(n.fell_back);
            CHECK(n.chunk_ids == sorted(uni));
        } else {
            CHECK_FALSE(n.fell_back);
            CHECK(n.chunk_ids == sorted(inter));
        }
        CHECK(n.chunk_ids.size() <= o.chunk_ids.size());
    }
}

TEST_CASE("duplicates inside one list are collapsed") {
    const auto f = fuse_candidates(hits({"x", "x", "y"}), hits({"y", "y"}), FusionMode::OR);
    CHECK(f.chunk_ids == std::vector<std::string>{"x", "y"});
}

TEST_CASE("naive retrieval returns the top-k vector hits with chunk text") {
    model::MockEmbedder embedder(128);
    const auto index = small_index(embedder);
    const auto r = retrieve_naive("solar panels grid", index, embedder, 3);
    REQUIRE(r.chunks.size() == 3);
    CHECK(r.strategy == Strategy::naive);
    CHECK(r.chunks[0].doc_id == "doc0");
    CHECK(r.chunks[0].text == index.chunk(r.chunks[0].scored.chunk_id).text);
    for (std::size_t i = 1; i < r.chunks.size(); ++i) CHECK(r.chunks[i - 1].scored.score >= r.chunks[i].scored.score);
    CHECK(r.candidate_count == 3);
}

TEST_CASE("rerank retrieval reorders vector candidates by the reranker") {
    model::MockEmbedder embedder(128);
    model::MockReranker reranker;
    const auto index = small_index(embedder);
    const auto r = retrieve_rerank("When did coffee arrive?", index, embedder, reranker, 6, 2);
    REQUIRE(r.chunks.size() == 2);
    CHECK(r.chunks[0].doc_id == "doc3");
    CHECK(r.chunks[0].scored.source == ScoreSource::reranker);
    CHECK(r.candidate_count == 6);
}

TEST_CASE("hybrid retrieval fuses vector and keyword candidates") {
    model::MockEmbedder embedder(128);
    model::MockReranker reranker;
    const auto index = small_index(embedder);
    const auto r = retrieve_hybrid("rail track kilometres", index, embedder, reranker, FusionMode::AND, 3, 2);
    REQUIRE_FALSE(r.chunks.empty());
    CHECK(r.chunks[0].doc_id == "doc4");
    CHECK(r.strategy == Strategy::hybrid);
    const auto none = retrieve_hybrid("zzz qqq", index, embedder, reranker, FusionMode::AND, 3, 2);
    CHECK(none.fusion_fallback);
}

TEST_CASE("reranker batching does not change the outcome") {
    model::MockEmbedder embedder(128);
    const auto index = small_index(embedder);
    CountingReranker one, all;
    const auto a = retrieve_rerank("solar wind power", index, embedder, one, 6, 4, 1);
    const auto b = retrieve_rerank("solar wind power", index, embedder, all, 6, 4, 32);
    CHECK(one.batches == 6);
    CHECK(one.largest == 1);
    CHECK(all.batches == 1);
    REQUIRE(a.chunks.size() == b.chunks.size());
    for (std::size_t i = 0; i < a.chunks.size(); ++i) {
        CHECK(a.chunks[i].scored.chunk_id == b.chunks[i].scored.chunk_id);
        CHECK(a.chunks[i].scored.score == b.chunks[i].scored.score);
    }
}

TEST_CASE("a reranker failure reports the candidate set") {
    model::MockEmbedder embedder(128);
    BrokenReranker reranker;
    const auto index = small_index(embedder);
    try {
        retrieve_rerank("solar", index, embedder, reranker, 4, 2);
        FAIL("expected RerankError");
    } catch (const RerankError& e) {
        CHECK(e.candidates.size() == 4);
    }
}

TEST_CASE("configuration and query validation") {
    CHECK_THROWS_AS((RetrievalConfig{Strategy::rerank, 0, 20}.validate()), ConfigError);
    CHECK_THROWS_AS((RetrievalConfig{Strategy::rerank, 30, 20}.validate()), ConfigError);
    CHECK_THROWS_AS((RetrievalConfig{Strategy::rerank, 4, 20, FusionMode::OR, 0}.validate()), ConfigError);
    CHECK_NOTHROW((RetrievalConfig{Strategy::hybrid, 4, 4}.validate()));
    model::MockEmbedder embedder(64);
    const auto index = small_index(embedder);
    CHECK_THROWS_AS(retrieve_naive("   ", index, embedder), RetrievalError);
    CHECK_THROWS_AS(Retriever(index, embedder, nullptr, {Strategy::hybrid}), ConfigError);
    CHECK(strategy_from_string("Hybrid") == Strategy::hybrid);
    CHECK(fusion_mode_from_string("and") == FusionMode::AND);
    CHECK_THROWS_AS(strategy_from_string("fancy"), ConfigError);
    CHECK_THROWS_AS(fusion_mode_from_string("xor"), ConfigError);
}

TEST_CASE("Retriever dispatches on the configured strategy") {
    model::MockEmbedder embedder(128);
    model::MockReranker reranker;
    const auto index = small_index(embedder);
    for (auto s : {Strategy::naive, Strategy::rerank, Strategy::hybrid}) {
        Retriever r(index, embedder, &reranker, {s, 2, 5});
        const auto res = r.retrieve("wind megawatts");
        CHECK(res.strategy == s);
        CHECK(res.chunks.size() <= 2);
    }
}

}  // TEST_SUITE
