#include <doctest.h>

#include "ragbench/corpus.hpp"
#include "ragbench/error.hpp"
#include "support.hpp"

#include <numeric>
#include <random>

using namespace ragbench;
using testing::TempDir;
using testing::write_file;

namespace {

std::vector<std::size_t> iota_starts(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

bool same_spans(const std::vector<TokenSpan>& a, const std::vector<std::pair<std::size_t, std::size_t>>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].start != b[i].first || a[i].end != b[i].second) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("300 one-token sentences pack into two windows with 50 tokens of overlap") {
    const auto spans = pack_sentences(iota_starts(300), 300, {256, 50});
    CHECK(same_spans(spans, {{0, 256}, {206, 300}}));
}

TEST_CASE("one 400-token sentence is cut at token boundaries") {
    const auto spans = pack_sentences({0}, 400, {256, 50});
    CHECK(same_spans(spans, {{0, 256}, {206, 400}}));
}

TEST_CASE("short document is a single chunk") {
    CHECK(same_spans(pack_sentences({0, 5, 9}, 12, {256, 50}), {{0, 12}}));
}

TEST_CASE("windows start on sentence boundaries when one is in reach") {
    // Sentences of 10 tokens; size 35, overlap 8. First window [0,30).
    // Target 22 snaps back to sentence start 20.
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s < 100; s += 10) starts.push_back(s);
    const auto spans = pack_sentences(starts, 100, {35, 8});
    REQUIRE(spans.size() >= 2);
    CHECK(spans[0].start == 0);
    CHECK(spans[0].end == 30);
    CHECK(spans[1].start == 20);
    for (const auto& s : spans) CHECK(s.start % 10 == 0);
}

TEST_CASE("random sentence layouts: coverage, size bound, progress, overlap") {
    std::mt19937 rng(11);
    for (int round = 0; round < 300; ++round) {
        const std::size_t size = 8 + rng() % 60;
        const std::size_t overlap = rng() % size;
        const std::size_t n = 1 + rng() % 500;
        std::vector<std::size_t> starts{0};
        while (true) {
            const std::size_t next = starts.back() + 1 + rng() % (rng() % 4 == 0 ? 2 * size : 12);
            if (next >= n) break;
            starts.push_back(next);
        }
        const auto spans = pack_sentences(starts, n, {size, overlap});
        REQUIRE(!spans.empty());
        CHECK(spans.front().start == 0);
        CHECK(spans.back().end == n);
        for (std::size_t i = 0; i < spans.size(); ++i) {
            CHECK(spans[i].end > spans[i].start);
            CHECK(spans[i].end - spans[i].start <= size);
            if (i > 0) {
                CHECK(spans[i].start > spans[i - 1].start);
                CHECK(spans[i].start <= spans[i - 1].end);  // no gap
            }
        }
    }
}

TEST_CASE("invalid chunking parameters") {
    CHECK_THROWS_AS(pack_sentences({0}, 10, {10, 10}), ConfigError);
    CHECK_THROWS_AS(pack_sentences({0}, 10, {0, 0}), ConfigError);
    Document d{"d", "d", "Some text.", ""};
    CHECK_THROWS_AS(chunk_document(d, {50, 60}), ConfigError);
}

TEST_CASE("chunk ids are zero padded and order by position") {
    CHECK(make_chunk_id("a/b.md", 3) == "a/b.md#00003");
    CHECK(make_chunk_id("x", 12) < make_chunk_id("x", 100));
}

TEST_CASE("chunk_document keeps text spans faithful") {
    std::string text;
    for (int i = 0; i < 80; ++i) text += "Sentence number " + std::to_string(i) + " has a few words. ";
    Document d{"doc.txt", "doc", text, ""};
    const auto chunks = chunk_document(d, {40, 10});
    REQUIRE(chunks.size() > 3);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        const auto& c = chunks[i];
        CHECK(c.chunk_id == make_chunk_id("doc.txt", i));
        CHECK(c.doc_id == "doc.txt");
        CHECK(c.token_count == c.token_span.end - c.token_span.start);
        CHECK(c.token_count <= 40);
        CHECK(text.find(c.text) != std::string::npos);
        CHECK(text::tokenize(c.text).size() == c.token_count);
    }
    CHECK(chunk_document(d, {40, 10}).size() == chunks.size());
}

TEST_CASE("markdown is reduced to plain text") {
    const std::string md = "# Title\n\nSome **bold** and `code` and [a link](http://x).\n\n- item one\n- item two\n\n---\n";
    const std::string plain = normalize_text(strip_markdown(md));
    CHECK(plain.find('#') == std::string::npos);
    CHECK(plain.find("**") == std::string::npos);
    CHECK(plain.find("http") == std::string::npos);
    CHECK(plain.find("a link") != std::string::npos);
    CHECK(plain.find("Title") == 0);
    CHECK(plain.find("item one") != std::string::npos);
}

TEST_CASE("load_corpus walks the tree in path order and skips empty files") {
    TempDir dir;
    write_file(dir.path() / "b.txt", "Second doc.");
    write_file(dir.path() / "a.md", "# Alpha\n\nFirst doc.");
    write_file(dir.path() / "sub" / "c.markdown", "Third doc.");
    write_file(dir.path() / "empty.txt", "   \n\n");
    write_file(dir.path() / "ignored.pdf", "binary");
    const auto load = load_corpus(dir.path().string());
    REQUIRE(load.documents.size() == 3);
    CHECK(load.documents[0].doc_id == "a.md");
    CHECK(load.documents[0].title == "Alpha");
    CHECK(load.documents[1].doc_id == "b.txt");
    CHECK(load.documents[1].title == "b");
    CHECK(load.documents[2].doc_id == "sub/c.markdown");
    REQUIRE(load.warnings.size() == 1);
    CHECK(load.warnings[0].find("empty.txt") != std::string::npos);
}

TEST_CASE("load_corpus errors") {
    CHECK_THROWS_AS(load_corpus("/nonexistent/corpus/dir"), CorpusError);
    TempDir dir;
    write_file(dir.path() / "only.csv", "a,b");
    CHECK_THROWS_AS(load_corpus(dir.path().string()), CorpusError);
}

}
