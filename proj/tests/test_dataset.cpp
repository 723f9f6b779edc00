#include <doctest.h>

#include "ragbench/dataset.hpp"
#include "ragbench/error.hpp"
#include "support.hpp"

using namespace ragbench;
using testing::TempDir;

namespace {

const char* kGood =
    R"({"qa_id": "a", "question": "Q1?", "ground_truth": "Forty two MW."})" "\n"
    R"({"qa_id": "b", "question": "Q2?", "ground_truth": "42 MW", "is_numeric": true, "tags": ["numerical"]})" "\n"
    "\n"
    R"({"qa_id": "c", "question": "Q3?", "ground_truth": "Both.", "source_doc_ids": ["x.md", "y.md"], "tags": ["multi_document", "comparative"]})" "\n";

std::vector<Document> docs(std::size_t n) {
    std::vector<Document> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({"doc" + std::to_string(i) + ".md", "Doc " + std::to_string(i),
                       "First sentence of document " + std::to_string(i) + ". Second sentence.", ""});
    }
    return out;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("a well-formed file is accepted") {
    const auto r = validate_dataset_text(kGood);
    CHECK(r.accepted());
    CHECK(r.error_count() == 0);
    CHECK(r.records == 3);
    REQUIRE(r.pairs.size() == 3);
    CHECK(r.pairs[1].is_numeric);
    CHECK(r.pairs[2].source_doc_ids.size() == 2);
    CHECK(r.pairs[2].tags.size() == 2);
}

TEST_CASE("duplicate ids name both lines") {
    const auto r = validate_dataset_text(
        R"({"qa_id": "a", "question": "Q", "ground_truth": "G"})" "\n"
        R"({"qa_id": "b", "question": "Q", "ground_truth": "G"})" "\n"
        R"({"qa_id": "a", "question": "Q", "ground_truth": "G"})" "\n");
    CHECK_FALSE(r.accepted());
    REQUIRE(r.error_count() == 1);
    CHECK(r.issues[0].line == 3);
    CHECK(r.issues[0].message.find("lines 1 and 3") != std::string::npos);
}

TEST_CASE("is_numeric needs a number in the ground truth") {
    const auto r = validate_dataset_text(R"({"qa_id": "a", "question": "Q", "ground_truth": "many", "is_numeric": true})");
    CHECK(r.error_count() == 1);
    CHECK(r.format().rfind("line 1: error:", 0) == 0);
}

TEST_CASE("structural errors and warnings") {
    const auto r = validate_dataset_text(
        "{broken\n"
        "[1, 2]\n"
        R"({"question": "Q", "ground_truth": "G"})" "\n"
        R"({"qa_id": "e", "question": " ", "ground_truth": "G"})" "\n"
        R"({"qa_id": "f", "question": "Q", "ground_truth": "G", "tags": ["opinion"]})" "\n"
        R"({"qa_id": "g", "question": "Q", "ground_truth": "G", "is_numeric": "yes"})" "\n"
        R"({"qa_id": "h", "question": "Q", "ground_truth": "G", "tags": ["numerical"], "extra": 1})" "\n"
        R"({"qa_id": "i", "question": "Q", "ground_truth": "G", "draft": true})" "\n");
    CHECK(r.error_count() == 6);
    CHECK(r.warning_count() == 3);
    CHECK(r.pairs.size() == 2);
    // pure over content
    CHECK(validate_dataset_text("{broken\n").format() == validate_dataset_text("{broken\n").format());
}

TEST_CASE("load_dataset refuses errors and unreviewed drafts") {
    TempDir dir;
    testing::write_file(dir / "good.jsonl", kGood);
    CHECK(load_dataset(dir / "good.jsonl").size() == 3);
    testing::write_file(dir / "bad.jsonl", "{broken\n");
    CHECK_THROWS_AS(load_dataset(dir / "bad.jsonl"), DatasetError);
    testing::write_file(dir / "empty.jsonl", "\n\n");
    CHECK_THROWS_AS(load_dataset(dir / "empty.jsonl"), DatasetError);
    testing::write_file(dir / "draft.jsonl", R"({"qa_id": "d", "question": "Q", "ground_truth": "G", "draft": true})");
    CHECK_THROWS_AS(load_dataset(dir / "draft.jsonl"), DatasetError);
    CHECK(load_dataset(dir / "draft.jsonl", true).size() == 1);
    CHECK_THROWS_AS(load_dataset(dir / "missing.jsonl"), DatasetError);
}

TEST_CASE("write_dataset round trips") {
    TempDir dir;
    const auto pairs = validate_dataset_text(kGood).pairs;
    write_dataset(dir / "out.jsonl", pairs);
    const auto back = load_dataset(dir / "out.jsonl");
    REQUIRE(back.size() == pairs.size());
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(to_json(back[i]) == to_json(pairs[i]));
}

TEST_CASE("drafting parses scripted JSON replies") {
    model::MockLLM llm(model::MockMode::scripted,
                       {R"(Here you go: [{"question": "What is A?", "answer": "A is 5."}, {"question": "Why B?", "answer": "Because."}])"});
    const auto r = draft_qa_candidates(docs(1), llm);
    REQUIRE(r.drafts.size() == 2);
    CHECK(r.warnings.empty());
    CHECK(r.drafts[0].draft);
    CHECK(r.drafts[0].qa_id == "draft-0001-01");
    CHECK(r.drafts[0].is_numeric);
    CHECK_FALSE(r.drafts[1].is_numeric);
    CHECK(r.drafts[1].source_doc_ids == std::vector<std::string>{"doc0.md"});
}

TEST_CASE("malformed draft output is skipped with one warning") {
    model::MockLLM llm(model::MockMode::scripted, {"I cannot do that."});
    const auto r = draft_qa_candidates(docs(1), llm);
    CHECK(r.drafts.empty());
    CHECK(r.warnings.size() == 1);
}

TEST_CASE("pairwise drafting prompts singles and pairs") {
    model::MockLLM llm;
    DraftOptions o;
    o.pairwise = true;
    const auto r = draft_qa_candidates(docs(2), llm, o);
    CHECK(llm.call_count() == 3);
    const auto log = llm.call_log();
    CHECK(log[2].fields.at("mode") == "pair");
    REQUIRE(r.drafts.size() == 3);
    CHECK(r.drafts[2].qa_id == "draft-0001x0002-01");
    CHECK(r.drafts[2].tags.front() == QATag::multi_document);
    CHECK(r.drafts[2].source_doc_ids.size() == 2);

    model::MockLLM capped;
    o.max_pairs = 2;
    draft_qa_candidates(docs(4), capped, o);
    CHECK(capped.call_count() == 4 + 2);
}

}  // TEST_SUITE
