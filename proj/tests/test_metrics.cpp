#include <doctest.h>

#include "ragbench/error.hpp"
#include "ragbench/metrics.hpp"
#include "ragbench/text.hpp"

#include <algorithm>
#include <random>

using namespace ragbench;
using namespace ragbench::metrics;

namespace {

const auto& stop() { return text::default_stopwords(); }

MetricSettings sequential() {
    MetricSettings s;
    s.parallel = false;
    return s;
}

class DownLLM final : public model::LLMPort {
public:
    std::string model_name() const override { return "down"; }

protected:
    model::GenerationResponse do_generate(const model::GenerationRequest&) override {
        throw ModelError("connection refused");
    }
};

/// Scripted per-task replies: judge and chunk calls get fixed scores.
class TableJudge final : public model::LLMPort {
public:
    std::map<std::string, std::string> replies;
    std::string model_name() const override { return "table"; }

protected:
    model::GenerationResponse do_generate(const model::GenerationRequest& r) override {
        auto it = replies.find(r.task);
        if (it != replies.end()) return {it->second};
        return {model::MockLLM::rules_reply(r)};
    }
};

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("metric table: weights, thresholds and primary flags") {
    double total = 0.0;
    int primary = 0;
    for (const auto& s : metric_specs()) {
        total += s.weight;
        primary += s.primary ? 1 : 0;
        CHECK(metric_from_string(std::string(s.name)) == s.id);
    }
    CHECK(total == doctest::Approx(1.0));
    CHECK(primary == 8);
    CHECK_FALSE(spec(MetricId::completeness_gain).primary);
    CHECK(spec(MetricId::truthfulness).weight == 0.20);
    CHECK(spec(MetricId::semantic_f1).threshold == 0.6);
    CHECK(spec(MetricId::key_terms_precision).threshold == 0.7);
    CHECK_THROWS_AS(metric_from_string("bleu"), ConfigError);
}

TEST_CASE("make_score clamps and sets passed from the threshold") {
    CHECK(make_score(MetricId::token_recall, 1.4, 0.7).value == 1.0);
    CHECK(make_score(MetricId::token_recall, -0.1, 0.7).value == 0.0);
    CHECK(make_score(MetricId::token_recall, 0.7, 0.7).passed);
    CHECK_FALSE(make_score(MetricId::token_recall, 0.6999, 0.7).passed);
    const auto f = failed_score(MetricId::truthfulness, 0.7, "boom");
    CHECK(f.failed);
    CHECK_FALSE(f.passed);
    CHECK(f.evidence["error"] == "boom");
}

TEST_CASE("key terms precision") {
    CHECK(key_terms_precision_value("capacity rose", "capacity grew", "solar capacity grew", stop()) == 0.5);
    CHECK(key_terms_precision_value("capacity grew fast", "capacity grew", "solar capacity grew", stop()) == 1.0);
    CHECK(key_terms_precision_value("nothing shared", "capacity grew", "solar capacity grew", stop()) == 0.0);
    CHECK(key_terms_precision_value("x", "capacity", "unrelated words", stop()) == 1.0);
}

TEST_CASE("token recall") {
    CHECK(token_recall_value("alpha beta gamma", "alpha beta gamma delta", stop()) == 0.75);
    CHECK(token_recall_value("Alpha, beta!", "alpha beta", stop()) == 1.0);
    CHECK(token_recall_value("zzz", "alpha beta", stop()) == 0.0);
    // repeated ground-truth terms count once
    CHECK(token_recall_value("alpha", "alpha alpha alpha beta", stop()) == 0.5);
    // all-stopword ground truth falls back to every term
    CHECK(token_recall_value("it is", "it is what it is", stop()) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("source relevance: 80/20 of max and mean") {
    CHECK(source_relevance_value({1.0, 0.0, 0.0, 0.0}) == doctest::Approx(0.85));
    CHECK(source_relevance_value({1.0, 1.0}) == doctest::Approx(1.0));
    CHECK(source_relevance_value({0.0, 0.0}) == 0.0);
    CHECK(source_relevance_value({}) == 0.0);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> v(1 + t % 7);
        for (auto& x : v) x = u(rng);
        const double base = source_relevance_value(v);
        std::shuffle(v.begin(), v.end(), rng);
        CHECK(source_relevance_value(v) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("answer relevance blend") {
    CHECK(answer_relevance_value(0.2, 0.6) == doctest::Approx(0.6));
    CHECK(answer_relevance_value(1.0, 1.0) == doctest::Approx(1.0));
    CHECK(answer_relevance_value(-1.0, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("completeness gain anchors") {
    CHECK(completeness_gain_value(0.4, 0.4) == 0.5);
    CHECK(completeness_gain_value(1.0, 0.0) == 1.0);
    CHECK(completeness_gain_value(0.25, 0.75) == 0.25);
    CHECK(completeness_gain_value(0.0, 1.0) == 0.0);
}

TEST_CASE("point F1 with unit vectors") {
    const auto e = [](int i) {
        model::Embedding v(8, 0.0);
        v[static_cast<std::size_t>(i)] = 1.0;
        return v;
    };
    // truth has 4 points, 3 of them matched; all 3 response points match
    const std::vector<model::Embedding> truth = {e(0), e(1), e(2), e(3)};
    const std::vector<model::Embedding> resp = {e(0), e(1), e(2)};
    const auto f = point_f1(resp, truth, 0.8);
    CHECK(f.precision == 1.0);
    CHECK(f.recall == 0.75);
    CHECK(f.f1 == doctest::Approx(2 * 1.0 * 0.75 / 1.75));
    CHECK(f.f1 == doctest::Approx(0.857).epsilon(1e-3));
    const auto swapped = point_f1(truth, resp, 0.8);
    CHECK(swapped.precision == f.recall);
    CHECK(swapped.recall == f.precision);
    CHECK(swapped.f1 == doctest::Approx(f.f1));
    CHECK(point_f1(truth, truth, 0.8).f1 == 1.0);
    CHECK(point_f1({e(5)}, {e(6)}, 0.8).f1 == 0.0);
    CHECK(point_f1({}, {}, 0.8).f1 == 1.0);
    CHECK(point_f1({}, truth, 0.8).f1 == 0.0);
}

TEST_CASE("number extraction and numerical accuracy") {
    CHECK(extract_numbers("1,234.5 units and 7%") == std::vector<double>{1234.5, 7});
    CHECK(extract_numbers("a -3 b x-4") == std::vector<double>{-3, 4});
    CHECK(extract_numbers("1,23 and .5") == std::vector<double>{1, 23, 0.5});
    CHECK(extract_numbers("no digits").empty());
    CHECK(numerical_accuracy("42 MW", "42 MW") == 1.0);
    CHECK(numerical_accuracy("41 MW", "42 MW") == 0.0);
    CHECK(numerical_accuracy("3.14%", "3.14% and 100") == 0.5);
    CHECK(numerical_accuracy("1002", "1,000") == 0.0);
    CHECK(numerical_accuracy("1000.9", "1,000") == 1.0);
    CHECK_FALSE(numerical_accuracy("42", "no numbers").has_value());
}

TEST_CASE("point list parsing") {
    CHECK(parse_points("- one\n* two\n3) three\n4. four") ==
          std::vector<std::string>{"one", "two", "three", "four"});
    CHECK(parse_points("NONE")->empty());
    CHECK_FALSE(parse_points("just prose").has_value());
}

TEST_CASE("judge parses, retries once, then gives up") {
    model::MockLLM ok(model::MockMode::scripted, {"Score: 0.8\nRationale: ok"});
    model::MockEmbedder emb(64);
    Evaluator a(ok, emb, sequential());
    const auto v = a.judge("judge_truthfulness", model::task::judge, {{"question", "q"}});
    REQUIRE(v.has_value());
    CHECK(v->score == 0.8);
    CHECK(v->rationale == "ok");

    model::MockLLM retry(model::MockMode::scripted, {"I think it's good", "Score: 1.0"});
    Evaluator b(retry, emb, sequential());
    CHECK(b.judge("judge_truthfulness", model::task::judge, {})->score == 1.0);
    const auto log = retry.call_log();
    REQUIRE(log.size() == 2);
    CHECK(log[1].prompt.size() > log[0].prompt.size());
    CHECK(log[1].prompt.rfind(log[0].prompt, 0) == 0);

    model::MockLLM bad(model::MockMode::scripted, {"meh", "still meh"});
    Evaluator c(bad, emb, sequential());
    const auto s = c.truthfulness({"q", "r", "g", {}});
    CHECK(s.failed);
    CHECK(bad.call_count() == 2);
}

TEST_CASE("judge scores outside [0, 1] are clamped") {
    model::MockLLM llm(model::MockMode::scripted, {"Score: 1.6"});
    model::MockEmbedder emb(64);
    Evaluator e(llm, emb, sequential());
    CHECK(e.judge("judge_completeness", model::task::judge, {})->score == 1.0);
}

TEST_CASE("source relevance calls the judge once per chunk") {
    TableJudge judge;
    judge.replies[std::string(model::task::chunk_relevance)] = "Score: 0.5";
    model::MockEmbedder emb(64);
    Evaluator e(judge, emb, sequential());
    const auto s = e.source_relevance({"q", "r", "g", {"c1", "c2", "c3"}});
    CHECK(s.value == doctest::Approx(0.5));
    CHECK(s.evidence["chunk_scores"].size() == 3);
    const auto none = e.source_relevance({"q", "r", "g", {}});
    CHECK(none.value == 0.0);
    CHECK_FALSE(none.failed);
}

TEST_CASE("an unreachable judge marks model metrics failed, not zero") {
    DownLLM judge;
    model::MockEmbedder emb(64);
    Evaluator e(judge, emb, sequential());
    const auto all = e.score_all({"When?", "In 1821.", "Coffee arrived in 1821.", {"Coffee arrived in 1821."}});
    CHECK(all.size() == kMetricCount);
    CHECK_FALSE(all.at(MetricId::key_terms_precision).failed);
    CHECK_FALSE(all.at(MetricId::token_recall).failed);
    for (auto id : {MetricId::truthfulness, MetricId::completeness, MetricId::source_relevance,
                    MetricId::context_faithfulness, MetricId::semantic_f1, MetricId::answer_relevance,
                    MetricId::completeness_gain}) {
        CHECK(all.at(id).failed);
    }
}

TEST_CASE("semantic F1 and completeness gain with the rule judge") {
    model::MockLLM judge;
    model::MockEmbedder emb(256);
    Evaluator e(judge, emb, sequential());
    const std::string truth = "Coffee arrived in Valdoria in 1821. Traders brought it by sea.";
    const MetricInputs same{"When did coffee arrive?", truth, truth, {truth, "Rail came later in 1870."}};
    CHECK(e.semantic_f1(same).value == 1.0);
    const auto gain = e.completeness_gain(same);
    CHECK(gain.value == 0.5);
    CHECK(gain.evidence["points"].size() == 3);

    const MetricInputs better{"When did coffee arrive?", truth + " Rail came later in 1870.", "Coffee arrived in "
                                                                                              "Valdoria in 1821.",
                              {truth, "Rail came later in 1870."}};
    const auto g = e.completeness_gain(better);
    CHECK(g.evidence["response_coverage"] == 1.0);
    CHECK(g.evidence["ground_truth_coverage"].get<double>() == doctest::Approx(1.0 / 3.0));
    CHECK(g.value == doctest::Approx(0.5 + (1.0 - 1.0 / 3.0) / 2.0));

    const auto empty = e.completeness_gain({"q", "r", "g", {}});
    CHECK(empty.value == 0.5);
}

TEST_CASE("parallel and sequential scoring agree") {
    model::MockLLM j1, j2;
    model::MockEmbedder emb(128);
    MetricSettings par;
    Evaluator a(j1, emb, par), b(j2, emb, sequential());
    const MetricInputs in{"How long is the rail network?", "It spans 640 kilometres.",
                          "The rail network spans 640 kilometres.", {"The rail network spans 640 kilometres of track."}};
    const auto x = a.score_all(in);
    const auto y = b.score_all(in);
    for (const auto& [id, s] : x) {
        CHECK(s.value == y.at(id).value);
        CHECK(s.passed == y.at(id).passed);
        CHECK(s.value >= 0.0);
        CHECK(s.value <= 1.0);
    }
}

TEST_CASE("settings validation and threshold overrides") {
    MetricSettings s;
    s.thresholds[MetricId::truthfulness] = 0.9;
    CHECK(s.threshold(MetricId::truthfulness) == 0.9);
    CHECK(s.threshold(MetricId::completeness) == 0.7);
    s.thresholds[MetricId::truthfulness] = 1.5;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    MetricSettings m;
    m.match_threshold = 2;
    CHECK_THROWS_AS(m.validate(), ConfigError);
}

}  // TEST_SUITE
