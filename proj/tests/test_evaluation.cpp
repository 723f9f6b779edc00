#include <doctest.h>

#include "pipeline.hpp"
#include "ragbench/error.hpp"
#include "ragbench/evaluation.hpp"

#include <cmath>
#include <random>

using namespace ragbench;
using metrics::MetricId;
using testing::MockPipeline;
using testing::TempDir;
using json = nlohmann::json;

namespace {

std::map<MetricId, double> all_values(double v) {
    std::map<MetricId, double> m;
    for (const auto& s : metrics::metric_specs()) m[s.id] = v;
    return m;
}

std::map<MetricId, metrics::MetricScore> scores_with(unsigned primary_mask, bool gain_passed) {
    std::map<MetricId, metrics::MetricScore> m;
    unsigned bit = 0;
    for (const auto& s : metrics::metric_specs()) {
        metrics::MetricScore sc;
        sc.id = s.id;
        sc.passed = s.primary ? ((primary_mask >> bit++) & 1u) != 0 : gain_passed;
        sc.value = sc.passed ? 1.0 : 0.0;
        m[s.id] = sc;
    }
    return m;
}

int popcount(unsigned x) {
    int n = 0;
    for (; x; x &= x - 1) ++n;
    return n;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("aggregate score examples") {
    CHECK(aggregate_score(all_values(1.0)) == doctest::Approx(1.0));
    CHECK(aggregate_score(all_values(0.5)) == doctest::Approx(0.5));
    auto v = all_values(1.0);
    v[MetricId::truthfulness] = 0.0;
    CHECK(aggregate_score(v) == doctest::Approx(0.80));
    v.erase(MetricId::token_recall);
    try {
        aggregate_score(v);
        FAIL("expected Error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("token_recall") != std::string::npos);
    }
    auto bad = all_values(0.5);
    bad[MetricId::semantic_f1] = 1.2;
    CHECK_THROWS_AS(aggregate_score(bad), Error);
}

TEST_CASE("aggregate score is monotone in every metric") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        auto v = all_values(0.0);
        for (auto& [id, x] : v) x = u(rng);
        const double base = aggregate_score(v);
        for (const auto& s : metrics::metric_specs()) {
            auto w = v;
            w[s.id] = std::min(1.0, w[s.id] + u(rng) * 0.5);
            CHECK(aggregate_score(w) >= base);
        }
    }
}

TEST_CASE("verdict truth table over all primary pass patterns") {
    for (unsigned mask = 0; mask < 256; ++mask) {
        const Verdict want = popcount(mask) >= 6 ? Verdict::pass : Verdict::fail;
        CHECK(verdict(scores_with(mask, false)) == want);
        CHECK(verdict(scores_with(mask, true)) == want);
    }
    auto missing = scores_with(0xFF, true);
    missing.erase(MetricId::truthfulness);
    CHECK_THROWS_AS(verdict(missing), Error);
}

TEST_CASE("band golden table") {
    struct Row {
        MetricId id;
        double v;
        Band band;
    };
    const Row rows[] = {
        {MetricId::truthfulness, 0.85, Band::excellent}, {MetricId::truthfulness, 0.8, Band::good},
        {MetricId::truthfulness, 0.8000001, Band::excellent}, {MetricId::truthfulness, 0.6, Band::good},
        {MetricId::completeness, 0.5999, Band::fair},     {MetricId::token_recall, 0.40, Band::fair},
        {MetricId::token_recall, 0.3999, Band::poor},     {MetricId::token_recall, 0.0, Band::poor},
        {MetricId::answer_relevance, 1.0, Band::excellent},
        {MetricId::semantic_f1, 0.65, Band::good},        {MetricId::semantic_f1, 0.7, Band::good},
        {MetricId::semantic_f1, 0.71, Band::excellent},   {MetricId::semantic_f1, 0.5, Band::good},
        {MetricId::semantic_f1, 0.4999, Band::fair},      {MetricId::semantic_f1, 0.2, Band::fair},
        {MetricId::semantic_f1, 0.1999, Band::poor},
    };
    for (const auto& r : rows) {
        CAPTURE(metrics::to_string(r.id));
        CAPTURE(r.v);
        CHECK(classify_band(r.id, r.v) == r.band);
    }
    CHECK(to_string(Band::excellent) == "excellent");
}

TEST_CASE("configuration ids") {
    Configuration c{Strategy::hybrid, FusionMode::AND, agent::ProfileName::react_custom, "m"};
    CHECK(c.id() == "hybrid-AND/react_custom/m");
    c.strategy = Strategy::naive;
    CHECK(c.id() == "naive/react_custom/m");
}

TEST_CASE("records survive a JSON round trip") {
    MockPipeline p;
    const auto rec = evaluate_pair(p.dataset[0], testing::two_configurations()[1], p.index, p.ports, p.settings);
    REQUIRE(rec.scored());
    const auto j = to_json(rec);
    const auto back = record_from_json(j);
    CHECK(to_json(back).dump() == j.dump());
    CHECK(back.metric_scores.size() == metrics::kMetricCount);
    std::map<MetricId, double> values;
    for (const auto& [id, s] : back.metric_scores) values[id] = s.value;
    CHECK(std::fabs(aggregate_score(values) - *back.aggregate_score) <= 1e-12);
    CHECK(j["metrics"]["truthfulness"].contains("band"));
    CHECK(j["agent_trace"]["terminated_by"] == "final_answer");
    CHECK_FALSE(j.contains("timings"));
    CHECK_THROWS_AS(record_from_json(json::parse(R"({"qa_id": 3})")), Error);
}

TEST_CASE("3 QA pairs x 2 configurations give 6 records and a consistent report") {
    MockPipeline p;
    TempDir dir;
    const std::string path = dir / "records.jsonl";
    const auto s = run_evaluation(p.first(3), testing::two_configurations(), p.index, p.ports, p.settings, path,
                                  {.workers = 2});
    CHECK(s.total == 6);
    CHECK(s.written == 6);
    CHECK_FALSE(s.interrupted);
    const auto file = read_records(path);
    REQUIRE(file.records.size() == 6);
    CHECK(file.records[0].configuration_id == "naive/react_base/mock-llm");
    CHECK(file.records[3].configuration_id == "hybrid-OR/react_custom/mock-llm");
    CHECK(file.records[1].qa_id == "q02");

    const auto report = build_report(file.records);
    REQUIRE(report.configurations.size() == 2);
    std::size_t passed = 0, scored = 0;
    for (const auto& r : file.records) {
        scored += r.scored() ? 1 : 0;
        passed += r.verdict == Verdict::pass ? 1 : 0;
    }
    CHECK(report.records == 6);
    CHECK(report.scored == scored);
    CHECK(report.passed == passed);
    if (scored > 0) CHECK(*report.pass_rate == doctest::Approx(double(passed) / double(scored)));
    for (const auto& c : report.configurations) {
        double sum = 0, sq = 0;
        std::size_t n = 0, pass = 0;
        for (const auto& r : file.records) {
            if (r.configuration_id != c.configuration_id || !r.aggregate_score) continue;
            sum += *r.aggregate_score;
            sq += *r.aggregate_score * *r.aggregate_score;
            ++n;
            pass += r.verdict == Verdict::pass ? 1 : 0;
        }
        REQUIRE(n > 0);
        const double mean = sum / double(n);
        CHECK(*c.mean_aggregate == doctest::Approx(mean));
        CHECK(*c.std_aggregate == doctest::Approx(std::sqrt(std::max(0.0, sq / double(n) - mean * mean))));
        CHECK(c.passed == pass);
        CHECK(c.metrics.size() == metrics::kMetricCount);
    }
}

TEST_CASE("identical runs write identical bytes whatever the worker count") {
    MockPipeline p;
    TempDir dir;
    run_evaluation(p.first(4), testing::two_configurations(), p.index, p.ports, p.settings, dir / "a.jsonl",
                   {.workers = 1});
    run_evaluation(p.first(4), testing::two_configurations(), p.index, p.ports, p.settings, dir / "b.jsonl",
                   {.workers = 3});
    CHECK(testing::read_file(dir / "a.jsonl") == testing::read_file(dir / "b.jsonl"));
    const auto ra = build_report(read_records(dir / "a.jsonl").records);
    const auto rb = build_report(read_records(dir / "b.jsonl").records);
    CHECK(to_json(ra).dump() == to_json(rb).dump());
    CHECK(metric_means_csv(ra) == metric_means_csv(rb));
}

TEST_CASE("resume computes only the missing records") {
    MockPipeline p;
    TempDir dir;
    const auto data = p.first(3);
    const auto configs = testing::two_configurations();
    run_evaluation(data, configs, p.index, p.ports, p.settings, dir / "full.jsonl");

    const std::string path = dir / "part.jsonl";
    const auto first = run_evaluation(data, configs, p.index, p.ports, p.settings, path, {.stop_after = 4});
    CHECK(first.written == 4);
    CHECK(first.interrupted);
    const std::string prefix = testing::read_file(path);

    std::vector<std::string> seen;
    RunOptions ro;
    ro.resume = true;
    ro.workers = 2;
    ro.on_record = [&](const EvaluationRecord& r, std::size_t, std::size_t) { seen.push_back(r.qa_id); };
    const auto second = run_evaluation(data, configs, p.index, p.ports, p.settings, path, ro);
    CHECK(second.existing == 4);
    CHECK(second.written == 2);
    CHECK(seen.size() == 2);
    const std::string after = testing::read_file(path);
    CHECK(after.rfind(prefix, 0) == 0);
    CHECK(after == testing::read_file(dir / "full.jsonl"));

    // a torn last line is dropped and recomputed
    testing::write_file(path, prefix + "{\"qa_id\": \"q0");
    const auto third = run_evaluation(data, configs, p.index, p.ports, p.settings, path, {.resume = true});
    CHECK(third.written == 2);
    CHECK_FALSE(third.warnings.empty());
    CHECK(testing::read_file(path) == testing::read_file(dir / "full.jsonl"));
}

TEST_CASE("cancellation stops claiming new records") {
    MockPipeline p;
    TempDir dir;
    std::atomic<bool> cancel{true};
    RunOptions ro;
    ro.cancel = &cancel;
    const auto s = run_evaluation(p.first(2), testing::two_configurations(), p.index, p.ports, p.settings,
                                  dir / "r.jsonl", ro);
    CHECK(s.written == 0);
    CHECK(s.interrupted);
}

TEST_CASE("generation failures are recorded and the run continues") {
    MockPipeline p;
    p.ports.generator = std::make_unique<model::MockLLM>(model::MockMode::scripted, std::vector<std::string>{});
    p.ports.judge = p.ports.generator.get();
    TempDir dir;
    const auto s = run_evaluation(p.first(2), testing::two_configurations(), p.index, p.ports, p.settings,
                                  dir / "r.jsonl");
    CHECK(s.written == 4);
    const auto file = read_records(dir / "r.jsonl");
    for (const auto& r : file.records) {
        REQUIRE(r.error_status.has_value());
        CHECK(r.error_status->rfind("generation failed", 0) == 0);
        CHECK_FALSE(r.scored());
    }
    const auto report = build_report(file.records);
    CHECK(report.scored == 0);
    CHECK_FALSE(report.pass_rate.has_value());
    CHECK(report.configurations[0].generation_errors == 2);
}

TEST_CASE("a failed metric leaves the record unscored") {
    MockPipeline p;
    p.ports.judge_owned = std::make_unique<model::MockLLM>(model::MockMode::scripted,
                                                           std::vector<std::string>{"unparseable"}, true);
    p.ports.judge = p.ports.judge_owned.get();
    const auto rec = evaluate_pair(p.dataset[0], testing::two_configurations()[0], p.index, p.ports, p.settings);
    CHECK_FALSE(rec.scored());
    CHECK_FALSE(rec.aggregate_score.has_value());
    REQUIRE(rec.error_status.has_value());
    CHECK(rec.error_status->find("truthfulness") != std::string::npos);
    const auto j = to_json(rec);
    CHECK(j["metrics"]["truthfulness"]["failed"] == true);
    CHECK(j["metrics"]["truthfulness"]["value"].is_null());
    CHECK(j["aggregate_score"].is_null());
    const auto report = build_report({rec});
    CHECK(report.configurations[0].metric_failures >= 1);
    CHECK(report.configurations[0].metrics.at(MetricId::truthfulness).failed == 1);
}

TEST_CASE("corrupt record lines are skipped with a warning") {
    MockPipeline p;
    TempDir dir;
    const std::string path = dir / "r.jsonl";
    run_evaluation(p.first(5), {testing::two_configurations()[0]}, p.index, p.ports, p.settings, path);
    std::string content = testing::read_file(path);
    const auto second_line = content.find('\n') + 1;
    content.insert(second_line, "not json at all\n");
    testing::write_file(path, content);
    const auto file = read_records(path);
    CHECK(file.records.size() == 5);
    CHECK(file.skipped == 1);
    REQUIRE(file.warnings.size() == 1);
    CHECK(file.warnings[0].rfind("line 2:", 0) == 0);
}

TEST_CASE("report files are written and CSV tables line up") {
    MockPipeline p;
    TempDir dir;
    run_evaluation(p.first(3), testing::two_configurations(), p.index, p.ports, p.settings, dir / "r.jsonl");
    const auto report = build_report(read_records(dir / "r.jsonl").records);
    write_report_files(report, dir / "out");
    for (const char* f : {"report.json", "metrics_means.csv", "pass_rates.csv", "bands.csv"}) {
        CHECK(std::filesystem::exists(dir.path() / "out" / f));
    }
    const auto j = nlohmann::json::parse(testing::read_file(dir.path() / "out" / "report.json"));
    CHECK(j["configurations"].size() == 2);
    const std::string means = metric_means_csv(report);
    CHECK(std::count(means.begin(), means.end(), '\n') == 3);
    const std::string comparison = comparison_csv({{"a", report}, {"b", report}});
    CHECK(comparison.find("a:naive/react_base/mock-llm") != std::string::npos);
}

TEST_CASE("run validation") {
    MockPipeline p;
    TempDir dir;
    auto configs = testing::two_configurations();
    configs.push_back(configs[0]);
    CHECK_THROWS_AS(run_evaluation(p.first(1), configs, p.index, p.ports, p.settings, dir / "r.jsonl"), ConfigError);
    CHECK_THROWS_AS(run_evaluation(p.first(1), {}, p.index, p.ports, p.settings, dir / "r.jsonl"), ConfigError);
}

}  // TEST_SUITE
