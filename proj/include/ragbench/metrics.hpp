#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "ragbench/modelgw.hpp"

namespace ragbench::metrics {

enum class MetricId {
    key_terms_precision,
    token_recall,
    truthfulness,
    completeness,
    source_relevance,
    context_faithfulness,
    semantic_f1,
    answer_relevance,
    completeness_gain,
};

enum class Category { programmatic, llm, hybrid };

struct MetricSpec {
    MetricId id;
    std::string_view name;
    double weight;
    double threshold;
    Category category;
    bool primary;  // counts toward the pass rule
};

inline constexpr std::size_t kMetricCount = 9;

/// The fixed metric table, in MetricId order.
const std::array<MetricSpec, kMetricCount>& metric_specs();
const MetricSpec& spec(MetricId id);

std::string to_string(MetricId id);
std::string to_string(Category c);
MetricId metric_from_string(std::string_view name);  // throws ConfigError

struct MetricScore {
    MetricId id = MetricId::key_terms_precision;
    double value = 0.0;
    double threshold = 0.0;
    bool passed = false;
    /// Evaluation failed (judge unparseable or unreachable). value and
    /// passed are meaningless; the score is left out of every aggregate.
    bool failed = false;
    nlohmann::json evidence = nlohmann::json::object();
};

/// value clamped to [0, 1], passed = value >= threshold.
MetricScore make_score(MetricId id, double value, double threshold, nlohmann::json evidence = nlohmann::json::object());
MetricScore failed_score(MetricId id, double threshold, const std::string& reason,
                         nlohmann::json evidence = nlohmann::json::object());

struct JudgeVerdict {
    double score = 0.0;
    std::string rationale;
    std::string raw_output;
};

struct MetricSettings {
    std::map<MetricId, double> thresholds;  // overrides of the table values
    double match_threshold = 0.8;           // cosine for point matching
    double relevance_blend = 0.5;           // embedding share of answer_relevance
    std::size_t max_points = 20;            // cap on extracted point lists
    std::size_t context_char_budget = 12000;
    bool parallel = true;                   // run a record's metrics concurrently
    std::unordered_set<std::string> stopwords;  // empty: built-in list
    std::map<std::string, std::string> prompt_overrides;  // asset name -> file path

    double threshold(MetricId id) const;
    void validate() const;
};

// ---------------------------------------------------------------------------
// Pure formulas

double key_terms_precision_value(std::string_view response, std::string_view ground_truth, std::string_view context,
                                 const std::unordered_set<std::string>& stopwords, nlohmann::json* evidence = nullptr);
double token_recall_value(std::string_view response, std::string_view ground_truth,
                          const std::unordered_set<std::string>& stopwords, nlohmann::json* evidence = nullptr);
/// 0.8 max + 0.2 mean; 0 for an empty vector.
double source_relevance_value(const std::vector<double>& chunk_scores);
/// blend * (cos + 1) / 2 + (1 - blend) * judge
double answer_relevance_value(double cosine, double judge_score, double blend = 0.5);
/// clamp(0.5 + (C_r - C_g) / 2, 0, 1)
double completeness_gain_value(double response_coverage, double ground_truth_coverage);

struct F1Parts {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Point-list matching: a point matches when its best cosine against the
/// other list reaches `match_threshold`. Both lists empty gives 1.0 across
/// the board; exactly one empty gives 0.
F1Parts point_f1(const std::vector<model::Embedding>& response_points,
                 const std::vector<model::Embedding>& truth_points, double match_threshold);

double cosine(const model::Embedding& a, const model::Embedding& b);

/// Numbers in a text: thousands separators and percent signs removed.
std::vector<double> extract_numbers(std::string_view input);
bool has_number(std::string_view input);

/// Fraction of the ground truth's unique numbers found in the response
/// within relative tolerance; nullopt when the ground truth has none.
std::optional<double> numerical_accuracy(std::string_view response, std::string_view ground_truth,
                                         double rel_tolerance = 1e-3);

/// Parses "- point" lines; "NONE" gives an empty list; nullopt when the
/// output is neither.
std::optional<std::vector<std::string>> parse_points(std::string_view output);

// ---------------------------------------------------------------------------
// Model-backed metrics

struct MetricInputs {
    std::string question;
    std::string response;
    std::string ground_truth;
    std::vector<std::string> context_chunks;  // retrieved passages, deduplicated
};

class Evaluator {
public:
    Evaluator(model::LLMPort& judge, model::EmbeddingPort& embedder, MetricSettings settings = {});

    /// Rubric judge with the "Score:" protocol and one corrective retry.
    /// nullopt after a second unparseable reply.
    std::optional<JudgeVerdict> judge(std::string_view prompt_asset, std::string_view task,
                                      const std::map<std::string, std::string>& fields);

    MetricScore key_terms_precision(const MetricInputs& in) const;
    MetricScore token_recall(const MetricInputs& in) const;
    MetricScore truthfulness(const MetricInputs& in);
    MetricScore completeness(const MetricInputs& in);
    MetricScore context_faithfulness(const MetricInputs& in);
    MetricScore source_relevance(const MetricInputs& in);
    MetricScore semantic_f1(const MetricInputs& in);
    MetricScore answer_relevance(const MetricInputs& in);
    MetricScore completeness_gain(const MetricInputs& in);

    /// All nine metrics, keyed by id.
    std::map<MetricId, MetricScore> score_all(const MetricInputs& in);

    const MetricSettings& settings() const { return settings_; }
    const std::unordered_set<std::string>& stopwords() const;

private:
    std::string prompt(std::string_view asset) const;
    MetricScore rubric(MetricId id, std::string_view asset, const MetricInputs& in);
    std::optional<std::vector<std::string>> extract_points(const std::string& text);
    /// Judge says covered and some sentence of `text` is close enough.
    bool covers(const std::string& point, const model::Embedding& point_vec, const std::string& text,
                const std::vector<model::Embedding>& sentence_vecs, bool& failed);
    std::string context_text(const MetricInputs& in, bool numbered) const;

    model::LLMPort& judge_;
    model::EmbeddingPort& embedder_;
    MetricSettings settings_;
    std::map<std::string, std::string> prompts_;
};

}  // namespace ragbench::metrics
