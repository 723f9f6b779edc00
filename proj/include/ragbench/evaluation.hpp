#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ragbench/agent.hpp"
#include "ragbench/dataset.hpp"
#include "ragbench/indexing.hpp"
#include "ragbench/metrics.hpp"
#include "ragbench/modelgw.hpp"
#include "ragbench/retrieval.hpp"

namespace ragbench {

/// One evaluated system: retrieval strategy x agent profile x generator.
struct Configuration {
    Strategy strategy = Strategy::naive;
    FusionMode fusion_mode = FusionMode::OR;  // hybrid only
    agent::ProfileName profile = agent::ProfileName::react_base;
    std::string model;

    /// "naive/react_base/model", "hybrid-OR/react_custom/model".
    std::string id() const;
};

enum class Verdict { pass, fail };
std::string to_string(Verdict v);

struct EvaluationRecord {
    std::string qa_id;
    std::string configuration_id;
    std::string strategy;
    std::string fusion_mode;  // empty unless hybrid
    std::string profile;
    std::string model;
    std::string question;
    std::string ground_truth;
    std::string response;
    nlohmann::json agent_trace = nlohmann::json::object();  // steps, warnings, retrievals
    std::map<metrics::MetricId, metrics::MetricScore> metric_scores;
    std::optional<double> numerical_accuracy;
    std::optional<double> aggregate_score;  // absent when any metric failed
    std::optional<Verdict> verdict;         // absent when not fully scored
    std::optional<std::string> error_status;
    std::optional<nlohmann::json> timings;  // only with record_timings

    bool scored() const { return verdict.has_value(); }
};

nlohmann::json to_json(const EvaluationRecord& r);
EvaluationRecord record_from_json(const nlohmann::json& j);  // throws Error on a malformed record

nlohmann::json trace_to_json(const agent::AgentTrace& trace);

/// Weighted sum over the nine metrics. Throws Error naming a missing metric
/// or an out-of-range value.
double aggregate_score(const std::map<metrics::MetricId, double>& values);

/// pass iff at least 6 of the 8 primary metrics passed; completeness_gain
/// is ignored. Throws Error when a primary metric is missing.
Verdict verdict(const std::map<metrics::MetricId, metrics::MetricScore>& scores);

inline constexpr std::size_t kPrimaryPassesRequired = 6;

enum class Band { excellent, good, fair, poor };
std::string to_string(Band b);

/// Standard scale: >0.8 excellent, [0.6,0.8] good, [0.4,0.6) fair, else poor.
/// semantic_f1: >0.7, [0.5,0.7], [0.2,0.5), else poor.
Band classify_band(metrics::MetricId id, double value);
Band classify_standard_band(double value);

// ---------------------------------------------------------------------------
// Reports

struct MetricSummary {
    std::size_t count = 0;   // non-failed scores
    std::size_t failed = 0;  // failed evaluations
    std::optional<double> mean;
    std::optional<double> pass_rate;
    std::array<std::size_t, 4> bands{};  // indexed by Band
};

struct ConfigurationSummary {
    std::string configuration_id;
    std::string strategy;
    std::string fusion_mode;
    std::string profile;
    std::string model;
    std::size_t records = 0;
    std::size_t scored = 0;
    std::size_t passed = 0;
    std::size_t generation_errors = 0;  // records with error_status
    std::size_t metric_failures = 0;    // failed metric evaluations
    std::optional<double> pass_rate;    // passed / scored
    std::optional<double> mean_aggregate;
    std::optional<double> std_aggregate;  // population
    std::array<std::size_t, 4> aggregate_bands{};
    std::map<metrics::MetricId, MetricSummary> metrics;
    std::optional<double> numerical_accuracy_mean;
    std::size_t numerical_count = 0;
    std::map<std::string, std::size_t> terminations;
};

struct AggregateReport {
    std::vector<ConfigurationSummary> configurations;  // first-appearance order
    std::size_t records = 0;
    std::size_t scored = 0;
    std::size_t passed = 0;
    std::optional<double> pass_rate;
};

AggregateReport build_report(const std::vector<EvaluationRecord>& records);
nlohmann::json to_json(const AggregateReport& report);

struct RecordsFile {
    std::vector<EvaluationRecord> records;
    std::size_t skipped = 0;
    std::vector<std::string> warnings;  // "line N: ..."
};

/// Reads a records file; corrupt lines are skipped with a warning.
RecordsFile read_records(const std::string& path);

std::string metric_means_csv(const AggregateReport& report);
std::string pass_rates_csv(const AggregateReport& report);
std::string bands_csv(const AggregateReport& report);

/// Side-by-side per-metric pass rates, one column per (run, configuration).
std::string comparison_csv(const std::vector<std::pair<std::string, AggregateReport>>& runs);

/// report.json plus the three CSV tables under `dir`.
void write_report_files(const AggregateReport& report, const std::string& dir);

// ---------------------------------------------------------------------------
// Runs

struct EvaluationSettings {
    RetrievalConfig retrieval;  // strategy and fusion come from each Configuration
    std::size_t max_iterations = 10;
    std::size_t observation_char_budget = 2000;
    std::map<agent::ProfileName, std::string> system_prompt_overrides;  // profile -> template text
    metrics::MetricSettings metric_settings;
};

struct RunOptions {
    std::size_t workers = 1;
    bool resume = false;
    /// Stop after writing this many new records (interrupt simulation).
    std::optional<std::size_t> stop_after;
    const std::atomic<bool>* cancel = nullptr;
    bool record_timings = false;
    std::function<void(const EvaluationRecord&, std::size_t done, std::size_t total)> on_record;
};

struct RunSummary {
    std::size_t total = 0;     // dataset x configurations
    std::size_t existing = 0;  // already in the file (resume)
    std::size_t written = 0;
    bool interrupted = false;
    std::vector<std::string> warnings;
};

/// Evaluates one QA pair under one configuration. Never throws for
/// per-record failures; they land in error_status.
EvaluationRecord evaluate_pair(const QAPair& qa, const Configuration& config, const IndexSet& index,
                               model::Ports& ports, const EvaluationSettings& settings, bool record_timings = false);

/// Every (configuration, QA pair) in configuration-major order, appended to
/// `records_path` in that order. With `resume`, pairs already recorded are
/// skipped and a torn last line is dropped; otherwise the file is replaced.
RunSummary run_evaluation(const std::vector<QAPair>& dataset, const std::vector<Configuration>& configurations,
                          const IndexSet& index, model::Ports& ports, const EvaluationSettings& settings,
                          const std::string& records_path, const RunOptions& options = {});

}  // namespace ragbench
