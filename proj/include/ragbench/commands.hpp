#pragma once

#include <atomic>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ragbench/config.hpp"
#include "ragbench/dataset.hpp"
#include "ragbench/evaluation.hpp"

namespace ragbench {

struct IngestSummary {
    std::size_t documents = 0;
    std::size_t chunks = 0;
    std::size_t vocabulary = 0;
    std::size_t dimension = 0;
    std::string snapshot_path;
    std::vector<std::string> warnings;
};

/// corpus -> chunks -> indexes -> snapshot file.
IngestSummary cmd_ingest(const RunConfig& config);

struct RunCommandOptions {
    bool resume = false;
    std::optional<std::size_t> stop_after;
    const std::atomic<bool>* cancel = nullptr;
    std::ostream* progress = nullptr;  // one line per record when set
};

struct RunCommandResult {
    RunSummary run;
    AggregateReport report;
    std::string records_path;
    std::vector<std::string> warnings;
};

/// Preflight, then run_evaluation into <output_dir>/records.jsonl and the
/// report files built from that file. Endpoint failures at preflight throw
/// before any output is touched.
RunCommandResult cmd_run(const RunConfig& config, const RunCommandOptions& options = {});

struct ReportCommandResult {
    std::vector<std::pair<std::string, AggregateReport>> reports;  // label, report
    std::size_t skipped = 0;
    std::vector<std::string> warnings;
};

/// Rebuilds reports from records files only. One file: report files under
/// `output_dir`. Several: one subdirectory per run plus comparison.csv.
ReportCommandResult cmd_report(const std::vector<std::string>& records_paths, const std::string& output_dir);

/// Drafts candidates for every corpus document into `out_path`.
DraftResult cmd_dataset_draft(const RunConfig& config, const std::string& out_path);

}  // namespace ragbench
