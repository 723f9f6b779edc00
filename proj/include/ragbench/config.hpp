#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ragbench/corpus.hpp"
#include "ragbench/dataset.hpp"
#include "ragbench/evaluation.hpp"
#include "ragbench/indexing.hpp"
#include "ragbench/metrics.hpp"
#include "ragbench/modelgw.hpp"
#include "ragbench/retrieval.hpp"

namespace ragbench {

/// Everything a command needs. Paths are absolute or relative to the
/// directory of the config file they came from.
struct RunConfig {
    std::string corpus_dir = "corpus";
    std::string dataset_path = "dataset.jsonl";
    std::string index_snapshot_path;  // default: <output_dir>/index.json
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    bool allow_drafts = false;
    bool record_timings = false;

    ChunkingParams chunking;
    BM25Params bm25;
    std::size_t embed_batch_size = 32;

    RetrievalConfig retrieval;
    std::vector<Configuration> configurations;  // model filled in at run time

    std::size_t max_iterations = 10;
    std::size_t observation_char_budget = 2000;
    std::map<agent::ProfileName, std::string> agent_prompt_paths;

    model::PortConfigs models;
    metrics::MetricSettings metric_settings;
    std::string stopwords_path;

    DraftOptions draft;

    std::string snapshot_path() const;
    std::string records_path() const;
    /// Ranges, at least one configuration, endpoint sanity.
    void validate() const;
};

/// Built-in defaults as a config document (what `ragbench config` prints).
nlohmann::json default_config_json();

/// Builds a RunConfig from a config document. Unknown keys are errors.
/// Relative paths are resolved against `base_dir`.
RunConfig parse_config(const nlohmann::json& doc, const std::string& base_dir);

/// "a.b.c=value": value is taken as JSON when it parses, else as a string.
void apply_assignment(nlohmann::json& doc, std::string_view assignment);

/// RAGBENCH_{EMBEDDER,RERANKER,GENERATOR,JUDGE}_URL override base_url of
/// the matching endpoint. A judge URL without a judge section copies the
/// generator endpoint first.
void apply_env_overrides(RunConfig& config);

/// Reads `path` (empty: defaults, relative to the working directory),
/// applies assignments in order, then the environment.
RunConfig load_config(const std::string& path, const std::vector<std::string>& assignments = {});

}  // namespace ragbench
