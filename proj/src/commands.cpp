#include "ragbench/commands.hpp"

#include "ragbench/corpus.hpp"
#include "ragbench/error.hpp"
#include "ragbench/indexing.hpp"
#include "ragbench/text.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace ragbench {

namespace fs = std::filesystem;

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

EvaluationSettings evaluation_settings(const RunConfig& config) {
    EvaluationSettings s;
    s.retrieval = config.retrieval;
    s.max_iterations = config.max_iterations;
    s.observation_char_budget = config.observation_char_budget;
    for (const auto& [profile, path] : config.agent_prompt_paths) s.system_prompt_overrides[profile] = read_text_file(path);
    s.metric_settings = config.metric_settings;
    if (!config.stopwords_path.empty()) s.metric_settings.stopwords = text::load_stopwords(config.stopwords_path);
    return s;
}

}  // namespace

IngestSummary cmd_ingest(const RunConfig& config) {
    config.validate();
    auto ports = model::make_ports(config.models, config.seed);
    try {
        ports.embedder->ping();
    } catch (const ModelError& e) {
        throw ModelError(std::string("embedder endpoint unreachable: ") + e.what());
    }
    auto corpus = load_corpus(config.corpus_dir);
    auto chunks = chunk_corpus(corpus.documents, config.chunking);
    const IndexSet index = build_indexes(std::move(chunks), *ports.embedder, config.bm25, config.embed_batch_size);

    IngestSummary s;
    s.documents = corpus.documents.size();
    s.chunks = index.chunks.size();
    s.vocabulary = index.keywords.vocabulary().size();
    s.dimension = index.vectors.dimension();
    s.snapshot_path = config.snapshot_path();
    s.warnings = std::move(corpus.warnings);
    const auto parent = fs::path(s.snapshot_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    save_snapshot(index, s.snapshot_path);
    return s;
}

RunCommandResult cmd_run(const RunConfig& config, const RunCommandOptions& options) {
    config.validate();
    auto ports = model::make_ports(config.models, config.seed);
    ports.preflight();

    const std::string snapshot = config.snapshot_path();
    if (!fs::exists(snapshot)) throw ConfigError("index snapshot " + snapshot + " not found; run 'ragbench ingest' first");
    const IndexSet index = load_snapshot(snapshot);
    if (index.embedder_model != ports.embedder->model_name()) {
        throw ConfigError("index snapshot was built with embedder '" + index.embedder_model + "' but '" +
                          ports.embedder->model_name() + "' is configured; re-run ingest");
    }
    const auto dataset = load_dataset(config.dataset_path, config.allow_drafts);
    const EvaluationSettings settings = evaluation_settings(config);

    std::string model = ports.generator->model_name();
    if (model.empty()) model = "default";
    std::vector<Configuration> configurations = config.configurations;
    for (auto& c : configurations) c.model = model;

    RunCommandResult result;
    result.records_path = config.records_path();

    RunOptions ro;
    ro.workers = config.workers;
    ro.resume = options.resume;
    ro.stop_after = options.stop_after;
    ro.cancel = options.cancel;
    ro.record_timings = config.record_timings;
    if (options.progress) {
        ro.on_record = [out = options.progress](const EvaluationRecord& r, std::size_t done, std::size_t total) {
            *out << "[" << done << "/" << total << "] " << r.configuration_id << " " << r.qa_id << ": "
                 << (r.verdict ? to_string(*r.verdict) : std::string("error")) << '\n';
        };
    }
    result.run = run_evaluation(dataset, configurations, index, ports, settings, result.records_path, ro);
    result.warnings = result.run.warnings;

    auto file = read_records(result.records_path);
    for (auto& w : file.warnings) result.warnings.push_back(std::move(w));
    result.report = build_report(file.records);
    write_report_files(result.report, config.output_dir);
    return result;
}

ReportCommandResult cmd_report(const std::vector<std::string>& records_paths, const std::string& output_dir) {
    if (records_paths.empty()) throw ConfigError("report: no records files given");
    ReportCommandResult result;
    std::set<std::string> labels;
    for (const auto& path : records_paths) {
        auto file = read_records(path);
        result.skipped += file.skipped;
        for (const auto& w : file.warnings) result.warnings.push_back(path + ": " + w);
        std::string label = fs::absolute(path).parent_path().filename().string();
        if (label.empty()) label = "run";
        const std::string base = label;
        for (int n = 2; !labels.insert(label).second; ++n) label = base + "-" + std::to_string(n);
        result.reports.emplace_back(label, build_report(file.records));
    }
    if (result.reports.size() == 1) {
        write_report_files(result.reports.front().second, output_dir);
        return result;
    }
    for (const auto& [label, report] : result.reports) write_report_files(report, (fs::path(output_dir) / label).string());
    std::ofstream out(fs::path(output_dir) / "comparison.csv", std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write comparison.csv in " + output_dir);
    out << comparison_csv(result.reports);
    return result;
}

DraftResult cmd_dataset_draft(const RunConfig& config, const std::string& out_path) {
    auto ports = model::make_ports(config.models, config.seed);
    try {
        ports.generator->ping();
    } catch (const ModelError& e) {
        throw ModelError(std::string("generator endpoint unreachable: ") + e.what());
    }
    const auto corpus = load_corpus(config.corpus_dir);
    auto result = draft_qa_candidates(corpus.documents, *ports.generator, config.draft);
    for (const auto& w : corpus.warnings) result.warnings.insert(result.warnings.begin(), w);
    const auto parent = fs::path(out_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    write_dataset(out_path, result.drafts);
    return result;
}

}  // namespace ragbench
