// ragbench: ingest a corpus, run agentic RAG evaluations, rebuild reports.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ragbench/commands.hpp"
#include "ragbench/config.hpp"
#include "ragbench/dataset.hpp"
#include "ragbench/error.hpp"

namespace fs = std::filesystem;
using namespace ragbench;

namespace {

std::atomic<bool> g_cancel{false};

extern "C" void on_sigint(int) { g_cancel.store(true); }

enum Exit { ok = 0, failure = 1, usage = 2, invalid_dataset = 3, interrupted = 130 };

struct Globals {
    std::string config_path;
    std::vector<std::string> sets;
};

/// Flags become assignments applied after the file; paths are made
/// absolute so they stay relative to the working directory.
void add_path(std::vector<std::string>& sets, const char* key, const std::string& value) {
    if (value.empty()) return;
    sets.push_back(std::string(key) + "=" + nlohmann::json(fs::absolute(value).lexically_normal().string()).dump());
}

void add_value(std::vector<std::string>& sets, const char* key, const std::string& json_value) {
    sets.push_back(std::string(key) + "=" + json_value);
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

std::string pct(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", *v * 100.0);
    return buf;
}

std::string fixed(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", *v);
    return buf;
}

void print_report(const AggregateReport& report) {
    for (const auto& c : report.configurations) {
        std::cout << "  " << c.configuration_id << ": " << c.passed << "/" << c.scored << " passed ("
                  << pct(c.pass_rate) << "), mean score " << fixed(c.mean_aggregate) << " (sd "
                  << fixed(c.std_aggregate) << ")";
        if (c.generation_errors + c.metric_failures > 0) {
            std::cout << ", " << c.generation_errors << " generation errors, " << c.metric_failures
                      << " failed metric evaluations";
        }
        std::cout << '\n';
    }
    std::cout << "overall: " << report.passed << "/" << report.scored << " passed (" << pct(report.pass_rate) << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Benchmark harness for agentic retrieval-augmented generation"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("-c,--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--set", g.sets, "Override a config value: key.path=value (repeatable)");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Chunk the corpus, embed it and write the index snapshot");
    std::string corpus, snapshot, output_dir;
    std::optional<std::uint64_t> seed;
    ingest->add_option("--corpus", corpus, "Corpus directory");
    ingest->add_option("--snapshot", snapshot, "Snapshot file to write");
    ingest->add_option("--output-dir", output_dir, "Output directory");
    ingest->add_option("--seed", seed, "Mock backend salt");

    // run
    auto* run = app.add_subcommand("run", "Evaluate every configuration over the dataset");
    std::string dataset;
    std::optional<std::size_t> workers, stop_after;
    bool resume = false, quiet = false;
    run->add_option("--dataset", dataset, "QA dataset (JSON lines)");
    run->add_option("--snapshot", snapshot, "Index snapshot to load");
    run->add_option("--output-dir", output_dir, "Output directory");
    run->add_option("--workers", workers, "Parallel QA pairs")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "Mock backend salt");
    run->add_flag("--resume", resume, "Keep existing records and compute only the missing ones");
    run->add_option("--stop-after", stop_after, "Stop after this many new records")->group("");
    run->add_flag("-q,--quiet", quiet, "No per-record progress");

    // report
    auto* report = app.add_subcommand("report", "Rebuild report files from records files");
    std::vector<std::string> records;
    std::string report_out;
    report->add_option("records", records, "records.jsonl files")->required()->check(CLI::ExistingFile);
    report->add_option("-o,--output-dir", report_out,
                       "Where to write (default: next to a single records file, ./comparison for several)");

    // dataset
    auto* ds = app.add_subcommand("dataset", "Dataset tools");
    ds->require_subcommand(1);
    auto* validate = ds->add_subcommand("validate", "Check a dataset file");
    std::string validate_path;
    validate->add_option("path", validate_path, "Dataset file (default: dataset_path from the config)");
    auto* draft = ds->add_subcommand("draft", "Ask the generator for candidate QA pairs");
    std::string draft_out = "drafts.jsonl";
    std::optional<std::size_t> per_doc;
    bool pairwise = false;
    draft->add_option("--corpus", corpus, "Corpus directory");
    draft->add_option("-o,--out", draft_out, "Output file");
    draft->add_option("--per-doc", per_doc, "Questions requested per prompt")->check(CLI::PositiveNumber);
    draft->add_flag("--pairwise", pairwise, "Also prompt for document pairs");

    // config
    auto* config_cmd = app.add_subcommand("config", "Print the effective configuration as JSON");
    bool defaults_only = false;
    config_cmd->add_flag("--defaults", defaults_only, "Print the built-in defaults instead");

    CLI11_PARSE(app, argc, argv);

    try {
        std::vector<std::string> sets = g.sets;
        add_path(sets, "corpus_dir", corpus);
        add_path(sets, "index_snapshot_path", snapshot);
        add_path(sets, "output_dir", output_dir);
        add_path(sets, "dataset_path", dataset);
        if (seed) add_value(sets, "seed", std::to_string(*seed));
        if (workers) add_value(sets, "workers", std::to_string(*workers));
        if (per_doc) add_value(sets, "draft.per_doc_count", std::to_string(*per_doc));
        if (pairwise) add_value(sets, "draft.pairwise", "true");

        if (*config_cmd) {
            if (defaults_only) {
                std::cout << default_config_json().dump(2) << '\n';
                return ok;
            }
            const RunConfig c = load_config(g.config_path, sets);
            std::cout << "corpus_dir: " << c.corpus_dir << "\ndataset_path: " << c.dataset_path
                      << "\nindex_snapshot_path: " << c.snapshot_path() << "\noutput_dir: " << c.output_dir
                      << "\nconfigurations:";
            for (const auto& cfg : c.configurations) std::cout << ' ' << cfg.id();
            std::cout << "\ngenerator: " << c.models.generator.backend << ' ' << c.models.generator.base_url
                      << "\njudge: " << (c.models.judge ? c.models.judge->backend + " " + c.models.judge->base_url
                                                        : std::string("same as generator"))
                      << '\n';
            return ok;
        }

        if (*ingest) {
            const RunConfig c = load_config(g.config_path, sets);
            const auto s = cmd_ingest(c);
            print_warnings(s.warnings);
            std::cout << "ingested " << s.documents << " documents into " << s.chunks << " chunks (vocabulary "
                      << s.vocabulary << ", dimension " << s.dimension << ")\nsnapshot: " << s.snapshot_path << '\n';
            return ok;
        }

        if (*run) {
            const RunConfig c = load_config(g.config_path, sets);
            std::signal(SIGINT, on_sigint);
            RunCommandOptions o;
            o.resume = resume;
            o.stop_after = stop_after;
            o.cancel = &g_cancel;
            if (!quiet) o.progress = &std::cout;
            const auto r = cmd_run(c, o);
            print_warnings(r.warnings);
            std::cout << "records: " << r.records_path << " (" << r.run.written << " new, " << r.run.existing
                      << " kept)\n";
            print_report(r.report);
            if (r.run.interrupted) {
                std::cerr << "run stopped early; continue with --resume\n";
                return g_cancel.load() ? interrupted : ok;
            }
            return ok;
        }

        if (*report) {
            std::string out = report_out;
            if (out.empty()) {
                out = records.size() == 1 ? fs::absolute(records.front()).parent_path().string() : "comparison";
            }
            const auto r = cmd_report(records, out);
            print_warnings(r.warnings);
            if (r.skipped > 0) std::cerr << "skipped " << r.skipped << " corrupt line(s)\n";
            for (const auto& [label, rep] : r.reports) {
                std::cout << label << ":\n";
                print_report(rep);
            }
            std::cout << "written to " << out << '\n';
            return ok;
        }

        if (*validate) {
            std::string path = validate_path;
            if (path.empty()) path = load_config(g.config_path, sets).dataset_path;
            const auto v = validate_dataset(path);
            std::cout << v.format();
            std::cout << path << ": " << v.records << " records, " << v.error_count() << " errors, "
                      << v.warning_count() << " warnings -> " << (v.accepted() ? "accepted" : "rejected") << '\n';
            return v.accepted() ? ok : invalid_dataset;
        }

        if (*draft) {
            const RunConfig c = load_config(g.config_path, sets);
            const auto r = cmd_dataset_draft(c, draft_out);
            print_warnings(r.warnings);
            std::cout << r.drafts.size() << " draft pairs written to " << draft_out
                      << " (marked draft; review before use)\n";
            return ok;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    } catch (const DatasetError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return invalid_dataset;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return failure;
    }
    return ok;
}
