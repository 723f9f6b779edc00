#include "ragbench/evaluation.hpp"

#include "ragbench/error.hpp"
#include "ragbench/text.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace ragbench {

using nlohmann::json;
using metrics::MetricId;
using metrics::MetricScore;

std::string Configuration::id() const {
    std::string s = to_string(strategy);
    if (strategy == Strategy::hybrid) s += "-" + to_string(fusion_mode);
    return s + "/" + agent::to_string(profile) + "/" + model;
}

std::string to_string(Verdict v) { return v == Verdict::pass ? "pass" : "fail"; }

std::string to_string(Band b) {
    switch (b) {
        case Band::excellent: return "excellent";
        case Band::good: return "good";
        case Band::fair: return "fair";
        case Band::poor: return "poor";
    }
    return "poor";
}

Band classify_standard_band(double v) {
    if (v > 0.8) return Band::excellent;
    if (v >= 0.6) return Band::good;
    if (v >= 0.4) return Band::fair;
    return Band::poor;
}

Band classify_band(MetricId id, double v) {
    if (id != MetricId::semantic_f1) return classify_standard_band(v);
    if (v > 0.7) return Band::excellent;
    if (v >= 0.5) return Band::good;
    if (v >= 0.2) return Band::fair;
    return Band::poor;
}

double aggregate_score(const std::map<MetricId, double>& values) {
    double sum = 0.0;
    for (const auto& s : metrics::metric_specs()) {
        auto it = values.find(s.id);
        if (it == values.end()) throw Error("aggregate_score: missing metric " + std::string(s.name));
        if (!(it->second >= 0.0 && it->second <= 1.0)) {
            throw Error("aggregate_score: " + std::string(s.name) + " value outside [0, 1]");
        }
        sum += s.weight * it->second;
    }
    return sum;
}

Verdict verdict(const std::map<MetricId, MetricScore>& scores) {
    std::size_t passed = 0;
    for (const auto& s : metrics::metric_specs()) {
        if (!s.primary) continue;
        auto it = scores.find(s.id);
        if (it == scores.end()) throw Error("verdict: missing metric " + std::string(s.name));
        if (it->second.passed && !it->second.failed) ++passed;
    }
    return passed >= kPrimaryPassesRequired ? Verdict::pass : Verdict::fail;
}

// ---------------------------------------------------------------------------
// JSON

json trace_to_json(const agent::AgentTrace& t) {
    json steps = json::array();
    for (const auto& s : t.steps) {
        json step = {{"thought", s.thought}};
        step["action"] = s.action ? json{{"tool", s.action->tool_name}, {"input", s.action->tool_input}} : json(nullptr);
        step["observation"] = s.observation ? json(*s.observation) : json(nullptr);
        step["confidence"] = s.confidence ? json(*s.confidence) : json(nullptr);
        steps.push_back(std::move(step));
    }
    json retrievals = json::array();
    for (const auto& r : t.retrievals) {
        json chunks = json::array();
        for (const auto& c : r.chunks) {
            chunks.push_back({{"chunk_id", c.scored.chunk_id},
                              {"doc_id", c.doc_id},
                              {"score", c.scored.score},
                              {"source", to_string(c.scored.source)}});
        }
        retrievals.push_back({{"query", r.query},
                              {"strategy", to_string(r.strategy)},
                              {"candidate_count", r.candidate_count},
                              {"fusion_fallback", r.fusion_fallback},
                              {"chunks", chunks}});
    }
    return {{"profile", t.profile},
            {"terminated_by", agent::to_string(t.terminated_by)},
            {"iterations_used", t.iterations_used},
            {"error", t.error ? json(*t.error) : json(nullptr)},
            {"warnings", t.warnings},
            {"steps", steps},
            {"retrievals", retrievals}};
}

json to_json(const EvaluationRecord& r) {
    json j = {{"qa_id", r.qa_id},
              {"configuration_id", r.configuration_id},
              {"strategy", r.strategy},
              {"profile", r.profile},
              {"model", r.model},
              {"question", r.question},
              {"ground_truth", r.ground_truth},
              {"response", r.response}};
    if (!r.fusion_mode.empty()) j["fusion_mode"] = r.fusion_mode;
    json ms = json::object();
    for (const auto& [id, s] : r.metric_scores) {
        json m = {{"value", s.failed ? json(nullptr) : json(s.value)},
                  {"threshold", s.threshold},
                  {"passed", s.passed},
                  {"failed", s.failed},
                  {"evidence", s.evidence}};
        if (!s.failed) m["band"] = to_string(classify_band(id, s.value));
        ms[metrics::to_string(id)] = std::move(m);
    }
    j["metrics"] = std::move(ms);
    j["numerical_accuracy"] = r.numerical_accuracy ? json(*r.numerical_accuracy) : json(nullptr);
    j["aggregate_score"] = r.aggregate_score ? json(*r.aggregate_score) : json(nullptr);
    j["verdict"] = r.verdict ? json(to_string(*r.verdict)) : json(nullptr);
    j["error_status"] = r.error_status ? json(*r.error_status) : json(nullptr);
    j["agent_trace"] = r.agent_trace;
    if (r.timings) j["timings"] = *r.timings;
    return j;
}

EvaluationRecord record_from_json(const json& j) {
    if (!j.is_object()) throw Error("record is not a JSON object");
    const auto str = [&](const char* key, bool required) {
        if (!j.contains(key)) {
            if (required) throw Error(std::string("record lacks '") + key + "'");
            return std::string{};
        }
        if (!j[key].is_string()) throw Error(std::string("record field '") + key + "' is not a string");
        return j[key].get<std::string>();
    };
    const auto opt_number = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key) || j[key].is_null()) return std::nullopt;
        if (!j[key].is_number()) throw Error(std::string("record field '") + key + "' is not a number");
        return j[key].get<double>();
    };
    EvaluationRecord r;
    r.qa_id = str("qa_id", true);
    r.configuration_id = str("configuration_id", true);
    r.strategy = str("strategy", false);
    r.fusion_mode = str("fusion_mode", false);
    r.profile = str("profile", false);
    r.model = str("model", false);
    r.question = str("question", false);
    r.ground_truth = str("ground_truth", false);
    r.response = str("response", false);
    if (j.contains("agent_trace")) r.agent_trace = j["agent_trace"];
    if (j.contains("metrics")) {
        if (!j["metrics"].is_object()) throw Error("record field 'metrics' is not an object");
        for (const auto& [name, m] : j["metrics"].items()) {
            MetricScore s;
            try {
                s.id = metrics::metric_from_string(name);
            } catch (const ConfigError& e) {
                throw Error(e.what());
            }
            s.failed = m.value("failed", false);
            if (!s.failed) {
                if (!m.contains("value") || !m["value"].is_number()) throw Error("metric " + name + " has no value");
                s.value = m["value"].get<double>();
            }
            s.threshold = m.value("threshold", metrics::spec(s.id).threshold);
            s.passed = m.value("passed", false);
            if (m.contains("evidence")) s.evidence = m["evidence"];
            r.metric_scores[s.id] = std::move(s);
        }
    }
    r.numerical_accuracy = opt_number("numerical_accuracy");
    r.aggregate_score = opt_number("aggregate_score");
    if (j.contains("verdict") && !j["verdict"].is_null()) {
        const std::string v = j["verdict"].get<std::string>();
        if (v != "pass" && v != "fail") throw Error("record verdict '" + v + "' is invalid");
        r.verdict = v == "pass" ? Verdict::pass : Verdict::fail;
    }
    if (j.contains("error_status") && j["error_status"].is_string()) r.error_status = j["error_status"].get<std::string>();
    if (j.contains("timings")) r.timings = j["timings"];
    return r;
}

// ---------------------------------------------------------------------------
// Per-record evaluation

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

}  // namespace

EvaluationRecord evaluate_pair(const QAPair& qa, const Configuration& config, const IndexSet& index,
                               model::Ports& ports, const EvaluationSettings& settings, bool record_timings) {
    EvaluationRecord rec;
    rec.qa_id = qa.qa_id;
    rec.configuration_id = config.id();
    rec.strategy = to_string(config.strategy);
    if (config.strategy == Strategy::hybrid) rec.fusion_mode = to_string(config.fusion_mode);
    rec.profile = agent::to_string(config.profile);
    rec.model = config.model;
    rec.question = qa.question;
    rec.ground_truth = qa.ground_truth;
    json timings = json::object();

    agent::AgentTrace trace;
    const auto gen_start = Clock::now();
    try {
        auto profile = agent::AgentProfile::for_name(config.profile);
        profile.max_iterations = settings.max_iterations;
        profile.observation_char_budget = settings.observation_char_budget;
        if (auto it = settings.system_prompt_overrides.find(config.profile); it != settings.system_prompt_overrides.end()) {
            profile.system_prompt_template = it->second;
        }
        RetrievalConfig rc = settings.retrieval;
        rc.strategy = config.strategy;
        rc.fusion_mode = config.fusion_mode;
        Retriever retriever(index, *ports.embedder, ports.reranker.get(), rc);
        trace = agent::run_agent(qa.question, profile, retriever, *ports.generator);
    } catch (const std::exception& e) {
        rec.error_status = std::string("generation failed: ") + e.what();
        if (record_timings) rec.timings = json{{"generation_ms", ms_since(gen_start)}};
        return rec;
    }
    if (record_timings) {
        timings["generation_ms"] = ms_since(gen_start);
        json rt = json::array();
        for (const auto& r : trace.retrievals) rt.push_back(static_cast<double>(r.timing.count()) / 1000.0);
        timings["retrieval_ms"] = rt;
    }
    rec.agent_trace = trace_to_json(trace);
    if (trace.terminated_by == agent::Termination::error) {
        rec.error_status = "generation failed: " + trace.error.value_or("unknown error");
        if (record_timings) rec.timings = timings;
        return rec;
    }
    rec.response = trace.final_answer;

    metrics::MetricInputs in;
    in.question = qa.question;
    in.response = rec.response;
    in.ground_truth = qa.ground_truth;
    std::set<std::string> seen;
    for (const auto& r : trace.retrievals) {
        for (const auto& c : r.chunks) {
            if (seen.insert(c.scored.chunk_id).second) in.context_chunks.push_back(c.text);
        }
    }

    const auto metric_start = Clock::now();
    try {
        metrics::Evaluator evaluator(*ports.judge, *ports.embedder, settings.metric_settings);
        rec.metric_scores = evaluator.score_all(in);
    } catch (const std::exception& e) {
        rec.error_status = std::string("metric evaluation failed: ") + e.what();
        if (record_timings) rec.timings = timings;
        return rec;
    }
    if (record_timings) {
        timings["metrics_ms"] = ms_since(metric_start);
        rec.timings = timings;
    }
    rec.numerical_accuracy = metrics::numerical_accuracy(rec.response, qa.ground_truth);

    std::string failed;
    std::map<MetricId, double> values;
    for (const auto& [id, s] : rec.metric_scores) {
        if (s.failed) failed += (failed.empty() ? "" : ", ") + metrics::to_string(id);
        values[id] = s.value;
    }
    if (!failed.empty()) {
        rec.error_status = "metric evaluation failed: " + failed;
        return rec;
    }
    rec.aggregate_score = aggregate_score(values);
    rec.verdict = verdict(rec.metric_scores);
    return rec;
}

// ---------------------------------------------------------------------------
// Runs

namespace {

using Key = std::pair<std::string, std::string>;  // (qa_id, configuration_id)

/// Keys already present; drops a torn or corrupt tail so appends start on a
/// fresh line.
std::set<Key> recover_existing(const std::string& path, std::vector<std::string>& warnings) {
    std::set<Key> keys;
    std::ifstream in(path, std::ios::binary);
    if (!in) return keys;
    std::ostringstream ss;
    ss << in.rdbuf();
    in.close();
    const std::string content = ss.str();

    std::size_t pos = 0;
    std::size_t good_end = 0;
    std::size_t lineno = 0;
    while (pos < content.size()) {
        const auto nl = content.find('\n', pos);
        ++lineno;
        if (nl == std::string::npos) {
            warnings.push_back("records line " + std::to_string(lineno) + ": incomplete last line dropped");
            break;
        }
        const std::string line = content.substr(pos, nl - pos);
        pos = nl + 1;
        if (text::trim(line).empty()) {
            good_end = pos;
            continue;
        }
        try {
            auto r = record_from_json(json::parse(line));
            keys.emplace(r.qa_id, r.configuration_id);
        } catch (const std::exception& e) {
            warnings.push_back("records line " + std::to_string(lineno) + ": unreadable, will be recomputed (" +
                               e.what() + ")");
        }
        good_end = pos;
    }
    if (good_end < content.size()) std::filesystem::resize_file(path, good_end);
    return keys;
}

struct Task {
    const QAPair* qa;
    const Configuration* config;
};

}  // namespace

RunSummary run_evaluation(const std::vector<QAPair>& dataset, const std::vector<Configuration>& configurations,
                          const IndexSet& index, model::Ports& ports, const EvaluationSettings& settings,
                          const std::string& records_path, const RunOptions& options) {
    if (configurations.empty()) throw ConfigError("no configurations to evaluate");
    if (options.workers < 1) throw ConfigError("workers must be at least 1");
    std::set<std::string> ids;
    for (const auto& c : configurations) {
        if (!ids.insert(c.id()).second) throw ConfigError("duplicate configuration " + c.id());
    }
    settings.retrieval.validate();
    settings.metric_settings.validate();

    RunSummary summary;
    summary.total = dataset.size() * configurations.size();

    std::set<Key> done;
    if (options.resume) done = recover_existing(records_path, summary.warnings);

    std::vector<Task> pending;
    for (const auto& c : configurations) {
        for (const auto& qa : dataset) {
            if (done.contains({qa.qa_id, c.id()})) {
                ++summary.existing;
            } else {
                pending.push_back({&qa, &c});
            }
        }
    }

    const auto parent = std::filesystem::path(records_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(records_path, std::ios::binary | (options.resume ? std::ios::app : std::ios::trunc));
    if (!out) throw Error("cannot open records file " + records_path);

    const std::size_t limit = std::min(pending.size(), options.stop_after.value_or(pending.size()));
    std::vector<std::optional<EvaluationRecord>> results(limit);
    std::size_t next_task = 0;
    std::size_t next_write = 0;
    std::mutex mu;
    std::string write_error;

    const auto cancelled = [&] { return options.cancel && options.cancel->load(); };

    const auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard lock(mu);
                if (next_task >= limit || cancelled() || !write_error.empty()) return;
                i = next_task++;
            }
            auto rec = evaluate_pair(*pending[i].qa, *pending[i].config, index, ports, settings,
                                     options.record_timings);
            std::lock_guard lock(mu);
            results[i] = std::move(rec);
            // Single appender: records leave in task order whatever order they finish in.
            while (next_write < limit && results[next_write]) {
                out << to_json(*results[next_write]).dump() << '\n';
                out.flush();
                if (!out) {
                    write_error = "write failed for " + records_path;
                    return;
                }
                ++summary.written;
                if (options.on_record) {
                    options.on_record(*results[next_write], summary.existing + summary.written, summary.total);
                }
                results[next_write].reset();
                ++next_write;
            }
        }
    };

    const std::size_t n = std::min(options.workers, std::max<std::size_t>(limit, 1));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (!write_error.empty()) throw Error(write_error);

    summary.interrupted = summary.written < pending.size();
    return summary;
}

}  // namespace ragbench
