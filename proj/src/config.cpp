#include "ragbench/config.hpp"

#include "ragbench/error.hpp"
#include "ragbench/text.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace ragbench {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json endpoint_json(const model::EndpointConfig& e) {
    return {{"backend", e.backend},
            {"base_url", e.base_url},
            {"path", e.path},
            {"model", e.model_name},
            {"temperature", e.temperature},
            {"timeout_ms", e.timeout.count()},
            {"max_retries", e.max_retries},
            {"max_in_flight", e.max_in_flight},
            {"mock_mode", e.mock_mode},
            {"mock_dimension", e.mock_dimension},
            {"mock_replies", e.mock_replies}};
}

/// Typed access to one JSON object with strict key checking.
class Section {
public:
    Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError("config: '" + where_ + "' must be an object");
    }

    void allow(std::initializer_list<const char*> keys) const {
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& [k, _] : j_.items()) {
            if (!ok.contains(k)) throw ConfigError("config: unknown key '" + name(k) + "'");
        }
    }

    bool has(const char* k) const { return j_.contains(k) && !j_[k].is_null(); }

    std::string str(const char* k, std::string def) const {
        if (!has(k)) return def;
        if (!j_[k].is_string()) throw ConfigError("config: '" + name(k) + "' must be a string");
        return j_[k].get<std::string>();
    }

    double real(const char* k, double def) const {
        if (!has(k)) return def;
        if (!j_[k].is_number()) throw ConfigError("config: '" + name(k) + "' must be a number");
        return j_[k].get<double>();
    }

    std::size_t count(const char* k, std::size_t def) const {
        if (!has(k)) return def;
        if (!j_[k].is_number_integer() || j_[k].get<long long>() < 0) {
            throw ConfigError("config: '" + name(k) + "' must be a non-negative integer");
        }
        return j_[k].get<std::size_t>();
    }

    bool flag(const char* k, bool def) const {
        if (!has(k)) return def;
        if (!j_[k].is_boolean()) throw ConfigError("config: '" + name(k) + "' must be true or false");
        return j_[k].get<bool>();
    }

    Section sub(const char* k) const { return Section(has(k) ? j_[k] : empty(), name(k)); }
    const json& raw(const char* k) const { return j_[k]; }
    const json& self() const { return j_; }
    std::string name(const std::string& k) const { return where_.empty() ? k : where_ + "." + k; }

private:
    static const json& empty() {
        static const json e = json::object();
        return e;
    }
    const json& j_;
    std::string where_;
};

std::string resolve(const std::string& base, const std::string& p) {
    if (p.empty()) return p;
    const fs::path path(p);
    if (path.is_absolute() || base.empty()) return path.lexically_normal().string();
    return (fs::path(base) / path).lexically_normal().string();
}

model::EndpointConfig parse_endpoint(const Section& s, model::EndpointConfig e) {
    s.allow({"backend", "base_url", "path", "model", "temperature", "timeout_ms", "max_retries", "max_in_flight",
             "mock_mode", "mock_dimension", "mock_replies"});
    e.backend = s.str("backend", e.backend);
    e.base_url = s.str("base_url", e.base_url);
    e.path = s.str("path", e.path);
    e.model_name = s.str("model", e.model_name);
    e.temperature = s.real("temperature", e.temperature);
    e.timeout = std::chrono::milliseconds(static_cast<long long>(s.count("timeout_ms", e.timeout.count())));
    e.max_retries = static_cast<int>(s.count("max_retries", e.max_retries));
    e.max_in_flight = static_cast<int>(s.count("max_in_flight", e.max_in_flight));
    e.mock_mode = s.str("mock_mode", e.mock_mode);
    e.mock_dimension = s.count("mock_dimension", e.mock_dimension);
    if (s.has("mock_replies")) {
        const auto& r = s.raw("mock_replies");
        if (!r.is_array() || !std::all_of(r.begin(), r.end(), [](auto& v) { return v.is_string(); })) {
            throw ConfigError("config: '" + s.name("mock_replies") + "' must be an array of strings");
        }
        e.mock_replies = r.get<std::vector<std::string>>();
    }
    return e;
}

const std::map<std::string, std::string> kMetricPromptKeys = {
    {"truthfulness", "judge_truthfulness"},
    {"completeness", "judge_completeness"},
    {"context_faithfulness", "judge_context_faithfulness"},
    {"answer_relevance", "judge_answer_relevance"},
    {"source_relevance", "judge_source_relevance"},
    {"extract_points", "extract_points"},
    {"coverage", "coverage"},
};

std::vector<Configuration> default_configurations() {
    std::vector<Configuration> out;
    for (auto profile : {agent::ProfileName::react_base, agent::ProfileName::react_custom}) {
        for (auto strategy : {Strategy::naive, Strategy::rerank, Strategy::hybrid}) {
            Configuration c;
            c.strategy = strategy;
            c.profile = profile;
            out.push_back(c);
        }
    }
    return out;
}

}  // namespace

std::string RunConfig::snapshot_path() const {
    return index_snapshot_path.empty() ? (fs::path(output_dir) / "index.json").string() : index_snapshot_path;
}

std::string RunConfig::records_path() const { return (fs::path(output_dir) / "records.jsonl").string(); }

void RunConfig::validate() const {
    if (chunking.chunk_size == 0) throw ConfigError("config: chunking.chunk_size must be positive");
    if (chunking.overlap >= chunking.chunk_size) throw ConfigError("config: chunking.overlap must be below chunk_size");
    if (!(bm25.k1 >= 0.0)) throw ConfigError("config: bm25.k1 must be >= 0");
    if (!(bm25.b >= 0.0 && bm25.b <= 1.0)) throw ConfigError("config: bm25.b must be in [0, 1]");
    if (embed_batch_size < 1) throw ConfigError("config: embed_batch_size must be at least 1");
    if (workers < 1) throw ConfigError("config: workers must be at least 1");
    if (max_iterations < 1) throw ConfigError("config: agent.max_iterations must be at least 1");
    if (configurations.empty()) throw ConfigError("config: at least one configuration is required");
    retrieval.validate();
    metric_settings.validate();
    model::validate(models.embedder, "embedder");
    model::validate(models.reranker, "reranker");
    model::validate(models.generator, "generator");
    if (models.judge) model::validate(*models.judge, "judge");
    if (models.embedder.backend == "llm") throw ConfigError("embedder: backend 'llm' is only valid for the reranker");
    if (models.generator.backend == "llm") throw ConfigError("generator: backend 'llm' is only valid for the reranker");
}

json default_config_json() {
    RunConfig d;
    json configs = json::array();
    for (const auto& c : default_configurations()) {
        json item = {{"strategy", to_string(c.strategy)}, {"agent_profile", agent::to_string(c.profile)}};
        if (c.strategy == Strategy::hybrid) item["fusion_mode"] = to_string(c.fusion_mode);
        configs.push_back(item);
    }
    return {{"corpus_dir", d.corpus_dir},
            {"dataset_path", d.dataset_path},
            {"index_snapshot_path", d.index_snapshot_path},
            {"output_dir", d.output_dir},
            {"seed", d.seed},
            {"workers", d.workers},
            {"allow_drafts", d.allow_drafts},
            {"record_timings", d.record_timings},
            {"chunking", {{"chunk_size", d.chunking.chunk_size}, {"overlap", d.chunking.overlap}}},
            {"bm25", {{"k1", d.bm25.k1}, {"b", d.bm25.b}}},
            {"embed_batch_size", d.embed_batch_size},
            {"retrieval",
             {{"top_k_final", d.retrieval.top_k_final},
              {"candidate_k", d.retrieval.candidate_k},
              {"rerank_batch_size", d.retrieval.rerank_batch_size}}},
            {"configurations", configs},
            {"agent",
             {{"max_iterations", d.max_iterations},
              {"observation_char_budget", d.observation_char_budget},
              {"prompts", json::object()}}},
            {"models",
             {{"embedder", endpoint_json(d.models.embedder)},
              {"reranker", endpoint_json(d.models.reranker)},
              {"generator", endpoint_json(d.models.generator)}}},
            {"metrics",
             {{"thresholds", json::object()},
              {"match_threshold", d.metric_settings.match_threshold},
              {"relevance_blend", d.metric_settings.relevance_blend},
              {"max_points", d.metric_settings.max_points},
              {"context_char_budget", d.metric_settings.context_char_budget},
              {"parallel", d.metric_settings.parallel},
              {"stopwords_path", ""},
              {"prompts", json::object()}}},
            {"draft",
             {{"per_doc_count", d.draft.per_doc_count},
              {"pairwise", d.draft.pairwise},
              {"max_pairs", d.draft.max_pairs}}}};
}

RunConfig parse_config(const json& doc, const std::string& base_dir) {
    const Section root(doc, "");
    root.allow({"corpus_dir", "dataset_path", "index_snapshot_path", "output_dir", "seed", "workers", "allow_drafts",
                "record_timings", "chunking", "bm25", "embed_batch_size", "retrieval", "configurations", "agent",
                "models", "metrics", "draft"});
    RunConfig c;
    c.corpus_dir = resolve(base_dir, root.str("corpus_dir", c.corpus_dir));
    c.dataset_path = resolve(base_dir, root.str("dataset_path", c.dataset_path));
    c.index_snapshot_path = resolve(base_dir, root.str("index_snapshot_path", c.index_snapshot_path));
    c.output_dir = resolve(base_dir, root.str("output_dir", c.output_dir));
    c.seed = root.count("seed", c.seed);
    c.workers = root.count("workers", c.workers);
    c.allow_drafts = root.flag("allow_drafts", c.allow_drafts);
    c.record_timings = root.flag("record_timings", c.record_timings);
    c.embed_batch_size = root.count("embed_batch_size", c.embed_batch_size);

    const auto chunking = root.sub("chunking");
    chunking.allow({"chunk_size", "overlap"});
    c.chunking.chunk_size = chunking.count("chunk_size", c.chunking.chunk_size);
    c.chunking.overlap = chunking.count("overlap", c.chunking.overlap);

    const auto bm25 = root.sub("bm25");
    bm25.allow({"k1", "b"});
    c.bm25.k1 = bm25.real("k1", c.bm25.k1);
    c.bm25.b = bm25.real("b", c.bm25.b);

    const auto retrieval = root.sub("retrieval");
    retrieval.allow({"top_k_final", "candidate_k", "rerank_batch_size"});
    c.retrieval.top_k_final = retrieval.count("top_k_final", c.retrieval.top_k_final);
    c.retrieval.candidate_k = retrieval.count("candidate_k", c.retrieval.candidate_k);
    c.retrieval.rerank_batch_size = retrieval.count("rerank_batch_size", c.retrieval.rerank_batch_size);

    if (root.has("configurations")) {
        const auto& list = root.raw("configurations");
        if (!list.is_array()) throw ConfigError("config: 'configurations' must be an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const Section s(list[i], "configurations[" + std::to_string(i) + "]");
            s.allow({"strategy", "fusion_mode", "agent_profile"});
            Configuration cfg;
            cfg.strategy = strategy_from_string(s.str("strategy", "naive"));
            cfg.fusion_mode = fusion_mode_from_string(s.str("fusion_mode", "OR"));
            cfg.profile = agent::profile_from_string(s.str("agent_profile", "react_base"));
            c.configurations.push_back(cfg);
        }
    } else {
        c.configurations = default_configurations();
    }

    const auto agent = root.sub("agent");
    agent.allow({"max_iterations", "observation_char_budget", "prompts"});
    c.max_iterations = agent.count("max_iterations", c.max_iterations);
    c.observation_char_budget = agent.count("observation_char_budget", c.observation_char_budget);
    const auto agent_prompts = agent.sub("prompts");
    agent_prompts.allow({"react_base", "react_custom"});
    for (const char* p : {"react_base", "react_custom"}) {
        const auto path = agent_prompts.str(p, "");
        if (!path.empty()) c.agent_prompt_paths[agent::profile_from_string(p)] = resolve(base_dir, path);
    }

    const auto models = root.sub("models");
    models.allow({"embedder", "reranker", "generator", "judge"});
    c.models.embedder = parse_endpoint(models.sub("embedder"), {});
    c.models.reranker = parse_endpoint(models.sub("reranker"), {});
    c.models.generator = parse_endpoint(models.sub("generator"), {});
    if (models.has("judge")) c.models.judge = parse_endpoint(models.sub("judge"), c.models.generator);

    const auto m = root.sub("metrics");
    m.allow({"thresholds", "match_threshold", "relevance_blend", "max_points", "context_char_budget", "parallel",
             "stopwords_path", "prompts"});
    const auto thresholds = m.sub("thresholds");
    for (const auto& [name, _] : thresholds.self().items()) {
        c.metric_settings.thresholds[metrics::metric_from_string(name)] = thresholds.real(name.c_str(), 0.0);
    }
    c.metric_settings.match_threshold = m.real("match_threshold", c.metric_settings.match_threshold);
    c.metric_settings.relevance_blend = m.real("relevance_blend", c.metric_settings.relevance_blend);
    c.metric_settings.max_points = m.count("max_points", c.metric_settings.max_points);
    c.metric_settings.context_char_budget = m.count("context_char_budget", c.metric_settings.context_char_budget);
    c.metric_settings.parallel = m.flag("parallel", c.metric_settings.parallel);
    c.stopwords_path = resolve(base_dir, m.str("stopwords_path", ""));
    const auto prompts = m.sub("prompts");
    for (const auto& [name, _] : prompts.self().items()) {
        auto it = kMetricPromptKeys.find(name);
        if (it == kMetricPromptKeys.end()) throw ConfigError("config: unknown key '" + prompts.name(name) + "'");
        const auto path = prompts.str(name.c_str(), "");
        if (!path.empty()) c.metric_settings.prompt_overrides[it->second] = resolve(base_dir, path);
    }

    const auto draft = root.sub("draft");
    draft.allow({"per_doc_count", "pairwise", "max_pairs"});
    c.draft.per_doc_count = draft.count("per_doc_count", c.draft.per_doc_count);
    c.draft.pairwise = draft.flag("pairwise", c.draft.pairwise);
    c.draft.max_pairs = draft.count("max_pairs", c.draft.max_pairs);
    return c;
}

void apply_assignment(json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError("bad assignment '" + std::string(assignment) + "' (expected key.path=value)");
    }
    const std::string key(assignment.substr(0, eq));
    const std::string raw(assignment.substr(eq + 1));
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("bad assignment key '" + key + "'");
        if (!node->is_object()) throw ConfigError("cannot assign '" + key + "': '" + part + "' is inside a non-object");
        if (dot == std::string::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        if (!node->contains(part) || (*node)[part].is_null()) (*node)[part] = json::object();
        node = &(*node)[part];
        start = dot + 1;
    }
}

void apply_env_overrides(RunConfig& config) {
    const auto env = [](const char* name) -> std::optional<std::string> {
        const char* v = std::getenv(name);
        if (!v || !*v) return std::nullopt;
        return std::string(v);
    };
    if (auto v = env("RAGBENCH_EMBEDDER_URL")) config.models.embedder.base_url = *v;
    if (auto v = env("RAGBENCH_RERANKER_URL")) config.models.reranker.base_url = *v;
    if (auto v = env("RAGBENCH_GENERATOR_URL")) config.models.generator.base_url = *v;
    if (auto v = env("RAGBENCH_JUDGE_URL")) {
        if (!config.models.judge) config.models.judge = config.models.generator;
        config.models.judge->base_url = *v;
    }
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& assignments) {
    json doc = json::object();
    std::string base_dir;
    if (!path.empty()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot read config file " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        try {
            doc = json::parse(ss.str());
        } catch (const json::parse_error& e) {
            throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
        }
        base_dir = fs::absolute(path).parent_path().string();
    }
    for (const auto& a : assignments) apply_assignment(doc, a);
    RunConfig config = parse_config(doc, base_dir);
    apply_env_overrides(config);
    config.validate();
    return config;
}

}  // namespace ragbench
