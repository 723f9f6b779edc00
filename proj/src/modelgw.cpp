#include "ragbench/modelgw.hpp"

#include "ragbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

namespace ragbench::model {

std::string apply_stop_sequences(std::string text, const std::vector<std::string>& stops) {
    std::size_t cut = std::string::npos;
    for (const auto& stop : stops) {
        if (stop.empty()) continue;
        cut = std::min(cut, text.find(stop));
    }
    if (cut != std::string::npos) text.resize(cut);
    return text;
}

std::vector<Embedding> EmbeddingPort::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw ModelError("embed: no input texts");
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (texts[i].empty()) throw ModelError("embed: input " + std::to_string(i) + " is empty");
    }
    auto vectors = do_embed(texts);
    if (vectors.size() != texts.size()) {
        throw ModelError("embed: backend returned " + std::to_string(vectors.size()) + " vectors for " +
                         std::to_string(texts.size()) + " inputs");
    }
    const std::size_t dim = vectors.front().size();
    if (dim == 0) throw ModelError("embed: backend returned an empty vector");
    for (const auto& v : vectors) {
        if (v.size() != dim) throw ModelError("embed: inconsistent embedding dimensions within a batch");
        for (double x : v) {
            if (!std::isfinite(x)) throw ModelError("embed: non-finite embedding component");
        }
    }
    return vectors;
}

std::vector<double> RerankPort::rerank_scores(std::string_view query, const std::vector<std::string>& passages,
                                              std::size_t batch_size) {
    if (passages.empty()) throw ModelError("rerank: no passages");
    if (batch_size == 0) throw ModelError("rerank: batch size must be at least 1");
    std::vector<double> scores;
    scores.reserve(passages.size());
    const std::span<const std::string> all(passages);
    for (std::size_t offset = 0; offset < passages.size(); offset += batch_size) {
        const auto batch = all.subspan(offset, std::min(batch_size, passages.size() - offset));
        auto part = score_batch(query, batch);
        if (part.size() != batch.size()) {
            throw ModelError("rerank: backend returned " + std::to_string(part.size()) + " scores for " +
                             std::to_string(batch.size()) + " passages");
        }
        for (double s : part) {
            if (!std::isfinite(s)) throw ModelError("rerank: non-finite score");
            scores.push_back(s);
        }
    }
    return scores;
}

GenerationResponse LLMPort::generate(const GenerationRequest& request) {
    if (request.prompt.empty()) throw ModelError("generate: empty prompt");
    auto response = do_generate(request);
    response.text = apply_stop_sequences(std::move(response.text), request.stop_sequences);
    return response;
}

std::optional<double> parse_score(std::string_view output) {
    static const std::regex score(R"((?:^|\n)\s*\**\s*Score\s*\**\s*:\s*\**\s*([-+]?(?:\d+(?:\.\d*)?|\.\d+))\s*(%)?)",
                                  std::regex::icase);
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_search(output.begin(), output.end(), m, score)) return std::nullopt;
    double value = std::stod(m[1].str());
    if (m[2].matched) value /= 100.0;
    return value;
}

LLMReranker::LLMReranker(LLMPort& llm, double temperature) : llm_(llm), temperature_(temperature) {}

std::vector<double> LLMReranker::score_batch(std::string_view query, std::span<const std::string> passages) {
    std::vector<double> out;
    for (const auto& passage : passages) {
        GenerationRequest req;
        req.prompt =
            "Rate how relevant the passage is to the query on a scale from 0 to 1.\n"
            "Reply with a single line of the form \"Score: <number>\".\n\n"
            "Query: " + std::string(query) + "\n\nPassage:\n" + passage + "\n";
        req.temperature = temperature_;
        req.task = std::string(task::rerank_score);
        req.fields = {{"query", std::string(query)}, {"passage", passage}};
        const auto reply = llm_.generate(req);
        const auto score = parse_score(reply.text);
        if (!score) throw ModelError("llm reranker: no score in reply");
        out.push_back(std::clamp(*score, 0.0, 1.0));
    }
    return out;
}

void validate(const EndpointConfig& config, std::string_view role) {
    const std::string r(role);
    if (config.temperature < 0) throw ConfigError(r + ": temperature must be >= 0");
    if (config.timeout.count() <= 0) throw ConfigError(r + ": timeout must be positive");
    if (config.max_retries < 0) throw ConfigError(r + ": max_retries must be >= 0");
    if (config.max_in_flight < 1) throw ConfigError(r + ": max_in_flight must be >= 1");
    if (config.backend == "http" && config.base_url.empty()) throw ConfigError(r + ": http backend needs base_url");
    if (config.backend != "mock" && config.backend != "http" && config.backend != "llm") {
        throw ConfigError(r + ": unknown backend '" + config.backend + "'");
    }
    if (config.backend == "llm" && role != "reranker") throw ConfigError(r + ": backend 'llm' is reranker-only");
    if (config.backend == "mock" && config.mock_mode != "rules" && config.mock_mode != "echo" &&
        config.mock_mode != "scripted") {
        throw ConfigError(r + ": unknown mock mode '" + config.mock_mode + "'");
    }
}

namespace {

MockMode parse_mock_mode(const std::string& s) {
    if (s == "echo") return MockMode::echo;
    if (s == "scripted") return MockMode::scripted;
    return MockMode::rules;
}

std::unique_ptr<LLMPort> make_llm(const EndpointConfig& c) {
    if (c.backend == "http") return std::make_unique<HttpLLM>(c);
    return std::make_unique<MockLLM>(parse_mock_mode(c.mock_mode), c.mock_replies, true);
}

}  // namespace

Ports make_ports(const PortConfigs& configs, std::uint64_t seed) {
    validate(configs.embedder, "embedder");
    validate(configs.reranker, "reranker");
    validate(configs.generator, "generator");
    if (configs.judge) validate(*configs.judge, "judge");

    Ports ports;
    if (configs.embedder.backend == "http") {
        ports.embedder = std::make_unique<HttpEmbedder>(configs.embedder);
    } else {
        ports.embedder = std::make_unique<MockEmbedder>(configs.embedder.mock_dimension, seed);
    }
    ports.generator = make_llm(configs.generator);
    if (configs.judge) {
        ports.judge_owned = make_llm(*configs.judge);
        ports.judge = ports.judge_owned.get();
    } else {
        ports.judge = ports.generator.get();
    }
    if (configs.reranker.backend == "http") {
        ports.reranker = std::make_unique<HttpReranker>(configs.reranker);
    } else if (configs.reranker.backend == "llm") {
        ports.reranker = std::make_unique<LLMReranker>(*ports.judge, configs.reranker.temperature);
    } else {
        ports.reranker = std::make_unique<MockReranker>();
    }
    return ports;
}

void Ports::preflight() {
    const auto check = [](auto* port, const char* role) {
        if (!port) return;
        try {
            port->ping();
        } catch (const ModelError& e) {
            throw ModelError(std::string(role) + " endpoint unreachable: " + e.what());
        }
    };
    check(embedder.get(), "embedder");
    check(reranker.get(), "reranker");
    check(generator.get(), "generator");
    if (judge_owned) check(judge_owned.get(), "judge");
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ULL ^ (seed * 1099511628211ULL);
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace ragbench::model
