#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ragbench::model {

using Embedding = std::vector<double>;

/// Task tags carried on generation requests. Network backends ignore them;
/// the offline rule backend uses them to pick a deterministic behaviour.
namespace task {
inline constexpr std::string_view agent_step = "agent_step";
inline constexpr std::string_view judge = "judge";
inline constexpr std::string_view chunk_relevance = "chunk_relevance";
inline constexpr std::string_view extract_points = "extract_points";
inline constexpr std::string_view coverage = "coverage";
inline constexpr std::string_view draft_qa = "draft_qa";
inline constexpr std::string_view rerank_score = "rerank_score";
}  // namespace task

struct GenerationRequest {
    std::string prompt;
    /// Unset: the endpoint's configured temperature.
    std::optional<double> temperature;
    std::vector<std::string> stop_sequences;
    /// Structured view of what the prompt was rendered from (see `task`).
    std::string task;
    std::map<std::string, std::string> fields;
};

struct GenerationResponse {
    std::string text;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

/// Cuts `text` before the earliest occurrence of any stop sequence.
std::string apply_stop_sequences(std::string text, const std::vector<std::string>& stops);

class EmbeddingPort {
public:
    virtual ~EmbeddingPort() = default;

    /// One vector per input, order-preserving, all of one dimension.
    /// Throws ModelError on empty input, an empty text, or a backend reply
    /// that breaks the cardinality/dimension contract.
    std::vector<Embedding> embed(const std::vector<std::string>& texts);

    virtual std::string model_name() const = 0;
    /// Throws ModelError when the backend cannot be reached.
    virtual void ping() {}

protected:
    virtual std::vector<Embedding> do_embed(const std::vector<std::string>& texts) = 0;
};

class RerankPort {
public:
    virtual ~RerankPort() = default;

    /// One relevance score per passage, order-preserving. Passages are sent
    /// to the backend in groups of `batch_size`; the result does not depend
    /// on the grouping.
    std::vector<double> rerank_scores(std::string_view query, const std::vector<std::string>& passages,
                                      std::size_t batch_size);

    virtual std::string model_name() const = 0;
    virtual void ping() {}

protected:
    virtual std::vector<double> score_batch(std::string_view query, std::span<const std::string> passages) = 0;
};

class LLMPort {
public:
    virtual ~LLMPort() = default;

    /// Raw model text, truncated before the first stop sequence.
    GenerationResponse generate(const GenerationRequest& request);

    virtual std::string model_name() const = 0;
    virtual void ping() {}

protected:
    virtual GenerationResponse do_generate(const GenerationRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Offline backends

/// Hash-bucketed bag of words: each lowercased word token adds 1.0 to
/// bucket fnv1a(salt, token) mod dimension. Cosine similarity between two
/// texts therefore equals their token-count overlap when no buckets collide.
class MockEmbedder final : public EmbeddingPort {
public:
    explicit MockEmbedder(std::size_t dimension = 256, std::uint64_t salt = 0);

    /// Encodes dimension and salt, so snapshots built with other settings
    /// are recognisably different.
    std::string model_name() const override;
    std::size_t bucket(std::string_view term) const;
    std::size_t dimension() const { return dimension_; }

protected:
    std::vector<Embedding> do_embed(const std::vector<std::string>& texts) override;

private:
    std::size_t dimension_;
    std::uint64_t salt_;
};

/// Score = fraction of the query's unique non-stop terms that occur in the
/// passage (all query terms when every term is a stop word).
class MockReranker final : public RerankPort {
public:
    std::string model_name() const override { return "mock-overlap"; }
    static double overlap_score(std::string_view query, std::string_view passage);

protected:
    std::vector<double> score_batch(std::string_view query, std::span<const std::string> passages) override;
};

enum class MockMode { rules, echo, scripted };

/// Deterministic text generator.
///  - echo: returns the text after "ECHO:" up to end of line (empty if absent)
///  - scripted: the Nth call returns the Nth reply; after the script runs out
///    the last reply repeats if `repeat_last`, otherwise ModelError
///  - rules: stateless heuristics keyed on GenerationRequest::task, good
///    enough to drive complete agent and judge pipelines offline
/// Every request is appended to a call log.
class MockLLM final : public LLMPort {
public:
    explicit MockLLM(MockMode mode = MockMode::rules, std::vector<std::string> replies = {},
                     bool repeat_last = false);

    std::string model_name() const override { return "mock-llm"; }
    std::vector<GenerationRequest> call_log() const;
    std::size_t call_count() const;

    /// The rule backend's reply, exposed for tests.
    static std::string rules_reply(const GenerationRequest& request);

protected:
    GenerationResponse do_generate(const GenerationRequest& request) override;

private:
    MockMode mode_;
    std::vector<std::string> replies_;
    bool repeat_last_;
    mutable std::mutex mutex_;
    std::size_t next_ = 0;
    std::vector<GenerationRequest> log_;
};

// ---------------------------------------------------------------------------
// Network backends (JSON over HTTP)

struct EndpointConfig {
    std::string backend = "mock";  // mock | http | llm (reranker only)
    std::string base_url;
    std::string path;  // request path appended to base_url; role default when empty
    std::string model_name;
    double temperature = 0.1;
    std::chrono::milliseconds timeout{120000};
    int max_retries = 2;
    int max_in_flight = 4;
    // mock backend options
    std::string mock_mode = "rules";
    std::size_t mock_dimension = 256;
    std::vector<std::string> mock_replies;
};

/// Validates temperature >= 0, timeout > 0, max_retries >= 0, max_in_flight >= 1.
void validate(const EndpointConfig& config, std::string_view role);

class HttpTransport;

/// POST {base_url}{path} with {"model","input":[...]}; expects
/// {"vectors":[[...]...]} (an "embeddings" key is accepted as well).
class HttpEmbedder final : public EmbeddingPort {
public:
    explicit HttpEmbedder(EndpointConfig config);
    ~HttpEmbedder() override;
    std::string model_name() const override { return config_.model_name; }
    void ping() override;

protected:
    std::vector<Embedding> do_embed(const std::vector<std::string>& texts) override;

private:
    EndpointConfig config_;
    std::unique_ptr<HttpTransport> transport_;
};

/// POST {base_url}{path} with {"model","query","passages":[...]}; expects
/// {"scores":[...]}.
class HttpReranker final : public RerankPort {
public:
    explicit HttpReranker(EndpointConfig config);
    ~HttpReranker() override;
    std::string model_name() const override { return config_.model_name; }
    void ping() override;

protected:
    std::vector<double> score_batch(std::string_view query, std::span<const std::string> passages) override;

private:
    EndpointConfig config_;
    std::unique_ptr<HttpTransport> transport_;
};

/// POST {base_url}{path} with {"model","prompt","temperature","stop",
/// "stream":false,"options":{...}}; expects {"text": ...} ("response" is
/// accepted as well).
class HttpLLM final : public LLMPort {
public:
    explicit HttpLLM(EndpointConfig config);
    ~HttpLLM() override;
    std::string model_name() const override { return config_.model_name; }
    void ping() override;

protected:
    GenerationResponse do_generate(const GenerationRequest& request) override;

private:
    EndpointConfig config_;
    std::unique_ptr<HttpTransport> transport_;
};

/// Reranker fallback for setups without a cross-encoder server: asks an LLM
/// to rate each passage and parses its "Score:" line.
class LLMReranker final : public RerankPort {
public:
    explicit LLMReranker(LLMPort& llm, double temperature = 0.0);
    std::string model_name() const override { return "llm-rerank:" + llm_.model_name(); }
    void ping() override { llm_.ping(); }

protected:
    std::vector<double> score_batch(std::string_view query, std::span<const std::string> passages) override;

private:
    LLMPort& llm_;
    double temperature_;
};

/// Extracts the value of the first "Score: <number>" line; nullopt if none.
std::optional<double> parse_score(std::string_view output);

// ---------------------------------------------------------------------------

struct Ports {
    std::unique_ptr<EmbeddingPort> embedder;
    std::unique_ptr<RerankPort> reranker;
    std::unique_ptr<LLMPort> generator;
    std::unique_ptr<LLMPort> judge_owned;  // null when the judge shares the generator
    LLMPort* judge = nullptr;

    /// Pings every backend; throws ModelError naming the unreachable role.
    void preflight();
};

struct PortConfigs {
    EndpointConfig embedder;
    EndpointConfig reranker;
    EndpointConfig generator;
    std::optional<EndpointConfig> judge;  // defaults to the generator endpoint
};

/// Builds ports from endpoint configs. `seed` salts the mock embedder.
Ports make_ports(const PortConfigs& configs, std::uint64_t seed = 0);

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0);

}  // namespace ragbench::model
