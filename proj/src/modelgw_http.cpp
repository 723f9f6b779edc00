#include "ragbench/modelgw.hpp"

#include "ragbench/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <thread>

namespace ragbench::model {

using json = nlohmann::json;

/// One endpoint: URL split, retry policy and an in-flight limit.
class HttpTransport {
public:
    HttpTransport(const EndpointConfig& config, std::string default_path)
        : config_(config), in_flight_(config.max_in_flight) {
        const auto& url = config.base_url;
        if (url.rfind("https://", 0) == 0) throw ConfigError("https endpoints are not supported: " + url);
        const auto scheme_end = url.find("://");
        const auto host_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        const auto path_begin = url.find('/', host_begin);
        host_ = url.substr(0, path_begin);
        if (scheme_end == std::string::npos) host_ = "http://" + host_;
        prefix_ = path_begin == std::string::npos ? "" : url.substr(path_begin);
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
        path_ = prefix_ + (config.path.empty() ? default_path : config.path);
    }

    json post(const json& body) {
        const std::string payload = body.dump();
        std::string last_error;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
            in_flight_.acquire();
            httplib::Result res = [&] {
                auto client = make_client();
                return client.Post(path_, payload, "application/json");
            }();
            in_flight_.release();
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                last_error = "server error " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw ModelError(endpoint() + ": HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
            }
            try {
                return json::parse(res->body);
            } catch (const json::exception& e) {
                throw ModelError(endpoint() + ": malformed JSON reply: " + e.what());
            }
        }
        throw ModelError(endpoint() + ": " + last_error + " (after " + std::to_string(config_.max_retries + 1) +
                         " attempts)");
    }

    void ping() {
        auto client = make_client();
        auto res = client.Get(prefix_.empty() ? "/" : prefix_ + "/");
        if (!res) throw ModelError(config_.base_url + ": " + httplib::to_string(res.error()));
    }

    std::string endpoint() const { return host_ + path_; }

private:
    httplib::Client make_client() const {
        httplib::Client client(host_);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        return client;
    }

    EndpointConfig config_;
    std::string host_;
    std::string prefix_;
    std::string path_;
    std::counting_semaphore<1024> in_flight_;
};

HttpEmbedder::HttpEmbedder(EndpointConfig config)
    : config_(std::move(config)), transport_(std::make_unique<HttpTransport>(config_, "/embeddings")) {}
HttpEmbedder::~HttpEmbedder() = default;
void HttpEmbedder::ping() { transport_->ping(); }

std::vector<Embedding> HttpEmbedder::do_embed(const std::vector<std::string>& texts) {
    const json reply = transport_->post({{"model", config_.model_name}, {"input", texts}});
    const char* key = reply.contains("vectors") ? "vectors" : "embeddings";
    if (!reply.contains(key) || !reply[key].is_array()) {
        throw ModelError(transport_->endpoint() + ": reply has no \"vectors\" array");
    }
    try {
        return reply[key].get<std::vector<Embedding>>();
    } catch (const json::exception& e) {
        throw ModelError(transport_->endpoint() + ": bad vectors: " + e.what());
    }
}

HttpReranker::HttpReranker(EndpointConfig config)
    : config_(std::move(config)), transport_(std::make_unique<HttpTransport>(config_, "/rerank")) {}
HttpReranker::~HttpReranker() = default;
void HttpReranker::ping() { transport_->ping(); }

std::vector<double> HttpReranker::score_batch(std::string_view query, std::span<const std::string> passages) {
    const json reply = transport_->post({{"model", config_.model_name},
                                         {"query", std::string(query)},
                                         {"passages", std::vector<std::string>(passages.begin(), passages.end())}});
    if (!reply.contains("scores") || !reply["scores"].is_array()) {
        throw ModelError(transport_->endpoint() + ": reply has no \"scores\" array");
    }
    try {
        return reply["scores"].get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ModelError(transport_->endpoint() + ": bad scores: " + e.what());
    }
}

HttpLLM::HttpLLM(EndpointConfig config)
    : config_(std::move(config)), transport_(std::make_unique<HttpTransport>(config_, "/generate")) {}
HttpLLM::~HttpLLM() = default;
void HttpLLM::ping() { transport_->ping(); }

GenerationResponse HttpLLM::do_generate(const GenerationRequest& request) {
    const double temperature = request.temperature.value_or(config_.temperature);
    const json body = {{"model", config_.model_name},
                       {"prompt", request.prompt},
                       {"temperature", temperature},
                       {"stop", request.stop_sequences},
                       {"stream", false},
                       {"options", {{"temperature", temperature}, {"stop", request.stop_sequences}}}};
    const json reply = transport_->post(body);
    GenerationResponse out;
    if (reply.contains("text") && reply["text"].is_string()) {
        out.text = reply["text"].get<std::string>();
    } else if (reply.contains("response") && reply["response"].is_string()) {
        out.text = reply["response"].get<std::string>();
    } else {
        throw ModelError(transport_->endpoint() + ": reply has no \"text\" field");
    }
    out.prompt_tokens = reply.value("prompt_eval_count", reply.value("prompt_tokens", std::size_t{0}));
    out.completion_tokens = reply.value("eval_count", reply.value("completion_tokens", std::size_t{0}));
    return out;
}

}  // namespace ragbench::model
