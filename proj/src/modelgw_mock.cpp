#include "ragbench/modelgw.hpp"

#include "ragbench/error.hpp"
#include "ragbench/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace ragbench::model {

namespace {

std::string field(const GenerationRequest& r, const std::string& key) {
    auto it = r.fields.find(key);
    return it == r.fields.end() ? std::string{} : it->second;
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::set<std::string> term_set(std::string_view s, bool content_only) {
    std::set<std::string> out;
    const auto& stop = text::default_stopwords();
    for (auto& t : text::terms(s)) {
        if (!content_only || !stop.contains(t)) out.insert(std::move(t));
    }
    return out;
}

/// Fraction of `of`'s content terms present in `in`; `empty_value` if `of` has none.
double coverage_fraction(std::string_view of, std::string_view in, double empty_value) {
    const auto a = term_set(of, true);
    if (a.empty()) return empty_value;
    const auto b = term_set(in, false);
    std::size_t hit = 0;
    for (const auto& t : a) hit += b.contains(t) ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(a.size());
}

std::string echo_reply(const std::string& prompt) {
    const auto pos = prompt.find("ECHO:");
    if (pos == std::string::npos) return {};
    const auto start = pos + 5;
    const auto end = prompt.find('\n', start);
    return prompt.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

std::string agent_reply(const GenerationRequest& r) {
    const std::string question = field(r, "question");
    const bool structured = field(r, "profile") == "react_custom";
    const bool first_turn = field(r, "step") == "0" || field(r, "step").empty();

    std::string query = question;
    if (structured) {
        std::string keywords;
        for (const auto& t : text::content_terms(question, text::default_stopwords())) {
            keywords += (keywords.empty() ? "" : " ") + t;
        }
        if (!keywords.empty()) query = keywords;
    }

    if (first_turn) {
        if (structured) {
            return "Thought: Let me analyze step-by-step:\n"
                   "1. Current Status:\n"
                   "   - Progress: nothing searched yet\n"
                   "   - Findings: none\n"
                   "   - Missing: facts that answer the question\n\n"
                   "2. Strategy:\n"
                   "   - Next tool: document_search\n"
                   "   - Expected outcome: passages that answer the question\n"
                   "   - Confidence: 0.2\n"
                   "   - Reasoning: no information gathered yet\n"
                   "Action: document_search\n"
                   "Action Input: " + query;
        }
        return "Thought: I need to search the documents for this.\nAction: document_search\nAction Input: " + query;
    }

    // Answer with the passage sentence that best overlaps the question.
    std::string best;
    double best_score = 0.0;
    for (const auto& sentence : text::sentences(field(r, "last_passages"))) {
        const double s = coverage_fraction(question, sentence, 0.0);
        if (s > best_score) {
            best_score = s;
            best = sentence;
        }
    }
    if (best.empty()) best = "The documents do not contain this information.";
    const std::string confidence = fmt2(0.5 + 0.5 * best_score);
    if (structured) {
        return "Thought: Let me analyze step-by-step:\n"
               "1. Current Status:\n"
               "   - Progress: searched the documents\n"
               "   - Findings: a passage addresses the question\n"
               "   - Missing: nothing\n\n"
               "2. Strategy:\n"
               "   - Next tool: none\n"
               "   - Expected outcome: final answer\n"
               "   - Confidence: " + confidence + "\n"
               "   - Reasoning: the retrieved passage states the answer\n"
               "Final Answer: " + best;
    }
    return "Thought: I now know the final answer.\nFinal Answer: " + best;
}

std::string judge_reply(const GenerationRequest& r) {
    const std::string metric = field(r, "metric");
    const std::string response = field(r, "response");
    const std::string truth = field(r, "ground_truth");
    double score = 0.5;
    if (metric == "truthfulness") {
        const double p = coverage_fraction(response, truth, 0.0);
        const double q = coverage_fraction(truth, response, 0.0);
        score = (p + q) > 0 ? 2 * p * q / (p + q) : 0.0;
    } else if (metric == "completeness") {
        score = coverage_fraction(truth, response, 1.0);
    } else if (metric == "context_faithfulness") {
        score = coverage_fraction(response, field(r, "context"), 1.0);
    } else if (metric == "answer_relevance") {
        score = 0.5 + 0.5 * coverage_fraction(field(r, "question"), response, 0.0);
    }
    return "Score: " + fmt2(score) + "\nRationale: lexical overlap heuristic (offline judge).";
}

}  // namespace

MockEmbedder::MockEmbedder(std::size_t dimension, std::uint64_t salt) : dimension_(dimension), salt_(salt) {
    if (dimension_ == 0) throw ConfigError("mock embedder dimension must be positive");
}

std::string MockEmbedder::model_name() const {
    return "mock-bow-d" + std::to_string(dimension_) + "-s" + std::to_string(salt_);
}

std::size_t MockEmbedder::bucket(std::string_view term) const {
    return static_cast<std::size_t>(fnv1a(term, salt_) % dimension_);
}

std::vector<Embedding> MockEmbedder::do_embed(const std::vector<std::string>& texts) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        Embedding v(dimension_, 0.0);
        const auto ts = text::terms(t);
        if (ts.empty()) {
            v[bucket("")] = 1.0;
        }
        for (const auto& term : ts) v[bucket(term)] += 1.0;
        out.push_back(std::move(v));
    }
    return out;
}

double MockReranker::overlap_score(std::string_view query, std::string_view passage) {
    auto q = term_set(query, true);
    if (q.empty()) q = term_set(query, false);
    if (q.empty()) return 0.0;
    const auto p = term_set(passage, false);
    std::size_t hit = 0;
    for (const auto& t : q) hit += p.contains(t) ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(q.size());
}

std::vector<double> MockReranker::score_batch(std::string_view query, std::span<const std::string> passages) {
    std::vector<double> out;
    for (const auto& p : passages) out.push_back(overlap_score(query, p));
    return out;
}

MockLLM::MockLLM(MockMode mode, std::vector<std::string> replies, bool repeat_last)
    : mode_(mode), replies_(std::move(replies)), repeat_last_(repeat_last) {}

std::vector<GenerationRequest> MockLLM::call_log() const {
    std::lock_guard lock(mutex_);
    return log_;
}

std::size_t MockLLM::call_count() const {
    std::lock_guard lock(mutex_);
    return log_.size();
}

std::string MockLLM::rules_reply(const GenerationRequest& r) {
    if (r.task == task::agent_step) return agent_reply(r);
    if (r.task == task::judge) return judge_reply(r);
    if (r.task == task::chunk_relevance) {
        const std::string wanted = field(r, "question") + " " + field(r, "ground_truth");
        return "Score: " + fmt2(coverage_fraction(wanted, field(r, "chunk"), 0.0)) + "\nRationale: term overlap.";
    }
    if (r.task == task::extract_points) {
        std::ostringstream out;
        int n = 0;
        for (const auto& s : text::sentences(field(r, "text"))) {
            if (n++ == 8) break;
            out << "- " << s << '\n';
        }
        return n == 0 ? std::string("NONE") : out.str();
    }
    if (r.task == task::coverage) {
        const double f = coverage_fraction(field(r, "point"), field(r, "text"), 0.0);
        return std::string("Score: ") + (f >= 0.6 ? "1" : "0") + "\nRationale: term overlap.";
    }
    if (r.task == task::rerank_score) {
        return "Score: " + fmt2(MockReranker::overlap_score(field(r, "query"), field(r, "passage")));
    }
    if (r.task == task::draft_qa) {
        const auto sents = text::sentences(field(r, "document"));
        if (sents.empty()) return "[]";
        std::string question;
        std::string answer = sents.front();
        if (field(r, "mode") == "pair") {
            const auto other = text::sentences(field(r, "document_b"));
            question = "How do " + field(r, "title") + " and " + field(r, "title_b") + " relate?";
            if (!other.empty()) answer += " " + other.front();
        } else {
            question = "What does " + field(r, "title") + " state first?";
        }
        const auto esc = [](const std::string& s) {
            std::string o;
            for (char c : s) {
                if (c == '"' || c == '\\') o.push_back('\\');
                if (c == '\n') {
                    o += "\\n";
                    continue;
                }
                o.push_back(c);
            }
            return o;
        };
        return "[{\"question\": \"" + esc(question) + "\", \"answer\": \"" + esc(answer) + "\"}]";
    }
    if (r.prompt.find("ECHO:") != std::string::npos) return echo_reply(r.prompt);
    return "Score: 0.50";
}

GenerationResponse MockLLM::do_generate(const GenerationRequest& request) {
    std::string text;
    {
        std::lock_guard lock(mutex_);
        log_.push_back(request);
        if (mode_ == MockMode::scripted) {
            if (next_ < replies_.size()) {
                text = replies_[next_++];
            } else if (repeat_last_ && !replies_.empty()) {
                text = replies_.back();
            } else {
                throw ModelError("scripted mock: no reply left for call " + std::to_string(log_.size()));
            }
        }
    }
    if (mode_ == MockMode::echo) text = echo_reply(request.prompt);
    if (mode_ == MockMode::rules) text = rules_reply(request);
    GenerationResponse resp;
    resp.prompt_tokens = text::tokenize(request.prompt).size();
    resp.completion_tokens = text::tokenize(text).size();
    resp.text = std::move(text);
    return resp;
}

}  // namespace ragbench::model
