#include "ragbench/metrics.hpp"

#include "ragbench/assets.hpp"
#include "ragbench/error.hpp"
#include "ragbench/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <future>
#include <set>
#include <sstream>

namespace ragbench::metrics {

using nlohmann::json;

namespace {

constexpr std::array<MetricSpec, kMetricCount> kSpecs{{
    {MetricId::key_terms_precision, "key_terms_precision", 0.15, 0.7, Category::programmatic, true},
    {MetricId::token_recall, "token_recall", 0.15, 0.7, Category::programmatic, true},
    {MetricId::truthfulness, "truthfulness", 0.20, 0.7, Category::llm, true},
    {MetricId::completeness, "completeness", 0.10, 0.7, Category::llm, true},
    {MetricId::source_relevance, "source_relevance", 0.05, 0.7, Category::llm, true},
    {MetricId::context_faithfulness, "context_faithfulness", 0.10, 0.7, Category::llm, true},
    {MetricId::semantic_f1, "semantic_f1", 0.10, 0.6, Category::hybrid, true},
    {MetricId::answer_relevance, "answer_relevance", 0.10, 0.7, Category::hybrid, true},
    {MetricId::completeness_gain, "completeness_gain", 0.05, 0.501, Category::hybrid, false},
}};

const char* const kPromptAssets[] = {
    "judge_truthfulness", "judge_completeness", "judge_context_faithfulness", "judge_answer_relevance",
    "judge_source_relevance", "extract_points", "coverage",
};

const std::string kScoreReminder =
    "\n\nYour previous reply could not be read. Reply again, starting with a line of the form "
    "\"Score: <number between 0 and 1>\".";

const std::string kPointsReminder =
    "\n\nYour previous reply could not be read. Reply with one point per line, each line starting with \"- \", "
    "or with the single word NONE.";

std::set<std::string> term_set(std::string_view s) {
    auto ts = text::terms(s);
    return {ts.begin(), ts.end()};
}

std::string rationale_of(const std::string& output) {
    std::istringstream in(output);
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = text::trim(line);
        if (text::to_lower(t).rfind("rationale:", 0) == 0) return text::trim(t.substr(10));
    }
    return {};
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace

const std::array<MetricSpec, kMetricCount>& metric_specs() { return kSpecs; }

const MetricSpec& spec(MetricId id) { return kSpecs[static_cast<std::size_t>(id)]; }

std::string to_string(MetricId id) { return std::string(spec(id).name); }

std::string to_string(Category c) {
    switch (c) {
        case Category::programmatic: return "programmatic";
        case Category::llm: return "llm";
        case Category::hybrid: return "hybrid";
    }
    return "programmatic";
}

MetricId metric_from_string(std::string_view name) {
    for (const auto& s : kSpecs) {
        if (s.name == name) return s.id;
    }
    throw ConfigError("unknown metric '" + std::string(name) + "'");
}

MetricScore make_score(MetricId id, double value, double threshold, json evidence) {
    MetricScore s;
    s.id = id;
    s.value = std::clamp(value, 0.0, 1.0);
    s.threshold = threshold;
    s.passed = s.value >= threshold;
    s.evidence = std::move(evidence);
    return s;
}

MetricScore failed_score(MetricId id, double threshold, const std::string& reason, json evidence) {
    MetricScore s;
    s.id = id;
    s.threshold = threshold;
    s.failed = true;
    s.evidence = std::move(evidence);
    s.evidence["error"] = reason;
    return s;
}

double MetricSettings::threshold(MetricId id) const {
    auto it = thresholds.find(id);
    return it == thresholds.end() ? spec(id).threshold : it->second;
}

void MetricSettings::validate() const {
    for (const auto& [id, t] : thresholds) {
        if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("threshold for " + to_string(id) + " must be in [0, 1]");
    }
    if (!(match_threshold >= 0.0 && match_threshold <= 1.0)) throw ConfigError("match_threshold must be in [0, 1]");
    if (!(relevance_blend >= 0.0 && relevance_blend <= 1.0)) throw ConfigError("relevance_blend must be in [0, 1]");
    if (max_points < 1) throw ConfigError("max_points must be at least 1");
}

// ---------------------------------------------------------------------------

double key_terms_precision_value(std::string_view response, std::string_view ground_truth, std::string_view context,
                                 const std::unordered_set<std::string>& stopwords, json* evidence) {
    const auto truth = term_set(ground_truth);
    std::vector<std::string> keys;
    for (auto& t : text::content_terms(context, stopwords)) {
        if (truth.contains(t)) keys.push_back(std::move(t));
    }
    const auto resp = term_set(response);
    std::vector<std::string> matched;
    for (const auto& k : keys) {
        if (resp.contains(k)) matched.push_back(k);
    }
    if (evidence) *evidence = {{"key_terms", keys}, {"matched", matched}};
    if (keys.empty()) return 1.0;
    return static_cast<double>(matched.size()) / static_cast<double>(keys.size());
}

double token_recall_value(std::string_view response, std::string_view ground_truth,
                          const std::unordered_set<std::string>& stopwords, json* evidence) {
    auto wanted = text::content_terms(ground_truth, stopwords);
    if (wanted.empty()) wanted = text::content_terms(ground_truth, {});
    const auto resp = term_set(response);
    std::vector<std::string> matched;
    for (const auto& t : wanted) {
        if (resp.contains(t)) matched.push_back(t);
    }
    if (evidence) *evidence = {{"ground_truth_terms", wanted}, {"matched", matched}};
    if (wanted.empty()) return 1.0;
    return static_cast<double>(matched.size()) / static_cast<double>(wanted.size());
}

double source_relevance_value(const std::vector<double>& chunk_scores) {
    if (chunk_scores.empty()) return 0.0;
    double max = chunk_scores.front();
    double sum = 0.0;
    for (double s : chunk_scores) {
        max = std::max(max, s);
        sum += s;
    }
    return 0.8 * max + 0.2 * (sum / static_cast<double>(chunk_scores.size()));
}

double answer_relevance_value(double cosine, double judge_score, double blend) {
    return blend * (cosine + 1.0) / 2.0 + (1.0 - blend) * judge_score;
}

double completeness_gain_value(double response_coverage, double ground_truth_coverage) {
    return std::clamp(0.5 + (response_coverage - ground_truth_coverage) / 2.0, 0.0, 1.0);
}

double cosine(const model::Embedding& a, const model::Embedding& b) {
    if (a.size() != b.size()) throw ModelError("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

F1Parts point_f1(const std::vector<model::Embedding>& response_points,
                 const std::vector<model::Embedding>& truth_points, double match_threshold) {
    if (response_points.empty() && truth_points.empty()) return {1.0, 1.0, 1.0};
    if (response_points.empty() || truth_points.empty()) return {};
    const auto matched = [&](const std::vector<model::Embedding>& from, const std::vector<model::Embedding>& to) {
        std::size_t n = 0;
        for (const auto& p : from) {
            double best = -1.0;
            for (const auto& q : to) best = std::max(best, cosine(p, q));
            if (best >= match_threshold) ++n;
        }
        return static_cast<double>(n) / static_cast<double>(from.size());
    };
    F1Parts f;
    f.precision = matched(response_points, truth_points);
    f.recall = matched(truth_points, response_points);
    f.f1 = f.precision + f.recall > 0.0 ? 2.0 * f.precision * f.recall / (f.precision + f.recall) : 0.0;
    return f;
}

std::vector<double> extract_numbers(std::string_view s) {
    std::vector<double> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const bool starts = is_digit(s[i]) || (s[i] == '.' && i + 1 < s.size() && is_digit(s[i + 1]) &&
                                               (i == 0 || !is_digit(s[i - 1])));
        if (!starts) {
            ++i;
            continue;
        }
        const std::size_t begin = i;
        std::string digits;
        while (i < s.size()) {
            if (is_digit(s[i])) {
                digits.push_back(s[i++]);
            } else if (s[i] == ',' && digits.find('.') == std::string::npos && i + 3 < s.size() &&
                       is_digit(s[i + 1]) && is_digit(s[i + 2]) && is_digit(s[i + 3]) &&
                       (i + 4 == s.size() || !is_digit(s[i + 4]))) {
                ++i;  // thousands separator: exactly three digits follow
            } else if (s[i] == '.' && digits.find('.') == std::string::npos && i + 1 < s.size() && is_digit(s[i + 1])) {
                digits.push_back(s[i++]);
            } else {
                break;
            }
        }
        double v = std::stod(digits[0] == '.' ? "0" + digits : digits);
        if (begin > 0 && s[begin - 1] == '-' && (begin == 1 || !is_alnum(s[begin - 2]))) v = -v;
        out.push_back(v);
    }
    return out;
}

bool has_number(std::string_view input) { return !extract_numbers(input).empty(); }

std::optional<double> numerical_accuracy(std::string_view response, std::string_view ground_truth,
                                         double rel_tolerance) {
    std::vector<double> truth;
    for (double g : extract_numbers(ground_truth)) {
        if (std::find(truth.begin(), truth.end(), g) == truth.end()) truth.push_back(g);
    }
    if (truth.empty()) return std::nullopt;
    const auto found = extract_numbers(response);
    std::size_t hit = 0;
    for (double g : truth) {
        for (double r : found) {
            if (std::fabs(r - g) <= rel_tolerance * std::max(std::fabs(g), std::fabs(r))) {
                ++hit;
                break;
            }
        }
    }
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::optional<std::vector<std::string>> parse_points(std::string_view output) {
    std::vector<std::string> points;
    bool none = false;
    std::istringstream in{std::string(output)};
    std::string line;
    while (std::getline(in, line)) {
        std::string t = text::trim(line);
        if (t.empty()) continue;
        if (t == "NONE" || t == "None" || t == "NONE.") {
            none = true;
            continue;
        }
        std::size_t skip = 0;
        if (t[0] == '-' || t[0] == '*' || t[0] == '+') {
            skip = 1;
        } else if (is_digit(t[0])) {
            std::size_t j = 0;
            while (j < t.size() && is_digit(t[j])) ++j;
            if (j < t.size() && (t[j] == '.' || t[j] == ')')) skip = j + 1;
        }
        if (skip == 0) continue;
        std::string p = text::trim(t.substr(skip));
        if (!p.empty()) points.push_back(std::move(p));
    }
    if (points.empty() && !none) return std::nullopt;
    return points;
}

// ---------------------------------------------------------------------------

Evaluator::Evaluator(model::LLMPort& judge, model::EmbeddingPort& embedder, MetricSettings settings)
    : judge_(judge), embedder_(embedder), settings_(std::move(settings)) {
    settings_.validate();
    for (const char* name : kPromptAssets) {
        auto it = settings_.prompt_overrides.find(name);
        prompts_[name] = assets::load("prompts/" + std::string(name) + ".txt",
                                      it == settings_.prompt_overrides.end() ? std::string{} : it->second);
    }
}

const std::unordered_set<std::string>& Evaluator::stopwords() const {
    return settings_.stopwords.empty() ? text::default_stopwords() : settings_.stopwords;
}

std::string Evaluator::prompt(std::string_view asset) const { return prompts_.at(std::string(asset)); }

std::optional<JudgeVerdict> Evaluator::judge(std::string_view prompt_asset, std::string_view task,
                                             const std::map<std::string, std::string>& fields) {
    model::GenerationRequest req;
    req.prompt = assets::render(prompt(prompt_asset), fields);
    req.task = std::string(task);
    req.fields = fields;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const std::string out = judge_.generate(req).text;
        if (auto score = model::parse_score(out)) {
            return JudgeVerdict{std::clamp(*score, 0.0, 1.0), rationale_of(out), out};
        }
        req.prompt += kScoreReminder;
    }
    return std::nullopt;
}

std::string Evaluator::context_text(const MetricInputs& in, bool numbered) const {
    std::string out;
    for (std::size_t i = 0; i < in.context_chunks.size(); ++i) {
        if (numbered) out += "[" + std::to_string(i + 1) + "] ";
        out += in.context_chunks[i] + "\n\n";
    }
    out = text::trim(out);
    if (out.size() > settings_.context_char_budget) out = std::string(text::utf8_prefix(out, settings_.context_char_budget));
    return out;
}

MetricScore Evaluator::key_terms_precision(const MetricInputs& in) const {
    std::string context;
    for (const auto& c : in.context_chunks) context += c + "\n";
    json ev;
    const double v = key_terms_precision_value(in.response, in.ground_truth, context, stopwords(), &ev);
    return make_score(MetricId::key_terms_precision, v, settings_.threshold(MetricId::key_terms_precision), ev);
}

MetricScore Evaluator::token_recall(const MetricInputs& in) const {
    json ev;
    const double v = token_recall_value(in.response, in.ground_truth, stopwords(), &ev);
    return make_score(MetricId::token_recall, v, settings_.threshold(MetricId::token_recall), ev);
}

MetricScore Evaluator::rubric(MetricId id, std::string_view asset, const MetricInputs& in) {
    const double thr = settings_.threshold(id);
    try {
        const auto verdict = judge(asset, model::task::judge,
                                   {{"metric", to_string(id)},
                                    {"question", in.question},
                                    {"response", in.response},
                                    {"ground_truth", in.ground_truth},
                                    {"context", context_text(in, true)}});
        if (!verdict) return failed_score(id, thr, "judge reply had no Score line after retry");
        return make_score(id, verdict->score, thr, {{"rationale", verdict->rationale}});
    } catch (const ModelError& e) {
        return failed_score(id, thr, e.what());
    }
}

MetricScore Evaluator::truthfulness(const MetricInputs& in) {
    return rubric(MetricId::truthfulness, "judge_truthfulness", in);
}

MetricScore Evaluator::completeness(const MetricInputs& in) {
    return rubric(MetricId::completeness, "judge_completeness", in);
}

MetricScore Evaluator::context_faithfulness(const MetricInputs& in) {
    return rubric(MetricId::context_faithfulness, "judge_context_faithfulness", in);
}

MetricScore Evaluator::source_relevance(const MetricInputs& in) {
    const MetricId id = MetricId::source_relevance;
    const double thr = settings_.threshold(id);
    if (in.context_chunks.empty()) return make_score(id, 0.0, thr, {{"note", "no passages retrieved"}});
    std::vector<double> scores;
    try {
        for (const auto& chunk : in.context_chunks) {
            const auto v = judge("judge_source_relevance", model::task::chunk_relevance,
                                 {{"question", in.question}, {"ground_truth", in.ground_truth}, {"chunk", chunk}});
            if (!v) return failed_score(id, thr, "judge reply had no Score line after retry", {{"chunk_scores", scores}});
            scores.push_back(v->score);
        }
    } catch (const ModelError& e) {
        return failed_score(id, thr, e.what(), {{"chunk_scores", scores}});
    }
    return make_score(id, source_relevance_value(scores), thr, {{"chunk_scores", scores}});
}

std::optional<std::vector<std::string>> Evaluator::extract_points(const std::string& txt) {
    if (text::trim(txt).empty()) return std::vector<std::string>{};
    model::GenerationRequest req;
    req.prompt = assets::render(prompt("extract_points"), {{"text", txt}});
    req.task = std::string(model::task::extract_points);
    req.fields = {{"text", txt}};
    for (int attempt = 0; attempt < 2; ++attempt) {
        if (auto pts = parse_points(judge_.generate(req).text)) {
            if (pts->size() > settings_.max_points) pts->resize(settings_.max_points);
            return pts;
        }
        req.prompt += kPointsReminder;
    }
    return std::nullopt;
}

MetricScore Evaluator::semantic_f1(const MetricInputs& in) {
    const MetricId id = MetricId::semantic_f1;
    const double thr = settings_.threshold(id);
    try {
        const auto truth_points = extract_points(in.ground_truth);
        const auto resp_points = extract_points(in.response);
        if (!truth_points || !resp_points) return failed_score(id, thr, "point extraction unparseable after retry");
        const auto embed = [&](const std::vector<std::string>& pts) {
            return pts.empty() ? std::vector<model::Embedding>{} : embedder_.embed(pts);
        };
        const auto f = point_f1(embed(*resp_points), embed(*truth_points), settings_.match_threshold);
        return make_score(id, f.f1, thr,
                          {{"response_points", *resp_points},
                           {"ground_truth_points", *truth_points},
                           {"precision", f.precision},
                           {"recall", f.recall}});
    } catch (const ModelError& e) {
        return failed_score(id, thr, e.what());
    }
}

MetricScore Evaluator::answer_relevance(const MetricInputs& in) {
    const MetricId id = MetricId::answer_relevance;
    const double thr = settings_.threshold(id);
    try {
        double cos = 0.0;
        if (!text::trim(in.response).empty() && !text::trim(in.question).empty()) {
            const auto v = embedder_.embed({in.question, in.response});
            cos = cosine(v[0], v[1]);
        }
        const auto verdict = judge("judge_answer_relevance", model::task::judge,
                                   {{"metric", to_string(id)}, {"question", in.question}, {"response", in.response}});
        if (!verdict) return failed_score(id, thr, "judge reply had no Score line after retry", {{"cosine", cos}});
        return make_score(id, answer_relevance_value(cos, verdict->score, settings_.relevance_blend), thr,
                          {{"cosine", cos}, {"judge", verdict->score}, {"rationale", verdict->rationale}});
    } catch (const ModelError& e) {
        return failed_score(id, thr, e.what());
    }
}

bool Evaluator::covers(const std::string& point, const model::Embedding& point_vec, const std::string& txt,
                       const std::vector<model::Embedding>& sentence_vecs, bool& failed) {
    double best = -1.0;
    for (const auto& s : sentence_vecs) best = std::max(best, cosine(point_vec, s));
    if (best < settings_.match_threshold) return false;
    const auto v = judge("coverage", model::task::coverage, {{"point", point}, {"text", txt}});
    if (!v) {
        failed = true;
        return false;
    }
    return v->score >= 0.5;
}

MetricScore Evaluator::completeness_gain(const MetricInputs& in) {
    const MetricId id = MetricId::completeness_gain;
    const double thr = settings_.threshold(id);
    try {
        const auto points = extract_points(context_text(in, false));
        if (!points) return failed_score(id, thr, "point extraction unparseable after retry");
        if (points->empty()) return make_score(id, 0.5, thr, {{"points", json::array()}, {"note", "no context points"}});

        const auto point_vecs = embedder_.embed(*points);
        const auto sentence_vecs = [&](const std::string& txt) {
            const auto sents = text::sentences(txt);
            return sents.empty() ? std::vector<model::Embedding>{} : embedder_.embed(sents);
        };
        const auto truth_vecs = sentence_vecs(in.ground_truth);
        const auto resp_vecs = sentence_vecs(in.response);

        bool failed = false;
        std::vector<std::string> by_truth, by_response;
        for (std::size_t i = 0; i < points->size(); ++i) {
            const auto& p = (*points)[i];
            if (covers(p, point_vecs[i], in.ground_truth, truth_vecs, failed)) by_truth.push_back(p);
            if (covers(p, point_vecs[i], in.response, resp_vecs, failed)) by_response.push_back(p);
            if (failed) return failed_score(id, thr, "coverage judge unparseable after retry");
        }
        const double n = static_cast<double>(points->size());
        const double cg = static_cast<double>(by_truth.size()) / n;
        const double cr = static_cast<double>(by_response.size()) / n;
        return make_score(id, completeness_gain_value(cr, cg), thr,
                          {{"points", *points},
                           {"covered_by_ground_truth", by_truth},
                           {"covered_by_response", by_response},
                           {"ground_truth_coverage", cg},
                           {"response_coverage", cr}});
    } catch (const ModelError& e) {
        return failed_score(id, thr, e.what());
    }
}

std::map<MetricId, MetricScore> Evaluator::score_all(const MetricInputs& in) {
    std::map<MetricId, MetricScore> out;
    out[MetricId::key_terms_precision] = key_terms_precision(in);
    out[MetricId::token_recall] = token_recall(in);

    using Fn = MetricScore (Evaluator::*)(const MetricInputs&);
    const std::pair<MetricId, Fn> model_metrics[] = {
        {MetricId::truthfulness, &Evaluator::truthfulness},
        {MetricId::completeness, &Evaluator::completeness},
        {MetricId::source_relevance, &Evaluator::source_relevance},
        {MetricId::context_faithfulness, &Evaluator::context_faithfulness},
        {MetricId::semantic_f1, &Evaluator::semantic_f1},
        {MetricId::answer_relevance, &Evaluator::answer_relevance},
        {MetricId::completeness_gain, &Evaluator::completeness_gain},
    };
    if (!settings_.parallel) {
        for (const auto& [id, fn] : model_metrics) out[id] = (this->*fn)(in);
        return out;
    }
    std::vector<std::pair<MetricId, std::future<MetricScore>>> pending;
    for (const auto& [id, fn] : model_metrics) {
        pending.emplace_back(id, std::async(std::launch::async, [this, fn = fn, &in] { return (this->*fn)(in); }));
    }
    for (auto& [id, f] : pending) out[id] = f.get();
    return out;
}

}  // namespace ragbench::metrics
