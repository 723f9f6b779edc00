#include "ragbench/dataset.hpp"

#include "ragbench/assets.hpp"
#include "ragbench/error.hpp"
#include "ragbench/metrics.hpp"
#include "ragbench/text.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ragbench {

using nlohmann::json;

std::string to_string(QATag t) {
    switch (t) {
        case QATag::factual: return "factual";
        case QATag::numerical: return "numerical";
        case QATag::multi_document: return "multi_document";
        case QATag::comparative: return "comparative";
    }
    return "factual";
}

QATag qa_tag_from_string(std::string_view s) {
    if (s == "factual") return QATag::factual;
    if (s == "numerical") return QATag::numerical;
    if (s == "multi_document") return QATag::multi_document;
    if (s == "comparative") return QATag::comparative;
    throw DatasetError("unknown tag '" + std::string(s) + "'");
}

json to_json(const QAPair& qa) {
    json j = {{"qa_id", qa.qa_id}, {"question", qa.question}, {"ground_truth", qa.ground_truth}};
    j["source_doc_ids"] = qa.source_doc_ids;
    json tags = json::array();
    for (auto t : qa.tags) tags.push_back(to_string(t));
    j["tags"] = tags;
    j["is_numeric"] = qa.is_numeric;
    if (qa.draft) j["draft"] = true;
    return j;
}

std::size_t ValidationReport::error_count() const {
    return static_cast<std::size_t>(std::count_if(issues.begin(), issues.end(), [](auto& i) { return i.error; }));
}

std::size_t ValidationReport::warning_count() const { return issues.size() - error_count(); }

std::string ValidationReport::format() const {
    std::string out;
    for (const auto& i : issues) {
        out += "line " + std::to_string(i.line) + ": " + (i.error ? "error: " : "warning: ") + i.message + "\n";
    }
    return out;
}

namespace {

const std::set<std::string> kKnownFields = {"qa_id", "question", "ground_truth", "source_doc_ids",
                                            "tags", "is_numeric", "draft"};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot read dataset file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

ValidationReport validate_dataset_text(std::string_view content) {
    ValidationReport report;
    std::map<std::string, std::size_t> seen;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        ++report.records;
        const auto error = [&](const std::string& m) { report.issues.push_back({lineno, true, m}); };
        const auto warn = [&](const std::string& m) { report.issues.push_back({lineno, false, m}); };

        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            error(std::string("malformed JSON: ") + e.what());
            continue;
        }
        if (!j.is_object()) {
            error("record is not a JSON object");
            continue;
        }
        const std::size_t errors_before = report.error_count();
        QAPair qa;
        const auto required_string = [&](const char* key, std::string& out) {
            if (!j.contains(key)) return error(std::string("missing field '") + key + "'");
            if (!j[key].is_string()) return error(std::string("field '") + key + "' must be a string");
            out = j[key].get<std::string>();
            if (text::trim(out).empty()) error(std::string("field '") + key + "' is empty");
        };
        required_string("qa_id", qa.qa_id);
        required_string("question", qa.question);
        required_string("ground_truth", qa.ground_truth);

        if (j.contains("source_doc_ids")) {
            const auto& ids = j["source_doc_ids"];
            if (!ids.is_array() || !std::all_of(ids.begin(), ids.end(), [](auto& v) { return v.is_string(); })) {
                error("field 'source_doc_ids' must be an array of strings");
            } else {
                qa.source_doc_ids = ids.get<std::vector<std::string>>();
            }
        }
        if (j.contains("tags")) {
            const auto& tags = j["tags"];
            if (!tags.is_array()) {
                error("field 'tags' must be an array");
            } else {
                for (const auto& t : tags) {
                    if (!t.is_string()) {
                        error("tags must be strings");
                        continue;
                    }
                    try {
                        qa.tags.push_back(qa_tag_from_string(t.get<std::string>()));
                    } catch (const DatasetError& e) {
                        error(e.what());
                    }
                }
            }
        }
        for (const char* key : {"is_numeric", "draft"}) {
            if (j.contains(key) && !j[key].is_boolean()) error(std::string("field '") + key + "' must be a boolean");
        }
        qa.is_numeric = j.contains("is_numeric") && j["is_numeric"].is_boolean() && j["is_numeric"].get<bool>();
        qa.draft = j.contains("draft") && j["draft"].is_boolean() && j["draft"].get<bool>();

        if (qa.is_numeric && !qa.ground_truth.empty() && !metrics::has_number(qa.ground_truth)) {
            error("is_numeric is true but ground_truth contains no number");
        }
        const bool numeric_tag = std::find(qa.tags.begin(), qa.tags.end(), QATag::numerical) != qa.tags.end();
        if (numeric_tag && !qa.is_numeric) warn("tagged numerical but is_numeric is false");
        if (qa.draft) warn("draft pair '" + qa.qa_id + "' has not been reviewed");
        for (const auto& [key, _] : j.items()) {
            if (!kKnownFields.contains(key)) warn("unknown field '" + key + "'");
        }

        if (!qa.qa_id.empty()) {
            auto [it, inserted] = seen.emplace(qa.qa_id, lineno);
            if (!inserted) {
                error("duplicate qa_id '" + qa.qa_id + "' (lines " + std::to_string(it->second) + " and " +
                      std::to_string(lineno) + ")");
            }
        }
        if (report.error_count() == errors_before) report.pairs.push_back(std::move(qa));
    }
    return report;
}

ValidationReport validate_dataset(const std::string& path) { return validate_dataset_text(read_file(path)); }

std::vector<QAPair> load_dataset(const std::string& path, bool allow_drafts) {
    auto report = validate_dataset(path);
    if (!report.accepted()) {
        throw DatasetError("dataset " + path + " has " + std::to_string(report.error_count()) + " error(s):\n" +
                           report.format());
    }
    if (report.pairs.empty()) throw DatasetError("dataset " + path + " is empty");
    if (!allow_drafts) {
        for (const auto& qa : report.pairs) {
            if (qa.draft) {
                throw DatasetError("dataset " + path + " contains unreviewed draft pair '" + qa.qa_id +
                                   "' (set allow_drafts to use it)");
            }
        }
    }
    return std::move(report.pairs);
}

void write_dataset(const std::string& path, const std::vector<QAPair>& pairs) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError("cannot write " + path);
    for (const auto& qa : pairs) out << to_json(qa).dump() << '\n';
    if (!out) throw DatasetError("write failed for " + path);
}

namespace {

struct DraftJob {
    const Document* a;
    const Document* b;  // null for single-document prompts
    std::string id_prefix;
};

std::vector<QAPair> parse_draft_reply(const std::string& reply, const DraftJob& job, std::vector<std::string>& warnings) {
    const std::string where = job.b ? job.a->doc_id + " + " + job.b->doc_id : job.a->doc_id;
    const auto open = reply.find('[');
    const auto close = reply.rfind(']');
    json arr;
    if (open != std::string::npos && close != std::string::npos && close > open) {
        arr = json::parse(reply.substr(open, close - open + 1), nullptr, false);
    }
    if (!arr.is_array()) {
        warnings.push_back(where + ": reply is not a JSON array; skipped");
        return {};
    }
    std::vector<QAPair> out;
    for (const auto& item : arr) {
        const auto str = [&](const char* k) {
            return item.is_object() && item.contains(k) && item[k].is_string() ? text::trim(item[k].get<std::string>())
                                                                               : std::string{};
        };
        QAPair qa;
        qa.question = str("question");
        qa.ground_truth = str("answer");
        if (qa.ground_truth.empty()) qa.ground_truth = str("ground_truth");
        if (qa.question.empty() || qa.ground_truth.empty()) {
            warnings.push_back(where + ": entry without question and answer; skipped");
            continue;
        }
        char idx[16];
        std::snprintf(idx, sizeof(idx), "-%02zu", out.size() + 1);
        qa.qa_id = job.id_prefix + idx;
        qa.source_doc_ids.push_back(job.a->doc_id);
        if (job.b) qa.source_doc_ids.push_back(job.b->doc_id);
        qa.is_numeric = metrics::has_number(qa.ground_truth);
        qa.tags.push_back(job.b ? QATag::multi_document : QATag::factual);
        if (qa.is_numeric) qa.tags.push_back(QATag::numerical);
        qa.draft = true;
        out.push_back(std::move(qa));
    }
    return out;
}

}  // namespace

DraftResult draft_qa_candidates(const std::vector<Document>& documents, model::LLMPort& llm,
                                const DraftOptions& options) {
    if (options.per_doc_count < 1) throw ConfigError("per_doc_count must be at least 1");
    std::vector<DraftJob> jobs;
    char buf[64];
    for (std::size_t i = 0; i < documents.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "draft-%04zu", i + 1);
        jobs.push_back({&documents[i], nullptr, buf});
    }
    if (options.pairwise) {
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < documents.size() && pairs < options.max_pairs; ++i) {
            for (std::size_t j = i + 1; j < documents.size() && pairs < options.max_pairs; ++j, ++pairs) {
                std::snprintf(buf, sizeof(buf), "draft-%04zux%04zu", i + 1, j + 1);
                jobs.push_back({&documents[i], &documents[j], buf});
            }
        }
    }

    const std::string single = std::string(assets::get("prompts/draft_single.txt"));
    const std::string pair = std::string(assets::get("prompts/draft_pair.txt"));
    const auto cut = [&](const std::string& s) { return std::string(text::utf8_prefix(s, options.document_char_budget)); };

    DraftResult result;
    for (const auto& job : jobs) {
        std::map<std::string, std::string> fields = {{"title", job.a->title},
                                                     {"document", cut(job.a->text)},
                                                     {"count", std::to_string(options.per_doc_count)},
                                                     {"mode", job.b ? "pair" : "single"}};
        if (job.b) {
            fields["title_b"] = job.b->title;
            fields["document_b"] = cut(job.b->text);
        }
        model::GenerationRequest req;
        req.prompt = assets::render(job.b ? pair : single, fields);
        req.task = std::string(model::task::draft_qa);
        req.fields = fields;
        std::string reply;
        try {
            reply = llm.generate(req).text;
        } catch (const ModelError& e) {
            result.warnings.push_back(job.a->doc_id + ": generation failed: " + e.what());
            continue;
        }
        for (auto& qa : parse_draft_reply(reply, job, result.warnings)) result.drafts.push_back(std::move(qa));
    }
    return result;
}

}  // namespace ragbench
