#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ragbench/corpus.hpp"
#include "ragbench/modelgw.hpp"

namespace ragbench {

enum class QATag { factual, numerical, multi_document, comparative };

std::string to_string(QATag t);
QATag qa_tag_from_string(std::string_view s);  // throws DatasetError

struct QAPair {
    std::string qa_id;
    std::string question;
    std::string ground_truth;
    std::vector<std::string> source_doc_ids;
    std::vector<QATag> tags;
    bool is_numeric = false;
    bool draft = false;
};

nlohmann::json to_json(const QAPair& qa);

struct ValidationIssue {
    std::size_t line = 0;  // 1-based
    bool error = true;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    std::vector<QAPair> pairs;  // every record that parsed without error
    std::size_t records = 0;    // non-blank lines

    std::size_t error_count() const;
    std::size_t warning_count() const;
    bool accepted() const { return error_count() == 0; }
    /// "line N: error: ..." lines.
    std::string format() const;
};

/// One JSON object per line. Blank lines are ignored.
ValidationReport validate_dataset_text(std::string_view content);
ValidationReport validate_dataset(const std::string& path);  // throws DatasetError if unreadable

/// Validated pairs. Throws DatasetError when the file has errors, or holds
/// draft pairs and `allow_drafts` is false.
std::vector<QAPair> load_dataset(const std::string& path, bool allow_drafts = false);

void write_dataset(const std::string& path, const std::vector<QAPair>& pairs);

struct DraftOptions {
    std::size_t per_doc_count = 3;
    bool pairwise = false;
    std::size_t max_pairs = 50;       // cap on document pairs prompted
    std::size_t document_char_budget = 6000;
};

struct DraftResult {
    std::vector<QAPair> drafts;  // all with draft = true
    std::vector<std::string> warnings;
};

/// Prompts the LLM once per document and, with `pairwise`, once per
/// document pair (i < j, in order, up to max_pairs). Replies must hold a
/// JSON array of {"question","answer"} objects; anything else is skipped
/// with a warning.
DraftResult draft_qa_candidates(const std::vector<Document>& documents, model::LLMPort& llm,
                                const DraftOptions& options = {});

}  // namespace ragbench
