#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace ragbench::text {

enum class TokenKind { word, number, punct };

/// A token is a view into the source text by byte offsets.
struct Token {
    std::string text;
    std::size_t begin = 0;  // byte offset, inclusive
    std::size_t end = 0;    // byte offset, exclusive
    TokenKind kind = TokenKind::word;

    bool is_word() const { return kind != TokenKind::punct; }
};

/// Word segmentation loosely following the Unicode word-boundary rules:
/// runs of letters/digits (joined across "_", and across "." or an
/// apostrophe between letters, and "." or "," between digits) form one
/// token; every punctuation or symbol code point is its own token;
/// whitespace separates and is dropped.
std::vector<Token> tokenize(std::string_view input);

/// Lowercases ASCII, Latin-1, Latin Extended-A, basic Greek and Cyrillic.
std::string to_lower(std::string_view input);

/// Lowercased word/number tokens (punctuation dropped).
std::vector<std::string> terms(std::string_view input);

/// Token index ranges [first, last) of sentences.
struct SentenceSpan {
    std::size_t first = 0;
    std::size_t last = 0;
};

/// Rule-based sentence boundaries over a token sequence of `source`:
/// terminal punctuation followed by a capitalized word, a digit or the end
/// of text, except after a known abbreviation; blank lines always split.
std::vector<SentenceSpan> split_sentences(std::string_view source, const std::vector<Token>& tokens);

/// Convenience: sentence strings of a text.
std::vector<std::string> sentences(std::string_view input);

/// Parses a word list: one word per line, '#' starts a comment.
std::unordered_set<std::string> parse_word_list(std::string_view content);

/// Built-in English stop-word list.
const std::unordered_set<std::string>& default_stopwords();

std::unordered_set<std::string> load_stopwords(const std::string& path);

/// Unique lowercased non-stop terms, in first-occurrence order.
std::vector<std::string> content_terms(std::string_view input, const std::unordered_set<std::string>& stopwords);

/// Largest prefix of `input` no longer than `max_bytes` that ends on a
/// UTF-8 code point boundary.
std::string_view utf8_prefix(std::string_view input, std::size_t max_bytes);

std::string trim(std::string_view input);

}  // namespace ragbench::text
