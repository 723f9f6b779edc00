#include "ragbench/corpus.hpp"

#include "ragbench/error.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;

namespace ragbench {

namespace {

bool is_markdown(const fs::path& p) {
    const auto ext = text::to_lower(p.extension().string());
    return ext == ".md" || ext == ".markdown";
}

bool is_supported(const fs::path& p) {
    const auto ext = text::to_lower(p.extension().string());
    return ext == ".txt" || ext == ".md" || ext == ".markdown";
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw CorpusError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string strip_inline(std::string line) {
    static const std::regex image(R"(!\[([^\]]*)\]\([^)]*\))");
    static const std::regex link(R"(\[([^\]]+)\]\([^)]*\))");
    static const std::regex ref_link(R"(\[([^\]]+)\]\[[^\]]*\])");
    static const std::regex html_tag(R"(</?[A-Za-z][^>]*>)");
    static const std::regex strong(R"((\*\*|__)(\S(?:.*?\S)?)\1)");
    static const std::regex emphasis(R"((^|[^\w*])\*(\S(?:.*?\S)?)\*)");
    static const std::regex code(R"(`([^`]*)`)");
    line = std::regex_replace(line, image, "$1");
    line = std::regex_replace(line, link, "$1");
    line = std::regex_replace(line, ref_link, "$1");
    line = std::regex_replace(line, html_tag, "");
    line = std::regex_replace(line, code, "$1");
    line = std::regex_replace(line, strong, "$2");
    line = std::regex_replace(line, emphasis, "$1$2");
    return line;
}

std::string first_heading(const std::string& markdown) {
    static const std::regex heading(R"(^\s{0,3}#{1,6}\s+(.*?)\s*#*\s*$)");
    std::istringstream in(markdown);
    std::string line;
    std::smatch m;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (std::regex_match(line, m, heading)) return text::trim(strip_inline(m[1].str()));
    }
    return {};
}

}  // namespace

std::string normalize_text(const std::string& raw) {
    std::string s = raw;
    if (s.rfind("\xEF\xBB\xBF", 0) == 0) s.erase(0, 3);
    std::string out;
    out.reserve(s.size());
    std::istringstream in(s);
    std::string line;
    int blank_run = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
        if (line.empty()) {
            if (++blank_run > 1) continue;
        } else {
            blank_run = 0;
        }
        out += line;
        out += '\n';
    }
    return text::trim(out);
}

std::string strip_markdown(const std::string& markdown) {
    static const std::regex heading(R"(^\s{0,3}#{1,6}\s+(.*?)\s*#*\s*$)");
    static const std::regex setext_rule(R"(^\s{0,3}(=+|-+)\s*$)");
    static const std::regex hrule(R"(^\s{0,3}([-*_])(\s*\1){2,}\s*$)");
    static const std::regex list_item(R"(^\s*(?:[-*+]|\d+[.)])\s+(.*)$)");
    static const std::regex quote(R"(^\s*>\s?(.*)$)");
    static const std::regex table_rule(R"(^\s*\|?\s*:?-{3,}:?\s*(\|\s*:?-{3,}:?\s*)*\|?\s*$)");
    static const std::regex fence(R"(^\s{0,3}(```|~~~).*$)");

    std::istringstream in(markdown);
    std::ostringstream out;
    std::string line;
    std::smatch m;
    bool in_fence = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (std::regex_match(line, fence)) {
            in_fence = !in_fence;
            out << '\n';
            continue;
        }
        if (in_fence) {
            out << line << '\n';
            continue;
        }
        if (std::regex_match(line, m, heading)) {
            out << '\n' << strip_inline(m[1].str()) << "\n\n";
            continue;
        }
        if (std::regex_match(line, hrule) || std::regex_match(line, setext_rule) ||
            std::regex_match(line, table_rule)) {
            out << '\n';
            continue;
        }
        while (std::regex_match(line, m, quote)) line = m[1].str();
        if (std::regex_match(line, m, list_item)) {
            out << '\n' << strip_inline(m[1].str()) << "\n\n";
            continue;
        }
        if (line.find('|') != std::string::npos) {
            std::replace(line.begin(), line.end(), '|', ' ');
        }
        out << strip_inline(line) << '\n';
    }
    return out.str();
}

CorpusLoad load_corpus(const std::string& directory) {
    const fs::path root(directory);
    std::error_code ec;
    if (!fs::exists(root, ec)) throw CorpusError("corpus path not found: " + directory);
    if (!fs::is_directory(root, ec)) throw CorpusError("corpus path is not a directory: " + directory);

    std::vector<fs::path> files;
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
    if (ec) throw CorpusError("cannot read corpus directory " + directory + ": " + ec.message());
    for (const auto& entry : it) {
        if (entry.is_regular_file() && is_supported(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
        return a.lexically_relative(root).generic_string() < b.lexically_relative(root).generic_string();
    });

    CorpusLoad result;
    for (const auto& path : files) {
        const std::string rel = path.lexically_relative(root).generic_string();
        std::string raw;
        try {
            raw = read_file(path);
        } catch (const CorpusError& e) {
            result.warnings.push_back(std::string(e.what()) + "; skipped");
            continue;
        }
        Document doc;
        doc.doc_id = rel;
        doc.source_path = path.string();
        if (is_markdown(path)) {
            doc.title = first_heading(raw);
            doc.text = normalize_text(strip_markdown(raw));
        } else {
            doc.text = normalize_text(raw);
        }
        if (doc.title.empty()) doc.title = path.stem().string();
        if (doc.text.empty()) {
            result.warnings.push_back(rel + ": empty after normalization; skipped");
            continue;
        }
        result.documents.push_back(std::move(doc));
    }
    if (result.documents.empty()) throw CorpusError("no documents found in " + directory);
    return result;
}

std::vector<TokenSpan> pack_sentences(const std::vector<std::size_t>& sentence_starts, std::size_t token_count,
                                      const ChunkingParams& params) {
    const std::size_t size = params.chunk_size;
    if (size == 0) throw ConfigError("chunk_size must be positive");
    if (params.overlap >= size) throw ConfigError("overlap must be smaller than chunk_size");
    if (token_count == 0) return {};

    // Packing units: sentences, with oversize sentences cut into chunk_size pieces.
    std::vector<std::size_t> unit_start;
    std::vector<std::size_t> unit_end;
    for (std::size_t k = 0; k < sentence_starts.size(); ++k) {
        const std::size_t s = sentence_starts[k];
        const std::size_t e = k + 1 < sentence_starts.size() ? sentence_starts[k + 1] : token_count;
        for (std::size_t p = s; p < e; p += size) {
            unit_start.push_back(p);
            unit_end.push_back(std::min(e, p + size));
        }
    }
    if (unit_start.empty() || unit_start.front() != 0) throw ConfigError("sentence starts must begin at token 0");

    const auto unit_containing = [&](std::size_t pos) {
        return static_cast<std::size_t>(std::upper_bound(unit_start.begin(), unit_start.end(), pos) -
                                        unit_start.begin()) -
               1;
    };

    std::vector<TokenSpan> spans;
    std::size_t pos = 0;
    while (true) {
        std::size_t j = unit_containing(pos);
        std::size_t end = unit_end[j++];
        while (j < unit_start.size() && unit_end[j] - pos <= size) end = unit_end[j++];
        spans.push_back({pos, end});
        if (end >= token_count) break;

        // The next window must contain unit j (progress) and start after pos.
        const std::size_t lower = std::max(pos + 1, unit_end[j] > size ? unit_end[j] - size : 0);
        const std::size_t target = end > params.overlap ? end - params.overlap : 0;
        std::size_t next = end;
        if (target >= lower) {
            // Snap backward to the nearest sentence start not before `lower`.
            auto it = std::upper_bound(unit_start.begin(), unit_start.end(), target);
            const std::size_t snapped = *std::prev(it);
            next = snapped >= lower ? snapped : target;
        } else {
            next = *std::lower_bound(unit_start.begin(), unit_start.end(), lower);
        }
        pos = next;
    }
    return spans;
}

std::string make_chunk_id(const std::string& doc_id, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "#%05zu", index);
    return doc_id + buf;
}

std::vector<Chunk> chunk_document(const Document& doc, const ChunkingParams& params) {
    if (params.chunk_size == 0) throw ConfigError("chunk_size must be positive");
    if (params.overlap >= params.chunk_size) throw ConfigError("overlap must be smaller than chunk_size");

    const auto tokens = text::tokenize(doc.text);
    if (tokens.empty()) return {};
    std::vector<std::size_t> starts;
    for (const auto& s : text::split_sentences(doc.text, tokens)) starts.push_back(s.first);

    std::vector<Chunk> chunks;
    for (const auto& span : pack_sentences(starts, tokens.size(), params)) {
        Chunk c;
        c.chunk_id = make_chunk_id(doc.doc_id, chunks.size());
        c.doc_id = doc.doc_id;
        const std::size_t b = tokens[span.start].begin;
        const std::size_t e = tokens[span.end - 1].end;
        c.text = doc.text.substr(b, e - b);
        c.token_span = span;
        c.token_count = span.end - span.start;
        chunks.push_back(std::move(c));
    }
    return chunks;
}

std::vector<Chunk> chunk_corpus(const std::vector<Document>& docs, const ChunkingParams& params) {
    std::vector<Chunk> all;
    for (const auto& d : docs) {
        auto chunks = chunk_document(d, params);
        all.insert(all.end(), std::make_move_iterator(chunks.begin()), std::make_move_iterator(chunks.end()));
    }
    return all;
}

}  // namespace ragbench
