#include "ragbench/text.hpp"

#include "ragbench/assets.hpp"
#include "ragbench/error.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ragbench::text {

namespace {

struct CodePoint {
    char32_t value = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
};

enum class CharClass { space, punct, letter, digit, underscore };

std::vector<CodePoint> decode(std::string_view s) {
    std::vector<CodePoint> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto lead = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        char32_t cp = lead;
        if (lead >= 0xF0 && lead < 0xF8) {
            len = 4;
            cp = lead & 0x07;
        } else if (lead >= 0xE0) {
            len = 3;
            cp = lead & 0x0F;
        } else if (lead >= 0xC0) {
            len = 2;
            cp = lead & 0x1F;
        }
        bool valid = lead < 0x80 || (lead >= 0xC0 && lead < 0xF8 && i + len <= s.size());
        for (std::size_t k = 1; valid && k < len; ++k) {
            const auto cont = static_cast<unsigned char>(s[i + k]);
            if ((cont & 0xC0) != 0x80) {
                valid = false;
            } else {
                cp = (cp << 6) | (cont & 0x3F);
            }
        }
        if (!valid) {
            len = 1;
            cp = 0xFFFD;
        }
        out.push_back({cp, i, i + len});
        i += len;
    }
    return out;
}

void encode(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool in(char32_t c, char32_t lo, char32_t hi) { return c >= lo && c <= hi; }

CharClass classify(char32_t c) {
    if (c < 0x80) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') return CharClass::space;
        if (c >= '0' && c <= '9') return CharClass::digit;
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return CharClass::letter;
        if (c == '_') return CharClass::underscore;
        if (c < 0x20 || c == 0x7F) return CharClass::space;
        return CharClass::punct;
    }
    if (c == 0x85 || c == 0xA0 || c == 0x1680 || in(c, 0x2000, 0x200B) || c == 0x2028 || c == 0x2029 ||
        c == 0x202F || c == 0x205F || c == 0x3000 || c == 0xFEFF) {
        return CharClass::space;
    }
    if (in(c, 0xA1, 0xBF)) {
        // Latin-1 punctuation block, minus the letter-like and numeric signs.
        if (c == 0xAA || c == 0xB2 || c == 0xB3 || c == 0xB5 || c == 0xB9 || c == 0xBA || in(c, 0xBC, 0xBE)) {
            return CharClass::letter;
        }
        return CharClass::punct;
    }
    if (c == 0xD7 || c == 0xF7) return CharClass::punct;
    if (in(c, 0x2010, 0x2027) || in(c, 0x2030, 0x205E) || in(c, 0x20A0, 0x20CF) || in(c, 0x2190, 0x23FF) ||
        in(c, 0x2500, 0x27BF) || in(c, 0x2E00, 0x2E7F) || in(c, 0x3001, 0x3003) || in(c, 0x3008, 0x3011) ||
        in(c, 0xFF01, 0xFF0F) || in(c, 0xFF1A, 0xFF20) || in(c, 0xFF3B, 0xFF40) || in(c, 0xFF5B, 0xFF65) ||
        in(c, 0x1F300, 0x1FAFF)) {
        return CharClass::punct;
    }
    return CharClass::letter;
}

bool is_wordish(CharClass c) {
    return c == CharClass::letter || c == CharClass::digit || c == CharClass::underscore;
}

bool is_apostrophe(char32_t c) { return c == '\'' || c == 0x2019; }

char32_t lower_cp(char32_t c) {
    if (c >= 'A' && c <= 'Z') return c + 32;
    if (c < 0x80) return c;
    if (in(c, 0xC0, 0xDE) && c != 0xD7) return c + 32;
    if (in(c, 0x100, 0x137) || in(c, 0x14A, 0x177)) return (c % 2 == 0) ? c + 1 : c;
    if (in(c, 0x139, 0x148) || in(c, 0x179, 0x17E)) return (c % 2 == 1) ? c + 1 : c;
    if (in(c, 0x391, 0x3A9) && c != 0x3A2) return c + 32;
    if (in(c, 0x410, 0x42F)) return c + 32;
    if (in(c, 0x400, 0x40F)) return c + 80;
    return c;
}

bool is_upper_start(std::string_view word) {
    const auto cps = decode(word);
    if (cps.empty()) return false;
    const char32_t c = cps.front().value;
    return lower_cp(c) != c;
}

bool is_digit_start(std::string_view word) { return !word.empty() && word.front() >= '0' && word.front() <= '9'; }

bool is_terminal(std::string_view t) {
    return t == "." || t == "!" || t == "?" || t == "\xE2\x80\xA6" /* … */ || t == "\xE3\x80\x82" /* 。 */ ||
           t == "\xEF\xBC\x81" || t == "\xEF\xBC\x9F";
}

bool is_closer(std::string_view t) {
    return t == "\"" || t == "'" || t == ")" || t == "]" || t == "}" || t == "\xE2\x80\x9D" /* ” */ ||
           t == "\xE2\x80\x99" /* ’ */ || t == "\xC2\xBB" /* » */;
}

bool is_opener(std::string_view t) {
    return t == "\"" || t == "'" || t == "(" || t == "[" || t == "{" || t == "\xE2\x80\x9C" /* “ */ ||
           t == "\xE2\x80\x98" /* ‘ */ || t == "\xC2\xAB" /* « */ || t == "*" || t == "-";
}

const std::unordered_set<std::string>& abbreviations() {
    static const std::unordered_set<std::string> set = {
        "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "inc", "ltd", "co", "corp", "fig", "figs",
        "no", "nos", "vol", "approx", "dept", "est", "gen", "gov", "sen", "rep", "rev", "hon", "capt", "col",
        "lt", "sgt", "mt", "ft", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov",
        "dec", "e.g", "i.e", "cf", "al", "u.s", "u.k", "a.m", "p.m", "ph.d", "eq", "sec", "ch", "pp", "p"};
    return set;
}

bool has_blank_line(std::string_view gap) {
    int newlines = 0;
    for (char c : gap) {
        if (c == '\n') {
            if (++newlines >= 2) return true;
        } else if (c != ' ' && c != '\t' && c != '\r') {
            newlines = 0;
        }
    }
    return false;
}

}  // namespace

std::vector<Token> tokenize(std::string_view input) {
    const auto cps = decode(input);
    std::vector<Token> tokens;
    std::size_t i = 0;
    const std::size_t n = cps.size();
    while (i < n) {
        const CharClass cls = classify(cps[i].value);
        if (cls == CharClass::space) {
            ++i;
            continue;
        }
        if (cls == CharClass::punct) {
            const auto& cp = cps[i];
            tokens.push_back({std::string(input.substr(cp.begin, cp.end - cp.begin)), cp.begin, cp.end,
                              TokenKind::punct});
            ++i;
            continue;
        }
        std::size_t j = i;
        bool has_letter = false;
        while (j < n) {
            const CharClass c = classify(cps[j].value);
            if (is_wordish(c)) {
                has_letter = has_letter || c == CharClass::letter || c == CharClass::underscore;
                ++j;
                continue;
            }
            // Mid-word joiners need word material on both sides.
            if (c == CharClass::punct && j > i && j + 1 < n) {
                const CharClass prev = classify(cps[j - 1].value);
                const CharClass next = classify(cps[j + 1].value);
                const char32_t v = cps[j].value;
                const bool letters = prev == CharClass::letter && next == CharClass::letter;
                const bool digits = prev == CharClass::digit && next == CharClass::digit;
                if ((letters && (v == '.' || is_apostrophe(v))) || (digits && (v == '.' || v == ','))) {
                    ++j;
                    continue;
                }
            }
            break;
        }
        tokens.push_back({std::string(input.substr(cps[i].begin, cps[j - 1].end - cps[i].begin)), cps[i].begin,
                          cps[j - 1].end, has_letter ? TokenKind::word : TokenKind::number});
        i = j;
    }
    return tokens;
}

std::string to_lower(std::string_view input) {
    std::string out;
    out.reserve(input.size());
    for (const auto& cp : decode(input)) {
        if (cp.value == 0xFFFD && cp.end - cp.begin == 1) {
            out.append(input.substr(cp.begin, 1));
        } else {
            encode(lower_cp(cp.value), out);
        }
    }
    return out;
}

std::vector<std::string> terms(std::string_view input) {
    std::vector<std::string> out;
    for (const auto& tok : tokenize(input)) {
        if (tok.is_word()) out.push_back(to_lower(tok.text));
    }
    return out;
}

std::vector<SentenceSpan> split_sentences(std::string_view source, const std::vector<Token>& tokens) {
    std::vector<SentenceSpan> spans;
    const std::size_t n = tokens.size();
    std::size_t start = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t boundary_after = n;  // n means "no boundary"
        if (i + 1 < n && has_blank_line(source.substr(tokens[i].end, tokens[i + 1].begin - tokens[i].end))) {
            boundary_after = i;
        } else if (is_terminal(tokens[i].text)) {
            bool abbreviation = false;
            if (tokens[i].text == "." && i > 0 && tokens[i - 1].end == tokens[i].begin &&
                tokens[i - 1].kind == TokenKind::word) {
                const std::string prev = to_lower(tokens[i - 1].text);
                const bool initial = decode(tokens[i - 1].text).size() == 1 && is_upper_start(tokens[i - 1].text);
                abbreviation = initial || abbreviations().contains(prev);
            }
            std::size_t last = i;
            while (last + 1 < n && (is_terminal(tokens[last + 1].text) || is_closer(tokens[last + 1].text)) &&
                   tokens[last + 1].begin == tokens[last].end) {
                ++last;
            }
            std::size_t next = last + 1;
            while (next < n && is_opener(tokens[next].text)) ++next;
            if (next >= n) {
                boundary_after = last;
            } else if (!abbreviation) {
                const Token& follower = tokens[next];
                const bool separated = tokens[last + 1].begin > tokens[last].end;
                if (separated && (is_upper_start(follower.text) || is_digit_start(follower.text))) {
                    boundary_after = last;
                }
            }
            if (boundary_after != n) i = boundary_after;
        }
        if (boundary_after != n) {
            spans.push_back({start, boundary_after + 1});
            start = boundary_after + 1;
        }
    }
    if (start < n) spans.push_back({start, n});
    return spans;
}

std::vector<std::string> sentences(std::string_view input) {
    const auto tokens = tokenize(input);
    std::vector<std::string> out;
    for (const auto& span : split_sentences(input, tokens)) {
        const std::size_t b = tokens[span.first].begin;
        const std::size_t e = tokens[span.last - 1].end;
        out.emplace_back(input.substr(b, e - b));
    }
    return out;
}

std::unordered_set<std::string> parse_word_list(std::string_view content) {
    std::unordered_set<std::string> out;
    std::istringstream in{std::string(content)};
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto word = trim(line);
        if (!word.empty()) out.insert(to_lower(word));
    }
    return out;
}

const std::unordered_set<std::string>& default_stopwords() {
    static const std::unordered_set<std::string> set = parse_word_list(assets::get("stopwords_en.txt"));
    return set;
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read stop-word list: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_word_list(ss.str());
}

std::vector<std::string> content_terms(std::string_view input, const std::unordered_set<std::string>& stopwords) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (auto& term : terms(input)) {
        if (stopwords.contains(term)) continue;
        if (seen.insert(term).second) out.push_back(std::move(term));
    }
    return out;
}

std::string_view utf8_prefix(std::string_view input, std::size_t max_bytes) {
    if (input.size() <= max_bytes) return input;
    std::size_t cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(input[cut]) & 0xC0) == 0x80) --cut;
    return input.substr(0, cut);
}

std::string trim(std::string_view input) {
    const auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    std::size_t b = 0;
    std::size_t e = input.size();
    while (b < e && is_ws(input[b])) ++b;
    while (e > b && is_ws(input[e - 1])) --e;
    return std::string(input.substr(b, e - b));
}

}  // namespace ragbench::text
