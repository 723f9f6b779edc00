#include <doctest.h>

#include "ragbench/text.hpp"

using namespace ragbench::text;

namespace {

std::vector<std::string> token_texts(std::string_view s) {
    std::vector<std::string> out;
    for (const auto& t : tokenize(s)) out.push_back(t.text);
    return out;
}

}  // namespace

TEST_SUITE("text") {

TEST_CASE("hyphenated compound splits at every hyphen") {
    CHECK(token_texts("state-of-the-art") ==
          std::vector<std::string>{"state", "-", "of", "-", "the", "-", "art"});
}

TEST_CASE("mid-word joiners") {
    CHECK(token_texts("e.g. U.S. rules") == std::vector<std::string>{"e.g", ".", "U.S", ".", "rules"});
    CHECK(token_texts("don't") == std::vector<std::string>{"don't"});
    CHECK(token_texts("pi is 3.14, not 1,000.") == std::vector<std::string>{"pi", "is", "3.14", ",", "not", "1,000", "."});
    CHECK(token_texts("snake_case x2") == std::vector<std::string>{"snake_case", "x2"});
}

TEST_CASE("token kinds and offsets") {
    const std::string s = "Add 42%!";
    const auto toks = tokenize(s);
    REQUIRE(toks.size() == 4);
    CHECK(toks[0].kind == TokenKind::word);
    CHECK(toks[1].kind == TokenKind::number);
    CHECK(toks[2].kind == TokenKind::punct);
    for (const auto& t : toks) CHECK(s.substr(t.begin, t.end - t.begin) == t.text);
}

TEST_CASE("non-ASCII letters stay in words") {
    CHECK(token_texts("Café naïve Ωmega") == std::vector<std::string>{"Café", "naïve", "Ωmega"});
    CHECK(to_lower("ÉCOLE Ω") == "école ω");
}

TEST_CASE("terms drop punctuation and lowercase") {
    CHECK(terms("Hello, World!") == std::vector<std::string>{"hello", "world"});
}

TEST_CASE("sentence splitting") {
    CHECK(sentences("One. Two! Three?") == std::vector<std::string>{"One.", "Two!", "Three?"});
    CHECK(sentences("Dr. Smith arrived. He sat.") == std::vector<std::string>{"Dr. Smith arrived.", "He sat."});
    CHECK(sentences("See e.g. the list. Then stop.") ==
          std::vector<std::string>{"See e.g. the list.", "Then stop."});
    CHECK(sentences("J. R. Tolkien wrote it. Yes.") ==
          std::vector<std::string>{"J. R. Tolkien wrote it.", "Yes."});
    CHECK(sentences("He said \"stop.\" Then left.") == std::vector<std::string>{"He said \"stop.\"", "Then left."});
    CHECK(sentences("Growth was 5. 2020 was worse.") == std::vector<std::string>{"Growth was 5.", "2020 was worse."});
    CHECK(sentences("lower case. continues here") == std::vector<std::string>{"lower case. continues here"});
    CHECK(sentences("Heading\n\nBody text") == std::vector<std::string>{"Heading", "Body text"});
    CHECK(sentences("").empty());
}

TEST_CASE("sentence spans cover every token exactly once") {
    const std::string s = "A first one. And a second, longer one! Third?\n\nFourth without end";
    const auto toks = tokenize(s);
    const auto spans = split_sentences(s, toks);
    REQUIRE(!spans.empty());
    CHECK(spans.front().first == 0);
    CHECK(spans.back().last == toks.size());
    for (std::size_t i = 1; i < spans.size(); ++i) CHECK(spans[i].first == spans[i - 1].last);
}

TEST_CASE("stop words and content terms") {
    const auto& stop = default_stopwords();
    CHECK(stop.contains("the"));
    CHECK(stop.contains("and"));
    CHECK_FALSE(stop.contains("solar"));
    CHECK(stop.size() >= 150);
    CHECK(content_terms("The solar and the Solar wind", stop) == std::vector<std::string>{"solar", "wind"});
    CHECK(parse_word_list("# comment\nfoo\n\n Bar \n") == std::unordered_set<std::string>{"foo", "bar"});
}

TEST_CASE("utf8_prefix never splits a code point") {
    const std::string s = "aé";  // 'a' + 2-byte sequence
    CHECK(utf8_prefix(s, 2) == "a");
    CHECK(utf8_prefix(s, 3) == s);
    CHECK(utf8_prefix(s, 10) == s);
    CHECK(trim("  x y \n") == "x y");
}

}
