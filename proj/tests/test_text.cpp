#include "vwsd/text.hpp"

#include <doctest.h>

using namespace vwsd;

TEST_SUITE("text") {

TEST_CASE("tokenize splits on whitespace and punctuation and lowercases") {
    CHECK(tokenize("Andromeda, the Tree!") == std::vector<std::string>{"andromeda", "the", "tree"});
    CHECK(tokenize("  \t\n") .empty());
    CHECK(tokenize("a-b_c") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("tokenize applies NFKC") {
    // U+FB01 LATIN SMALL LIGATURE FI, fullwidth A
    CHECK(tokenize("\xEF\xAC\x81sh \xEF\xBC\xA1") == std::vector<std::string>{"fish", "a"});
}

TEST_CASE("tokenize keeps non-latin scripts intact") {
    CHECK(tokenize("Albero di Natale") == std::vector<std::string>{"albero", "di", "natale"});
    // Persian: "derakht-e sib" with a ZWNJ-free spelling
    const auto toks = tokenize("\xD8\xAF\xD8\xB1\xD8\xAE\xD8\xAA \xD8\xB3\xDB\x8C\xD8\xA8");
    CHECK(toks.size() == 2);
}

TEST_CASE("context word drops the first occurrence of the target") {
    CHECK(context_word("andromeda", "andromeda tree") == "tree");
    CHECK(context_word("bank", "river bank") == "river");
    CHECK(context_word("bank", "bank of the bank") == "of the bank");
    CHECK(context_word("ice cream", "ice cream cone") == "cone");
}

TEST_CASE("context word falls back to the target") {
    CHECK(context_word("Tree", "tree") == "tree");
    CHECK(context_word("x", "") == "x");
}

TEST_CASE("context word without the target keeps the whole context") {
    CHECK(context_word("pen", "fountain ink") == "fountain ink");
}

TEST_CASE("join tokens") {
    CHECK(join_tokens({"a", "b", "c"}) == "a b c");
    CHECK(join_tokens({}) == "");
}

}
