#include <doctest.h>

#include "qaforge/hash.hpp"
#include "qaforge/random.hpp"
#include "qaforge/text.hpp"
#include "support.hpp"

using namespace qaforge;

TEST_SUITE("text") {

TEST_CASE("utf8 round trip") {
    for (std::string s : {"", "abc", "Żelazowa Wola", "Дворжак", "Antonín Dvořák ✓"})
        CHECK(text::encode_utf8(text::decode_utf8(s)) == s);
}

TEST_CASE("case folding covers Latin, Polish, Greek and Cyrillic") {
    CHECK(text::fold_case("ABC xyz") == "abc xyz");
    CHECK(text::fold_case("ŻÓŁĆ") == "żółć");
    CHECK(text::fold_case("ÀÉÎ") == "àéî");
    CHECK(text::fold_case("ΑΒΓ") == "αβγ");
    CHECK(text::fold_case("МОСКВА") == "москва");
}

TEST_CASE("whitespace helpers") {
    CHECK(text::collapse_whitespace("  a \t b\n\nc  ") == "a b c");
    CHECK(text::split_whitespace(" a  b ") == std::vector<std::string>{"a", "b"});
    auto toks = text::tokenize_with_offsets("ab  cd");
    REQUIRE(toks.size() == 2);
    CHECK(toks[1].begin == 4);
    CHECK(toks[1].end == 6);
}

TEST_CASE("punctuation helpers") {
    CHECK(text::remove_punctuation("a,b.c!") == "abc");
    CHECK(text::trim_punctuation("\"(Bonn),\"") == "Bonn");
    CHECK(text::trim_punctuation("e.g.") == "e.g");
    CHECK(text::starts_with_folded("Where was", "wHERE"));
}

TEST_CASE("lcs length") {
    std::vector<std::string> a{"a", "b", "c", "d"}, b{"a", "c", "d", "x"};
    CHECK(text::lcs_length(std::span<const std::string>(a), std::span<const std::string>(b)) == 3);
    CHECK(text::lcs_length(U"kitten", U"sitting") == 4);
}

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("seeded permutations are permutations and reproducible") {
    for (std::size_t n : {0u, 1u, 2u, 17u, 200u}) {
        auto p = seeded_permutation(n, 42);
        auto sorted = p;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < n; ++i) CHECK(sorted[i] == i);
        CHECK(p == seeded_permutation(n, 42));
    }
    CHECK(seeded_permutation(50, 1) != seeded_permutation(50, 2));
}

TEST_CASE("bounded draws stay in range") {
    std::mt19937_64 rng(5);
    for (std::uint64_t bound : {1ull, 2ull, 3ull, 1000ull}) {
        for (int i = 0; i < 200; ++i) CHECK(bounded_draw(rng, bound) < bound);
    }
}

}
