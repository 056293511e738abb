#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "cochain/text.hpp"
#include "doctest.h"

using namespace cochain::text;

TEST_CASE("canonicalize folds case and collapses whitespace") {
    CHECK(canonicalize("  Carbon   Fiber ") == "carbon fiber");
    CHECK(canonicalize("STAMPING") == "stamping");
    CHECK(canonicalize("a\tb\n c") == "a b c");
    CHECK(canonicalize("") == "");
    CHECK(canonicalize("   ") == "");
    CHECK(canonicalize("already canonical") == "already canonical");
}

TEST_CASE("alnum_tokens splits on non-alphanumeric boundaries") {
    CHECK(alnum_tokens("Cost-optimization!") == std::vector<std::string>{"cost", "optimization"});
    CHECK(alnum_tokens("a1 b2") == std::vector<std::string>{"a1", "b2"});
    CHECK(alnum_tokens("...") == std::vector<std::string>{});
    CHECK(alnum_tokens("(carbon fiber | requires | molding)") ==
          std::vector<std::string>{"carbon", "fiber", "requires", "molding"});
}

TEST_CASE("whitespace_tokens keeps punctuation attached") {
    CHECK(whitespace_tokens("Hello, World!") == std::vector<std::string>{"hello,", "world!"});
    CHECK(whitespace_tokens("  a  b ") == std::vector<std::string>{"a", "b"});
    CHECK(whitespace_tokens("") == std::vector<std::string>{});
}

TEST_CASE("count_tokens counts whitespace-separated chunks") {
    CHECK(count_tokens("one two three") == 3);
    CHECK(count_tokens("") == 0);
    CHECK(count_tokens("   ") == 0);
    CHECK(count_tokens("a\nb\tc d") == 4);
    CHECK(count_tokens("don't-split, punctuation!") == 2);
}

TEST_CASE("trim strips both ends only") {
    CHECK(trim("  mid  dle  ") == "mid  dle");
    CHECK(trim("\r\n x \r\n") == "x");
    CHECK(trim("") == "");
}

TEST_CASE("split_lines handles bare and CRLF endings") {
    CHECK(split_lines("a\nb\nc") == std::vector<std::string>{"a", "b", "c"});
    CHECK(split_lines("a\r\nb") == std::vector<std::string>{"a", "b"});
    CHECK(split_lines("a\n\nb") == std::vector<std::string>{"a", "", "b"});
    CHECK(split_lines("") == std::vector<std::string>{});
    CHECK(split_lines("solo") == std::vector<std::string>{"solo"});
    CHECK(split_lines("trailing\n") == std::vector<std::string>{"trailing"});
    CHECK(split_lines("\n") == std::vector<std::string>{""});
}

TEST_CASE("starts_with_ci ignores ASCII case") {
    CHECK(starts_with_ci("VERDICT: reasonable", "verdict:"));
    CHECK(starts_with_ci("feedback: x", "FEEDBACK:"));
    CHECK_FALSE(starts_with_ci("ver", "verdict:"));
}

TEST_CASE("fnv1a64 matches the reference constants") {
    // Offset basis and the canonical single-byte probe from the published FNV test vectors.
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("fingerprint is 16 hex digits keyed on all three fields") {
    std::string f = fingerprint("m", "sys", "usr");
    CHECK(f.size() == 16);
    CHECK(f.find_first_not_of("0123456789abcdef") == std::string::npos);
    CHECK(f == fingerprint("m", "sys", "usr"));
    CHECK(f != fingerprint("m2", "sys", "usr"));
    CHECK(f != fingerprint("m", "sys2", "usr"));
    CHECK(f != fingerprint("m", "sys", "usr2"));
    // Field boundaries are real separators, not concatenation.
    CHECK(fingerprint("ab", "c", "d") != fingerprint("a", "bc", "d"));
}

TEST_CASE("canonicalize is idempotent on random ASCII") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> ch(32, 126);
    std::uniform_int_distribution<int> len(0, 40);
    for (int i = 0; i < 500; ++i) {
        std::string s;
        int n = len(rng);
        for (int k = 0; k < n; ++k) s.push_back(static_cast<char>(ch(rng)));
        std::string once = canonicalize(s);
        CHECK(canonicalize(once) == once);
    }
}
