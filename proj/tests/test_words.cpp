#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fpd/words.hpp"
#include "oracles.hpp"

using fpd::Word;

TEST_CASE("reduce cancels adjacent inverse pairs") {
    CHECK(Word("aA").is_identity());
    CHECK(Word("abBa") == Word("aa"));
    CHECK(Word("ab").inverse() == Word("BA"));
    Word w("abAbbA");
    CHECK((w * w.inverse()).is_identity());
    CHECK(Word(w.str()) == w);
    CHECK(Word("e").str() == "e");
}

TEST_CASE("shortlex order") {
    CHECK(Word("a") < Word("b"));
    CHECK(Word("A") < Word("ab"));
    CHECK(Word("b") < Word("A"));
    std::vector<std::string> expect{"e", "a", "b", "A", "B", "aa", "ab"};
    Word w;
    for (const auto& s : expect) {
        CHECK(w.str() == s);
        w = fpd::successor(w);
    }
}

TEST_CASE("successor chain matches exhaustive enumeration") {
    const auto ref = oracle::reduced_words(6);
    Word w;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const std::string s = ref[i].empty() ? "e" : ref[i];
        REQUIRE(w.str() == s);
        if (i > 0) {
            CHECK(fpd::successor(fpd::predecessor(w)) == w);
            CHECK(fpd::predecessor(w).str() == (ref[i - 1].empty() ? "e" : ref[i - 1]));
        }
        w = fpd::successor(w);
    }
}

TEST_CASE("ball sizes") {
    CHECK(fpd::ball(0).size() == 1);
    CHECK(fpd::ball(1).size() == 5);
    CHECK(fpd::ball(2).size() == 17);
    for (int r = 1; r <= 6; ++r) {
        std::size_t p3 = 1;
        for (int i = 0; i < r; ++i) p3 *= 3;
        CHECK(fpd::ball(r).size() == 2 * p3 - 1);
        CHECK(fpd::ball(r).size() == oracle::reduced_words(r).size());
    }
}

TEST_CASE("index sets") {
    auto names = [](const fpd::IndexSet& I) {
        std::set<std::string> s;
        for (const auto& w : I.members) s.insert(w.str());
        return s;
    };
    CHECK(names(fpd::index_set(Word("a"))) == std::set<std::string>{"e", "a", "A"});
    CHECK(names(fpd::index_set(Word("b"))) == std::set<std::string>{"e", "a", "A", "b", "B"});
    auto expect = std::set<std::string>{"e", "a", "b", "A", "B", "aa", "AA"};
    CHECK(names(fpd::index_set(Word("aa"))) == expect);
    for (const auto& g : fpd::ball(3)) {
        auto I = fpd::index_set(g);
        for (const auto& h : I.members) CHECK(I.contains(h.inverse()));
    }
}

TEST_CASE("clique examples") {
    auto names = [](const fpd::Clique& K) {
        std::vector<std::string> s;
        for (const auto& w : K.vertices) s.push_back(w.str());
        return s;
    };
    CHECK(names(fpd::clique(Word("a"))) == std::vector<std::string>{"e", "a"});
    CHECK(names(fpd::clique(Word("aa"))) == std::vector<std::string>{"e", "a", "aa"});
    CHECK(names(fpd::clique(Word("ab"))) == std::vector<std::string>{"e", "a", "ab"});
}

TEST_CASE("clique equals the unique maximal clique through (e,g) on B_4") {
    int canonical = 0;
    for (const auto& g : fpd::ball(4)) {
        if (g.is_identity()) continue;
        const auto all = oracle::maximal_cliques_through_edge(g);
        if (fpd::is_canonical(g)) {
            ++canonical;
            const auto K = fpd::clique(g);
            REQUIRE(all.size() == 1);
            CHECK(std::set<Word>(K.vertices.begin(), K.vertices.end()) == all.front());
        } else if (all.size() == 1) {
            // (e,g) already lies in Cay(F, g_up); the formula still works when uniqueness holds.
            const auto K = fpd::clique(g);
            CHECK(std::set<Word>(K.vertices.begin(), K.vertices.end()) == all.front());
        } else {
            CHECK_THROWS_AS(fpd::clique(g), fpd::CliqueError);
        }
    }
    CHECK(canonical == 80);
}

TEST_CASE("exactly one clique edge is new at level g") {
    for (const auto& g : fpd::ball(3)) {
        if (g.is_identity() || !fpd::is_canonical(g)) continue;
        const auto K = fpd::clique(g);
        const auto prev = fpd::index_set(fpd::predecessor(g));
        int missing = 0;
        for (std::size_t i = 0; i < K.vertices.size(); ++i)
            for (std::size_t k = i + 1; k < K.vertices.size(); ++k)
                if (!fpd::adjacent(K.vertices[i], K.vertices[k], prev)) ++missing;
        CHECK(missing == 1);
    }
}

TEST_CASE("predecessor clique") {
    auto pa = fpd::predecessor_clique(Word("a"));
    CHECK(pa.h == Word("a"));
    CHECK(pa.t.is_identity());
    auto paa = fpd::predecessor_clique(Word("aa"));
    CHECK(paa.h == Word("a"));
    for (const auto& g : fpd::ball(3)) {
        if (g.is_identity() || !fpd::is_canonical(g)) continue;
        const auto pc = fpd::predecessor_clique(g);
        CHECK(pc.h <= g);
        const auto K = fpd::clique(g);
        const auto Kh = fpd::clique(pc.h);
        std::set<Word> translate;
        for (const auto& x : Kh.vertices) translate.insert(pc.t * x);
        for (const auto& v : K.vertices)
            if (v != g) CHECK(translate.count(v) == 1);
    }
}
