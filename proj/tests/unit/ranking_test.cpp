#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "vta/error.hpp"
#include "vta/ranking.hpp"
#include "vta/text.hpp"

using namespace vta;

namespace {

Concept make_concept(std::string id, std::string name, DomainSet domains, std::string course) {
    return {id, name, "Definition of " + name + ".", std::move(domains), std::move(course)};
}

std::vector<std::string> ids_of(const QueryConcepts& qc) {
    std::vector<std::string> out;
    for (const auto& m : qc.matches) out.push_back(m.concept_id);
    return out;
}

// Tokens the index sees for a snippet.
oracle::Tokens indexed_tokens(const Snippet& s) {
    return text::tokenize(s.key + " " + s.body);
}

}  // namespace

TEST_CASE("concept extraction") {
    const auto g = ConceptGraph::build({make_concept("c1", "stack", {"CS"}, "ds"), make_concept("c2", "queue", {"CS"}, "ds"),
                                        make_concept("c3", "stack frame", {"CS"}, "ds")},
                                       {});
    CHECK(ids_of(extract_concepts("difference between stack and queue", g)) == std::vector<std::string>{"c1", "c2"});
    CHECK(ids_of(extract_concepts("stack frame size", g)) == std::vector<std::string>{"c3"});
    CHECK(extract_concepts("nothing relevant here", g).empty());
    CHECK(ids_of(extract_concepts("STACK-frame", g)) == std::vector<std::string>{"c3"});
    CHECK(ids_of(extract_concepts("stack, frame", g)) == std::vector<std::string>{"c1"});
    CHECK(ids_of(extract_concepts("stacks", g)).empty());

    const auto m = extract_concepts("What is a Stack Frame?", g);
    REQUIRE(m.size() == 1);
    CHECK(m.matches[0].surface == "Stack Frame");
}

TEST_CASE("ambiguous names resolve to the session course, else the lowest id") {
    const auto& g = *vta::testing::fixture_graph();
    CHECK(ids_of(extract_concepts("tree", g, "ml101")) == std::vector<std::string>{"ml-tree"});
    CHECK(ids_of(extract_concepts("tree", g, "ds101")) == std::vector<std::string>{"ds-tree"});
    CHECK(ids_of(extract_concepts("tree", g, "art101")) == std::vector<std::string>{"ds-tree"});
}

TEST_CASE("CJK concept names match inside running text") {
    const auto& g = *vta::testing::fixture_graph();
    CHECK(ids_of(extract_concepts("栈是什么", g, "ds101")) == std::vector<std::string>{"ds-zhan"});
}

TEST_CASE("jaccard examples") {
    CHECK(jaccard_domains({"CS"}, {"CS"}) == 1.0);
    CHECK(jaccard_domains({"CS"}, {"Art"}) == 0.0);
    CHECK(jaccard_domains({"a", "b"}, {"b", "c"}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(jaccard_domains({}, {}) == 0.0);
}

TEST_CASE("jaccard is symmetric, bounded and agrees with the oracle") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 500; ++i) {
        const auto a = oracle::random_set(rng, 5, 8);
        const auto b = oracle::random_set(rng, 5, 8);
        const double j = jaccard_domains(a, b);
        CHECK(j == jaccard_domains(b, a));
        CHECK(j >= 0.0);
        CHECK(j <= 1.0);
        CHECK(j == doctest::Approx(oracle::jaccard(a, b)).epsilon(1e-15));
        CHECK((j == 1.0) == (a == b && !a.empty()));
    }
}

TEST_CASE("source weights") {
    // Course "A" has domains {a, b}; course "B" has {b, c}.
    const auto g = ConceptGraph::build({make_concept("x", "xenon", {"a"}, "A"), make_concept("y", "yarrow", {"b"}, "A"),
                                        make_concept("z", "zebra", {"b", "c"}, "B")},
                                       {});
    const DomainSet session = g.course_domains("A");
    const Snippet concept_b{"concept:z", "zebra", "def", SourceKind::Concept, "B", {"b", "c"}};
    const Snippet faq{"faq:000001", "q", "a", SourceKind::Faq, std::nullopt, {}};
    const Snippet search{"search:q#0", "h", "t", SourceKind::Search, std::nullopt, {}};

    const double g_weight = source_weight(concept_b, 0.7, session, g, SearchWeighting::Intent);
    CHECK(g_weight == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    // CONCEPT snippet, g = 1/3, BM25 = 3.0 -> 1.0
    CHECK(g_weight * 3.0 == doctest::Approx(1.0).epsilon(1e-15));
    // FAQ weight is 1, so BM25 3.2 stays 3.2.
    CHECK(source_weight(faq, 0.3, session, g, SearchWeighting::Intent) == 1.0);
    // SEARCH weight is h, so h = 0 zeroes it.
    CHECK(source_weight(search, 0.0, session, g, SearchWeighting::Intent) == 0.0);
    CHECK(source_weight(search, 0.25, session, g, SearchWeighting::Intent) == 0.25);
    CHECK(source_weight(search, 0.25, session, g, SearchWeighting::InverseIntent) == 0.75);
}

TEST_CASE("score multiplies BM25 by the source weight") {
    const auto g = ConceptGraph::build({make_concept("z", "zebra", {"b", "c"}, "B"), make_concept("y", "yak", {"a", "b"}, "A")}, {});
    const std::vector<Snippet> snippets{
        {"concept:z", "zebra", "striped zebra", SourceKind::Concept, "B", {"b", "c"}},
        {"faq:000001", "zebra facts", "zebra zebra", SourceKind::Faq, std::nullopt, {}},
        {"search:zebra#0", "zebra news", "a zebra", SourceKind::Search, std::nullopt, {}},
    };
    const auto idx = SnippetIndex::build(snippets);
    const IndexView view({&idx});
    const std::vector<std::string> terms{"zebra"};
    for (const auto& s : snippets) {
        for (double h : {0.0, 0.25, 1.0}) {
            const auto c = score(s, terms, h, g.course_domains("A"), g, view);
            CHECK(c.raw_bm25 == view.bm25(s.id, terms));
            CHECK(c.score == c.weight * c.raw_bm25);
            CHECK(c.score <= c.raw_bm25);
            if (s.source == SourceKind::Search) CHECK(c.score == h * c.raw_bm25);
            if (s.source == SourceKind::Faq) CHECK(c.score == c.raw_bm25);
        }
    }
}

TEST_CASE("rank breaks ties by ascending id and keeps k") {
    std::vector<RankedCandidate> cs{{"b", 1, 1, 2.0, SourceKind::Faq}, {"a", 1, 1, 2.0, SourceKind::Faq},
                                    {"c", 1, 1, 3.0, SourceKind::Faq}, {"d", 1, 1, 1.0, SourceKind::Faq}};
    const auto top = rank(cs, 3);
    REQUIRE(top.size() == 3);
    CHECK(top[0].snippet_id == "c");
    CHECK(top[1].snippet_id == "a");
    CHECK(top[2].snippet_id == "b");
}

TEST_CASE("retrieve over a five-snippet corpus equals exhaustive scoring") {
    const auto g = ConceptGraph::build({make_concept("s", "stack", {"CS"}, "cs1"), make_concept("a", "art", {"Art"}, "art1"),
                                        make_concept("m", "mix", {"CS", "Math"}, "mx1")},
                                       {});
    const std::vector<Snippet> snippets{
        {"concept:s", "stack", "A stack is last in first out.", SourceKind::Concept, "cs1", {"CS"}},
        {"concept:a", "art", "A stack of paintings in a gallery.", SourceKind::Concept, "art1", {"Art"}},
        {"concept:m", "mix", "A stack stack of mixed topics.", SourceKind::Concept, "mx1", {"CS", "Math"}},
        {"faq:000001", "How big is the stack?", "The stack holds frames.", SourceKind::Faq, std::nullopt, {}},
        {"search:stack#0", "Stack overflow", "When the stack runs out of space.", SourceKind::Search, std::nullopt, {}},
    };
    const auto idx = SnippetIndex::build(snippets);
    const IndexView view({&idx});
    const double h = 0.2;

    std::vector<oracle::Tokens> docs;
    for (const auto& s : snippets) docs.push_back(indexed_tokens(s));
    const std::set<std::string> session{"CS"};
    std::vector<std::pair<std::string, double>> expected;
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        const auto& s = snippets[i];
        double w = 1.0;
        if (s.source == SourceKind::Concept) w = oracle::jaccard(std::set<std::string>(s.domains.begin(), s.domains.end()), session);
        if (s.source == SourceKind::Search) w = h;
        const double raw = oracle::bm25(docs, i, {"stack"});
        if (raw > 0) expected.emplace_back(s.id, w * raw);
    }
    std::sort(expected.begin(), expected.end(),
              [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });

    RankingOptions opt;
    opt.k = 10;
    const auto result = retrieve("stack", "cs1", h, opt, view, g);
    REQUIRE(result.candidates.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(result.candidates[i].snippet_id == expected[i].first);
        CHECK(std::abs(result.candidates[i].score - expected[i].second) <= 1e-9);
    }
    CHECK(result.query_terms == std::vector<std::string>{"stack"});
}

TEST_CASE("beta gate boundaries") {
    const auto& g = *vta::testing::fixture_graph();
    const auto idx = SnippetIndex::build(unify_concepts(g));
    const IndexView view({&idx});
    RankingOptions opt;
    opt.beta = 1e9;
    CHECK_FALSE(retrieve("What is a stack?", "ds101", 0.05, opt, view, g).answered);
    opt.beta = -1;
    CHECK(retrieve("What is a stack?", "ds101", 0.05, opt, view, g).answered);
    CHECK_FALSE(retrieve("zzzz qqqq", "ds101", 0.05, opt, view, g).answered);
    opt.k = 0;
    CHECK_THROWS_AS(retrieve("stack", "ds101", 0.05, opt, view, g), Error);
}

TEST_CASE("query terms fall back to all tokens without concepts") {
    const auto& g = *vta::testing::fixture_graph();
    CHECK(query_terms("How do I submit?", extract_concepts("How do I submit?", g)) ==
          std::vector<std::string>{"how", "do", "i", "submit"});
    CHECK(query_terms("Is a Linked List a tree?", extract_concepts("Is a Linked List a tree?", g, "ds101")) ==
          std::vector<std::string>{"linked", "list", "tree"});
}

TEST_CASE("retrieve matches exhaustive scoring on random corpora") {
    std::mt19937_64 rng(1234);
    const auto g = ConceptGraph::build({make_concept("p", "w1", {"d0", "d1"}, "c0"), make_concept("q", "w2", {"d1", "d2"}, "c1"),
                                        make_concept("r", "w3", {"d3"}, "c2")},
                                       {});
    for (int round = 0; round < 30; ++round) {
        std::vector<Snippet> snippets;
        const std::size_t n = 1 + rng() % 50;
        for (std::size_t i = 0; i < n; ++i) {
            const auto kind = static_cast<SourceKind>(rng() % 3);
            const auto key = oracle::random_tokens(rng, 3, 8, 1);
            const auto body = oracle::random_tokens(rng, 10, 8, 1);
            Snippet s;
            char id[32];
            std::snprintf(id, sizeof id, "s%03zu", i);
            s.id = id;
            s.key = text::join(key, " ");
            s.body = text::join(body, " ");
            s.source = kind;
            if (kind == SourceKind::Concept) s.course_id = "c" + std::to_string(rng() % 3);
            snippets.push_back(s);
        }
        const auto idx = SnippetIndex::build(snippets);
        const IndexView view({&idx});
        const double h = static_cast<double>(rng() % 101) / 100.0;
        const auto q = text::join(oracle::random_tokens(rng, 3, 8, 1), " ");
        const std::string course = "c" + std::to_string(rng() % 3);

        std::vector<RankedCandidate> all;
        const auto terms = query_terms(q, extract_concepts(q, g, course));
        for (const auto& s : snippets) {
            const auto c = score(s, terms, h, g.course_domains(course), g, view);
            if (c.raw_bm25 > 0) all.push_back(c);
        }
        const auto expected = rank(all, 5);
        RankingOptions opt;
        opt.k = 5;
        const auto got = retrieve(q, course, h, opt, view, g);
        REQUIRE(got.candidates.size() == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
            CHECK(got.candidates[i].snippet_id == expected[i].snippet_id);
            CHECK(got.candidates[i].score == expected[i].score);
        }
    }
}
