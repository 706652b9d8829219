#include <thread>

#include "doctest.h"
#include "fixtures.hpp"
#include "vta/error.hpp"
#include "vta/generation.hpp"
#include "vta/orchestrator.hpp"

using namespace vta;
using vta::testing::fixture;
using vta::testing::fixture_config;
using vta::testing::fixture_engine;

namespace {

class FailingModel final : public LanguageModelClient {
public:
    GenerationResponse generate(const GenerationRequest&) override {
        return {"", FinishReason::Error, 0.0, "RemoteError(503)"};
    }
};

class FailingSearch final : public SearchAdapter {
public:
    std::vector<Snippet> search(std::string_view, std::size_t) const override {
        fail(ErrorCode::AdapterUnavailable, "search backend down");
    }
};

EngineConfig with(const std::string& key, const std::string& value, EngineConfig c = fixture_config()) {
    return with_override(c, key, value);
}

void check_alternation(const Session& s) {
    CHECK(s.turns.size() % 2 == 0);
    for (std::size_t i = 0; i < s.turns.size(); ++i) {
        CHECK(s.turns[i].role == (i % 2 == 0 ? Role::User : Role::Assistant));
        if (i > 0) CHECK(s.turns[i].timestamp_ms >= s.turns[i - 1].timestamp_ms);
    }
}

}  // namespace

TEST_CASE("sessions") {
    auto engine = fixture_engine();
    const auto a = engine->create_session("ds101");
    const auto b = engine->create_session("ds101");
    CHECK(a.id != b.id);
    CHECK(a.id == "sess-000001");
    const auto got = engine->get_session(a.id);
    CHECK(got.course_id == "ds101");
    CHECK(got.turns.empty());
    CHECK(got.course_known);
    CHECK_FALSE(engine->create_session("unknown-course").course_known);
    CHECK(engine->list_sessions().size() == 3);
    try {
        engine->get_session("sess-999999");
        FAIL("expected UnknownSession");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownSession);
    }
    try {
        engine->respond("sess-999999", "hello");
        FAIL("expected UnknownSession");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownSession);
    }
    CHECK_THROWS_AS(engine->create_session("  "), Error);
}

TEST_CASE("a greeting routes to chit-chat with deterministic mock text") {
    auto engine = fixture_engine();
    const auto s = engine->create_session("ds101");
    const auto r = engine->respond(s.id, "hello");
    CHECK(r.route == Route::ChitChat);
    const std::vector<Turn> turns{{Role::User, "hello", 0, {}}};
    CHECK(r.text == "MOCK:" + sha256_hex(chitchat_prompt(turns, "ds101")));
    CHECK_FALSE(r.error);
    CHECK(r.evidence.h > 0.5);
}

TEST_CASE("beta -1 returns the matching FAQ body verbatim") {
    auto engine = fixture_engine(with("ranking.beta", "-1"));
    const auto s = engine->create_session("ds101");
    const auto r = engine->respond(s.id, "How do I reset my password?");
    CHECK(r.route == Route::Retrieved);
    CHECK(r.text == "Use the Forgot password link on the login page and follow the email you receive.");
    REQUIRE(r.evidence.winning);
    CHECK(r.evidence.winning->source == SourceKind::Faq);
    CHECK(r.evidence.candidates.front().snippet_id == r.evidence.winning->id);
}

TEST_CASE("the stack and queue question with huge beta is generated with both definitions") {
    auto engine = fixture_engine(with("ranking.beta", "1e9"));
    const auto s = engine->create_session("ds101");
    const auto r = engine->respond(s.id, "What's the difference between stack and queue?");
    CHECK(r.route == Route::CotGenerated);
    REQUIRE(r.evidence.reasoning);
    const auto& g = *vta::testing::fixture_graph();
    CHECK(r.evidence.reasoning->find(g.at("ds-stack").definition) != std::string::npos);
    CHECK(r.evidence.reasoning->find(g.at("ds-queue").definition) != std::string::npos);
    const auto golden = vta::testing::read_file(fixture("golden/stack_queue_prompt.txt"));
    CHECK(r.text == "MOCK:" + sha256_hex(golden) +
                        "\nArrays allow fast random access but are costly to grow; linked lists grow cheaply but "
                        "must be traversed to reach an element.");
    CHECK(r.evidence.concepts == std::vector<std::string>{"ds-stack", "ds-queue"});
}

TEST_CASE("gate algebra") {
    const std::vector<std::string> queries{"hello", "How do I submit my homework?", "What is a stack?",
                                           "thanks, bye", "Why does recursion need a stack frame?"};
    auto low_beta = fixture_engine(with("ranking.beta", "-1"));
    auto high_alpha = fixture_engine(with("intent.alpha", "1.5"));
    const auto s1 = low_beta->create_session("ds101");
    const auto s2 = high_alpha->create_session("ds101");
    for (const auto& q : queries) {
        const auto r1 = low_beta->respond(s1.id, q);
        CHECK((r1.route == Route::Retrieved || r1.route == Route::ChitChat));
        CHECK(high_alpha->respond(s2.id, q).route != Route::ChitChat);
    }
}

TEST_CASE("generation failure keeps the route and records the error") {
    const auto config = with("ranking.beta", "1e9");
    auto parts = load_parts(config);
    parts.llm = std::make_shared<FailingModel>();
    Engine engine(config, parts, vta::testing::step_clock());
    const auto s = engine.create_session("ds101");

    const auto chat = engine.respond(s.id, "hello");
    CHECK(chat.route == Route::ChitChat);
    CHECK(chat.text == config.gen.fallback_text);
    REQUIRE(chat.error);
    CHECK(*chat.error == "RemoteError(503)");

    const auto cot = engine.respond(s.id, "Why does recursion need a stack frame and a queue and a tree?");
    CHECK(cot.route == Route::CotGenerated);
    CHECK(cot.text == config.gen.fallback_text);
    CHECK(cot.error);

    const auto session = engine.get_session(s.id);
    CHECK(session.turns.size() == 4);
    check_alternation(session);
    CHECK(session.turns[1].route == "CHITCHAT");
}

TEST_CASE("search failures degrade to the static corpus") {
    const auto config = with("ranking.beta", "-1");
    auto parts = load_parts(config);
    parts.search = std::make_shared<FailingSearch>();
    Engine engine(config, parts, vta::testing::step_clock());
    const auto s = engine.create_session("ds101");
    const auto r = engine.respond(s.id, "When is the final exam?");
    CHECK(r.route == Route::Retrieved);
    CHECK_FALSE(r.error);

    auto missing = with("data.search_fixtures", "/nonexistent/search", with("ranking.beta", "-1"));
    auto engine2 = fixture_engine(missing);
    const auto s2 = engine2->create_session("ds101");
    CHECK(engine2->respond(s2.id, "When is the final exam?").route == Route::Retrieved);
}

TEST_CASE("web results join the candidate pool weighted by h") {
    auto engine = fixture_engine(with("ranking.k", "20", with("ranking.beta", "1e9")));
    const auto s = engine->create_session("ml101");
    const auto r = engine->respond(s.id, "graph neural network");
    std::size_t search_hits = 0;
    for (const auto& c : r.evidence.candidates) {
        if (c.source == SourceKind::Search) {
            ++search_hits;
            CHECK(c.weight == doctest::Approx(r.evidence.h));
        }
    }
    // Only the first web result shares a term with the query.
    CHECK(search_hits == 1);

    auto off = fixture_engine(with("search.mode", "off", with("ranking.k", "20", with("ranking.beta", "1e9"))));
    const auto s2 = off->create_session("ml101");
    for (const auto& c : off->respond(s2.id, "graph neural network").evidence.candidates) {
        CHECK(c.source != SourceKind::Search);
    }
}

TEST_CASE("escalation closes the loop into retrieval") {
    auto engine = fixture_engine(with("ranking.beta", "-1"));
    const auto s = engine->create_session("ds101");
    const std::string q = "Is there a discussion forum for this course?";
    const auto before = engine->respond(s.id, q);
    CHECK(before.text != "Yes, the Discussion tab links to the course forum.");

    const auto item = engine->escalate(s.id, q);
    CHECK(engine->escalations(EscalationStatus::Pending).size() == 1);
    const auto faq_before = engine->health().faq;
    engine->answer_escalation(item.id, "Yes, the Discussion tab links to the course forum.");
    CHECK(engine->health().faq == faq_before + 1);
    CHECK(engine->escalations(EscalationStatus::Pending).empty());

    const auto after = engine->respond(s.id, q);
    CHECK(after.route == Route::Retrieved);
    CHECK(after.text == "Yes, the Discussion tab links to the course forum.");
    try {
        engine->escalate("sess-999999", q);
        FAIL("expected UnknownSession");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownSession);
    }
}

TEST_CASE("session log replays after restart") {
    vta::testing::TempDir dir;
    auto config = with("data.session_log", (dir / "sessions.jsonl").string());
    config = with("data.escalation_log", (dir / "escalations.jsonl").string(), config);
    std::vector<Turn> turns;
    std::string id;
    {
        auto engine = fixture_engine(config);
        id = engine->create_session("ds101").id;
        engine->respond(id, "hello");
        engine->respond(id, "What is a stack?");
        engine->escalate(id, "Where is the syllabus?");
        engine->flush();
        turns = engine->get_session(id).turns;
    }
    auto engine = fixture_engine(config);
    const auto replayed = engine->get_session(id);
    CHECK(replayed.turns == turns);
    CHECK(replayed.course_id == "ds101");
    CHECK(engine->escalations(EscalationStatus::Pending).size() == 1);
    CHECK(engine->create_session("ds101").id == "sess-000002");
}

TEST_CASE("derived engines share knowledge but not sessions") {
    auto engine = fixture_engine();
    const auto derived = engine->derive(with("ranking.beta", "-1"));
    CHECK(derived->config().ranking.beta == -1.0);
    CHECK(derived->list_sessions().empty());
    CHECK(derived->parts().knowledge == engine->parts().knowledge);
}

TEST_CASE("concurrent responds keep every session well formed") {
    auto engine = fixture_engine();
    std::vector<std::string> ids;
    for (int i = 0; i < 4; ++i) ids.push_back(engine->create_session("ds101").id);
    const std::vector<std::string> script{"hello", "What is a stack?", "How do I submit my homework?", "thanks"};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 10; ++i) engine->respond(ids[(t + i) % ids.size()], script[(t + i) % script.size()]);
        });
    }
    for (auto& th : threads) th.join();
    std::size_t total = 0;
    for (const auto& id : ids) {
        const auto s = engine->get_session(id);
        check_alternation(s);
        total += s.turns.size();
    }
    CHECK(total == 160);
}

TEST_CASE("health reports corpus counts") {
    auto engine = fixture_engine();
    const auto h = engine->health();
    CHECK(h.concepts == 18);
    CHECK(h.edges == 11);
    CHECK(h.faq == 8);
    CHECK(h.examples == 3);
    CHECK(h.snippets == 26);
    CHECK(h.courses == std::vector<std::string>{"art101", "ds101", "ml101"});
    CHECK(h.config_hash == config_hash(fixture_config()));
}
