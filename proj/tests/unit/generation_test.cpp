#include <atomic>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "vta/error.hpp"
#include "vta/generation.hpp"

using namespace vta;

namespace {

class StubServer {
public:
    explicit StubServer(httplib::Server::Handler handler) {
        server_.Post("/generate", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/generate"; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

std::vector<Turn> alternating(std::size_t n) {
    std::vector<Turn> turns;
    for (std::size_t i = 0; i < n; ++i) {
        turns.push_back({i % 2 == 0 ? Role::User : Role::Assistant, "t" + std::to_string(i), 0, {}});
    }
    return turns;
}

}  // namespace

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("mock output is a pure function of the prompt") {
    MockLanguageModel mock;
    const GenerationRequest req{"Q: hi\nchain\nA: hello there\n\nQ: next", 256, 0.7, {}};
    const auto a = mock.generate(req);
    const auto b = mock.generate(req);
    CHECK(a.text == b.text);
    CHECK(a.finish == FinishReason::Stop);
    CHECK(a.text == "MOCK:" + sha256_hex(req.prompt) + "\nhello there");
    CHECK(mock.generate({"plain prompt", 256, 0.7, {}}).text == "MOCK:" + sha256_hex("plain prompt"));
}

TEST_CASE("mock applies stop sequences and the token cap") {
    MockLanguageModel mock;
    const auto stopped = mock.generate({"Q: a\nc\nA: first part STOP rest", 256, 0.7, {"STOP"}});
    CHECK(stopped.text.ends_with("first part "));
    const auto clipped = mock.generate({"Q: a\nc\nA: one two three four", 2, 0.7, {}});
    CHECK(clipped.finish == FinishReason::Length);
    CHECK(clipped.text == "MOCK:" + sha256_hex("Q: a\nc\nA: one two three four") + "\none");
    CHECK(mock.generate({"", 256, 0.7, {}}).finish == FinishReason::Error);
}

TEST_CASE("stop sequences cut at the earliest match") {
    std::string t = "abc\nQ: def\nStudent: x";
    const std::vector<std::string> stop{"\nStudent: ", "\nQ: "};
    CHECK(apply_stop_sequences(t, stop));
    CHECK(t == "abc");
    std::string u = "nothing";
    CHECK_FALSE(apply_stop_sequences(u, stop));
}

TEST_CASE("remote client sends the documented body and reads text") {
    std::atomic<int> calls{0};
    StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
        ++calls;
        const auto body = nlohmann::json::parse(req.body);
        CHECK(body.at("prompt") == "say hi");
        CHECK(body.at("max_tokens") == 16);
        CHECK(body.at("temperature") == doctest::Approx(0.5));
        CHECK(body.at("stop") == nlohmann::json::array({"\nQ: "}));
        res.set_content(R"({"text": "hi"})", "application/json");
    });
    RemoteLanguageModel remote(stub.url(), std::chrono::milliseconds(5000));
    const auto out = remote.generate({"say hi", 16, 0.5, {"\nQ: "}});
    CHECK(out.text == "hi");
    CHECK(out.finish == FinishReason::Stop);
    CHECK(out.error.empty());
    CHECK(calls == 1);
}

TEST_CASE("remote failures map to finish=error") {
    StubServer failing([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    RemoteLanguageModel remote(failing.url(), std::chrono::milliseconds(5000));
    const auto out = remote.generate({"prompt", 16, 0.7, {}});
    CHECK(out.finish == FinishReason::Error);
    CHECK(out.text.empty());
    CHECK(out.error == "RemoteError(500)");

    StubServer garbage([](const httplib::Request&, httplib::Response& res) { res.set_content("not json", "text/plain"); });
    RemoteLanguageModel bad(garbage.url(), std::chrono::milliseconds(5000));
    CHECK(bad.generate({"prompt", 16, 0.7, {}}).finish == FinishReason::Error);

    RemoteLanguageModel nowhere("http://127.0.0.1:1/generate", std::chrono::milliseconds(500));
    const auto down = nowhere.generate({"prompt", 16, 0.7, {}});
    CHECK(down.finish == FinishReason::Error);
    CHECK(down.error.rfind("Timeout", 0) == 0);
}

TEST_CASE("remote timeout is enforced") {
    StubServer slow([](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(800));
        res.set_content(R"({"text": "late"})", "application/json");
    });
    RemoteLanguageModel remote(slow.url(), std::chrono::milliseconds(200));
    const auto out = remote.generate({"prompt", 16, 0.7, {}});
    CHECK(out.finish == FinishReason::Error);
}

TEST_CASE("remote client caps concurrent requests") {
    std::atomic<int> in_flight{0};
    std::atomic<int> peak{0};
    StubServer stub([&](const httplib::Request&, httplib::Response& res) {
        const int now = ++in_flight;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        --in_flight;
        res.set_content(R"({"text": "ok"})", "application/json");
    });
    RemoteLanguageModel remote(stub.url(), std::chrono::milliseconds(5000), 2);
    std::vector<std::thread> threads;
    for (int i = 0; i < 6; ++i) {
        threads.emplace_back([&] { CHECK(remote.generate({"p", 4, 0.7, {}}).text == "ok"); });
    }
    for (auto& t : threads) t.join();
    CHECK(peak <= 2);
}

TEST_CASE("chit-chat prompt rendering") {
    const std::vector<Turn> one{{Role::User, "hello", 0, {}}};
    CHECK(chitchat_prompt(one, "ds101") ==
          "You are LittleMu, a friendly MOOC teaching assistant for course ds101.\nStudent: hello\nAssistant:");

    const auto ten = alternating(10);
    const auto p = chitchat_prompt(ten, "ds101", 6);
    CHECK(p.find("t3") == std::string::npos);
    for (int i = 4; i < 10; ++i) CHECK(p.find("t" + std::to_string(i)) != std::string::npos);
    std::size_t lines = 0;
    for (char c : p) lines += c == '\n';
    CHECK(lines == 7);  // preamble, 6 turns, cue

    CHECK_THROWS_AS(chitchat_prompt({}, "ds101"), Error);
}

TEST_CASE("chit-chat prompt never exceeds the window") {
    for (std::size_t n = 1; n < 30; ++n) {
        for (std::size_t h : {1u, 3u, 6u}) {
            const auto p = chitchat_prompt(alternating(n), "c", h);
            std::size_t turns = 0;
            for (std::size_t pos = 0; (pos = p.find("\nStudent: ", pos)) != std::string::npos; ++pos) ++turns;
            for (std::size_t pos = 0; (pos = p.find("\nAssistant: ", pos)) != std::string::npos; ++pos) ++turns;
            CHECK(turns == std::min(n, h));
        }
    }
}
