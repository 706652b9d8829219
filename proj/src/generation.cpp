#include "vta/generation.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "http_client.hpp"
#include "json.hpp"
#include "vta/error.hpp"
#include "vta/text.hpp"

namespace vta {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string last_example_answer(std::string_view prompt) {
    std::string_view answer;
    std::size_t start = 0;
    while (start <= prompt.size()) {
        auto end = prompt.find('\n', start);
        if (end == std::string_view::npos) end = prompt.size();
        const auto line = prompt.substr(start, end - start);
        if (line.starts_with("A: ")) answer = line.substr(3);
        start = end + 1;
    }
    return std::string(answer);
}

// Keeps the first max_tokens whitespace-separated words.
bool clip_words(std::string& text, int max_tokens) {
    int words = 0;
    bool in_word = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const bool space = text[i] == ' ' || text[i] == '\n' || text[i] == '\t';
        if (!space && !in_word) {
            if (++words > max_tokens) {
                text.resize(i);
                while (!text.empty() && (text.back() == ' ' || text.back() == '\n' || text.back() == '\t')) {
                    text.pop_back();
                }
                return true;
            }
        }
        in_word = !space;
    }
    return false;
}

}  // namespace

std::string_view to_string(FinishReason reason) {
    switch (reason) {
        case FinishReason::Stop: return "stop";
        case FinishReason::Length: return "length";
        case FinishReason::Error: return "error";
    }
    return "error";
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    std::string out;
    out.reserve(len * 2);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        out += buf;
    }
    return out;
}

bool apply_stop_sequences(std::string& text, std::span<const std::string> stop) {
    std::size_t cut = std::string::npos;
    for (const auto& s : stop) {
        if (s.empty()) continue;
        cut = std::min(cut, text.find(s));
    }
    if (cut == std::string::npos) return false;
    text.resize(cut);
    return true;
}

GenerationResponse MockLanguageModel::generate(const GenerationRequest& request) {
    const auto start = Clock::now();
    GenerationResponse res;
    if (request.prompt.empty() || request.max_tokens < 1) {
        res.finish = FinishReason::Error;
        res.error = "invalid request";
        return res;
    }
    res.text = "MOCK:" + sha256_hex(request.prompt).substr(0, 64);
    if (auto answer = last_example_answer(request.prompt); !answer.empty()) res.text += "\n" + answer;
    apply_stop_sequences(res.text, request.stop);
    if (clip_words(res.text, request.max_tokens)) res.finish = FinishReason::Length;
    res.latency_ms = elapsed_ms(start);
    return res;
}

RemoteLanguageModel::RemoteLanguageModel(std::string url, std::chrono::milliseconds timeout,
                                         std::ptrdiff_t max_concurrency)
    : url_(std::move(url)), timeout_(timeout), slots_(std::clamp<std::ptrdiff_t>(max_concurrency, 1, kMaxConcurrency)) {}

GenerationResponse RemoteLanguageModel::generate(const GenerationRequest& request) {
    const auto start = Clock::now();
    GenerationResponse res;
    res.finish = FinishReason::Error;
    if (request.prompt.empty() || request.max_tokens < 1) {
        res.error = "invalid request";
        return res;
    }
    const nlohmann::json body = {{"prompt", request.prompt},
                                 {"max_tokens", request.max_tokens},
                                 {"temperature", request.temperature},
                                 {"stop", request.stop}};
    detail::HttpResult http;
    {
        slots_.acquire();
        try {
            http = detail::post_json(url_, body.dump(), timeout_);
        } catch (const std::exception& e) {
            http = {0, {}, e.what()};
        }
        slots_.release();
    }
    res.latency_ms = elapsed_ms(start);
    if (http.status == 0) {
        res.error = "Timeout: " + http.error;
        return res;
    }
    if (http.status != 200) {
        res.error = "RemoteError(" + std::to_string(http.status) + ")";
        return res;
    }
    const auto parsed = nlohmann::json::parse(http.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("text") || !parsed["text"].is_string()) {
        res.error = "RemoteError(bad body)";
        return res;
    }
    res.text = parsed["text"].get<std::string>();
    res.finish = FinishReason::Stop;
    res.error.clear();
    apply_stop_sequences(res.text, request.stop);
    return res;
}

ChitChatTemplate ChitChatTemplate::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(ErrorCode::MalformedRecord, path.string() + ": not a JSON object");
    ChitChatTemplate t;
    t.preamble = j.value("preamble", t.preamble);
    t.student_prefix = j.value("student_prefix", t.student_prefix);
    t.assistant_prefix = j.value("assistant_prefix", t.assistant_prefix);
    t.cue = j.value("cue", t.cue);
    return t;
}

std::string chitchat_prompt(std::span<const Turn> turns, std::string_view course_id, std::size_t window,
                            const ChitChatTemplate& tmpl) {
    if (turns.empty()) fail(ErrorCode::InvalidArgument, "chit-chat prompt needs the current user turn");
    std::string preamble = tmpl.preamble;
    if (const auto pos = preamble.find("{course}"); pos != std::string::npos) {
        preamble.replace(pos, 8, course_id);
    }
    std::vector<std::string> lines{preamble};
    const std::size_t first = turns.size() > window ? turns.size() - window : 0;
    for (std::size_t i = first; i < turns.size(); ++i) {
        const auto& prefix = turns[i].role == Role::User ? tmpl.student_prefix : tmpl.assistant_prefix;
        lines.push_back(prefix + turns[i].text);
    }
    lines.push_back(tmpl.cue);
    return text::join(lines, "\n");
}

}  // namespace vta
