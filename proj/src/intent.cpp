#include "vta/intent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "http_client.hpp"
#include "json.hpp"
#include "vta/error.hpp"
#include "vta/ranking.hpp"
#include "vta/text.hpp"

namespace vta {
namespace {

int count_occurrences(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return 0;
    int count = 0;
    std::size_t i = 0;
    while (i + needle.size() <= haystack.size()) {
        if (std::equal(needle.begin(), needle.end(), haystack.begin() + static_cast<std::ptrdiff_t>(i))) {
            ++count;
            i += needle.size();
        } else {
            ++i;
        }
    }
    return count;
}

int count_question_marks(std::string_view query) {
    int n = 0;
    std::size_t pos = 0;
    while ((pos = query.find('?', pos)) != std::string_view::npos) {
        ++n;
        ++pos;
    }
    constexpr std::string_view kFullWidth = "\xEF\xBC\x9F";  // U+FF1F
    pos = 0;
    while ((pos = query.find(kFullWidth, pos)) != std::string_view::npos) {
        ++n;
        pos += kFullWidth.size();
    }
    return n;
}

double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace

std::string_view to_string(IntentRoute route) {
    return route == IntentRoute::ChitChat ? "CHITCHAT" : "QA";
}

IntentRoute gate(double h, double alpha) {
    return h > alpha ? IntentRoute::ChitChat : IntentRoute::Qa;
}

IntentScore classify(const IntentScorer& scorer, std::span<const Turn> history, std::string_view course_id,
                     std::string_view query, double alpha) {
    if (query.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        fail(ErrorCode::InvalidArgument, "empty query");
    }
    const double h = std::clamp(scorer.score(history, course_id, query), 0.0, 1.0);
    return {h, gate(h, alpha)};
}

IntentLexicons IntentLexicons::defaults() {
    return {
        {"hello", "hi", "hey", "how are you", "good morning", "good afternoon", "good evening", "good night",
         "thanks", "thank you", "bye", "goodbye", "nice to meet you", "lol", "haha", "happy", "sad", "bored",
         "tired", "lonely", "love", "\xE4\xBD\xA0\xE5\xA5\xBD" /* 你好 */, "\xE8\xB0\xA2\xE8\xB0\xA2" /* 谢谢 */,
         "\xE5\x93\x88\xE5\x93\x88" /* 哈哈 */, "\xE5\x86\x8D\xE8\xA7\x81" /* 再见 */},
        {"what", "why", "how", "when", "where", "which", "who", "whom", "whose", "explain", "define",
         "\xE4\xBB\x80\xE4\xB9\x88" /* 什么 */, "\xE4\xB8\xBA\xE4\xBB\x80\xE4\xB9\x88" /* 为什么 */,
         "\xE6\x80\x8E\xE4\xB9\x88" /* 怎么 */, "\xE5\xA6\x82\xE4\xBD\x95" /* 如何 */},
    };
}

std::vector<std::string> load_word_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto norm = text::normalize(line);
        if (norm.empty() || norm.front() == '#') continue;
        out.push_back(norm);
    }
    return out;
}

LexicalIntentScorer::LexicalIntentScorer(std::shared_ptr<const ConceptGraph> graph, IntentLexicons lexicons,
                                         LexicalWeights weights)
    : graph_(std::move(graph)), weights_(weights) {
    for (const auto& phrase : lexicons.greetings) {
        auto tokens = text::tokenize(phrase);
        if (!tokens.empty()) greetings_.push_back(std::move(tokens));
    }
    for (const auto& w : lexicons.wh_words) {
        auto tokens = text::tokenize(w);
        if (!tokens.empty()) wh_words_.push_back(std::move(tokens));
    }
}

LexicalFeatures LexicalIntentScorer::features(std::string_view course_id, std::string_view query) const {
    const auto tokens = text::tokenize(query);
    LexicalFeatures f;
    for (const auto& phrase : greetings_) f.greetings += count_occurrences(tokens, phrase);
    f.interrogatives = count_question_marks(query);
    for (const auto& word : wh_words_) f.interrogatives += count_occurrences(tokens, word);
    if (graph_) f.concepts = static_cast<int>(extract_concepts(query, *graph_, course_id).size());
    return f;
}

double LexicalIntentScorer::score(std::span<const Turn>, std::string_view course_id, std::string_view query) const {
    const auto f = features(course_id, query);
    return sigmoid(weights_.greeting * f.greetings - weights_.interrogative * f.interrogatives -
                   weights_.concept_match * f.concepts + weights_.bias);
}

std::string remote_intent_input(std::span<const Turn> history, std::string_view course_id, std::string_view query) {
    std::string d = "[CLS]";
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (i > 0) d += ' ';
        d += history[i].text;
    }
    d += ',';
    d += course_id;
    d += "[SEP]";
    d += query;
    return d;
}

RemoteIntentScorer::RemoteIntentScorer(std::string url, std::chrono::milliseconds timeout)
    : url_(std::move(url)), timeout_(timeout) {}

double RemoteIntentScorer::score(std::span<const Turn> history, std::string_view course_id,
                                 std::string_view query) const {
    const nlohmann::json body = {{"input", remote_intent_input(history, course_id, query)}};
    const auto res = detail::post_json(url_, body.dump(), timeout_);
    if (res.status != 200) {
        fail(ErrorCode::RemoteUnavailable,
             "intent scorer returned " + std::to_string(res.status) + (res.error.empty() ? "" : ": " + res.error));
    }
    const auto parsed = nlohmann::json::parse(res.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("h") || !parsed["h"].is_number()) {
        fail(ErrorCode::RemoteUnavailable, "intent scorer returned no numeric \"h\"");
    }
    const double h = parsed["h"].get<double>();
    if (!(h >= 0.0 && h <= 1.0)) fail(ErrorCode::RemoteUnavailable, "intent score out of range");
    return h;
}

double FallbackIntentScorer::score(std::span<const Turn> history, std::string_view course_id,
                                   std::string_view query) const {
    try {
        return primary_->score(history, course_id, query);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::RemoteUnavailable) throw;
        return fallback_->score(history, course_id, query);
    }
}

}  // namespace vta
