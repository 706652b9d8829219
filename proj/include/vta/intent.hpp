#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vta/dialogue.hpp"
#include "vta/knowledge.hpp"

namespace vta {

enum class IntentRoute { Qa, ChitChat };

std::string_view to_string(IntentRoute route);

struct IntentScore {
    double h = 0.0;  // chit-chat probability
    IntentRoute route = IntentRoute::Qa;
};

/// CHITCHAT iff h > alpha.
IntentRoute gate(double h, double alpha);

/// Produces the chit-chat score h in [0, 1]. Implementations must be safe
/// for concurrent calls.
class IntentScorer {
public:
    virtual ~IntentScorer() = default;
    virtual double score(std::span<const Turn> history, std::string_view course_id,
                         std::string_view query) const = 0;
};

IntentScore classify(const IntentScorer& scorer, std::span<const Turn> history, std::string_view course_id,
                     std::string_view query, double alpha);

struct LexicalWeights {
    double greeting = 1.5;
    double interrogative = 1.0;
    double concept_match = 1.0;
    double bias = 0.0;
};

struct IntentLexicons {
    /// Greeting and emotion phrases. Entries of both lists match as token
    /// sequences, so multi-word phrases are allowed.
    std::vector<std::string> greetings;
    /// Interrogative words. Question marks always count.
    std::vector<std::string> wh_words;

    static IntentLexicons defaults();
};

/// One entry per non-blank line; lines starting with '#' are comments.
std::vector<std::string> load_word_list(const std::filesystem::path& path);

struct LexicalFeatures {
    int greetings = 0;       // G
    int interrogatives = 0;  // Q
    int concepts = 0;        // K
};

/// h = sigmoid(w_g * G - w_q * Q - w_k * K + bias), computed on the query
/// alone. K counts concept lexicon matches.
class LexicalIntentScorer final : public IntentScorer {
public:
    LexicalIntentScorer(std::shared_ptr<const ConceptGraph> graph, IntentLexicons lexicons = IntentLexicons::defaults(),
                        LexicalWeights weights = {});

    LexicalFeatures features(std::string_view course_id, std::string_view query) const;
    double score(std::span<const Turn> history, std::string_view course_id, std::string_view query) const override;

private:
    std::shared_ptr<const ConceptGraph> graph_;
    std::vector<std::vector<std::string>> greetings_;
    std::vector<std::vector<std::string>> wh_words_;
    LexicalWeights weights_;
};

/// Frames the classifier input as "[CLS]<history>,<course>[SEP]<query>".
std::string remote_intent_input(std::span<const Turn> history, std::string_view course_id, std::string_view query);

/// POSTs {"input": ...} to a model server and expects {"h": number in [0,1]}.
/// Any failure raises RemoteUnavailable.
class RemoteIntentScorer final : public IntentScorer {
public:
    RemoteIntentScorer(std::string url, std::chrono::milliseconds timeout);
    double score(std::span<const Turn> history, std::string_view course_id, std::string_view query) const override;

private:
    std::string url_;
    std::chrono::milliseconds timeout_;
};

/// Uses the primary scorer and falls back when it raises RemoteUnavailable.
class FallbackIntentScorer final : public IntentScorer {
public:
    FallbackIntentScorer(std::unique_ptr<IntentScorer> primary, std::unique_ptr<IntentScorer> fallback)
        : primary_(std::move(primary)), fallback_(std::move(fallback)) {}
    double score(std::span<const Turn> history, std::string_view course_id, std::string_view query) const override;

private:
    std::unique_ptr<IntentScorer> primary_;
    std::unique_ptr<IntentScorer> fallback_;
};

}  // namespace vta
