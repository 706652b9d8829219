#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "json.hpp"

namespace vta {

/// Every tunable of the engine. The JSON form nests one object per section,
/// e.g. {"ranking": {"beta": 2.0}}; the dotted name ranking.beta refers to
/// the same key.
struct EngineConfig {
    struct Data {
        std::string concepts;
        std::string edges;
        std::string faq;
        std::string examples;
        std::string search_fixtures;
        std::string session_log;
        std::string escalation_log;
    } data;

    struct Intent {
        double alpha = 0.5;
        std::string mode = "lexical";  // lexical | remote
        std::string remote_url;
        int timeout_ms = 2000;
        std::string greetings_file;
        std::string wh_words_file;
        double w_greeting = 1.5;
        double w_interrogative = 1.0;
        double w_concept = 1.0;
        double bias = 0.0;
    } intent;

    struct Ranking {
        double beta = 2.0;
        std::size_t k = 5;
        std::string search_weight = "h";  // h | 1-h
        double k1 = 1.2;
        double b = 0.75;
    } ranking;

    struct Search {
        std::string mode = "fixture";  // fixture | off
        std::size_t k = 3;
    } search;

    struct Cot {
        std::size_t n_examples = 1;
        std::size_t prereq_depth = 1;
        std::size_t char_budget = 4000;
        std::string order = "eqr";  // eqr | erq
        std::string templates_file;
        bool include_retrieved = false;
    } cot;

    struct Gen {
        std::string mode = "mock";  // mock | remote
        std::string url;
        int timeout_ms = 30000;
        int max_tokens = 256;
        double temperature = 0.7;
        int max_concurrency = 4;
        std::size_t history_window = 6;
        std::string chitchat_template;
        std::string fallback_text = "Sorry, I cannot answer that right now. You can ask a real TA.";
    } gen;

    struct Service {
        int port = 8080;
        std::size_t max_body_bytes = 64 * 1024;
    } service;

    struct Eval {
        std::size_t workers = 4;
    } eval;
};

nlohmann::json to_json(const EngineConfig& config);

/// Missing keys keep their defaults; unknown keys or mistyped values raise
/// InvalidArgument.
EngineConfig config_from_json(const nlohmann::json& j);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Each key section.name may be overridden by the variable VTA_SECTION_NAME
/// (upper case, e.g. VTA_RANKING_BETA).
EngineConfig apply_env_overrides(const EngineConfig& config, const EnvLookup& env);
EnvLookup process_env();

/// Reads the file, resolves relative data paths against its directory and
/// applies environment overrides.
EngineConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env());

/// Sets a dotted key ("ranking.beta") from a string value.
EngineConfig with_override(const EngineConfig& config, const std::string& dotted_key, const std::string& value);

/// First 16 hex digits of SHA-256 over the canonical JSON dump.
std::string config_hash(const EngineConfig& config);

}  // namespace vta
