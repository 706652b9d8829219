#include "vta/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>

#include "vta/error.hpp"
#include "vta/generation.hpp"

namespace vta {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EngineConfig::Data, concepts, edges, faq, examples,
                                                search_fixtures, session_log, escalation_log)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EngineConfig::Intent, alpha, mode, remote_url, timeout_ms,
                                                greetings_file, wh_words_file, w_greeting, w_interrogative,
                                                w_concept, bias)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EngineConfig::Ranking, beta, k, search_weight, k1, b)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EngineConfig::Search, mode, k)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EngineConfig::Cot, n_examples, prereq_depth, char_budget, order,
                                                templates_file, include_retrieved)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EngineConfig::Gen, mode, url, timeout_ms, max_tokens,
                                                temperature, max_concurrency, history_window, chitchat_template,
                                                fallback_text)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EngineConfig::Service, port, max_body_bytes)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EngineConfig::Eval, workers)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EngineConfig, data, intent, ranking, search, cot, gen, service, eval)

namespace {

using Json = nlohmann::json;

bool compatible(const Json& expected, const Json& actual) {
    if (expected.is_number_unsigned()) return actual.is_number_unsigned() || (actual.is_number_integer() && actual.get<long long>() >= 0);
    if (expected.is_number_integer()) return actual.is_number_integer();
    if (expected.is_number()) return actual.is_number();
    return expected.type() == actual.type();
}

void check_shape(const Json& defaults, const Json& input, const std::string& prefix) {
    if (!input.is_object()) fail(ErrorCode::InvalidArgument, "config section " + prefix + " must be an object");
    for (const auto& [key, value] : input.items()) {
        const std::string dotted = prefix.empty() ? key : prefix + "." + key;
        if (!defaults.contains(key)) fail(ErrorCode::InvalidArgument, "unknown config key " + dotted);
        const Json& expected = defaults.at(key);
        if (expected.is_object()) {
            check_shape(expected, value, dotted);
        } else if (!compatible(expected, value)) {
            fail(ErrorCode::InvalidArgument, "config key " + dotted + " has the wrong type");
        }
    }
}

Json parse_scalar(const Json& like, const std::string& key, const std::string& raw) {
    try {
        if (like.is_string()) return raw;
        if (like.is_boolean()) {
            if (raw == "true" || raw == "1") return true;
            if (raw == "false" || raw == "0") return false;
        } else if (like.is_number_unsigned()) {
            std::size_t used = 0;
            const auto v = std::stoull(raw, &used);
            if (used == raw.size() && raw.find('-') == std::string::npos) return v;
        } else if (like.is_number_integer()) {
            std::size_t used = 0;
            const auto v = std::stoll(raw, &used);
            if (used == raw.size()) return v;
        } else if (like.is_number()) {
            std::size_t used = 0;
            const auto v = std::stod(raw, &used);
            if (used == raw.size()) return v;
        }
    } catch (const std::exception&) {
    }
    fail(ErrorCode::InvalidArgument, "bad value for " + key + ": " + raw);
}

void validate(const EngineConfig& c) {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) fail(ErrorCode::InvalidArgument, "invalid config: " + what);
    };
    require(c.intent.mode == "lexical" || c.intent.mode == "remote", "intent.mode must be lexical or remote");
    require(c.ranking.k >= 1, "ranking.k must be at least 1");
    require(c.ranking.search_weight == "h" || c.ranking.search_weight == "1-h", "ranking.search_weight must be h or 1-h");
    require(c.ranking.k1 >= 0.0 && c.ranking.b >= 0.0 && c.ranking.b <= 1.0, "ranking.k1 >= 0 and 0 <= ranking.b <= 1");
    require(c.search.mode == "fixture" || c.search.mode == "off", "search.mode must be fixture or off");
    require(c.search.k >= 1, "search.k must be at least 1");
    require(c.cot.order == "eqr" || c.cot.order == "erq", "cot.order must be eqr or erq");
    require(c.cot.n_examples >= 1, "cot.n_examples must be at least 1");
    require(c.gen.mode == "mock" || c.gen.mode == "remote", "gen.mode must be mock or remote");
    require(c.gen.max_tokens >= 1, "gen.max_tokens must be at least 1");
    require(c.gen.temperature >= 0.0, "gen.temperature must be non-negative");
    require(c.gen.max_concurrency >= 1 && c.gen.max_concurrency <= RemoteLanguageModel::kMaxConcurrency,
            "gen.max_concurrency out of range");
    require(c.service.max_body_bytes >= 1, "service.max_body_bytes must be positive");
    require(c.eval.workers >= 1, "eval.workers must be at least 1");
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    return s;
}

}  // namespace

nlohmann::json to_json(const EngineConfig& config) {
    Json j = config;
    return j;
}

EngineConfig config_from_json(const nlohmann::json& j) {
    const Json defaults = EngineConfig{};
    check_shape(defaults, j, "");
    Json merged = defaults;
    merged.merge_patch(j);
    EngineConfig out = merged.get<EngineConfig>();
    validate(out);
    return out;
}

EngineConfig apply_env_overrides(const EngineConfig& config, const EnvLookup& env) {
    Json j = to_json(config);
    for (auto& [section, fields] : j.items()) {
        for (auto& [key, value] : fields.items()) {
            const auto raw = env("VTA_" + upper(section) + "_" + upper(key));
            if (raw) value = parse_scalar(value, section + "." + key, *raw);
        }
    }
    return config_from_json(j);
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

EngineConfig load_config(const std::filesystem::path& path, const EnvLookup& env) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open config " + path.string());
    const Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) fail(ErrorCode::InvalidArgument, path.string() + " is not valid JSON");
    EngineConfig config = config_from_json(j);

    const auto base = path.parent_path();
    auto resolve = [&](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
    };
    for (auto* p : {&config.data.concepts, &config.data.edges, &config.data.faq, &config.data.examples,
                    &config.data.search_fixtures, &config.data.session_log, &config.data.escalation_log,
                    &config.intent.greetings_file, &config.intent.wh_words_file, &config.cot.templates_file,
                    &config.gen.chitchat_template}) {
        resolve(*p);
    }
    return apply_env_overrides(config, env);
}

EngineConfig with_override(const EngineConfig& config, const std::string& dotted_key, const std::string& value) {
    const auto dot = dotted_key.find('.');
    if (dot == std::string::npos) fail(ErrorCode::InvalidArgument, "config key must be section.name: " + dotted_key);
    const std::string section = dotted_key.substr(0, dot);
    const std::string key = dotted_key.substr(dot + 1);
    Json j = to_json(config);
    if (!j.contains(section) || !j[section].contains(key)) {
        fail(ErrorCode::InvalidArgument, "unknown config key " + dotted_key);
    }
    j[section][key] = parse_scalar(j[section][key], dotted_key, value);
    return config_from_json(j);
}

std::string config_hash(const EngineConfig& config) {
    return sha256_hex(to_json(config).dump()).substr(0, 16);
}

}  // namespace vta
