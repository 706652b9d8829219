#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "vta/config.hpp"
#include "vta/dialogue.hpp"
#include "vta/generation.hpp"
#include "vta/index.hpp"
#include "vta/intent.hpp"
#include "vta/knowledge.hpp"
#include "vta/ranking.hpp"
#include "vta/teach_prompt.hpp"

namespace vta {

enum class Route { Retrieved, CotGenerated, ChitChat };

std::string_view to_string(Route route);
std::optional<Route> parse_route(std::string_view s);

struct Evidence {
    double h = 0.0;
    std::vector<RankedCandidate> candidates;
    std::optional<Snippet> winning;        // RETRIEVED
    std::optional<std::string> reasoning;  // COT_GENERATED
    std::vector<std::string> concepts;
};

struct AssistantResponse {
    std::string text;
    Route route = Route::CotGenerated;
    Evidence evidence;
    std::optional<std::string> error;
};

struct Session {
    std::string id;
    std::string course_id;
    bool course_known = true;
    std::int64_t created_ms = 0;
    std::vector<Turn> turns;
};

struct SessionSummary {
    std::string id;
    std::string course_id;
    std::size_t turn_count = 0;
    std::int64_t created_ms = 0;
};

/// Sessions materialized in memory from an append-only JSON-lines event log:
///   {"event":"session_created","id","course_id","course_known","created_ms"}
///   {"event":"exchange","session_id","turns":[{"role","text","ts","route"}, ...]}
/// An exchange carries the user turn and the assistant turn together, so a
/// replay never sees half of one. Without a log path everything stays in memory.
class SessionStore {
public:
    explicit SessionStore(std::optional<std::filesystem::path> log_path = std::nullopt);

    Session create(std::string course_id, bool course_known, std::int64_t now_ms);
    Session get(std::string_view id) const;  // UnknownSession
    std::vector<SessionSummary> list() const;

    /// Runs fn with the session locked against other exchanges and appends
    /// the two turns it returns. Calls on different sessions run in parallel.
    using ExchangeFn = std::function<std::pair<Turn, Turn>(const Session&)>;
    void exchange(std::string_view id, const ExchangeFn& fn);

    void flush();

private:
    struct Slot {
        std::mutex mutex;
        Session session;
    };

    std::shared_ptr<Slot> slot(std::string_view id) const;
    void replay();
    void write_event(const std::string& line);

    std::optional<std::filesystem::path> log_path_;
    mutable std::shared_mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Slot>, std::less<>> sessions_;
    std::uint64_t next_id_ = 1;
    std::mutex log_mutex_;
};

/// The retrieval corpus (concept + FAQ snippets and their index) as an
/// immutable snapshot, replaced wholesale whenever the FAQ grows.
struct Corpus {
    std::shared_ptr<const ConceptGraph> graph;
    SnippetIndex index;
    std::size_t concept_count = 0;
    std::size_t faq_count = 0;
};

class CorpusHolder {
public:
    CorpusHolder(std::shared_ptr<const ConceptGraph> graph, Bm25Params params);

    std::shared_ptr<const Corpus> get() const;
    void rebuild(const KnowledgeStore::FaqSnapshot& faq);

private:
    std::shared_ptr<const ConceptGraph> graph_;
    Bm25Params params_;
    mutable std::mutex mutex_;
    std::shared_ptr<const Corpus> current_;
};

/// Everything an engine shares with engines derived from it.
struct EngineParts {
    std::shared_ptr<KnowledgeStore> knowledge;
    std::shared_ptr<CorpusHolder> corpus;
    std::shared_ptr<const ExampleStore> examples;
    std::shared_ptr<const IntentScorer> intent;
    std::shared_ptr<const SearchAdapter> search;
    std::shared_ptr<LanguageModelClient> llm;
    TeachTemplates teach_templates;
    ChitChatTemplate chitchat_template;
};

/// Wires the parts together and subscribes the corpus to FAQ growth.
EngineParts make_parts(std::shared_ptr<KnowledgeStore> knowledge, std::vector<CoTExample> examples,
                       std::shared_ptr<const IntentScorer> intent, std::shared_ptr<const SearchAdapter> search,
                       std::shared_ptr<LanguageModelClient> llm, const EngineConfig& config);

/// Loads every data file named in the config and builds the configured
/// scorer, search adapter and model client.
EngineParts load_parts(const EngineConfig& config);

using ClockFn = std::function<std::int64_t()>;
ClockFn system_clock_ms();

struct HealthInfo {
    std::size_t concepts = 0;
    std::size_t edges = 0;
    std::size_t faq = 0;
    std::size_t examples = 0;
    std::size_t snippets = 0;
    std::size_t sessions = 0;
    std::size_t pending_escalations = 0;
    std::vector<std::string> courses;
    std::string config_hash;
};

/// Routes each query: intent gate, then concept-aware retrieval with the
/// answerability gate, then Chain of Teach generation.
class Engine {
public:
    Engine(EngineConfig config, EngineParts parts, ClockFn clock = system_clock_ms());

    static std::unique_ptr<Engine> from_config(const EngineConfig& config);

    /// Same knowledge, clients and corpus; different thresholds; sessions in
    /// memory only. Index parameters stay those of the original engine.
    std::unique_ptr<Engine> derive(const EngineConfig& config) const;

    const EngineConfig& config() const { return config_; }
    const EngineParts& parts() const { return parts_; }

    Session create_session(std::string course_id);
    Session get_session(std::string_view id) const;
    std::vector<SessionSummary> list_sessions() const;

    AssistantResponse respond(std::string_view session_id, std::string_view query);

    EscalationItem escalate(std::string_view session_id, std::string query);
    Snippet answer_escalation(std::string_view item_id, std::string expert_answer);
    std::vector<EscalationItem> escalations(std::optional<EscalationStatus> status = std::nullopt) const;

    HealthInfo health() const;
    void flush();

private:
    AssistantResponse run_pipeline(const Session& session, std::string_view query);
    GenerationResponse generate(std::string prompt, std::vector<std::string> stop);
    std::int64_t now() const { return clock_(); }

    EngineConfig config_;
    EngineParts parts_;
    ClockFn clock_;
    SessionStore sessions_;
};

}  // namespace vta
