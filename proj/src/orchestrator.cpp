#include "vta/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

#include "vta/error.hpp"
#include "vta/jsonl.hpp"

namespace vta {
namespace {

using jsonl::Json;

bool blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

std::string session_id(std::uint64_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sess-%06llu", static_cast<unsigned long long>(n));
    return buf;
}

Json turn_to_json(const Turn& t) {
    Json j = {{"role", to_string(t.role)}, {"text", t.text}, {"ts", t.timestamp_ms}};
    if (!t.route.empty()) j["route"] = t.route;
    return j;
}

Turn turn_from_json(const Json& j, std::size_t line_no) {
    Turn t;
    const auto role = parse_role(jsonl::string_field(j, "role", line_no));
    if (!role) fail(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": bad role");
    t.role = *role;
    t.text = jsonl::string_field(j, "text", line_no);
    t.timestamp_ms = j.value("ts", std::int64_t{0});
    t.route = j.value("route", std::string{});
    return t;
}

}  // namespace

std::string_view to_string(Route route) {
    switch (route) {
        case Route::Retrieved: return "RETRIEVED";
        case Route::CotGenerated: return "COT_GENERATED";
        case Route::ChitChat: return "CHITCHAT";
    }
    return "COT_GENERATED";
}

std::optional<Route> parse_route(std::string_view s) {
    if (s == "RETRIEVED") return Route::Retrieved;
    if (s == "COT_GENERATED") return Route::CotGenerated;
    if (s == "CHITCHAT") return Route::ChitChat;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// SessionStore

SessionStore::SessionStore(std::optional<std::filesystem::path> log_path) : log_path_(std::move(log_path)) {
    if (log_path_) replay();
}

void SessionStore::replay() {
    std::ifstream in(*log_path_);
    if (!in) return;
    jsonl::for_each_record(in, [&](std::size_t line_no, const Json& r) {
        const std::string event = jsonl::string_field(r, "event", line_no);
        if (event == "session_created") {
            auto s = std::make_shared<Slot>();
            s->session.id = jsonl::string_field(r, "id", line_no);
            s->session.course_id = jsonl::string_field(r, "course_id", line_no);
            s->session.course_known = r.value("course_known", true);
            s->session.created_ms = r.value("created_ms", std::int64_t{0});
            unsigned long long n = 0;
            if (std::sscanf(s->session.id.c_str(), "sess-%llu", &n) == 1) next_id_ = std::max<std::uint64_t>(next_id_, n + 1);
            sessions_[s->session.id] = std::move(s);
        } else if (event == "exchange") {
            const std::string id = jsonl::string_field(r, "session_id", line_no);
            const auto it = sessions_.find(id);
            if (it == sessions_.end()) fail(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": exchange for unknown session " + id);
            const auto turns = r.find("turns");
            if (turns == r.end() || !turns->is_array() || turns->size() != 2) {
                fail(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": exchange needs two turns");
            }
            for (const auto& t : *turns) it->second->session.turns.push_back(turn_from_json(t, line_no));
        } else {
            fail(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": unknown event " + event);
        }
    });
}

void SessionStore::write_event(const std::string& line) {
    if (!log_path_) return;
    std::lock_guard lock(log_mutex_);
    std::ofstream out(*log_path_, std::ios::app);
    out << line << '\n';
    out.flush();
    if (!out) fail(ErrorCode::Io, "cannot append to " + log_path_->string());
}

void SessionStore::flush() {
    // Events are flushed as they are written; taking the lock waits for an
    // in-progress write.
    std::lock_guard lock(log_mutex_);
}

Session SessionStore::create(std::string course_id, bool course_known, std::int64_t now_ms) {
    auto s = std::make_shared<Slot>();
    s->session.course_id = std::move(course_id);
    s->session.course_known = course_known;
    s->session.created_ms = now_ms;
    std::unique_lock lock(map_mutex_);
    s->session.id = session_id(next_id_++);
    write_event(Json{{"event", "session_created"},
                     {"id", s->session.id},
                     {"course_id", s->session.course_id},
                     {"course_known", course_known},
                     {"created_ms", now_ms}}
                    .dump());
    sessions_[s->session.id] = s;
    return s->session;
}

std::shared_ptr<SessionStore::Slot> SessionStore::slot(std::string_view id) const {
    std::shared_lock lock(map_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) fail(ErrorCode::UnknownSession, "unknown session " + std::string(id));
    return it->second;
}

Session SessionStore::get(std::string_view id) const {
    auto s = slot(id);
    std::lock_guard lock(s->mutex);
    return s->session;
}

std::vector<SessionSummary> SessionStore::list() const {
    std::vector<std::shared_ptr<Slot>> slots;
    {
        std::shared_lock lock(map_mutex_);
        for (const auto& [_, s] : sessions_) slots.push_back(s);
    }
    std::vector<SessionSummary> out;
    for (const auto& s : slots) {
        std::lock_guard lock(s->mutex);
        out.push_back({s->session.id, s->session.course_id, s->session.turns.size(), s->session.created_ms});
    }
    return out;
}

void SessionStore::exchange(std::string_view id, const ExchangeFn& fn) {
    auto s = slot(id);
    std::lock_guard lock(s->mutex);
    auto [user, assistant] = fn(s->session);
    const std::int64_t last = s->session.turns.empty() ? s->session.created_ms : s->session.turns.back().timestamp_ms;
    user.timestamp_ms = std::max(user.timestamp_ms, last);
    assistant.timestamp_ms = std::max(assistant.timestamp_ms, user.timestamp_ms);
    write_event(Json{{"event", "exchange"},
                     {"session_id", s->session.id},
                     {"turns", Json::array({turn_to_json(user), turn_to_json(assistant)})}}
                    .dump());
    s->session.turns.push_back(std::move(user));
    s->session.turns.push_back(std::move(assistant));
}

// ---------------------------------------------------------------------------
// CorpusHolder

CorpusHolder::CorpusHolder(std::shared_ptr<const ConceptGraph> graph, Bm25Params params)
    : graph_(std::move(graph)), params_(params) {}

std::shared_ptr<const Corpus> CorpusHolder::get() const {
    std::lock_guard lock(mutex_);
    return current_;
}

void CorpusHolder::rebuild(const KnowledgeStore::FaqSnapshot& faq) {
    auto snippets = unify_concepts(*graph_);
    const std::size_t concept_count = snippets.size();
    snippets.insert(snippets.end(), faq->begin(), faq->end());
    auto next = std::make_shared<Corpus>();
    next->graph = graph_;
    next->index = SnippetIndex::build(std::move(snippets), params_);
    next->concept_count = concept_count;
    next->faq_count = faq->size();
    std::lock_guard lock(mutex_);
    current_ = std::move(next);
}

// ---------------------------------------------------------------------------
// Parts

EngineParts make_parts(std::shared_ptr<KnowledgeStore> knowledge, std::vector<CoTExample> examples,
                       std::shared_ptr<const IntentScorer> intent, std::shared_ptr<const SearchAdapter> search,
                       std::shared_ptr<LanguageModelClient> llm, const EngineConfig& config) {
    EngineParts parts;
    parts.knowledge = std::move(knowledge);
    parts.corpus = std::make_shared<CorpusHolder>(parts.knowledge->graph(),
                                                  Bm25Params{config.ranking.k1, config.ranking.b});
    parts.corpus->rebuild(parts.knowledge->faq());
    std::weak_ptr<CorpusHolder> weak = parts.corpus;
    parts.knowledge->add_listener([weak](const KnowledgeStore::FaqSnapshot& faq) {
        if (auto holder = weak.lock()) holder->rebuild(faq);
    });
    parts.examples = std::make_shared<const ExampleStore>(std::move(examples));
    parts.intent = std::move(intent);
    parts.search = search ? std::move(search) : std::make_shared<const DisabledSearchAdapter>();
    parts.llm = std::move(llm);
    if (!config.cot.templates_file.empty()) parts.teach_templates = TeachTemplates::load(config.cot.templates_file);
    if (!config.gen.chitchat_template.empty()) parts.chitchat_template = ChitChatTemplate::load(config.gen.chitchat_template);
    return parts;
}

EngineParts load_parts(const EngineConfig& config) {
    const auto& d = config.data;
    ConceptGraph graph;
    if (!d.concepts.empty()) {
        graph = load_concept_graph(d.concepts, d.edges.empty() ? std::nullopt : std::optional<std::filesystem::path>(d.edges));
    }
    std::vector<Snippet> faq;
    if (!d.faq.empty()) faq = load_faq(d.faq);
    auto knowledge = std::make_shared<KnowledgeStore>(
        std::move(graph), std::move(faq),
        d.escalation_log.empty() ? std::nullopt : std::optional<std::filesystem::path>(d.escalation_log));

    std::vector<CoTExample> examples;
    if (!d.examples.empty()) examples = load_cot_examples(d.examples);

    IntentLexicons lexicons = IntentLexicons::defaults();
    if (!config.intent.greetings_file.empty()) lexicons.greetings = load_word_list(config.intent.greetings_file);
    if (!config.intent.wh_words_file.empty()) lexicons.wh_words = load_word_list(config.intent.wh_words_file);
    const LexicalWeights weights{config.intent.w_greeting, config.intent.w_interrogative, config.intent.w_concept,
                                 config.intent.bias};
    auto lexical = std::make_unique<LexicalIntentScorer>(knowledge->graph(), lexicons, weights);
    std::shared_ptr<const IntentScorer> intent;
    if (config.intent.mode == "remote") {
        intent = std::make_shared<const FallbackIntentScorer>(
            std::make_unique<RemoteIntentScorer>(config.intent.remote_url,
                                                 std::chrono::milliseconds(config.intent.timeout_ms)),
            std::move(lexical));
    } else {
        intent = std::move(lexical);
    }

    std::shared_ptr<const SearchAdapter> search;
    if (config.search.mode == "fixture" && !d.search_fixtures.empty()) {
        search = std::make_shared<const FixtureSearchAdapter>(d.search_fixtures);
    }

    std::shared_ptr<LanguageModelClient> llm;
    if (config.gen.mode == "remote") {
        llm = std::make_shared<RemoteLanguageModel>(config.gen.url, std::chrono::milliseconds(config.gen.timeout_ms),
                                                    config.gen.max_concurrency);
    } else {
        llm = std::make_shared<MockLanguageModel>();
    }
    return make_parts(std::move(knowledge), std::move(examples), std::move(intent), std::move(search), std::move(llm),
                      config);
}

ClockFn system_clock_ms() {
    return [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

// ---------------------------------------------------------------------------
// Engine

Engine::Engine(EngineConfig config, EngineParts parts, ClockFn clock)
    : config_(std::move(config)),
      parts_(std::move(parts)),
      clock_(std::move(clock)),
      sessions_(config_.data.session_log.empty() ? std::nullopt
                                                  : std::optional<std::filesystem::path>(config_.data.session_log)) {}

std::unique_ptr<Engine> Engine::from_config(const EngineConfig& config) {
    return std::make_unique<Engine>(config, load_parts(config));
}

std::unique_ptr<Engine> Engine::derive(const EngineConfig& config) const {
    EngineConfig c = config;
    c.data.session_log.clear();
    return std::make_unique<Engine>(std::move(c), parts_, clock_);
}

Session Engine::create_session(std::string course_id) {
    if (blank(course_id)) fail(ErrorCode::InvalidArgument, "course_id is required");
    const bool known = parts_.knowledge->graph()->has_course(course_id);
    return sessions_.create(std::move(course_id), known, now());
}

Session Engine::get_session(std::string_view id) const {
    return sessions_.get(id);
}

std::vector<SessionSummary> Engine::list_sessions() const {
    return sessions_.list();
}

GenerationResponse Engine::generate(std::string prompt, std::vector<std::string> stop) {
    GenerationRequest req;
    req.prompt = std::move(prompt);
    req.max_tokens = config_.gen.max_tokens;
    req.temperature = config_.gen.temperature;
    req.stop = std::move(stop);
    return parts_.llm->generate(req);
}

AssistantResponse Engine::run_pipeline(const Session& session, std::string_view query) {
    AssistantResponse res;
    try {
        const IntentScore intent =
            classify(*parts_.intent, session.turns, session.course_id, query, config_.intent.alpha);
        res.evidence.h = intent.h;

        if (intent.route == IntentRoute::ChitChat) {
            res.route = Route::ChitChat;
            std::vector<Turn> turns = session.turns;
            turns.push_back({Role::User, std::string(query), 0, {}});
            auto out = generate(chitchat_prompt(turns, session.course_id, config_.gen.history_window,
                                                parts_.chitchat_template),
                                {"\n" + parts_.chitchat_template.student_prefix});
            if (out.finish == FinishReason::Error) {
                res.text = config_.gen.fallback_text;
                res.error = out.error;
            } else {
                res.text = std::move(out.text);
            }
            return res;
        }

        const auto corpus = parts_.corpus->get();
        const ConceptGraph& graph = *corpus->graph;

        std::vector<Snippet> web;
        try {
            web = web_search(*parts_.search, query, config_.search.k);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::AdapterUnavailable) throw;
        }
        const SnippetIndex overlay = SnippetIndex::build(std::move(web), corpus->index.bm25().params());
        std::vector<const SnippetIndex*> layers{&corpus->index};
        if (!overlay.snippets().empty()) layers.push_back(&overlay);
        const IndexView view(layers);

        RankingOptions ranking;
        ranking.beta = config_.ranking.beta;
        ranking.k = config_.ranking.k;
        ranking.search_weighting =
            config_.ranking.search_weight == "1-h" ? SearchWeighting::InverseIntent : SearchWeighting::Intent;
        const RetrievalResult retrieved = retrieve(query, session.course_id, intent.h, ranking, view, graph);
        res.evidence.candidates = retrieved.candidates;

        if (retrieved.answered) {
            res.route = Route::Retrieved;
            const Snippet* top = view.find(retrieved.candidates.front().snippet_id);
            res.evidence.winning = *top;
            res.text = top->body;
            return res;
        }

        res.route = Route::CotGenerated;
        TeachOptions teach;
        teach.n_examples = config_.cot.n_examples;
        teach.prereq_depth = config_.cot.prereq_depth;
        teach.char_budget = config_.cot.char_budget;
        teach.order = config_.cot.order == "erq" ? PromptOrder::ExamplesReasoningQuery
                                                 : PromptOrder::ExamplesQueryReasoning;
        teach.include_retrieved_context = config_.cot.include_retrieved;
        teach.templates = parts_.teach_templates;
        std::vector<Snippet> context;
        for (const auto& c : retrieved.candidates) context.push_back(*view.find(c.snippet_id));

        const TeachPrompt prompt = build_prompt(query, session.course_id, graph, *parts_.examples, teach, context);
        res.evidence.reasoning = prompt.reasoning;
        res.evidence.concepts = prompt.concept_ids;
        auto out = generate(prompt.final_prompt, {"\nQ: "});
        if (out.finish == FinishReason::Error) {
            res.text = config_.gen.fallback_text;
            res.error = out.error;
        } else {
            res.text = std::move(out.text);
        }
    } catch (const std::exception& e) {
        res.text = config_.gen.fallback_text;
        res.error = e.what();
    }
    return res;
}

AssistantResponse Engine::respond(std::string_view session_id, std::string_view query) {
    if (blank(query)) fail(ErrorCode::InvalidArgument, "empty query");
    AssistantResponse response;
    sessions_.exchange(session_id, [&](const Session& session) {
        Turn user{Role::User, std::string(query), now(), {}};
        response = run_pipeline(session, query);
        Turn assistant{Role::Assistant, response.text, now(), std::string(to_string(response.route))};
        return std::make_pair(std::move(user), std::move(assistant));
    });
    return response;
}

EscalationItem Engine::escalate(std::string_view session_id, std::string query) {
    const Session s = sessions_.get(session_id);
    return parts_.knowledge->escalate(s.id, s.course_id, std::move(query), now());
}

Snippet Engine::answer_escalation(std::string_view item_id, std::string expert_answer) {
    return parts_.knowledge->answer_escalation(item_id, std::move(expert_answer));
}

std::vector<EscalationItem> Engine::escalations(std::optional<EscalationStatus> status) const {
    return parts_.knowledge->escalations(status);
}

HealthInfo Engine::health() const {
    HealthInfo h;
    const auto corpus = parts_.corpus->get();
    h.concepts = corpus->concept_count;
    h.edges = corpus->graph->edges().size();
    h.faq = corpus->faq_count;
    h.examples = parts_.examples->size();
    h.snippets = corpus->index.snippets().size();
    h.sessions = sessions_.list().size();
    h.pending_escalations = parts_.knowledge->escalations(EscalationStatus::Pending).size();
    const auto courses = corpus->graph->courses();
    h.courses.assign(courses.begin(), courses.end());
    h.config_hash = config_hash(config_);
    return h;
}

void Engine::flush() {
    sessions_.flush();
}

}  // namespace vta
