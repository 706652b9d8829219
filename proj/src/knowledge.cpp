#include "vta/knowledge.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "vta/error.hpp"
#include "vta/jsonl.hpp"
#include "vta/text.hpp"

namespace vta {
namespace {

using jsonl::Json;

bool blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

std::string line_prefix(std::size_t line_no) {
    return "line " + std::to_string(line_no) + ": ";
}

std::size_t count_units(std::string_view key) {
    return key.empty() ? 0 : static_cast<std::size_t>(std::count(key.begin(), key.end(), ' ')) + 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// ConceptGraph

ConceptGraph ConceptGraph::build(std::vector<Concept> concepts, std::vector<PrerequisiteEdge> edges) {
    ConceptGraph g;
    for (auto& c : concepts) {
        if (c.id.empty()) fail(ErrorCode::EmptyField, "concept with empty id");
        if (blank(c.name)) fail(ErrorCode::EmptyField, "concept " + c.id + ": empty name");
        if (blank(c.definition)) fail(ErrorCode::EmptyField, "concept " + c.id + ": empty definition");
        const std::string key = text::lexicon_key(c.name);
        if (key.empty()) {
            fail(ErrorCode::EmptyField, "concept " + c.id + ": name has no word characters");
        }
        const std::string id = c.id;
        if (!g.concepts_.emplace(id, std::move(c)).second) {
            fail(ErrorCode::DuplicateConcept, "duplicate concept id " + id);
        }
    }
    for (auto& e : edges) {
        if (!g.concepts_.contains(e.head_id) || !g.concepts_.contains(e.tail_id)) {
            fail(ErrorCode::DanglingEdge, "edge " + e.head_id + " -> " + e.tail_id + " references an unknown concept");
        }
        if (e.head_id == e.tail_id) fail(ErrorCode::SelfLoop, "self-loop on " + e.head_id);
        if (!g.edges_.insert(e).second) {
            fail(ErrorCode::DuplicateEdge, "duplicate edge " + e.head_id + " -> " + e.tail_id);
        }
    }
    // edges_ is ordered by (head, tail), so per-tail lists come out sorted
    // only after an explicit sort.
    for (const auto& e : g.edges_) g.prereqs_[e.tail_id].push_back(e.head_id);
    for (auto& [_, heads] : g.prereqs_) std::sort(heads.begin(), heads.end());

    for (const auto& [id, c] : g.concepts_) {
        const std::string key = text::lexicon_key(c.name);
        g.lexicon_[key].push_back(id);  // ids arrive ascending
        g.max_key_units_ = std::max(g.max_key_units_, count_units(key));
        auto& domains = g.course_domains_[c.course_id];
        domains.insert(c.domains.begin(), c.domains.end());
    }
    return g;
}

const Concept* ConceptGraph::find(std::string_view id) const {
    const auto it = concepts_.find(std::string(id));
    return it == concepts_.end() ? nullptr : &it->second;
}

const Concept& ConceptGraph::at(std::string_view id) const {
    const Concept* c = find(id);
    if (c == nullptr) fail(ErrorCode::UnknownConcept, "unknown concept " + std::string(id));
    return *c;
}

std::vector<std::string> ConceptGraph::prerequisites_of(std::string_view id) const {
    const auto it = prereqs_.find(id);
    return it == prereqs_.end() ? std::vector<std::string>{} : it->second;
}

const std::vector<std::string>* ConceptGraph::lookup(std::string_view key) const {
    const auto it = lexicon_.find(std::string(key));
    return it == lexicon_.end() ? nullptr : &it->second;
}

DomainSet ConceptGraph::course_domains(std::string_view course_id) const {
    const auto it = course_domains_.find(course_id);
    return it == course_domains_.end() ? DomainSet{} : it->second;
}

std::set<std::string> ConceptGraph::courses() const {
    std::set<std::string> out;
    for (const auto& [course, _] : course_domains_) out.insert(course);
    return out;
}

bool ConceptGraph::has_course(std::string_view course_id) const {
    return course_domains_.find(course_id) != course_domains_.end();
}

// ---------------------------------------------------------------------------
// Graph files

std::vector<Concept> parse_concepts(std::istream& in) {
    std::vector<Concept> out;
    jsonl::for_each_record(in, [&](std::size_t line_no, const Json& r) {
        Concept c;
        c.id = jsonl::string_field(r, "id", line_no);
        c.name = jsonl::string_field(r, "name", line_no);
        c.definition = jsonl::string_field(r, "definition", line_no);
        c.course_id = jsonl::string_field(r, "course_id", line_no);
        if (const auto it = r.find("domains"); it != r.end()) {
            if (!it->is_array()) fail(ErrorCode::MalformedRecord, line_prefix(line_no) + "\"domains\" must be an array");
            for (const auto& d : *it) {
                if (!d.is_string()) fail(ErrorCode::MalformedRecord, line_prefix(line_no) + "domain labels must be strings");
                c.domains.insert(d.get<std::string>());
            }
        }
        if (c.id.empty() || blank(c.name) || blank(c.definition)) {
            fail(ErrorCode::EmptyField, line_prefix(line_no) + "empty id, name or definition");
        }
        out.push_back(std::move(c));
    });
    return out;
}

std::vector<PrerequisiteEdge> parse_edges(std::istream& in) {
    std::vector<PrerequisiteEdge> out;
    jsonl::for_each_record(in, [&](std::size_t line_no, const Json& r) {
        out.push_back({jsonl::string_field(r, "head", line_no), jsonl::string_field(r, "tail", line_no)});
    });
    return out;
}

ConceptGraph load_concept_graph(const std::filesystem::path& concepts_path,
                                const std::optional<std::filesystem::path>& edges_path) {
    auto concepts_in = jsonl::open_input(concepts_path);
    auto concepts = parse_concepts(concepts_in);
    std::vector<PrerequisiteEdge> edges;
    if (edges_path) {
        auto edges_in = jsonl::open_input(*edges_path);
        edges = parse_edges(edges_in);
    }
    return ConceptGraph::build(std::move(concepts), std::move(edges));
}

void write_concepts(const ConceptGraph& graph, std::ostream& out) {
    for (const auto& [id, c] : graph.concepts()) {
        Json r = {{"id", c.id},
                  {"name", c.name},
                  {"definition", c.definition},
                  {"domains", Json(std::vector<std::string>(c.domains.begin(), c.domains.end()))},
                  {"course_id", c.course_id}};
        out << r.dump() << '\n';
    }
}

void write_edges(const ConceptGraph& graph, std::ostream& out) {
    for (const auto& e : graph.edges()) {
        out << Json{{"head", e.head_id}, {"tail", e.tail_id}}.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Snippets

std::string_view to_string(SourceKind kind) {
    switch (kind) {
        case SourceKind::Concept: return "CONCEPT";
        case SourceKind::Search: return "SEARCH";
        case SourceKind::Faq: return "FAQ";
    }
    return "FAQ";
}

std::optional<SourceKind> parse_source_kind(std::string_view s) {
    if (s == "CONCEPT") return SourceKind::Concept;
    if (s == "SEARCH") return SourceKind::Search;
    if (s == "FAQ") return SourceKind::Faq;
    return std::nullopt;
}

void validate(const Snippet& s) {
    if (s.id.empty()) fail(ErrorCode::EmptyField, "snippet with empty id");
    if (blank(s.key) || blank(s.body)) fail(ErrorCode::EmptyField, "snippet " + s.id + ": empty key or body");
    if (s.source == SourceKind::Concept && (!s.course_id || s.course_id->empty())) {
        fail(ErrorCode::MalformedRecord, "concept snippet " + s.id + " has no course");
    }
}

std::string faq_snippet_id(std::size_t ordinal) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "faq:%06zu", ordinal);
    return buf;
}

std::vector<Snippet> parse_faq(std::istream& in, std::size_t first_ordinal) {
    std::vector<Snippet> out;
    jsonl::for_each_record(in, [&](std::size_t line_no, const Json& r) {
        Snippet s;
        s.id = faq_snippet_id(first_ordinal + out.size());
        s.key = jsonl::string_field(r, "q", line_no);
        s.body = jsonl::string_field(r, "a", line_no);
        s.source = SourceKind::Faq;
        if (const auto it = r.find("course_id"); it != r.end() && it->is_string()) {
            s.course_id = it->get<std::string>();
        }
        if (blank(s.key) || blank(s.body)) fail(ErrorCode::EmptyField, line_prefix(line_no) + "empty q or a");
        out.push_back(std::move(s));
    });
    return out;
}

std::vector<Snippet> load_faq(const std::filesystem::path& path) {
    auto in = jsonl::open_input(path);
    return parse_faq(in);
}

std::vector<Snippet> unify_concepts(const ConceptGraph& graph) {
    std::vector<Snippet> out;
    out.reserve(graph.size());
    for (const auto& [id, c] : graph.concepts()) {
        out.push_back(Snippet{"concept:" + id, c.name, c.definition, SourceKind::Concept, c.course_id, c.domains});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Web search

std::vector<Snippet> FixtureSearchAdapter::search(std::string_view query, std::size_t k) const {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir_, ec)) {
        fail(ErrorCode::AdapterUnavailable, "search fixture directory missing: " + dir_.string());
    }
    const std::string key = text::lexicon_key(query);
    if (key.empty()) return {};
    const auto file = dir_ / (key + ".json");
    std::ifstream in(file);
    if (!in) return {};
    Json results = Json::parse(in, nullptr, false);
    if (results.is_discarded() || !results.is_array()) {
        fail(ErrorCode::AdapterUnavailable, "unreadable search fixture " + file.string());
    }
    std::vector<Snippet> out;
    for (const auto& r : results) {
        if (out.size() >= k) break;
        if (!r.is_object()) continue;
        const std::string headline = r.value("headline", "");
        const std::string body = r.value("text", "");
        if (blank(headline) || blank(body)) continue;
        out.push_back(Snippet{"search:" + key + "#" + std::to_string(out.size()), headline, body,
                              SourceKind::Search, std::nullopt, {}});
    }
    return out;
}

std::vector<Snippet> web_search(const SearchAdapter& adapter, std::string_view query, std::size_t k) {
    if (blank(query)) fail(ErrorCode::InvalidArgument, "empty search query");
    if (k == 0) fail(ErrorCode::InvalidArgument, "k must be positive");
    auto results = adapter.search(query, k);
    if (results.size() > k) results.resize(k);
    return results;
}

// ---------------------------------------------------------------------------
// KnowledgeStore

std::string_view to_string(EscalationStatus status) {
    return status == EscalationStatus::Pending ? "PENDING" : "ANSWERED";
}

std::optional<EscalationStatus> parse_escalation_status(std::string_view s) {
    if (s == "PENDING") return EscalationStatus::Pending;
    if (s == "ANSWERED") return EscalationStatus::Answered;
    return std::nullopt;
}

KnowledgeStore::KnowledgeStore(ConceptGraph graph, std::vector<Snippet> faq,
                               std::optional<std::filesystem::path> escalation_log)
    : graph_(std::make_shared<const ConceptGraph>(std::move(graph))),
      log_path_(std::move(escalation_log)) {
    for (const auto& s : faq) validate(s);
    next_faq_ordinal_ = faq.size() + 1;
    faq_ = std::make_shared<const std::vector<Snippet>>(std::move(faq));
    if (log_path_) replay_log();
}

KnowledgeStore::FaqSnapshot KnowledgeStore::faq() const {
    std::lock_guard lock(mutex_);
    return faq_;
}

void KnowledgeStore::add_listener(Listener listener) {
    std::lock_guard writer(writer_mutex_);
    listeners_.push_back(std::move(listener));
}

void KnowledgeStore::replay_log() {
    std::ifstream in(*log_path_);
    if (!in) return;  // first run
    jsonl::for_each_record(in, [&](std::size_t line_no, const Json& r) {
        const std::string type = jsonl::string_field(r, "type", line_no);
        if (type == "escalated") {
            EscalationItem item;
            item.id = jsonl::string_field(r, "id", line_no);
            item.session_id = jsonl::string_field(r, "session_id", line_no);
            item.course_id = jsonl::string_field(r, "course_id", line_no);
            item.query = jsonl::string_field(r, "query", line_no);
            item.created_ms = r.value("created_ms", std::int64_t{0});
            items_.push_back(std::move(item));
        } else if (type == "answered") {
            const std::string id = jsonl::string_field(r, "id", line_no);
            auto it = std::find_if(items_.begin(), items_.end(), [&](const auto& i) { return i.id == id; });
            if (it == items_.end() || it->status == EscalationStatus::Answered) {
                fail(ErrorCode::MalformedRecord, line_prefix(line_no) + "answer for unknown or answered item " + id);
            }
            it->status = EscalationStatus::Answered;
            it->expert_answer = jsonl::string_field(r, "expert_answer", line_no);
            append_faq_locked(*it);
        } else {
            fail(ErrorCode::MalformedRecord, line_prefix(line_no) + "unknown event type " + type);
        }
    });
}

void KnowledgeStore::append_log(const std::string& line) {
    if (!log_path_) return;
    std::ofstream out(*log_path_, std::ios::app);
    out << line << '\n';
    out.flush();
    if (!out) fail(ErrorCode::Io, "cannot append to " + log_path_->string());
}

Snippet KnowledgeStore::append_faq_locked(const EscalationItem& item) {
    Snippet s{faq_snippet_id(next_faq_ordinal_++), item.query, *item.expert_answer, SourceKind::Faq,
              item.course_id, {}};
    auto next = std::make_shared<std::vector<Snippet>>(*faq_);
    next->push_back(s);
    std::lock_guard lock(mutex_);
    faq_ = std::move(next);
    return s;
}

EscalationItem KnowledgeStore::escalate(std::string session_id, std::string course_id, std::string query,
                                        std::int64_t now_ms) {
    if (blank(query)) fail(ErrorCode::InvalidArgument, "cannot escalate an empty question");
    std::lock_guard writer(writer_mutex_);
    EscalationItem item;
    {
        std::lock_guard lock(mutex_);
        item.id = "esc-" + std::to_string(items_.size() + 1);
    }
    item.session_id = std::move(session_id);
    item.course_id = std::move(course_id);
    item.query = std::move(query);
    item.created_ms = now_ms;
    append_log(Json{{"type", "escalated"},
                    {"id", item.id},
                    {"session_id", item.session_id},
                    {"course_id", item.course_id},
                    {"query", item.query},
                    {"created_ms", item.created_ms}}
                   .dump());
    std::lock_guard lock(mutex_);
    items_.push_back(item);
    return item;
}

Snippet KnowledgeStore::answer_escalation(std::string_view item_id, std::string expert_answer) {
    if (blank(expert_answer)) fail(ErrorCode::EmptyField, "empty expert answer");
    std::lock_guard writer(writer_mutex_);
    EscalationItem item;
    {
        std::lock_guard lock(mutex_);
        auto it = std::find_if(items_.begin(), items_.end(), [&](const auto& i) { return i.id == item_id; });
        if (it == items_.end()) fail(ErrorCode::UnknownItem, "unknown escalation " + std::string(item_id));
        if (it->status == EscalationStatus::Answered) {
            fail(ErrorCode::AlreadyAnswered, "escalation " + std::string(item_id) + " already answered");
        }
        item = *it;
    }
    append_log(Json{{"type", "answered"}, {"id", item.id}, {"expert_answer", expert_answer}}.dump());
    item.status = EscalationStatus::Answered;
    item.expert_answer = std::move(expert_answer);
    Snippet added = append_faq_locked(item);
    {
        std::lock_guard lock(mutex_);
        for (auto& i : items_) {
            if (i.id == item.id) i = item;
        }
    }
    const auto snapshot = faq();
    for (const auto& listener : listeners_) listener(snapshot);
    return added;
}

std::vector<EscalationItem> KnowledgeStore::escalations(std::optional<EscalationStatus> status) const {
    std::lock_guard lock(mutex_);
    std::vector<EscalationItem> out;
    for (const auto& i : items_) {
        if (!status || i.status == *status) out.push_back(i);
    }
    return out;
}

}  // namespace vta
