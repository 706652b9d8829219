#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vta {

using DomainSet = std::set<std::string>;

struct Concept {
    std::string id;
    std::string name;
    std::string definition;
    DomainSet domains;
    std::string course_id;

    friend bool operator==(const Concept&, const Concept&) = default;
};

inline constexpr std::string_view kPrerequisiteRelation = "prerequisite";

/// head is a prerequisite of tail.
struct PrerequisiteEdge {
    std::string head_id;
    std::string tail_id;

    friend auto operator<=>(const PrerequisiteEdge&, const PrerequisiteEdge&) = default;
};

/// Concepts from one or more courses plus prerequisite edges between them.
/// Built once, validated, then immutable.
class ConceptGraph {
public:
    ConceptGraph() = default;

    /// Validates ids, endpoints, self-loops and duplicates, then builds the
    /// lexicon. Throws vta::Error on the first violation.
    static ConceptGraph build(std::vector<Concept> concepts, std::vector<PrerequisiteEdge> edges);

    const std::map<std::string, Concept>& concepts() const { return concepts_; }
    const std::set<PrerequisiteEdge>& edges() const { return edges_; }
    std::size_t size() const { return concepts_.size(); }
    bool empty() const { return concepts_.empty(); }

    const Concept* find(std::string_view id) const;
    const Concept& at(std::string_view id) const;  // UnknownConcept

    /// Direct prerequisites of id in ascending id order.
    std::vector<std::string> prerequisites_of(std::string_view id) const;

    /// Lexicon key (text::lexicon_key of the name) to concept ids, ascending.
    const std::map<std::string, std::vector<std::string>>& lexicon() const { return lexicon_; }
    const std::vector<std::string>* lookup(std::string_view key) const;
    /// Longest lexicon key measured in units.
    std::size_t max_key_units() const { return max_key_units_; }

    /// Union of domain labels of every concept in the course.
    DomainSet course_domains(std::string_view course_id) const;
    std::set<std::string> courses() const;
    bool has_course(std::string_view course_id) const;

    friend bool operator==(const ConceptGraph& a, const ConceptGraph& b) {
        return a.concepts_ == b.concepts_ && a.edges_ == b.edges_ && a.lexicon_ == b.lexicon_;
    }

private:
    std::map<std::string, Concept> concepts_;
    std::set<PrerequisiteEdge> edges_;
    std::map<std::string, std::vector<std::string>, std::less<>> prereqs_;
    std::map<std::string, std::vector<std::string>> lexicon_;
    std::map<std::string, DomainSet, std::less<>> course_domains_;
    std::size_t max_key_units_ = 0;
};

std::vector<Concept> parse_concepts(std::istream& in);
std::vector<PrerequisiteEdge> parse_edges(std::istream& in);
ConceptGraph load_concept_graph(const std::filesystem::path& concepts_path,
                                const std::optional<std::filesystem::path>& edges_path);
void write_concepts(const ConceptGraph& graph, std::ostream& out);
void write_edges(const ConceptGraph& graph, std::ostream& out);

enum class SourceKind { Concept, Search, Faq };

std::string_view to_string(SourceKind kind);
std::optional<SourceKind> parse_source_kind(std::string_view s);

/// The unified QA-pair record every knowledge source is flattened into.
struct Snippet {
    std::string id;
    std::string key;
    std::string body;
    SourceKind source = SourceKind::Faq;
    std::optional<std::string> course_id;
    DomainSet domains;

    friend bool operator==(const Snippet&, const Snippet&) = default;
};

/// Throws EmptyField / MalformedRecord when the snippet invariants fail.
void validate(const Snippet& snippet);

std::string faq_snippet_id(std::size_t ordinal);

/// One FAQ snippet per {"q", "a"} line; ids are faq_snippet_id(first_ordinal + i).
std::vector<Snippet> parse_faq(std::istream& in, std::size_t first_ordinal = 1);
std::vector<Snippet> load_faq(const std::filesystem::path& path);

/// One CONCEPT snippet per concept, in ascending concept id order.
std::vector<Snippet> unify_concepts(const ConceptGraph& graph);

/// Pluggable web search. Implementations must be safe for concurrent calls.
class SearchAdapter {
public:
    virtual ~SearchAdapter() = default;
    /// At most k SEARCH snippets; throws AdapterUnavailable on backend failure.
    virtual std::vector<Snippet> search(std::string_view query, std::size_t k) const = 0;
};

/// Replays canned results from "<dir>/<lexicon_key(query)>.json", each a
/// JSON array of {"headline", "text"} objects.
class FixtureSearchAdapter final : public SearchAdapter {
public:
    explicit FixtureSearchAdapter(std::filesystem::path dir) : dir_(std::move(dir)) {}
    std::vector<Snippet> search(std::string_view query, std::size_t k) const override;

private:
    std::filesystem::path dir_;
};

class DisabledSearchAdapter final : public SearchAdapter {
public:
    std::vector<Snippet> search(std::string_view, std::size_t) const override { return {}; }
};

/// Validates arguments and forwards to the adapter.
std::vector<Snippet> web_search(const SearchAdapter& adapter, std::string_view query, std::size_t k);

enum class EscalationStatus { Pending, Answered };

std::string_view to_string(EscalationStatus status);
std::optional<EscalationStatus> parse_escalation_status(std::string_view s);

struct EscalationItem {
    std::string id;
    std::string session_id;
    std::string course_id;
    std::string query;
    EscalationStatus status = EscalationStatus::Pending;
    std::optional<std::string> expert_answer;
    std::int64_t created_ms = 0;
};

/// Owns the concept graph, the FAQ list and the "ask a real TA" queue.
///
/// The graph never changes after construction. The FAQ list is published as
/// an immutable snapshot; answering an escalation builds a new list with one
/// extra snippet and swaps it in, so readers see either the old or the new
/// list. Listeners run synchronously after each swap, before
/// answer_escalation returns.
///
/// When an escalation log path is given, every escalation event is appended
/// to it and replayed on construction.
class KnowledgeStore {
public:
    using FaqSnapshot = std::shared_ptr<const std::vector<Snippet>>;
    using Listener = std::function<void(const FaqSnapshot&)>;

    KnowledgeStore(ConceptGraph graph, std::vector<Snippet> faq,
                   std::optional<std::filesystem::path> escalation_log = std::nullopt);

    std::shared_ptr<const ConceptGraph> graph() const { return graph_; }
    FaqSnapshot faq() const;

    void add_listener(Listener listener);

    EscalationItem escalate(std::string session_id, std::string course_id, std::string query,
                            std::int64_t now_ms);
    Snippet answer_escalation(std::string_view item_id, std::string expert_answer);
    std::vector<EscalationItem> escalations(std::optional<EscalationStatus> status = std::nullopt) const;

private:
    void replay_log();
    void append_log(const std::string& line);
    Snippet append_faq_locked(const EscalationItem& item);

    std::shared_ptr<const ConceptGraph> graph_;
    std::optional<std::filesystem::path> log_path_;

    // writer_mutex_ serializes mutations and listener calls; mutex_ guards
    // the fields below for readers.
    std::mutex writer_mutex_;
    mutable std::mutex mutex_;
    FaqSnapshot faq_;
    std::size_t next_faq_ordinal_ = 1;
    std::vector<EscalationItem> items_;
    std::vector<Listener> listeners_;
};

}  // namespace vta
