#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vta/index.hpp"
#include "vta/knowledge.hpp"

namespace vta {

struct ConceptMatch {
    std::string concept_id;
    std::string surface;  // the matched text as written in the query
    std::size_t begin = 0;
    std::size_t end = 0;

    friend bool operator==(const ConceptMatch&, const ConceptMatch&) = default;
};

struct QueryConcepts {
    std::vector<ConceptMatch> matches;

    bool empty() const { return matches.empty(); }
    std::size_t size() const { return matches.size(); }
};

/// Greedy longest match, left to right, over the query's units against the
/// graph lexicon. A name shared by several concepts resolves to the one in
/// course_id when there is one, else to the lowest id.
QueryConcepts extract_concepts(std::string_view query, const ConceptGraph& graph,
                               std::string_view course_id = {});

/// |a ∩ b| / |a ∪ b|, and 0 when both are empty.
double jaccard_domains(const DomainSet& a, const DomainSet& b);

/// Which intent value weights web snippets.
enum class SearchWeighting {
    Intent,         // weight = h
    InverseIntent,  // weight = 1 - h
};

struct RankedCandidate {
    std::string snippet_id;
    double raw_bm25 = 0.0;
    double weight = 1.0;
    double score = 0.0;
    SourceKind source = SourceKind::Faq;
};

struct RetrievalResult {
    std::vector<RankedCandidate> candidates;
    bool answered = false;
    std::size_t k = 0;
    std::vector<std::string> query_terms;
};

struct RankingOptions {
    double beta = 2.0;
    std::size_t k = 5;
    SearchWeighting search_weighting = SearchWeighting::Intent;
};

/// Terms BM25 is scored against: the tokens of every extracted concept span,
/// or all query tokens when nothing was extracted.
std::vector<std::string> query_terms(std::string_view query, const QueryConcepts& concepts);

/// Source weight: domain Jaccard of the snippet's course against the session
/// course for CONCEPT, the intent score for SEARCH, 1 otherwise.
double source_weight(const Snippet& z, double h, const DomainSet& session_domains,
                     const ConceptGraph& graph, SearchWeighting weighting);

RankedCandidate score(const Snippet& z, std::span<const std::string> terms, double h,
                      const DomainSet& session_domains, const ConceptGraph& graph, const IndexView& index,
                      SearchWeighting weighting = SearchWeighting::Intent);

/// Sorts by descending score, ties by ascending snippet id, keeps the first k.
std::vector<RankedCandidate> rank(std::vector<RankedCandidate> candidates, std::size_t k);

/// Scores every snippet sharing a term with the query (unsorted).
std::vector<RankedCandidate> score_candidates(std::span<const std::string> terms, double h,
                                              std::string_view course_id, const IndexView& index,
                                              const ConceptGraph& graph,
                                              SearchWeighting weighting = SearchWeighting::Intent);

RetrievalResult retrieve(std::string_view query, std::string_view course_id, double h,
                         const RankingOptions& options, const IndexView& index, const ConceptGraph& graph);

}  // namespace vta
