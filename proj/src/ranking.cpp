#include "vta/ranking.hpp"

#include <algorithm>

#include "vta/error.hpp"
#include "vta/text.hpp"

namespace vta {
namespace {

// Units of a multi-word name may be separated by whitespace, hyphens or
// underscores, but not by sentence punctuation.
bool joinable_gap(std::string_view gap) {
    return std::all_of(gap.begin(), gap.end(), [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '-' || c == '_';
    });
}

const std::string& resolve(const std::vector<std::string>& ids, const ConceptGraph& graph,
                           std::string_view course_id) {
    if (!course_id.empty()) {
        for (const auto& id : ids) {
            const Concept* c = graph.find(id);
            if (c != nullptr && c->course_id == course_id) return id;
        }
    }
    return ids.front();  // ascending, so the lowest id
}

}  // namespace

QueryConcepts extract_concepts(std::string_view query, const ConceptGraph& graph, std::string_view course_id) {
    QueryConcepts out;
    const auto units = text::segment(query);
    const std::size_t max_units = graph.max_key_units();
    std::size_t i = 0;
    while (i < units.size()) {
        bool matched = false;
        const std::size_t longest = std::min(max_units, units.size() - i);
        for (std::size_t len = longest; len >= 1; --len) {
            std::string key = units[i].folded;
            bool contiguous = true;
            for (std::size_t j = i + 1; j < i + len; ++j) {
                if (!joinable_gap(query.substr(units[j - 1].end, units[j].begin - units[j - 1].end))) {
                    contiguous = false;
                    break;
                }
                key += ' ';
                key += units[j].folded;
            }
            if (!contiguous) continue;
            const auto* ids = graph.lookup(key);
            if (ids == nullptr || ids->empty()) continue;
            const std::size_t begin = units[i].begin;
            const std::size_t end = units[i + len - 1].end;
            out.matches.push_back({resolve(*ids, graph, course_id), std::string(query.substr(begin, end - begin)),
                                   begin, end});
            i += len;
            matched = true;
            break;
        }
        if (!matched) ++i;
    }
    return out;
}

double jaccard_domains(const DomainSet& a, const DomainSet& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t common = 0;
    for (const auto& d : a) common += b.count(d);
    const std::size_t united = a.size() + b.size() - common;
    return static_cast<double>(common) / static_cast<double>(united);
}

std::vector<std::string> query_terms(std::string_view query, const QueryConcepts& concepts) {
    if (concepts.empty()) return text::tokenize(query);
    std::vector<std::string> terms;
    for (const auto& m : concepts.matches) {
        auto tokens = text::tokenize(m.surface);
        terms.insert(terms.end(), tokens.begin(), tokens.end());
    }
    return terms;
}

double source_weight(const Snippet& z, double h, const DomainSet& session_domains, const ConceptGraph& graph,
                     SearchWeighting weighting) {
    switch (z.source) {
        case SourceKind::Concept:
            return jaccard_domains(graph.course_domains(z.course_id.value_or("")), session_domains);
        case SourceKind::Search: {
            const double clamped = std::clamp(h, 0.0, 1.0);
            return weighting == SearchWeighting::Intent ? clamped : 1.0 - clamped;
        }
        case SourceKind::Faq:
            return 1.0;
    }
    return 1.0;
}

RankedCandidate score(const Snippet& z, std::span<const std::string> terms, double h,
                      const DomainSet& session_domains, const ConceptGraph& graph, const IndexView& index,
                      SearchWeighting weighting) {
    RankedCandidate c;
    c.snippet_id = z.id;
    c.source = z.source;
    c.raw_bm25 = index.bm25(z.id, terms);
    c.weight = source_weight(z, h, session_domains, graph, weighting);
    c.score = c.weight * c.raw_bm25;
    return c;
}

std::vector<RankedCandidate> rank(std::vector<RankedCandidate> candidates, std::size_t k) {
    std::sort(candidates.begin(), candidates.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.snippet_id < b.snippet_id;
    });
    if (candidates.size() > k) candidates.resize(k);
    return candidates;
}

std::vector<RankedCandidate> score_candidates(std::span<const std::string> terms, double h,
                                              std::string_view course_id, const IndexView& index,
                                              const ConceptGraph& graph, SearchWeighting weighting) {
    const DomainSet session_domains = graph.course_domains(course_id);
    std::vector<RankedCandidate> out;
    for (const auto& id : index.candidates(terms)) {
        const Snippet* z = index.find(id);
        if (z == nullptr) fail(ErrorCode::UnknownSnippet, "unknown snippet " + id);
        out.push_back(score(*z, terms, h, session_domains, graph, index, weighting));
    }
    return out;
}

RetrievalResult retrieve(std::string_view query, std::string_view course_id, double h,
                         const RankingOptions& options, const IndexView& index, const ConceptGraph& graph) {
    if (options.k == 0) fail(ErrorCode::InvalidArgument, "k must be at least 1");
    RetrievalResult result;
    result.k = options.k;
    result.query_terms = query_terms(query, extract_concepts(query, graph, course_id));
    result.candidates = rank(score_candidates(result.query_terms, h, course_id, index, graph,
                                              options.search_weighting),
                             options.k);
    result.answered = !result.candidates.empty() && result.candidates.front().score > options.beta;
    return result;
}

}  // namespace vta
