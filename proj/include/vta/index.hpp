#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vta/knowledge.hpp"

namespace vta {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

/// Okapi BM25 contribution of one term:
///   idf = ln((N - n + 0.5) / (n + 0.5) + 1)
///   idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
/// Zero when tf == 0.
double bm25_term(double tf, double doc_length, double avg_doc_length, double doc_count,
                 double doc_freq, const Bm25Params& params);

struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;

    friend bool operator==(const Posting&, const Posting&) = default;
};

/// In-memory inverted index over whole documents. Query terms are treated as
/// a set: duplicates in a query count once.
class Bm25Index {
public:
    explicit Bm25Index(Bm25Params params = {}) : params_(params) {}

    /// Tokenizes text and appends a document; DuplicateSnippetId if id exists.
    void add(std::string id, std::string_view text);
    void add_tokens(std::string id, std::span<const std::string> tokens);

    const Bm25Params& params() const { return params_; }
    std::size_t doc_count() const { return ids_.size(); }
    double avg_doc_length() const;
    std::uint64_t total_length() const { return total_length_; }
    bool contains(std::string_view id) const;
    std::size_t doc_length(std::string_view id) const;  // UnknownSnippet
    std::size_t doc_freq(const std::string& term) const;
    std::uint32_t term_freq(std::string_view id, const std::string& term) const;
    const std::vector<std::string>& ids() const { return ids_; }
    const std::map<std::string, std::vector<Posting>>& postings() const { return postings_; }

    /// UnknownSnippet if id is not indexed.
    double bm25(std::string_view id, std::span<const std::string> query_terms) const;

    /// Documents sharing at least one term with the query, ascending id.
    std::vector<std::string> candidates(std::span<const std::string> query_terms) const;

    /// Versioned text format; doubles are written as hex floats so a
    /// save/load round trip is exact.
    void save(std::ostream& out) const;
    static Bm25Index load(std::istream& in);

    friend bool operator==(const Bm25Index& a, const Bm25Index& b) {
        return a.params_ == b.params_ && a.ids_ == b.ids_ && a.lengths_ == b.lengths_ &&
               a.postings_ == b.postings_;
    }

private:
    std::uint32_t ordinal(std::string_view id) const;

    Bm25Params params_;
    std::vector<std::string> ids_;
    std::vector<std::uint32_t> lengths_;
    std::unordered_map<std::string, std::uint32_t> ordinals_;
    std::map<std::string, std::vector<Posting>> postings_;
    std::uint64_t total_length_ = 0;
};

/// Snippets plus their BM25 index over key + " " + body.
class SnippetIndex {
public:
    static SnippetIndex build(std::vector<Snippet> snippets, Bm25Params params = {});

    const Bm25Index& bm25() const { return index_; }
    const std::vector<Snippet>& snippets() const { return snippets_; }
    const Snippet* find(std::string_view id) const;

private:
    std::vector<Snippet> snippets_;
    std::unordered_map<std::string, std::size_t> positions_;
    Bm25Index index_;
};

/// Several snippet indexes scored as one corpus: N, document frequencies and
/// the average length are pooled across layers. Used to score per-query web
/// results alongside the static corpus without rebuilding it.
class IndexView {
public:
    explicit IndexView(std::vector<const SnippetIndex*> layers);

    std::size_t doc_count() const;
    double avg_doc_length() const;
    std::size_t doc_freq(const std::string& term) const;
    const Snippet* find(std::string_view id) const;
    double bm25(std::string_view id, std::span<const std::string> query_terms) const;
    std::vector<std::string> candidates(std::span<const std::string> query_terms) const;
    /// Every snippet in every layer, layer order.
    std::vector<const Snippet*> all() const;

private:
    std::vector<const SnippetIndex*> layers_;
};

}  // namespace vta
