#include "vta/index.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "vta/error.hpp"
#include "vta/text.hpp"

namespace vta {
namespace {

constexpr std::string_view kFormatTag = "vta-bm25";
constexpr int kFormatVersion = 1;

std::vector<std::string> distinct(std::span<const std::string> terms) {
    std::vector<std::string> out(terms.begin(), terms.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double read_hex_double(std::istream& in) {
    std::string token;
    in >> token;
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (token.empty() || end != token.c_str() + token.size()) {
        fail(ErrorCode::MalformedRecord, "bad number in index file: " + token);
    }
    return v;
}

}  // namespace

double bm25_term(double tf, double doc_length, double avg_doc_length, double doc_count,
                 double doc_freq, const Bm25Params& p) {
    if (tf <= 0.0) return 0.0;
    const double idf = std::log((doc_count - doc_freq + 0.5) / (doc_freq + 0.5) + 1.0);
    const double norm = avg_doc_length > 0.0 ? doc_length / avg_doc_length : 0.0;
    return idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}

// ---------------------------------------------------------------------------
// Bm25Index

void Bm25Index::add(std::string id, std::string_view text) {
    const auto tokens = text::tokenize(text);
    add_tokens(std::move(id), tokens);
}

void Bm25Index::add_tokens(std::string id, std::span<const std::string> tokens) {
    if (ordinals_.contains(id)) fail(ErrorCode::DuplicateSnippetId, "duplicate snippet id " + id);
    const auto doc = static_cast<std::uint32_t>(ids_.size());
    std::map<std::string, std::uint32_t> counts;
    for (const auto& t : tokens) ++counts[t];
    for (const auto& [term, tf] : counts) postings_[term].push_back({doc, tf});
    ordinals_.emplace(id, doc);
    ids_.push_back(std::move(id));
    lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
    total_length_ += tokens.size();
}

double Bm25Index::avg_doc_length() const {
    return ids_.empty() ? 0.0 : static_cast<double>(total_length_) / static_cast<double>(ids_.size());
}

bool Bm25Index::contains(std::string_view id) const {
    return ordinals_.contains(std::string(id));
}

std::uint32_t Bm25Index::ordinal(std::string_view id) const {
    const auto it = ordinals_.find(std::string(id));
    if (it == ordinals_.end()) fail(ErrorCode::UnknownSnippet, "unknown snippet " + std::string(id));
    return it->second;
}

std::size_t Bm25Index::doc_length(std::string_view id) const {
    return lengths_[ordinal(id)];
}

std::size_t Bm25Index::doc_freq(const std::string& term) const {
    const auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
}

std::uint32_t Bm25Index::term_freq(std::string_view id, const std::string& term) const {
    const auto doc = ordinal(id);
    const auto it = postings_.find(term);
    if (it == postings_.end()) return 0;
    const auto& list = it->second;
    const auto p = std::lower_bound(list.begin(), list.end(), doc,
                                    [](const Posting& x, std::uint32_t d) { return x.doc < d; });
    return p != list.end() && p->doc == doc ? p->tf : 0;
}

double Bm25Index::bm25(std::string_view id, std::span<const std::string> query_terms) const {
    const auto doc = ordinal(id);
    const double n_docs = static_cast<double>(doc_count());
    const double avgdl = avg_doc_length();
    double score = 0.0;
    for (const auto& term : distinct(query_terms)) {
        const auto tf = term_freq(id, term);
        if (tf == 0) continue;
        score += bm25_term(tf, lengths_[doc], avgdl, n_docs, static_cast<double>(doc_freq(term)), params_);
    }
    return score;
}

std::vector<std::string> Bm25Index::candidates(std::span<const std::string> query_terms) const {
    std::set<std::string> out;
    for (const auto& term : distinct(query_terms)) {
        const auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        for (const auto& p : it->second) out.insert(ids_[p.doc]);
    }
    return {out.begin(), out.end()};
}

void Bm25Index::save(std::ostream& out) const {
    out << kFormatTag << ' ' << kFormatVersion << '\n';
    out << std::hexfloat << params_.k1 << ' ' << params_.b << std::defaultfloat << '\n';
    out << ids_.size() << '\n';
    for (std::size_t i = 0; i < ids_.size(); ++i) out << lengths_[i] << ' ' << ids_[i] << '\n';
    out << postings_.size() << '\n';
    for (const auto& [term, list] : postings_) {
        out << term << ' ' << list.size();
        for (const auto& p : list) out << ' ' << p.doc << ':' << p.tf;
        out << '\n';
    }
}

Bm25Index Bm25Index::load(std::istream& in) {
    std::string tag;
    int version = 0;
    in >> tag >> version;
    if (tag != kFormatTag || version != kFormatVersion) {
        fail(ErrorCode::MalformedRecord, "not a version 1 index file");
    }
    Bm25Params params;
    params.k1 = read_hex_double(in);
    params.b = read_hex_double(in);
    Bm25Index index(params);
    std::size_t n_docs = 0;
    in >> n_docs;
    for (std::size_t i = 0; i < n_docs; ++i) {
        std::uint32_t len = 0;
        std::string id;
        in >> len;
        in.get();
        std::getline(in, id);
        if (!in) fail(ErrorCode::MalformedRecord, "truncated index file");
        if (index.ordinals_.contains(id)) fail(ErrorCode::DuplicateSnippetId, "duplicate snippet id " + id);
        index.ordinals_.emplace(id, static_cast<std::uint32_t>(i));
        index.ids_.push_back(std::move(id));
        index.lengths_.push_back(len);
        index.total_length_ += len;
    }
    std::size_t n_terms = 0;
    in >> n_terms;
    for (std::size_t i = 0; i < n_terms; ++i) {
        std::string term;
        std::size_t count = 0;
        in >> term >> count;
        auto& list = index.postings_[term];
        for (std::size_t j = 0; j < count; ++j) {
            Posting p;
            char colon = 0;
            in >> p.doc >> colon >> p.tf;
            if (!in || colon != ':' || p.doc >= n_docs) fail(ErrorCode::MalformedRecord, "bad posting for " + term);
            list.push_back(p);
        }
    }
    if (!in) fail(ErrorCode::MalformedRecord, "truncated index file");
    return index;
}

// ---------------------------------------------------------------------------
// SnippetIndex

SnippetIndex SnippetIndex::build(std::vector<Snippet> snippets, Bm25Params params) {
    SnippetIndex out;
    out.index_ = Bm25Index(params);
    for (auto& s : snippets) {
        validate(s);
        out.index_.add(s.id, s.key + " " + s.body);
        out.positions_.emplace(s.id, out.snippets_.size());
        out.snippets_.push_back(std::move(s));
    }
    return out;
}

const Snippet* SnippetIndex::find(std::string_view id) const {
    const auto it = positions_.find(std::string(id));
    return it == positions_.end() ? nullptr : &snippets_[it->second];
}

// ---------------------------------------------------------------------------
// IndexView

IndexView::IndexView(std::vector<const SnippetIndex*> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) fail(ErrorCode::InvalidArgument, "index view needs at least one layer");
}

std::size_t IndexView::doc_count() const {
    std::size_t n = 0;
    for (const auto* l : layers_) n += l->bm25().doc_count();
    return n;
}

double IndexView::avg_doc_length() const {
    std::uint64_t total = 0;
    for (const auto* l : layers_) total += l->bm25().total_length();
    const auto n = doc_count();
    return n == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(n);
}

std::size_t IndexView::doc_freq(const std::string& term) const {
    std::size_t n = 0;
    for (const auto* l : layers_) n += l->bm25().doc_freq(term);
    return n;
}

const Snippet* IndexView::find(std::string_view id) const {
    for (const auto* l : layers_) {
        if (const auto* s = l->find(id)) return s;
    }
    return nullptr;
}

double IndexView::bm25(std::string_view id, std::span<const std::string> query_terms) const {
    const SnippetIndex* owner = nullptr;
    for (const auto* l : layers_) {
        if (l->bm25().contains(id)) {
            owner = l;
            break;
        }
    }
    if (owner == nullptr) fail(ErrorCode::UnknownSnippet, "unknown snippet " + std::string(id));
    if (layers_.size() == 1) return owner->bm25().bm25(id, query_terms);

    const auto& index = owner->bm25();
    const double n_docs = static_cast<double>(doc_count());
    const double avgdl = avg_doc_length();
    const double dl = static_cast<double>(index.doc_length(id));
    double score = 0.0;
    for (const auto& term : distinct(query_terms)) {
        const auto tf = index.term_freq(id, term);
        if (tf == 0) continue;
        score += bm25_term(tf, dl, avgdl, n_docs, static_cast<double>(doc_freq(term)), index.params());
    }
    return score;
}

std::vector<std::string> IndexView::candidates(std::span<const std::string> query_terms) const {
    std::vector<std::string> out;
    for (const auto* l : layers_) {
        auto ids = l->bm25().candidates(query_terms);
        out.insert(out.end(), ids.begin(), ids.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<const Snippet*> IndexView::all() const {
    std::vector<const Snippet*> out;
    for (const auto* l : layers_) {
        for (const auto& s : l->snippets()) out.push_back(&s);
    }
    return out;
}

}  // namespace vta
