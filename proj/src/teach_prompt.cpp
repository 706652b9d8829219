#include "vta/teach_prompt.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "json.hpp"
#include "vta/error.hpp"
#include "vta/jsonl.hpp"
#include "vta/text.hpp"

namespace vta {
namespace {

std::string substitute(std::string tmpl, std::string_view name, std::string_view value) {
    const std::string marker = "{" + std::string(name) + "}";
    std::size_t pos = 0;
    while ((pos = tmpl.find(marker, pos)) != std::string::npos) {
        tmpl.replace(pos, marker.size(), value);
        pos += value.size();
    }
    return tmpl;
}

std::vector<std::string> prerequisite_ids(const ConceptGraph& graph, const std::string& id, std::size_t depth) {
    std::vector<std::string> out;
    std::set<std::string> seen{id};
    std::vector<std::string> frontier{id};
    for (std::size_t level = 0; level < depth && !frontier.empty(); ++level) {
        std::set<std::string> next;
        for (const auto& f : frontier) {
            for (auto& p : graph.prerequisites_of(f)) {
                if (!seen.contains(p)) next.insert(p);
            }
        }
        frontier.assign(next.begin(), next.end());
        for (const auto& p : frontier) {
            seen.insert(p);
            out.push_back(p);
        }
    }
    return out;
}

std::string render_blocks(const std::vector<ConceptBlock>& blocks) {
    std::vector<std::string> segments;
    for (const auto& b : blocks) {
        segments.push_back(b.definition);
        segments.push_back(b.domain_line);
        segments.push_back(b.prereq_header);
        segments.insert(segments.end(), b.prerequisite_definitions.begin(), b.prerequisite_definitions.end());
    }
    return text::join(segments, "\n");
}

std::string render_context(std::span<const Snippet> retrieved) {
    if (retrieved.empty()) return {};
    std::string out = "Retrieved knowledge:";
    for (const auto& s : retrieved) out += "\n- " + s.key + ": " + s.body;
    return out;
}

std::string assemble(const TeachPrompt& p, const std::string& context, PromptOrder order) {
    std::vector<std::string> parts{p.example_block};
    if (order == PromptOrder::ExamplesQueryReasoning) {
        parts.push_back(render_query(p.query));
        if (!p.reasoning.empty()) parts.push_back(p.reasoning);
    } else {
        if (!p.reasoning.empty()) parts.push_back(p.reasoning);
        parts.push_back(render_query(p.query));
    }
    if (!context.empty()) parts.push_back(context);
    return text::join(parts, "\n\n");
}

}  // namespace

std::vector<CoTExample> parse_cot_examples(std::istream& in) {
    std::vector<CoTExample> out;
    jsonl::for_each_record(in, [&](std::size_t line_no, const jsonl::Json& r) {
        CoTExample e{jsonl::string_field(r, "question", line_no), jsonl::string_field(r, "chain", line_no),
                     jsonl::string_field(r, "answer", line_no)};
        if (text::normalize(e.question).empty() || text::normalize(e.chain).empty() ||
            text::normalize(e.answer).empty()) {
            fail(ErrorCode::EmptyField, "line " + std::to_string(line_no) + ": empty example field");
        }
        out.push_back(std::move(e));
    });
    return out;
}

std::vector<CoTExample> load_cot_examples(const std::filesystem::path& path) {
    auto in = jsonl::open_input(path);
    return parse_cot_examples(in);
}

TeachTemplates TeachTemplates::load(const std::filesystem::path& path) {
    auto in = jsonl::open_input(path);
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(ErrorCode::MalformedRecord, path.string() + ": not a JSON object");
    TeachTemplates t;
    t.domain_line = j.value("domain_line", t.domain_line);
    t.prereq_header = j.value("prereq_header", t.prereq_header);
    t.domain_separator = j.value("domain_separator", t.domain_separator);
    return t;
}

std::vector<ConceptBlock> reasoning_blocks(const QueryConcepts& concepts, const ConceptGraph& graph,
                                           const TeachOptions& options) {
    std::vector<ConceptBlock> blocks;
    std::set<std::string> seen;
    for (const auto& m : concepts.matches) {
        if (!seen.insert(m.concept_id).second) continue;
        const Concept& k = graph.at(m.concept_id);
        ConceptBlock b;
        b.concept_id = k.id;
        b.definition = k.definition;
        const std::string domains =
            text::join(std::vector<std::string>(k.domains.begin(), k.domains.end()), options.templates.domain_separator);
        b.domain_line = substitute(substitute(options.templates.domain_line, "concept", k.name), "domains", domains);
        b.prereq_header = substitute(options.templates.prereq_header, "concept", k.name);
        for (const auto& p : prerequisite_ids(graph, k.id, options.prereq_depth)) {
            b.prerequisite_definitions.push_back(graph.at(p).definition);
        }
        blocks.push_back(std::move(b));
    }
    return blocks;
}

std::string build_reasoning(const QueryConcepts& concepts, const ConceptGraph& graph, const TeachOptions& options) {
    return render_blocks(reasoning_blocks(concepts, graph, options));
}

ExampleStore::ExampleStore(std::vector<CoTExample> examples) : examples_(std::move(examples)) {
    for (std::size_t i = 0; i < examples_.size(); ++i) index_.add(std::to_string(i), examples_[i].question);
}

double ExampleStore::similarity(std::string_view query, std::size_t i) const {
    const auto terms = text::tokenize(query);
    return index_.bm25(std::to_string(i), terms);
}

std::vector<CoTExample> ExampleStore::sample_similar(std::string_view query, std::size_t n) const {
    if (examples_.empty()) fail(ErrorCode::EmptyStore, "no chain-of-teach examples loaded");
    const auto terms = text::tokenize(query);
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(examples_.size());
    for (std::size_t i = 0; i < examples_.size(); ++i) {
        scored.emplace_back(index_.bm25(std::to_string(i), terms), i);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<CoTExample> out;
    for (std::size_t i = 0; i < std::min(n, scored.size()); ++i) out.push_back(examples_[scored[i].second]);
    return out;
}

std::string render_example(const CoTExample& e) {
    return "Q: " + e.question + "\n" + e.chain + "\nA: " + e.answer;
}

std::string render_query(std::string_view query) {
    return "Q: " + std::string(query);
}

TeachPrompt build_prompt(std::string_view query, std::string_view course_id, const ConceptGraph& graph,
                         const ExampleStore& store, const TeachOptions& options, std::span<const Snippet> retrieved) {
    TeachPrompt p;
    p.query = std::string(query);

    std::vector<std::string> rendered;
    for (const auto& e : store.sample_similar(query, std::max<std::size_t>(options.n_examples, 1))) {
        rendered.push_back(render_example(e));
    }
    p.example_block = text::join(rendered, "\n\n");

    const auto concepts = extract_concepts(query, graph, course_id);
    auto blocks = reasoning_blocks(concepts, graph, options);
    for (const auto& b : blocks) p.concept_ids.push_back(b.concept_id);
    const std::string context = options.include_retrieved_context ? render_context(retrieved) : std::string{};

    p.reasoning = render_blocks(blocks);
    p.final_prompt = assemble(p, context, options.order);

    // Over budget: drop prerequisite definitions from the back, then whole
    // concept blocks from the back.
    while (p.final_prompt.size() > options.char_budget && !blocks.empty()) {
        auto last_with_prereqs = std::find_if(blocks.rbegin(), blocks.rend(),
                                              [](const ConceptBlock& b) { return !b.prerequisite_definitions.empty(); });
        if (last_with_prereqs != blocks.rend()) {
            last_with_prereqs->prerequisite_definitions.pop_back();
        } else {
            blocks.pop_back();
        }
        p.truncated = true;
        p.reasoning = render_blocks(blocks);
        p.final_prompt = assemble(p, context, options.order);
    }
    return p;
}

}  // namespace vta
