#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vta/index.hpp"
#include "vta/knowledge.hpp"
#include "vta/ranking.hpp"

namespace vta {

/// An expert-written worked example.
struct CoTExample {
    std::string question;
    std::string chain;
    std::string answer;

    friend bool operator==(const CoTExample&, const CoTExample&) = default;
};

std::vector<CoTExample> parse_cot_examples(std::istream& in);
std::vector<CoTExample> load_cot_examples(const std::filesystem::path& path);

/// The fixed phrases of the reasoning string. "{concept}" and "{domains}"
/// are substituted.
struct TeachTemplates {
    std::string domain_line = "{concept} belongs to domain {domains}";
    std::string prereq_header = "The prerequisite concepts of {concept} are:";
    std::string domain_separator = ", ";

    /// JSON object with any of the three keys; missing keys keep defaults.
    static TeachTemplates load(const std::filesystem::path& path);
};

enum class PromptOrder {
    ExamplesQueryReasoning,  // "eqr"
    ExamplesReasoningQuery,  // "erq"
};

struct TeachOptions {
    std::size_t n_examples = 1;
    std::size_t prereq_depth = 1;
    std::size_t char_budget = 4000;
    PromptOrder order = PromptOrder::ExamplesQueryReasoning;
    bool include_retrieved_context = false;
    TeachTemplates templates;
};

/// One extracted concept's contribution to the reasoning string.
struct ConceptBlock {
    std::string concept_id;
    std::string definition;
    std::string domain_line;
    std::string prereq_header;
    std::vector<std::string> prerequisite_definitions;
};

std::vector<ConceptBlock> reasoning_blocks(const QueryConcepts& concepts, const ConceptGraph& graph,
                                           const TeachOptions& options = {});

/// Newline-joined segments, per concept in extraction order: its definition,
/// its domain line, the prerequisite header, then each prerequisite's
/// definition in ascending id order. A concept extracted twice contributes
/// once. UnknownConcept if an id is missing from the graph.
std::string build_reasoning(const QueryConcepts& concepts, const ConceptGraph& graph,
                            const TeachOptions& options = {});

/// Expert examples with a private BM25 index over their questions.
class ExampleStore {
public:
    explicit ExampleStore(std::vector<CoTExample> examples);

    std::size_t size() const { return examples_.size(); }
    bool empty() const { return examples_.empty(); }
    const std::vector<CoTExample>& examples() const { return examples_; }

    /// Top n by BM25 of the query against each question, ties by ascending
    /// position. EmptyStore when there are no examples.
    std::vector<CoTExample> sample_similar(std::string_view query, std::size_t n = 1) const;

    /// BM25 of the query against the question at position i.
    double similarity(std::string_view query, std::size_t i) const;

private:
    std::vector<CoTExample> examples_;
    Bm25Index index_;
};

std::string render_example(const CoTExample& example);
std::string render_query(std::string_view query);

struct TeachPrompt {
    std::string example_block;
    std::string query;
    std::string reasoning;
    std::string final_prompt;
    std::vector<std::string> concept_ids;
    /// True when the character budget dropped part of the reasoning.
    bool truncated = false;
};

/// Assembles examples, query and reasoning. With no extracted concepts the
/// reasoning is empty and the prompt is plain chain-of-thought.
TeachPrompt build_prompt(std::string_view query, std::string_view course_id, const ConceptGraph& graph,
                         const ExampleStore& store, const TeachOptions& options = {},
                         std::span<const Snippet> retrieved = {});

}  // namespace vta
