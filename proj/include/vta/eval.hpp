#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vta/orchestrator.hpp"

namespace vta {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Clipped n-gram overlap over pre-tokenized sequences.
RougeScore rouge_n(std::span<const std::string> candidate, std::span<const std::string> reference, std::size_t n);
/// Longest-common-subsequence overlap over pre-tokenized sequences.
RougeScore rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference);

/// Text overloads tokenize with text::tokenize, the same tokenizer the index uses.
RougeScore rouge_n(std::string_view candidate, std::string_view reference, std::size_t n);
RougeScore rouge_l(std::string_view candidate, std::string_view reference);

struct EvalRecord {
    std::string query;
    std::string course_id;
    std::string reference;
    std::optional<std::string> subtype;
};

struct DatasetLoad {
    std::vector<EvalRecord> records;
    std::vector<std::string> errors;  // malformed lines, skipped
};

/// {"query", "course_id", "reference", "subtype"?} per line. Malformed lines
/// are reported and skipped; an unreadable file raises Io.
DatasetLoad parse_dataset(std::istream& in);
DatasetLoad load_dataset(const std::filesystem::path& path);

struct RecordResult {
    std::size_t index = 0;
    std::string query;
    std::optional<std::string> subtype;
    std::string response;
    Route route = Route::CotGenerated;
    RougeScore r1;
    RougeScore r2;
    RougeScore rl;
    std::optional<std::string> error;
};

struct SweepPoint {
    std::string key;  // dotted config key, e.g. ranking.beta
    double value = 0.0;
    double mean_r1 = 0.0;
    double mean_r2 = 0.0;
    double mean_rl = 0.0;
    std::map<std::string, std::size_t> routes;
};

struct EvalReport {
    std::vector<RecordResult> records;
    double mean_r1 = 0.0;  // F1 means
    double mean_r2 = 0.0;
    double mean_rl = 0.0;
    std::map<std::string, std::size_t> routes;
    nlohmann::json config;
    std::vector<std::string> dataset_errors;
    std::vector<SweepPoint> sweep;
};

struct SweepSpec {
    std::string key;
    std::vector<double> values;
};

/// "beta=0:5:0.5" (start:stop:step, stop inclusive) or "alpha=0.1,0.5,0.9".
/// Short names beta/alpha/k map to ranking.beta/intent.alpha/ranking.k.
SweepSpec parse_sweep(std::string_view spec);

/// Answers every record in a fresh single-turn session, up to `workers`
/// records at a time. Results are ordered by record index.
EvalReport run_eval(Engine& engine, std::span<const EvalRecord> records, std::size_t workers = 1);

/// run_eval at the engine's own config, then once per sweep value on a
/// derived engine.
EvalReport run_eval_with_sweep(Engine& engine, std::span<const EvalRecord> records, const std::optional<SweepSpec>& sweep,
                               std::size_t workers = 1);

inline constexpr int kReportVersion = 1;
nlohmann::json report_to_json(const EvalReport& report);

}  // namespace vta
