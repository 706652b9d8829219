#include "vta/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "vta/error.hpp"
#include "vta/jsonl.hpp"
#include "vta/text.hpp"

namespace vta {
namespace {

RougeScore from_counts(double overlap, double candidate_total, double reference_total) {
    RougeScore s;
    s.precision = candidate_total > 0 ? overlap / candidate_total : 0.0;
    s.recall = reference_total > 0 ? overlap / reference_total : 0.0;
    const double denom = s.precision + s.recall;
    s.f1 = denom > 0 ? 2.0 * s.precision * s.recall / denom : 0.0;
    return s;
}

std::map<std::vector<std::string>, std::size_t> ngram_counts(std::span<const std::string> tokens, std::size_t n) {
    std::map<std::vector<std::string>, std::size_t> counts;
    if (n == 0 || tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                          tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

std::string resolve_sweep_key(const std::string& key) {
    if (key == "beta") return "ranking.beta";
    if (key == "alpha") return "intent.alpha";
    if (key == "k") return "ranking.k";
    return key;
}

double parse_number(std::string_view s) {
    try {
        std::size_t used = 0;
        const std::string str(s);
        const double v = std::stod(str, &used);
        if (used == str.size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::InvalidArgument, "bad number in sweep spec: " + std::string(s));
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

RougeScore rouge_n(std::span<const std::string> candidate, std::span<const std::string> reference, std::size_t n) {
    if (n == 0) fail(ErrorCode::InvalidArgument, "ROUGE-N needs n >= 1");
    const auto cand = ngram_counts(candidate, n);
    const auto ref = ngram_counts(reference, n);
    std::size_t overlap = 0;
    for (const auto& [gram, count] : cand) {
        if (const auto it = ref.find(gram); it != ref.end()) overlap += std::min(count, it->second);
    }
    const double cand_total = candidate.size() >= n ? static_cast<double>(candidate.size() - n + 1) : 0.0;
    const double ref_total = reference.size() >= n ? static_cast<double>(reference.size() - n + 1) : 0.0;
    return from_counts(static_cast<double>(overlap), cand_total, ref_total);
}

RougeScore rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference) {
    // Two-row LCS table.
    std::vector<std::size_t> prev(reference.size() + 1, 0);
    std::vector<std::size_t> cur(reference.size() + 1, 0);
    for (const auto& c : candidate) {
        for (std::size_t j = 1; j <= reference.size(); ++j) {
            cur[j] = c == reference[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return from_counts(static_cast<double>(prev[reference.size()]), static_cast<double>(candidate.size()),
                       static_cast<double>(reference.size()));
}

RougeScore rouge_n(std::string_view candidate, std::string_view reference, std::size_t n) {
    const auto c = text::tokenize(candidate);
    const auto r = text::tokenize(reference);
    return rouge_n(std::span<const std::string>(c), std::span<const std::string>(r), n);
}

RougeScore rouge_l(std::string_view candidate, std::string_view reference) {
    const auto c = text::tokenize(candidate);
    const auto r = text::tokenize(reference);
    return rouge_l(std::span<const std::string>(c), std::span<const std::string>(r));
}

DatasetLoad parse_dataset(std::istream& in) {
    DatasetLoad out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        const auto j = jsonl::Json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            out.errors.push_back(where + "not a JSON object");
            continue;
        }
        const auto str = [&](const char* key) -> std::optional<std::string> {
            const auto it = j.find(key);
            if (it == j.end() || !it->is_string()) return std::nullopt;
            return it->get<std::string>();
        };
        auto query = str("query");
        auto course = str("course_id");
        auto reference = str("reference");
        if (!query || !course || !reference || text::normalize(*query).empty() ||
            text::normalize(*reference).empty()) {
            out.errors.push_back(where + "needs non-empty query, course_id and reference");
            continue;
        }
        out.records.push_back({std::move(*query), std::move(*course), std::move(*reference), str("subtype")});
    }
    return out;
}

DatasetLoad load_dataset(const std::filesystem::path& path) {
    auto in = jsonl::open_input(path);
    return parse_dataset(in);
}

SweepSpec parse_sweep(std::string_view spec) {
    const auto eq = spec.find('=');
    if (eq == std::string_view::npos || eq == 0) fail(ErrorCode::InvalidArgument, "sweep must look like key=values");
    SweepSpec out;
    out.key = resolve_sweep_key(std::string(spec.substr(0, eq)));
    const auto values = spec.substr(eq + 1);
    if (values.find(':') != std::string_view::npos) {
        const auto c1 = values.find(':');
        const auto c2 = values.find(':', c1 + 1);
        if (c2 == std::string_view::npos) fail(ErrorCode::InvalidArgument, "range must be start:stop:step");
        const double start = parse_number(values.substr(0, c1));
        const double stop = parse_number(values.substr(c1 + 1, c2 - c1 - 1));
        const double step = parse_number(values.substr(c2 + 1));
        if (!(step > 0) || stop < start) fail(ErrorCode::InvalidArgument, "range needs step > 0 and stop >= start");
        // Index-based so accumulated rounding never drops the endpoint.
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (std::size_t i = 0; i < count; ++i) out.values.push_back(start + static_cast<double>(i) * step);
    } else {
        std::size_t pos = 0;
        while (pos <= values.size()) {
            auto comma = values.find(',', pos);
            if (comma == std::string_view::npos) comma = values.size();
            out.values.push_back(parse_number(values.substr(pos, comma - pos)));
            pos = comma + 1;
        }
    }
    if (out.values.empty()) fail(ErrorCode::InvalidArgument, "sweep has no values");
    return out;
}

EvalReport run_eval(Engine& engine, std::span<const EvalRecord> records, std::size_t workers) {
    EvalReport report;
    report.config = to_json(engine.config());
    report.records.resize(records.size());

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < records.size(); i = next++) {
            const auto& rec = records[i];
            RecordResult& r = report.records[i];
            r.index = i;
            r.query = rec.query;
            r.subtype = rec.subtype;
            try {
                const Session s = engine.create_session(rec.course_id);
                const auto res = engine.respond(s.id, rec.query);
                r.response = res.text;
                r.route = res.route;
                r.error = res.error;
            } catch (const std::exception& e) {
                r.error = e.what();
            }
            r.r1 = rouge_n(r.response, rec.reference, 1);
            r.r2 = rouge_n(r.response, rec.reference, 2);
            r.rl = rouge_l(r.response, rec.reference);
        }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(records.size(), 1));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(work);
    work();
    for (auto& t : threads) t.join();

    for (const auto& r : report.records) {
        report.mean_r1 += r.r1.f1;
        report.mean_r2 += r.r2.f1;
        report.mean_rl += r.rl.f1;
        ++report.routes[std::string(to_string(r.route))];
    }
    if (!records.empty()) {
        const auto n = static_cast<double>(records.size());
        report.mean_r1 /= n;
        report.mean_r2 /= n;
        report.mean_rl /= n;
    }
    return report;
}

EvalReport run_eval_with_sweep(Engine& engine, std::span<const EvalRecord> records,
                               const std::optional<SweepSpec>& sweep, std::size_t workers) {
    EvalReport report = run_eval(engine, records, workers);
    if (!sweep) return report;
    for (const double v : sweep->values) {
        auto derived = engine.derive(with_override(engine.config(), sweep->key, format_value(v)));
        const EvalReport point = run_eval(*derived, records, workers);
        report.sweep.push_back({sweep->key, v, point.mean_r1, point.mean_r2, point.mean_rl, point.routes});
    }
    return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
    using Json = nlohmann::json;
    auto score = [](const RougeScore& s) { return Json{{"p", s.precision}, {"r", s.recall}, {"f1", s.f1}}; };
    Json records = Json::array();
    for (const auto& r : report.records) {
        Json j = {{"index", r.index},      {"query", r.query},    {"response", r.response},
                  {"route", to_string(r.route)}, {"rouge1", score(r.r1)}, {"rouge2", score(r.r2)},
                  {"rougeL", score(r.rl)}};
        if (r.subtype) j["subtype"] = *r.subtype;
        if (r.error) j["error"] = *r.error;
        records.push_back(std::move(j));
    }
    Json sweep = Json::array();
    for (const auto& p : report.sweep) {
        sweep.push_back({{"key", p.key},
                         {"value", p.value},
                         {"mean", {{"rouge1", p.mean_r1}, {"rouge2", p.mean_r2}, {"rougeL", p.mean_rl}}},
                         {"routes", p.routes}});
    }
    return Json{{"version", kReportVersion},
                {"tokenizer", "case-folded word runs; CJK unigrams plus overlapping bigrams"},
                {"metrics", "ROUGE-1/2 clipped n-gram F1 and ROUGE-L LCS F1, no stemming or stopwords"},
                {"count", report.records.size()},
                {"mean", {{"rouge1", report.mean_r1}, {"rouge2", report.mean_r2}, {"rougeL", report.mean_rl}}},
                {"routes", report.routes},
                {"dataset_errors", report.dataset_errors},
                {"config", report.config},
                {"records", records},
                {"sweep", sweep}};
}

}  // namespace vta
