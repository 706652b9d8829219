#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <string>

#include "json.hpp"
#include "vta/error.hpp"

namespace vta::jsonl {

using Json = nlohmann::json;

// Calls fn(line_number, object) for every non-blank line. Line numbers are
// 1-based. A line that is not a JSON object raises MalformedRecord.
inline void for_each_record(std::istream& in,
                            const std::function<void(std::size_t, const Json&)>& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        Json record = Json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (record.is_discarded() || !record.is_object()) {
            fail(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": not a JSON object");
        }
        fn(line_no, record);
    }
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    return in;
}

// Reads a string field. Missing or non-string fields are MalformedRecord.
inline std::string string_field(const Json& record, const char* key, std::size_t line_no) {
    const auto it = record.find(key);
    if (it == record.end() || !it->is_string()) {
        fail(ErrorCode::MalformedRecord,
             "line " + std::to_string(line_no) + ": missing string field \"" + key + "\"");
    }
    return it->get<std::string>();
}

}  // namespace vta::jsonl
