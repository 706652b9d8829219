#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>

#include "vta/config.hpp"
#include "vta/knowledge.hpp"
#include "vta/orchestrator.hpp"

namespace vta::testing {

inline std::filesystem::path fixture(const std::string& rel) {
    return std::filesystem::path(VTA_FIXTURE_DIR) / rel;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::shared_ptr<const ConceptGraph> fixture_graph() {
    static const auto graph =
        std::make_shared<const ConceptGraph>(load_concept_graph(fixture("concepts.jsonl"), fixture("edges.jsonl")));
    return graph;
}

inline EnvLookup no_env() {
    return [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
}

/// The shipped fixture config with environment overrides ignored.
inline EngineConfig fixture_config() {
    return load_config(fixture("config.json"), no_env());
}

/// A clock that starts at a fixed instant and advances 1 ms per reading.
inline ClockFn step_clock(std::int64_t start = 1'700'000'000'000) {
    auto t = std::make_shared<std::atomic<std::int64_t>>(start);
    return [t] { return t->fetch_add(1); };
}

inline std::unique_ptr<Engine> fixture_engine(const EngineConfig& config = fixture_config()) {
    return std::make_unique<Engine>(config, load_parts(config), step_clock());
}

class TempDir {
public:
    TempDir() {
        std::string pattern = (std::filesystem::temp_directory_path() / "vta-test-XXXXXX").string();
        if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
        path_ = pattern;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

    std::filesystem::path write(const std::string& rel, const std::string& content) const {
        const auto p = path_ / rel;
        std::filesystem::create_directories(p.parent_path());
        std::ofstream(p, std::ios::binary) << content;
        return p;
    }

private:
    std::filesystem::path path_;
};

}  // namespace vta::testing
