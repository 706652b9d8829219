#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vta/dialogue.hpp"

namespace vta {

enum class FinishReason { Stop, Length, Error };

std::string_view to_string(FinishReason reason);

struct GenerationRequest {
    std::string prompt;
    int max_tokens = 256;
    double temperature = 0.7;
    std::vector<std::string> stop;
};

struct GenerationResponse {
    std::string text;
    FinishReason finish = FinishReason::Stop;
    double latency_ms = 0.0;
    std::string error;  // set iff finish == Error; text is then empty
};

/// A language model behind a uniform request/response contract. generate()
/// never throws for backend failures; they come back as FinishReason::Error.
class LanguageModelClient {
public:
    virtual ~LanguageModelClient() = default;
    virtual GenerationResponse generate(const GenerationRequest& request) = 0;
};

std::string sha256_hex(std::string_view data);

/// Cuts text at the earliest stop sequence. Returns true if it cut.
bool apply_stop_sequences(std::string& text, std::span<const std::string> stop);

/// Deterministic stand-in for a model: "MOCK:" + SHA-256 hex of the prompt,
/// followed on a new line by the answer of the last "A: " line in the prompt
/// if there is one.
class MockLanguageModel final : public LanguageModelClient {
public:
    GenerationResponse generate(const GenerationRequest& request) override;
};

/// POSTs {"prompt", "max_tokens", "temperature", "stop"} and reads {"text"}.
/// At most max_concurrency requests are in flight at once.
class RemoteLanguageModel final : public LanguageModelClient {
public:
    static constexpr std::ptrdiff_t kMaxConcurrency = 64;

    RemoteLanguageModel(std::string url, std::chrono::milliseconds timeout, std::ptrdiff_t max_concurrency = 4);
    GenerationResponse generate(const GenerationRequest& request) override;

private:
    std::string url_;
    std::chrono::milliseconds timeout_;
    std::counting_semaphore<kMaxConcurrency> slots_;
};

/// Persona preamble plus history lines. "{course}" is substituted in the
/// preamble.
struct ChitChatTemplate {
    std::string preamble = "You are LittleMu, a friendly MOOC teaching assistant for course {course}.";
    std::string student_prefix = "Student: ";
    std::string assistant_prefix = "Assistant: ";
    std::string cue = "Assistant:";

    static ChitChatTemplate load(const std::filesystem::path& path);
};

/// Renders the last `window` turns (the current user turn included) after the
/// preamble and ends with the assistant cue. InvalidArgument without turns.
std::string chitchat_prompt(std::span<const Turn> turns, std::string_view course_id, std::size_t window = 6,
                            const ChitChatTemplate& tmpl = {});

}  // namespace vta
