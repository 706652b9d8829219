#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>

#include "json.hpp"
#include "vta/error.hpp"
#include "vta/orchestrator.hpp"

namespace vta {

struct ApiError {
    int status = 500;
    std::string code;
    std::string message;
};

/// The single (status, code) pair for an engine error.
ApiError map_error(const Error& error);

struct ApiRequest {
    std::string method;
    std::string path;
    std::string body;
    std::map<std::string, std::string> params;  // query string
};

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

nlohmann::json to_json(const Session& session);
nlohmann::json to_json(const AssistantResponse& response);
nlohmann::json to_json(const EscalationItem& item);
nlohmann::json to_json(const Snippet& snippet);
nlohmann::json to_json(const HealthInfo& health);

/// Routes /v1 requests to the engine. Transport-independent; HttpServer is
/// the socket front end.
///
///   POST /v1/sessions                  {course_id}  -> 201 session
///   GET  /v1/sessions                                -> 200 summaries
///   GET  /v1/sessions/{id}                           -> 200 session with turns
///   POST /v1/sessions/{id}/messages    {text}       -> 200 {text, route, evidence}
///   POST /v1/sessions/{id}/escalate    {text}       -> 202 {escalation_id, item}
///   GET  /v1/escalations?status=PENDING              -> 200 items
///   POST /v1/escalations/{id}/answer   {text}       -> 200 {item_id, snippet}
///   GET  /v1/health                                  -> 200 counts + config hash
///
/// Errors come back as {"error": {"code", "message"}}. A message whose
/// generation failed is 502 and still carries route and fallback text.
class Api {
public:
    Api(Engine& engine, std::size_t max_body_bytes) : engine_(engine), max_body_bytes_(max_body_bytes) {}

    ApiResponse handle(const ApiRequest& request) const;
    std::size_t max_body_bytes() const { return max_body_bytes_; }

private:
    ApiResponse dispatch(const ApiRequest& request) const;

    Engine& engine_;
    std::size_t max_body_bytes_;
};

/// cpp-httplib server in front of an Api.
class HttpServer {
public:
    explicit HttpServer(const Api& api);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds; returns the port (useful with port 0) or -1.
    int bind(const std::string& host, int port);
    /// Blocks serving until stop() is called.
    bool serve();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace vta
