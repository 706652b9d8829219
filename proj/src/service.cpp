#include "vta/service.hpp"

#include <vector>

#include "httplib.h"

namespace vta {
namespace {

using Json = nlohmann::json;

ApiResponse error_response(int status, std::string code, std::string message) {
    return {status, Json{{"error", {{"code", std::move(code)}, {"message", std::move(message)}}}}};
}

ApiResponse error_response(const ApiError& e) {
    return error_response(e.status, e.code, e.message);
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos < path.size()) {
        auto slash = path.find('/', pos);
        if (slash == std::string::npos) slash = path.size();
        if (slash > pos) parts.push_back(path.substr(pos, slash - pos));
        pos = slash + 1;
    }
    return parts;
}

// Parses the body and pulls one required non-empty string field.
std::string required_text(const std::string& body, const char* field) {
    const auto j = Json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(ErrorCode::InvalidArgument, "body must be a JSON object");
    const auto it = j.find(field);
    if (it == j.end() || !it->is_string() || it->get<std::string>().find_first_not_of(" \t\r\n") == std::string::npos) {
        fail(ErrorCode::InvalidArgument, std::string("\"") + field + "\" must be a non-empty string");
    }
    return it->get<std::string>();
}

Json candidate_json(const RankedCandidate& c) {
    return {{"snippet_id", c.snippet_id},
            {"source", to_string(c.source)},
            {"raw_bm25", c.raw_bm25},
            {"weight", c.weight},
            {"score", c.score}};
}

}  // namespace

ApiError map_error(const Error& error) {
    const std::string message = error.what();
    switch (error.code()) {
        case ErrorCode::UnknownSession: return {404, "UnknownSession", message};
        case ErrorCode::UnknownItem: return {404, "UnknownItem", message};
        case ErrorCode::AlreadyAnswered: return {409, "AlreadyAnswered", message};
        case ErrorCode::InvalidArgument: return {400, "InvalidArgument", message};
        case ErrorCode::EmptyField: return {400, "EmptyField", message};
        case ErrorCode::MalformedRecord: return {400, "MalformedRecord", message};
        case ErrorCode::RemoteUnavailable: return {502, "RemoteUnavailable", message};
        case ErrorCode::AdapterUnavailable: return {502, "AdapterUnavailable", message};
        case ErrorCode::DanglingEdge:
        case ErrorCode::DuplicateConcept:
        case ErrorCode::DuplicateEdge:
        case ErrorCode::SelfLoop:
        case ErrorCode::UnknownConcept:
        case ErrorCode::DuplicateSnippetId:
        case ErrorCode::UnknownSnippet:
        case ErrorCode::EmptyStore:
        case ErrorCode::Io:
            return {500, std::string(to_string(error.code())), message};
    }
    return {500, "Internal", message};
}

Json to_json(const Session& s) {
    Json turns = Json::array();
    for (const auto& t : s.turns) {
        Json j = {{"role", to_string(t.role)}, {"text", t.text}, {"timestamp_ms", t.timestamp_ms}};
        if (!t.route.empty()) j["route"] = t.route;
        turns.push_back(std::move(j));
    }
    return {{"id", s.id},
            {"course_id", s.course_id},
            {"course_known", s.course_known},
            {"created_ms", s.created_ms},
            {"turns", std::move(turns)}};
}

Json to_json(const Snippet& s) {
    Json j = {{"id", s.id}, {"key", s.key}, {"body", s.body}, {"source", to_string(s.source)},
              {"domains", std::vector<std::string>(s.domains.begin(), s.domains.end())}};
    if (s.course_id) j["course_id"] = *s.course_id;
    return j;
}

Json to_json(const AssistantResponse& r) {
    Json candidates = Json::array();
    for (const auto& c : r.evidence.candidates) candidates.push_back(candidate_json(c));
    Json evidence = {{"h", r.evidence.h},
                     {"candidates", std::move(candidates)},
                     {"reasoning", r.evidence.reasoning ? Json(*r.evidence.reasoning) : Json(nullptr)},
                     {"concepts", r.evidence.concepts}};
    if (r.evidence.winning) evidence["winning"] = to_json(*r.evidence.winning);
    Json j = {{"text", r.text}, {"route", to_string(r.route)}, {"evidence", std::move(evidence)}};
    if (r.error) j["error"] = {{"code", "GenerationFailed"}, {"message", *r.error}};
    return j;
}

Json to_json(const EscalationItem& i) {
    Json j = {{"id", i.id},           {"session_id", i.session_id}, {"course_id", i.course_id},
              {"query", i.query},     {"status", to_string(i.status)}, {"created_ms", i.created_ms}};
    if (i.expert_answer) j["expert_answer"] = *i.expert_answer;
    return j;
}

Json to_json(const HealthInfo& h) {
    return {{"status", "ok"},
            {"corpus",
             {{"concepts", h.concepts},
              {"edges", h.edges},
              {"faq", h.faq},
              {"examples", h.examples},
              {"snippets", h.snippets},
              {"courses", h.courses}}},
            {"sessions", h.sessions},
            {"pending_escalations", h.pending_escalations},
            {"config_hash", h.config_hash}};
}

ApiResponse Api::handle(const ApiRequest& request) const {
    if (request.body.size() > max_body_bytes_) {
        return error_response(400, "PayloadTooLarge",
                              "body exceeds " + std::to_string(max_body_bytes_) + " bytes");
    }
    try {
        return dispatch(request);
    } catch (const Error& e) {
        return error_response(map_error(e));
    } catch (const std::exception& e) {
        return error_response(500, "Internal", e.what());
    }
}

ApiResponse Api::dispatch(const ApiRequest& req) const {
    const auto parts = split_path(req.path);
    const auto& m = req.method;
    const std::size_t n = parts.size();
    if (n < 2 || parts[0] != "v1") return error_response(404, "NotFound", "no route for " + req.path);

    if (parts[1] == "health" && n == 2 && m == "GET") return {200, to_json(engine_.health())};

    if (parts[1] == "sessions") {
        if (n == 2 && m == "POST") {
            return {201, to_json(engine_.create_session(required_text(req.body, "course_id")))};
        }
        if (n == 2 && m == "GET") {
            Json out = Json::array();
            for (const auto& s : engine_.list_sessions()) {
                out.push_back({{"id", s.id}, {"course_id", s.course_id}, {"turn_count", s.turn_count},
                               {"created_ms", s.created_ms}});
            }
            return {200, Json{{"sessions", out}}};
        }
        if (n == 3 && m == "GET") return {200, to_json(engine_.get_session(parts[2]))};
        if (n == 4 && m == "POST" && parts[3] == "messages") {
            const auto res = engine_.respond(parts[2], required_text(req.body, "text"));
            return {res.error ? 502 : 200, to_json(res)};
        }
        if (n == 4 && m == "POST" && parts[3] == "escalate") {
            const auto item = engine_.escalate(parts[2], required_text(req.body, "text"));
            return {202, Json{{"escalation_id", item.id}, {"item", to_json(item)}}};
        }
    }

    if (parts[1] == "escalations") {
        if (n == 2 && m == "GET") {
            std::optional<EscalationStatus> status;
            if (const auto it = req.params.find("status"); it != req.params.end()) {
                status = parse_escalation_status(it->second);
                if (!status) fail(ErrorCode::InvalidArgument, "status must be PENDING or ANSWERED");
            }
            Json out = Json::array();
            for (const auto& i : engine_.escalations(status)) out.push_back(to_json(i));
            return {200, Json{{"escalations", out}}};
        }
        if (n == 4 && m == "POST" && parts[3] == "answer") {
            const auto snippet = engine_.answer_escalation(parts[2], required_text(req.body, "text"));
            return {200, Json{{"item_id", parts[2]}, {"snippet", to_json(snippet)}}};
        }
    }
    return error_response(404, "NotFound", "no route for " + m + " " + req.path);
}

// ---------------------------------------------------------------------------
// HttpServer

struct HttpServer::Impl {
    const Api& api;
    httplib::Server server;

    explicit Impl(const Api& a) : api(a) {}

    void forward(const httplib::Request& req, httplib::Response& res) {
        ApiRequest ar;
        ar.method = req.method;
        ar.path = req.path;
        ar.body = req.body;
        for (const auto& [k, v] : req.params) ar.params.emplace(k, v);
        const auto out = api.handle(ar);
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
    }
};

HttpServer::HttpServer(const Api& api) : impl_(std::make_unique<Impl>(api)) {
    auto& s = impl_->server;
    const std::size_t limit = api.max_body_bytes();
    s.set_payload_max_length(limit);
    // Reject oversized bodies from the header, before anything is read.
    s.set_pre_routing_handler([limit](const httplib::Request& req, httplib::Response& res) {
        if (req.has_header("Content-Length")) {
            const auto len = std::strtoull(req.get_header_value("Content-Length").c_str(), nullptr, 10);
            if (len > limit) {
                res.status = 400;
                res.set_content(Json{{"error", {{"code", "PayloadTooLarge"},
                                                {"message", "body exceeds " + std::to_string(limit) + " bytes"}}}}
                                    .dump(),
                                "application/json");
                return httplib::Server::HandlerResponse::Handled;
            }
        }
        return httplib::Server::HandlerResponse::Unhandled;
    });
    // httplib answers 413 for bodies it refuses on its own (chunked uploads).
    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.status == 413) {
            res.status = 400;
            res.set_content(Json{{"error", {{"code", "PayloadTooLarge"}, {"message", "body too large"}}}}.dump(),
                            "application/json");
        } else if (res.body.empty()) {
            res.set_content(Json{{"error", {{"code", "HttpError"}, {"message", std::to_string(res.status)}}}}.dump(),
                            "application/json");
        }
    });
    auto handler = [this](const httplib::Request& req, httplib::Response& res) { impl_->forward(req, res); };
    s.Get(".*", handler);
    s.Post(".*", handler);
    s.Put(".*", handler);
    s.Delete(".*", handler);
}

HttpServer::~HttpServer() {
    stop();
}

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::serve() {
    return impl_->server.listen_after_bind();
}

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const {
    impl_->server.wait_until_ready();
}

}  // namespace vta
