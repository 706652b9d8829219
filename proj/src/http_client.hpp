#pragma once

#include <chrono>
#include <string>

namespace vta::detail {

struct HttpResult {
    int status = 0;  // 0 when the request never completed
    std::string body;
    std::string error;
};

/// Blocking POST of a JSON body to an http:// URL.
HttpResult post_json(const std::string& url, const std::string& body, std::chrono::milliseconds timeout);

}  // namespace vta::detail
