#include "http_client.hpp"

#include "httplib.h"

namespace vta::detail {
namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto host_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_begin = url.find('/', host_begin);
    if (path_begin == std::string::npos) return {url, "/"};
    return {url.substr(0, path_begin), url.substr(path_begin)};
}

}  // namespace

HttpResult post_json(const std::string& url, const std::string& body, std::chrono::milliseconds timeout) {
    const auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(path, body, "application/json");
    if (!res) return {0, {}, httplib::to_string(res.error())};
    return {res->status, res->body, {}};
}

}  // namespace vta::detail
