#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace vta {

enum class Role { User, Assistant };

inline std::string_view to_string(Role role) {
    return role == Role::User ? "user" : "assistant";
}

inline std::optional<Role> parse_role(std::string_view s) {
    if (s == "user") return Role::User;
    if (s == "assistant") return Role::Assistant;
    return std::nullopt;
}

struct Turn {
    Role role = Role::User;
    std::string text;
    std::int64_t timestamp_ms = 0;
    std::string route;  // assistant turns only

    friend bool operator==(const Turn&, const Turn&) = default;
};

}  // namespace vta
