#include "vta/text.hpp"

#include "vta/error.hpp"

namespace vta {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedRecord: return "MalformedRecord";
        case ErrorCode::EmptyField: return "EmptyField";
        case ErrorCode::DanglingEdge: return "DanglingEdge";
        case ErrorCode::DuplicateConcept: return "DuplicateConcept";
        case ErrorCode::DuplicateEdge: return "DuplicateEdge";
        case ErrorCode::SelfLoop: return "SelfLoop";
        case ErrorCode::UnknownConcept: return "UnknownConcept";
        case ErrorCode::AdapterUnavailable: return "AdapterUnavailable";
        case ErrorCode::UnknownItem: return "UnknownItem";
        case ErrorCode::AlreadyAnswered: return "AlreadyAnswered";
        case ErrorCode::DuplicateSnippetId: return "DuplicateSnippetId";
        case ErrorCode::UnknownSnippet: return "UnknownSnippet";
        case ErrorCode::RemoteUnavailable: return "RemoteUnavailable";
        case ErrorCode::EmptyStore: return "EmptyStore";
        case ErrorCode::UnknownSession: return "UnknownSession";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace vta

namespace vta::text {
namespace {

constexpr char32_t kReplacement = 0xFFFD;

struct Decoded {
    char32_t cp;
    std::size_t length;
};

// Invalid sequences decode to U+FFFD and consume one byte.
Decoded decode(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) return {b0, 1};
    std::size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return {kReplacement, 1};
    }
    if (i + len > s.size()) return {kReplacement, 1};
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return {kReplacement, 1};
        cp = (cp << 6) | (b & 0x3F);
    }
    return {cp, len};
}

void encode(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

char32_t fold(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    // Latin-1 capitals, excluding the multiplication sign.
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    return cp;
}

bool is_word_char(char32_t cp) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9')) {
        return true;
    }
    return cp >= 0xC0 && cp <= 0x24F && cp != 0xD7 && cp != 0xF7;
}

bool is_space(char32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' ||
           cp == 0xA0 || cp == 0x3000;
}

}  // namespace

bool is_cjk(char32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF) ||    // unified ideographs
           (cp >= 0x3400 && cp <= 0x4DBF) ||    // extension A
           (cp >= 0x20000 && cp <= 0x2A6DF) ||  // extension B
           (cp >= 0xF900 && cp <= 0xFAFF) ||    // compatibility ideographs
           (cp >= 0x3040 && cp <= 0x30FF) ||    // kana
           (cp >= 0xAC00 && cp <= 0xD7AF);      // hangul syllables
}

std::vector<Unit> segment(std::string_view text) {
    std::vector<Unit> units;
    Unit word;
    bool in_word = false;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto [cp, len] = decode(text, i);
        if (is_word_char(cp)) {
            if (!in_word) {
                word = Unit{{}, i, i, false};
                in_word = true;
            }
            encode(fold(cp), word.folded);
            word.end = i + len;
        } else {
            if (in_word) {
                units.push_back(std::move(word));
                in_word = false;
            }
            if (is_cjk(cp)) {
                Unit u{{}, i, i + len, true};
                encode(cp, u.folded);
                units.push_back(std::move(u));
            }
        }
        i += len;
    }
    if (in_word) units.push_back(std::move(word));
    return units;
}

std::vector<std::string> tokenize(std::string_view text) {
    const auto units = segment(text);
    std::vector<std::string> tokens;
    tokens.reserve(units.size() * 2);
    for (std::size_t i = 0; i < units.size(); ++i) {
        tokens.push_back(units[i].folded);
        if (units[i].cjk && i + 1 < units.size() && units[i + 1].cjk &&
            units[i].end == units[i + 1].begin) {
            tokens.push_back(units[i].folded + units[i + 1].folded);
        }
    }
    return tokens;
}

std::string normalize(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto [cp, len] = decode(text, i);
        i += len;
        if (is_space(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        encode(fold(cp), out);
    }
    return out;
}

std::string lexicon_key(std::string_view text) {
    std::string key;
    for (const auto& u : segment(text)) {
        if (!key.empty()) key.push_back(' ');
        key += u.folded;
    }
    return key;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace vta::text
