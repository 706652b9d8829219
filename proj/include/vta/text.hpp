#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace vta::text {

/// A word run or a single CJK codepoint, case-folded, with its byte range in
/// the source text.
struct Unit {
    std::string folded;
    std::size_t begin = 0;
    std::size_t end = 0;
    bool cjk = false;
};

bool is_cjk(char32_t cp);

/// Splits text into units. Latin letters and digits form word runs; every CJK
/// codepoint is its own unit; anything else separates units.
std::vector<Unit> segment(std::string_view text);

/// Case-folded tokens. Word runs become one token each. Inside a contiguous
/// CJK run every codepoint is a unigram and every adjacent pair a bigram,
/// emitted as c0, c0c1, c1, c1c2, c2, ...
std::vector<std::string> tokenize(std::string_view text);

/// Case-fold, trim, collapse internal whitespace to single spaces.
std::string normalize(std::string_view text);

/// Lexicon key of a surface form: its units joined by single spaces. For
/// plain names this equals normalize(); punctuation is dropped.
std::string lexicon_key(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace vta::text
