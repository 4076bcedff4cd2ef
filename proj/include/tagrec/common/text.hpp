// Copyright 2026 The tagrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TAGREC_COMMON_TEXT_HPP_
#define TAGREC_COMMON_TEXT_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace tagrec::text {

// Lenient UTF-8 decoding: malformed sequences decode to U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view s);
std::string encode_utf8(char32_t cp);
std::string encode_utf8(const std::vector<char32_t>& cps);

bool is_cjk(char32_t cp);
bool is_space(char32_t cp);
// ASCII punctuation/symbols plus the common Unicode punctuation blocks.
bool is_punct(char32_t cp);

// Token-budget proxy: runs of non-delimiter characters count as one
// token, every CJK character counts as one token, whitespace and
// punctuation only delimit.
std::size_t count_tokens(std::string_view s);

// Shared word tokenizer for tags and titles: lowercased, split on
// whitespace/punctuation, each CJK character its own token.
std::vector<std::string> tokenize_words(std::string_view s);

// ASCII case folding; non-ASCII bytes pass through unchanged.
std::string casefold(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool contains(std::string_view haystack, std::string_view needle);

// Extended grapheme clusters, approximated: combining marks, variation
// selectors, emoji modifiers and ZWJ-joined code points extend the
// preceding cluster. Clusters starting with whitespace or punctuation
// are not counted.
std::size_t count_graphemes(std::string_view s);

// The first `n` counted clusters of `s`, keeping any interleaved
// punctuation before the cut.
std::string truncate_graphemes(std::string_view s, std::size_t n);

}  // namespace tagrec::text

#endif  // TAGREC_COMMON_TEXT_HPP_
