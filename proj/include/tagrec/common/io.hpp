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

#ifndef TAGREC_COMMON_IO_HPP_
#define TAGREC_COMMON_IO_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tagrec::io {

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file then renames over the target.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view data);
void append_line(const std::filesystem::path& path, std::string_view line);
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Opaque ids become file names: [A-Za-z0-9_-] pass through, every other
// byte is written as %XX.
std::string encode_filename(std::string_view id);
std::string decode_filename(std::string_view name);

}  // namespace tagrec::io

#endif  // TAGREC_COMMON_IO_HPP_
