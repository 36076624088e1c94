// Copyright 2026 The rbridge Authors.
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

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rbridge {

bool is_valid_utf8(std::string_view s);

std::string trim(std::string_view s);
std::string ascii_lower(std::string_view s);

/// Appends the UTF-8 encoding of a codepoint.
void append_utf8(std::string& out, char32_t cp);

/// Replaces every `{name}` placeholder found in `vars`; other braces are
/// left alone.
std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string, std::string>>& vars);

/// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Replaces the file contents atomically enough for a single writer
/// (write to a sibling temp file, then rename).
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace rbridge
