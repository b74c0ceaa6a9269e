// Copyright 2026 The psyeval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABILITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace psyeval::io {

std::vector<std::string_view> split_tabs(std::string_view line);

// Strict numeric parsing: the whole field must be consumed.
bool parse_int(std::string_view field, std::int64_t& out);
bool parse_double(std::string_view field, double& out);

// Reads a whole file, throwing IoError when it cannot be opened.
std::string read_file(const std::string& path);

// Splits into lines, dropping a trailing '\r' from each. A final newline does
// not produce an empty trailing line.
std::vector<std::string_view> split_lines(std::string_view text);

// Writes to "<path>.tmp" and renames over path, so readers never observe a
// partially written file.
void atomic_write(const std::string& path, std::string_view contents);

// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);

}  // namespace psyeval::io
