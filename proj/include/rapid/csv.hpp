//
// Copyright 2026 The RAPID Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// RFC 4180 record reader/writer. Knows nothing about column types.
//
#ifndef RAPID_CSV_HPP_
#define RAPID_CSV_HPP_

#include <charconv>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "rapid/error.hpp"

namespace rapid::csv {

using Record = std::vector<std::string>;

// Splits text into records. Quoted fields may contain commas, doubled quotes
// and line breaks. Both LF and CRLF terminate records; a trailing line break
// does not produce an empty record. Blank lines are skipped.
inline std::vector<Record> Parse(std::string_view text) {
  std::vector<Record> records;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;  // distinguishes `` from `""` for blank lines
  std::size_t line = 1;

  auto end_field = [&] {
    current.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    if (current.empty() && field.empty() && !field_started) return;
    end_field();
    records.push_back(std::move(current));
    current.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) {
          throw Error(ErrorCode::kMalformedCsv,
                      "unexpected quote inside unquoted field on line " +
                          std::to_string(line));
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        end_record();
        ++line;
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
        break;
    }
  }
  if (in_quotes) {
    throw Error(ErrorCode::kMalformedCsv, "unterminated quoted field");
  }
  end_record();
  return records;
}

inline bool NeedsQuoting(std::string_view field) {
  if (field.empty()) return false;
  if (field.front() == ' ' || field.back() == ' ') return true;
  return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline void WriteField(std::ostream& out, std::string_view field) {
  if (!NeedsQuoting(field)) {
    out << field;
    return;
  }
  out << '"';
  for (char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

inline void WriteRecord(std::ostream& out, const Record& record) {
  for (std::size_t i = 0; i < record.size(); ++i) {
    if (i > 0) out << ',';
    WriteField(out, record[i]);
  }
  out << '\n';
}

// Shortest decimal string that parses back to the same double.
inline std::string FormatReal(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

// Parses a complete field as a finite real; nullopt otherwise.
inline std::optional<double> ParseReal(std::string_view field) {
  if (field.empty()) return std::nullopt;
  if (field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto result = std::from_chars(field.data(), field.data() + field.size(), value);
  if (result.ec != std::errc() || result.ptr != field.data() + field.size()) {
    return std::nullopt;
  }
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace rapid::csv

#endif  // RAPID_CSV_HPP_
