/*
 * Copyright 2026 The pmlab Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Result tables (RFC-4180 CSV or JSONL), shortest round-trip number
// formatting, atomic file writes and SHA-256 digests.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace pmlab {

// Raised for any filesystem failure while writing results.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest decimal string that parses back to the same double.
inline std::string FormatNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

using Cell = std::variant<std::monostate, double, std::int64_t, std::uint64_t, bool, std::string>;

inline Cell OptionalCell(const std::optional<double>& v) {
  return v ? Cell{*v} : Cell{};
}

class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void AddRow(std::vector<Cell> row) {
    if (row.size() != columns_.size()) {
      throw std::logic_error("table row has " + std::to_string(row.size()) + " cells, expected " +
                             std::to_string(columns_.size()));
    }
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t size() const { return rows_.size(); }
  const std::vector<Cell>& row(std::size_t i) const { return rows_.at(i); }

  std::string ToCsv() const {
    std::string out;
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      if (j) out += ',';
      out += CsvField(columns_[j]);
    }
    out += "\r\n";
    for (const auto& row : rows_) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out += ',';
        out += CsvField(CellText(row[j]));
      }
      out += "\r\n";
    }
    return out;
  }

  // One JSON object per row; missing cells become null.
  std::string ToJsonl() const {
    std::string out;
    for (const auto& row : rows_) {
      out += '{';
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out += ',';
        out += nlohmann::json(columns_[j]).dump();
        out += ':';
        out += CellJson(row[j]);
      }
      out += "}\n";
    }
    return out;
  }

  static std::string CellText(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::monostate>) {
            return "";
          } else if constexpr (std::is_same_v<T, double>) {
            return FormatNumber(v);
          } else if constexpr (std::is_same_v<T, bool>) {
            return v ? "true" : "false";
          } else if constexpr (std::is_same_v<T, std::string>) {
            return v;
          } else {
            return std::to_string(v);
          }
        },
        c);
  }

  static std::string CellJson(const Cell& c) {
    if (std::holds_alternative<std::monostate>(c)) return "null";
    if (const auto* s = std::get_if<std::string>(&c)) return nlohmann::json(*s).dump();
    if (const auto* d = std::get_if<double>(&c)) {
      return std::isfinite(*d) ? FormatNumber(*d) : "null";
    }
    return CellText(c);
  }

 private:
  static std::string CsvField(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    q += '"';
    return q;
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

inline std::string Sha256Hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

// Writes to a sibling temporary file, then renames over the target.
inline void WriteFileAtomic(const std::filesystem::path& path, std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string());
  }
}

inline std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace pmlab
