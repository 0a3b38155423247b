#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace noisycoin::cli {

using Cell = std::variant<double, std::int64_t, std::string>;

/// One rectangular result set with `#` metadata for CSV output.
struct Table {
  std::string name;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void note(std::string key, std::string value) { metadata.emplace_back(std::move(key), std::move(value)); }
};

enum class Format { csv, json };

/// Everything a command produces. CSV output carries the config and the
/// diagnostics as metadata lines; JSON keeps them as separate objects.
struct Document {
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<Table> tables;
  nlohmann::ordered_json diagnostics = nlohmann::ordered_json::object();
};

/// 17 significant digits, "inf"/"-inf"/"nan" for non-finite values.
std::string format_number(double v);

std::string to_csv(const Table& table, const Document& doc);
/// All tables of the document, blank-line separated.
std::string to_csv(const Document& doc);
std::string to_json(const Document& doc);
std::string render(const Document& doc, Format format);

/// Writes via a temporary file and rename, so readers never see a partial file.
void write_file(const std::filesystem::path& path, const std::string& content);

std::string sha256_hex(const std::string& content);

}  // namespace noisycoin::cli
