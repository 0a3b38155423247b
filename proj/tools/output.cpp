#include "output.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace noisycoin::cli {

namespace {

std::string csv_cell(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return format_number(*d);
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  const auto& s = std::get<std::string>(cell);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

nlohmann::ordered_json json_cell(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) {
    if (std::isfinite(*d)) return *d;
    return nullptr;
  }
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return *i;
  return std::get<std::string>(cell);
}

std::string scalar_text(const nlohmann::ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return format_number(v.get<double>());
  return v.dump();
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::string to_csv(const Table& table, const Document& doc) {
  std::string out;
  for (const auto& [key, value] : doc.config.items()) out += fmt::format("# {}: {}\n", key, scalar_text(value));
  for (const auto& [key, value] : table.metadata) out += fmt::format("# {}: {}\n", key, value);
  for (const auto& [key, value] : doc.diagnostics.items()) {
    out += fmt::format("# {}: {}\n", key, scalar_text(value));
  }
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out += (i ? "," : "") + table.columns[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += (i ? "," : "") + csv_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string to_csv(const Document& doc) {
  std::string out;
  for (std::size_t i = 0; i < doc.tables.size(); ++i) {
    if (i) out += '\n';
    out += to_csv(doc.tables[i], doc);
  }
  return out;
}

std::string to_json(const Document& doc) {
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
  for (const auto& table : doc.tables) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
      nlohmann::ordered_json obj = nlohmann::ordered_json::object();
      for (std::size_t i = 0; i < row.size(); ++i) obj[table.columns[i]] = json_cell(row[i]);
      rows.push_back(std::move(obj));
    }
    nlohmann::ordered_json entry = nlohmann::ordered_json::object();
    for (const auto& [key, value] : table.metadata) entry["metadata"][key] = value;
    entry["rows"] = std::move(rows);
    results[table.name] = std::move(entry);
  }
  nlohmann::ordered_json top = nlohmann::ordered_json::object();
  top["config"] = doc.config;
  top["results"] = std::move(results);
  top["diagnostics"] = doc.diagnostics;
  return top.dump(2) + "\n";
}

std::string render(const Document& doc, Format format) {
  return format == Format::csv ? to_csv(doc) : to_json(doc);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string sha256_hex(const std::string& content) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(content.data(), content.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace noisycoin::cli
