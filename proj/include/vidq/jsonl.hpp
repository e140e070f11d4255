#pragma once

// Line-delimited JSON files with a versioned header line:
//   {"format":"<name>","version":"<major>.<minor>"}
// followed by one record per line.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace vidq::jsonl {

using nlohmann::json;

inline constexpr int kMajorVersion = 1;
inline constexpr const char* kVersion = "1.0";

struct Line {
  std::size_t number = 0;  // 1-based
  json value;
};

/// Parses the header and every record. Rejects a wrong format name and any
/// unknown major version.
std::vector<Line> read(const std::filesystem::path& path,
                       const std::string& format);

/// Serializes records after the header, one compact JSON value per line.
std::string serialize(const std::string& format, const std::vector<json>& records);

/// Write-temp-then-rename.
void write_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace vidq::jsonl
