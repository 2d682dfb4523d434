#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace hrdyn {

// SHA-1 of "blob <size>\0<bytes>", hex encoded (what `git hash-object` prints).
std::string git_blob_hash(std::string_view bytes);

// Files hash as blobs. Directories hash as the SHA-1 of their sorted
// "<relative path> <blob hash>\n" lines, so renames and edits both show up.
std::string content_hash(const std::filesystem::path& path);

struct RunManifest {
  std::string subcommand;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json inputs = nlohmann::json::object();   // name -> {path, hash}
  nlohmann::json outputs = nlohmann::json::object();  // metrics and written files
  int jobs = 1;
};

void add_input(RunManifest& m, const std::string& name, const std::filesystem::path& path);

nlohmann::json to_json(const RunManifest& m);
RunManifest run_manifest_from_json(const nlohmann::json& j);

// Writes <dir>/run_manifest.json.
void write_manifest(const std::filesystem::path& dir, const RunManifest& m);

}  // namespace hrdyn
