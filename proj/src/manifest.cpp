#include "hrdyn/manifest.hpp"

#include "hrdyn/error.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>
#include <vector>

namespace hrdyn {

namespace fs = std::filesystem;

namespace {

std::string sha1_hex(std::string_view a, std::string_view b) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), a.data(), a.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), b.data(), b.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error("SHA-1 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string git_blob_hash(std::string_view bytes) {
  std::string header = "blob " + std::to_string(bytes.size());
  header.push_back('\0');
  return sha1_hex(header, bytes);
}

std::string content_hash(const fs::path& path) {
  if (fs::is_regular_file(path)) return git_blob_hash(read_file(path));
  if (!fs::is_directory(path)) throw InputError("no such file or directory: " + path.string());
  std::vector<std::string> lines;
  for (const auto& e : fs::recursive_directory_iterator(path)) {
    if (!e.is_regular_file()) continue;
    lines.push_back(fs::relative(e.path(), path).generic_string() + ' ' +
                    git_blob_hash(read_file(e.path())) + '\n');
  }
  std::sort(lines.begin(), lines.end());
  std::string joined;
  for (const auto& l : lines) joined += l;
  return sha1_hex("tree\n", joined);
}

void add_input(RunManifest& m, const std::string& name, const fs::path& path) {
  m.inputs[name] = {{"path", path.generic_string()}, {"hash", content_hash(path)}};
}

nlohmann::json to_json(const RunManifest& m) {
  return {{"subcommand", m.subcommand}, {"seed", m.seed},       {"jobs", m.jobs},
          {"config", m.config},         {"inputs", m.inputs},   {"outputs", m.outputs}};
}

RunManifest run_manifest_from_json(const nlohmann::json& j) {
  try {
    RunManifest m;
    m.subcommand = j.at("subcommand").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.jobs = j.value("jobs", 1);
    m.config = j.value("config", nlohmann::json::object());
    m.inputs = j.value("inputs", nlohmann::json::object());
    m.outputs = j.value("outputs", nlohmann::json::object());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed run manifest: ") + e.what());
  }
}

void write_manifest(const fs::path& dir, const RunManifest& m) {
  fs::create_directories(dir);
  std::ofstream out(dir / "run_manifest.json");
  if (!out) throw Error("cannot write " + (dir / "run_manifest.json").string());
  out << to_json(m).dump(2) << '\n';
}

}  // namespace hrdyn
