#pragma once

// Run manifest: every output file with its SHA-256, plus one entry per
// command invocation carrying seeds, version and wall time. Wall time lives
// only here so the data files themselves stay reproducible.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

namespace sgdfclt {

inline constexpr const char* kVersion = "0.1.0";

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::string hex;
  char two[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(two, sizeof two, "%02x", md[i]);
    hex += two;
  }
  return hex;
}

class Manifest {
 public:
  explicit Manifest(std::filesystem::path dir) : dir_(std::move(dir)) {
    const auto path = dir_ / "manifest.json";
    if (std::filesystem::exists(path)) {
      std::ifstream in(path);
      doc_ = nlohmann::ordered_json::parse(in, nullptr, false);
      if (doc_.is_discarded() || !doc_.is_object()) doc_ = nlohmann::ordered_json::object();
    }
    if (!doc_.contains("files")) doc_["files"] = nlohmann::ordered_json::object();
    if (!doc_.contains("runs")) doc_["runs"] = nlohmann::ordered_json::array();
  }

  void add_file(const std::string& name, const std::string& command) {
    const auto path = dir_ / name;
    doc_["files"][name] = {{"sha256", sha256_file(path)},
                           {"bytes", std::filesystem::file_size(path)},
                           {"command", command}};
    written_.push_back(name);
  }

  void add_run(nlohmann::ordered_json run) {
    run["files"] = written_;
    doc_["runs"].push_back(std::move(run));
    written_.clear();
  }

  void save() const {
    std::ofstream out(dir_ / "manifest.json");
    out << doc_.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write manifest.json");
  }

  const nlohmann::ordered_json& document() const noexcept { return doc_; }

 private:
  std::filesystem::path dir_;
  nlohmann::ordered_json doc_ = nlohmann::ordered_json::object();
  std::vector<std::string> written_;
};

}  // namespace sgdfclt
