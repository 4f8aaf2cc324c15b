#include "manifest.hpp"

#include <cstdio>

#include <openssl/evp.h>

#include "protoverb/embedding_store.hpp"
#include "protoverb/errors.hpp"

namespace protoverb::cli {

namespace {

std::string to_hex(const unsigned char* data, unsigned int size) {
  static const char* kDigits = "0123456789abcdef";
  std::string out;
  out.reserve(size * 2);
  for (unsigned int i = 0; i < size; ++i) {
    out += kDigits[data[i] >> 4];
    out += kDigits[data[i] & 0xF];
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int size = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &size, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  return to_hex(digest, size);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::FILE* file = std::fopen(path.string().c_str(), "rb");
  if (file == nullptr) throw IoError("cannot open '" + path.string() + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buffer[1 << 16];
  std::size_t n = 0;
  while ((n = std::fread(buffer, 1, sizeof(buffer), file)) > 0) EVP_DigestUpdate(ctx, buffer, n);
  const bool failed = std::ferror(file) != 0;
  std::fclose(file);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int size = 0;
  EVP_DigestFinal_ex(ctx, digest, &size);
  EVP_MD_CTX_free(ctx);
  if (failed) throw IoError("read error while hashing '" + path.string() + "'");
  return to_hex(digest, size);
}

const char* tool_version() { return PROTOVERB_VERSION; }

RunManifest::RunManifest(std::string command) : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

void RunManifest::add_input(const std::filesystem::path& path) { inputs_[path.string()] = sha256_file(path); }

nlohmann::json RunManifest::to_json(int exit_code) const {
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
  nlohmann::json j{{"command", command_},
                   {"config", config_},
                   {"inputs", inputs_},
                   {"tool_version", tool_version()},
                   {"exit_code", exit_code},
                   {"wall_time_seconds", elapsed.count()}};
  for (const auto& [key, value] : extra_.items()) j[key] = value;
  return j;
}

}  // namespace protoverb::cli
