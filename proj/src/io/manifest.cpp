#include "atp/io/manifest.hpp"

#include <fstream>
#include <memory>
#include <stdexcept>

#include <openssl/evp.h>

#include "json.hpp"

#include "atp/io/formats.hpp"

namespace atp {

namespace {

using DigestCtx = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

std::string finish_hex(EVP_MD_CTX* ctx) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx, digest, &len) != 1)
    throw std::runtime_error("sha256 digest finalization failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

DigestCtx make_sha256_ctx() {
  DigestCtx ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 context initialization failed");
  return ctx;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  DigestCtx ctx = make_sha256_ctx();
  if (EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1)
    throw std::runtime_error("sha256 update failed");
  return finish_hex(ctx.get());
}

std::string sha256_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  DigestCtx ctx = make_sha256_ctx();
  char buf[1 << 16];
  while (f) {
    f.read(buf, sizeof buf);
    const std::streamsize got = f.gcount();
    if (got > 0 && EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(got)) != 1)
      throw std::runtime_error("sha256 update failed");
  }
  if (f.bad()) throw std::runtime_error("failed reading '" + path + "'");
  return finish_hex(ctx.get());
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  const nlohmann::json j = {{"command", manifest.command},
                            {"config_digest", manifest.config_digest},
                            {"inputs", manifest.inputs},
                            {"outputs", manifest.outputs},
                            {"seed", manifest.seed},
                            {"tool_version", manifest.tool_version},
                            {"started", manifest.started},
                            {"finished", manifest.finished}};
  write_text_file(path, j.dump(1) + "\n");
}

RunManifest read_manifest(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed JSON in '" + path + "': " + e.what());
  }
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config_digest = j.at("config_digest").get<std::string>();
  m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
  m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.tool_version = j.at("tool_version").get<std::string>();
  m.started = j.at("started").get<std::string>();
  m.finished = j.at("finished").get<std::string>();
  return m;
}

}  // namespace atp
