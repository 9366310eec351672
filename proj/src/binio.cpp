#include "koop/binio.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace koop {

namespace {

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void write_container(const std::filesystem::path& path, const BinContainer& c) {
  const std::string json = c.header.dump();
  std::string head(kBinMagic);
  put_u64_le(head, json.size());

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for write: " + tmp.string());
    f.write(head.data(), static_cast<std::streamsize>(head.size()));
    f.write(json.data(), static_cast<std::streamsize>(json.size()));
    if (!c.blob.empty()) {
      f.write(reinterpret_cast<const char*>(c.blob.data()),
              static_cast<std::streamsize>(c.blob.size() * sizeof(double)));
    }
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

BinContainer read_container(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path.string());

  constexpr std::size_t magic_len = sizeof(kBinMagic) - 1;
  char magic[magic_len];
  f.read(magic, magic_len);
  if (!f || std::memcmp(magic, kBinMagic, magic_len) != 0)
    throw std::runtime_error("not a KOOPBIN1 container: " + path.string());

  unsigned char lenbuf[8];
  f.read(reinterpret_cast<char*>(lenbuf), 8);
  if (!f) throw std::runtime_error("truncated container header: " + path.string());
  const std::uint64_t json_len = get_u64_le(lenbuf);

  std::string json(json_len, '\0');
  f.read(json.data(), static_cast<std::streamsize>(json_len));
  if (!f) throw std::runtime_error("truncated container JSON: " + path.string());

  BinContainer c;
  c.header = ordered_json::parse(json);

  const auto here = f.tellg();
  f.seekg(0, std::ios::end);
  const auto end = f.tellg();
  const std::uint64_t blob_bytes = static_cast<std::uint64_t>(end - here);
  if (blob_bytes % sizeof(double) != 0)
    throw std::runtime_error("container blob not a multiple of 8 bytes: " + path.string());
  f.seekg(here);
  c.blob.resize(blob_bytes / sizeof(double));
  if (!c.blob.empty()) {
    f.read(reinterpret_cast<char*>(c.blob.data()), static_cast<std::streamsize>(blob_bytes));
    if (!f) throw std::runtime_error("truncated container blob: " + path.string());
  }
  return c;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for write: " + tmp.string());
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for digest: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (f) {
    f.read(buf, sizeof(buf));
    const std::streamsize n = f.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

}  // namespace koop
