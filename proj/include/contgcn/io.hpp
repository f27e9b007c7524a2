#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "contgcn/errors.hpp"

namespace contgcn {

// FNV-1a 64-bit, used as the trailing integrity checksum of binary snapshots.
inline std::uint64_t fnv1a64(const std::uint8_t* p, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

// Little-endian buffer writer. finalize() appends the checksum of everything
// written so far; write_atomic() goes through a temp file + rename so a crash
// never leaves a truncated snapshot at the target path.
class ByteWriter {
 public:
  void put_bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void put_u8(std::uint8_t x) { put_bytes(&x, 1); }
  void put_u32(std::uint32_t x) { put_bytes(&x, 4); }
  void put_u64(std::uint64_t x) { put_bytes(&x, 8); }
  void put_i64(std::int64_t x) { put_bytes(&x, 8); }
  void put_f64(double x) {
    auto bits = std::bit_cast<std::uint64_t>(x);
    put_u64(bits);
  }
  void put_string(const std::string& s) {
    put_u64(s.size());
    put_bytes(s.data(), s.size());
  }

  void finalize() { put_u64(fnv1a64(buf_.data(), buf_.size())); }

  void write_atomic(const std::string& path) const {
    namespace fs = std::filesystem;
    const std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out)
        throw data_error(ErrorCode::Io, "cannot open for write: " + tmp);
      out.write(reinterpret_cast<const char*>(buf_.data()),
                static_cast<std::streamsize>(buf_.size()));
      if (!out) throw data_error(ErrorCode::Io, "write failed: " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
      fs::remove(tmp, ec);
      throw data_error(ErrorCode::Io, "rename failed for " + path);
    }
  }

  const std::vector<std::uint8_t>& buffer() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<std::uint8_t> buf) : buf_(std::move(buf)) {}

  static ByteReader from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw data_error(ErrorCode::Io, "cannot open: " + path);
    const auto size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(buf.data()), size);
    if (!in) throw data_error(ErrorCode::Io, "read failed: " + path);
    return ByteReader(std::move(buf));
  }

  // The last 8 bytes must be fnv1a64 of the payload before them.
  void verify_checksum() const {
    if (buf_.size() < 8)
      throw data_error(ErrorCode::ChecksumMismatch, "file too short");
    std::uint64_t stored;
    std::memcpy(&stored, buf_.data() + buf_.size() - 8, 8);
    const std::uint64_t computed = fnv1a64(buf_.data(), buf_.size() - 8);
    if (stored != computed)
      throw data_error(ErrorCode::ChecksumMismatch, "checksum mismatch");
  }

  void get_bytes(void* p, std::size_t n) {
    if (pos_ + n > payload_end())
      throw data_error(ErrorCode::ChecksumMismatch, "truncated payload");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t get_u8() {
    std::uint8_t x;
    get_bytes(&x, 1);
    return x;
  }
  std::uint32_t get_u32() {
    std::uint32_t x;
    get_bytes(&x, 4);
    return x;
  }
  std::uint64_t get_u64() {
    std::uint64_t x;
    get_bytes(&x, 8);
    return x;
  }
  std::int64_t get_i64() {
    std::int64_t x;
    get_bytes(&x, 8);
    return x;
  }
  double get_f64() { return std::bit_cast<double>(get_u64()); }
  std::string get_string() {
    const std::uint64_t n = get_u64();
    if (n > payload_end() - pos_)
      throw data_error(ErrorCode::ChecksumMismatch, "truncated string");
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_),
                  static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return s;
  }

  bool at_payload_end() const { return pos_ == payload_end(); }

 private:
  std::size_t payload_end() const {
    return buf_.size() >= 8 ? buf_.size() - 8 : 0;
  }
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

}  // namespace contgcn
