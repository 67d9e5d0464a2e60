// Copyright 2026 The LSR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "lsr/error.hpp"

namespace lsr::io {

template <typename T>
void Put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

inline void PutVarint(std::string& out, std::uint64_t value) {
  while (value >= 0x80) {
    out.push_back(static_cast<char>((value & 0x7F) | 0x80));
    value >>= 7;
  }
  out.push_back(static_cast<char>(value));
}

// Bounds-checked cursor over a byte buffer. Every failure is a format error
// that names the offset.
class Reader {
 public:
  Reader(std::string bytes, std::string source)
      : bytes_(std::move(bytes)), source_(std::move(source)) {}

  template <typename T>
  T Get(const char* what) {
    Need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::uint64_t GetVarint(const char* what) {
    std::uint64_t value = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      const auto byte = static_cast<std::uint8_t>(Get<char>(what));
      value |= static_cast<std::uint64_t>(byte & 0x7F) << shift;
      if ((byte & 0x80) == 0) return value;
    }
    Corrupt(std::string("overlong varint in ") + what);
  }

  std::string GetBytes(std::size_t n, const char* what) {
    Need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }
  bool done() const { return pos_ == bytes_.size(); }

  [[noreturn]] void Corrupt(const std::string& message) const {
    Fail(ErrorKind::kFormat, source_ + ": " + message + " at offset " + std::to_string(pos_));
  }

 private:
  void Need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      Fail(ErrorKind::kFormat, source_ + ": truncated while reading " + what + " at offset " +
                                   std::to_string(pos_));
    }
  }

  std::string bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

inline std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorKind::kFormat, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void WriteFile(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(file), ErrorKind::kFormat, "cannot write " + path.string());
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  Require(static_cast<bool>(file), ErrorKind::kFormat, "failed writing " + path.string());
}

}  // namespace lsr::io
