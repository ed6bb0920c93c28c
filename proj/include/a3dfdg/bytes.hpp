/*
 Copyright 2026 the a3dfdg authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

     http://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef A3DFDG_BYTES_HPP
#define A3DFDG_BYTES_HPP

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "a3dfdg/error.hpp"

namespace a3dfdg::bytes {

// Explicit little-endian encoding regardless of host order; every on-disk
// format in the project goes through these two types.

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  void magic(const char (&m)[5]) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(m[i]));
  }

  void f32Array(const float* v, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      const std::size_t at = buf_.size();
      buf_.resize(at + 4 * n);
      std::memcpy(buf_.data() + at, v, 4 * n);
    } else {
      for (std::size_t i = 0; i < n; ++i) f32(v[i]);
    }
  }

  void u8Array(const std::uint8_t* v, std::size_t n) {
    buf_.insert(buf_.end(), v, v + n);
  }

  void pad(std::size_t upto) {
    while (buf_.size() < upto) buf_.push_back(0);
  }

  std::size_t size() const { return buf_.size(); }
  const std::vector<std::uint8_t>& bytes() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size, std::string what)
      : p_(data), end_(data + size), what_(std::move(what)) {}

  std::uint8_t u8() {
    need(1);
    return *p_++;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p_[i]) << (8 * i);
    p_ += 4;
    return v;
  }

  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p_[i]) << (8 * i);
    p_ += 8;
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }

  void expectMagic(const char (&m)[5]) {
    need(4);
    for (int i = 0; i < 4; ++i) {
      if (p_[i] != static_cast<std::uint8_t>(m[i])) {
        throw FormatError(what_ + ": bad magic, expected \"" + m + "\"");
      }
    }
    p_ += 4;
  }

  void f32Array(float* v, std::size_t n) {
    need(4 * n);
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(v, p_, 4 * n);
      p_ += 4 * n;
    } else {
      for (std::size_t i = 0; i < n; ++i) v[i] = f32();
    }
  }

  void u8Array(std::uint8_t* v, std::size_t n) {
    need(n);
    std::memcpy(v, p_, n);
    p_ += n;
  }

  void skip(std::size_t n) {
    need(n);
    p_ += n;
  }

  std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }

  void expectEnd() const {
    if (p_ != end_) throw FormatError(what_ + ": trailing bytes after payload");
  }

 private:
  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end_ - p_) < n) {
      throw FormatError(what_ + ": truncated payload");
    }
  }

  const std::uint8_t* p_;
  const std::uint8_t* end_;
  std::string what_;
};

}  // namespace a3dfdg::bytes

#endif
