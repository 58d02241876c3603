#ifndef RAWCSI_SRC_BINARY_IO_H_
#define RAWCSI_SRC_BINARY_IO_H_

// Little-endian framing shared by the CSIT dataset and CSIM checkpoint formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "rawcsi/error.h"

namespace rawcsi::io {

class LeWriter {
 public:
  explicit LeWriter(std::ostream& os) : os_(os) {}

  void bytes(const void* p, std::size_t n) {
    os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!os_) fail(Errc::kIoFailure, "write failed");
    count_ += n;
  }
  template <typename U>
  void uint(U v) {
    unsigned char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(buf, sizeof(U));
  }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void str16(const std::string& s) {
    if (s.size() > 0xffff) fail(Errc::kInvariantViolation, "string longer than 65535 bytes");
    uint(static_cast<std::uint16_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::uint64_t count() const { return count_; }

 private:
  std::ostream& os_;
  std::uint64_t count_ = 0;
};

class LeReader {
 public:
  explicit LeReader(std::istream& is) : is_(is) {}

  void bytes(void* p, std::size_t n) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) fail(Errc::kTruncatedStream, "stream ended early");
  }
  template <typename U>
  U uint() {
    unsigned char buf[sizeof(U)];
    bytes(buf, sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(buf[i]) << (8 * i));
    return v;
  }
  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
  std::string str16() {
    const auto len = uint<std::uint16_t>();
    std::string s(len, '\0');
    if (len) bytes(s.data(), len);
    return s;
  }

 private:
  std::istream& is_;
};

}  // namespace rawcsi::io

#endif  // RAWCSI_SRC_BINARY_IO_H_
