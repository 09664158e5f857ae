#pragma once

// Little-endian framing shared by the phantom and result file formats:
// 4-byte magic, u32 version, u32 header length, JSON header, payload.

#include "mrseq/phantom.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace mrseq::binary {

inline void put_u32(std::string &out, std::uint32_t v)
{
  for (int i = 0; i < 4; ++i) { out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU)); }
}

inline std::uint32_t get_u32(std::string_view in, std::size_t at)
{
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) { v |= std::uint32_t(static_cast<unsigned char>(in[at + i])) << (8 * i); }
  return v;
}

inline void put_f32(std::string &out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }
inline float get_f32(std::string_view in, std::size_t at) { return std::bit_cast<float>(get_u32(in, at)); }

struct Frame
{
  std::uint32_t    version = 0;
  std::string_view header;
  std::string_view payload;
};

inline std::string frame(std::string_view magic, std::uint32_t version, std::string_view header)
{
  std::string out(magic);
  put_u32(out, version);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.append(header);
  return out;
}

inline Frame unframe(std::string_view bytes, std::string_view magic)
{
  if (bytes.size() < 12) { throw phantom::TruncatedPayload("file shorter than its fixed header"); }
  if (bytes.substr(0, 4) != magic) { throw SchemaError("", "bad magic, expected " + std::string(magic)); }
  Frame f;
  f.version = get_u32(bytes, 4);
  std::uint32_t const len = get_u32(bytes, 8);
  if (bytes.size() - 12 < len) { throw phantom::TruncatedPayload("header length exceeds file size"); }
  f.header = bytes.substr(12, len);
  f.payload = bytes.substr(12 + len);
  return f;
}

} // namespace mrseq::binary
