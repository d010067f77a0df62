#include "dexaff/serialize.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dexaff/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "blob containers are defined little-endian");

namespace dexaff::io {

namespace {

constexpr char kBlobMagic[4] = {'D', 'X', 'A', 'B'};
constexpr char kCkptMagic[4] = {'D', 'X', 'A', 'C'};

void put_u16(std::string& buf, std::uint16_t v) {
  buf.append(reinterpret_cast<const char*>(&v), 2);
}
void put_u32(std::string& buf, std::uint32_t v) {
  buf.append(reinterpret_cast<const char*>(&v), 4);
}

}  // namespace

void write_blob_f32(const std::string& path, const std::vector<float>& data,
                    std::uint32_t dim0, std::uint32_t dim1) {
  const std::uint16_t rank = dim1 == 0 ? 1 : 2;
  if (dim1 == 0) dim1 = 1;
  require(static_cast<std::size_t>(dim0) * dim1 == data.size(), ErrorKind::InvalidInput,
          "blob shape does not match data size");

  std::string buf;
  buf.reserve(16 + data.size() * 4);
  buf.append(kBlobMagic, 4);
  buf.push_back(1);  // version
  buf.push_back(1);  // dtype f32
  put_u16(buf, rank);
  put_u32(buf, dim0);
  put_u32(buf, dim1);
  buf.append(reinterpret_cast<const char*>(data.data()), data.size() * 4);

  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot open for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  require(out.good(), ErrorKind::Io, "write failed: " + path);
}

std::vector<float> read_blob_f32(const std::string& path, std::uint32_t* dim0,
                                 std::uint32_t* dim1) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open blob: " + path);
  char header[16];
  in.read(header, 16);
  require(in.gcount() == 16, ErrorKind::Corruption, "blob truncated header: " + path);
  require(std::memcmp(header, kBlobMagic, 4) == 0, ErrorKind::Corruption,
          "bad blob magic: " + path);
  require(header[4] == 1 && header[5] == 1, ErrorKind::Corruption,
          "unsupported blob version/dtype: " + path);
  std::uint16_t rank;
  std::uint32_t d0, d1;
  std::memcpy(&rank, header + 6, 2);
  std::memcpy(&d0, header + 8, 4);
  std::memcpy(&d1, header + 12, 4);
  require(rank == 1 || rank == 2, ErrorKind::Corruption, "bad blob rank: " + path);

  std::vector<float> data(static_cast<std::size_t>(d0) * d1);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * 4));
  require(static_cast<std::size_t>(in.gcount()) == data.size() * 4, ErrorKind::Corruption,
          "blob truncated payload: " + path);
  char extra;
  in.read(&extra, 1);
  require(in.eof(), ErrorKind::Corruption, "blob has trailing bytes: " + path);
  if (dim0) *dim0 = d0;
  if (dim1) *dim1 = d1;
  return data;
}

std::uint32_t crc32_bytes(const void* data, std::size_t size) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(size)));
}

std::uint32_t crc32_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open for checksum: " + path);
  uLong crc = ::crc32(0L, Z_NULL, 0);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(buf), static_cast<uInt>(in.gcount()));
  }
  return static_cast<std::uint32_t>(crc);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot open for writing: " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  require(out.good(), ErrorKind::Io, "write failed: " + path);
}

void write_checkpoint(const std::string& path, const nlohmann::json& header,
                      const std::vector<float>& params) {
  const std::string header_text = header.dump();
  std::string buf;
  buf.append(kCkptMagic, 4);
  put_u32(buf, 1);
  const std::uint64_t len = header_text.size();
  buf.append(reinterpret_cast<const char*>(&len), 8);
  buf.append(header_text);
  buf.append(reinterpret_cast<const char*>(params.data()), params.size() * 4);
  write_text_file(path, buf);
}

std::vector<float> read_checkpoint(const std::string& path, nlohmann::json& header) {
  const std::string buf = read_text_file(path);
  require(buf.size() >= 16 && std::memcmp(buf.data(), kCkptMagic, 4) == 0,
          ErrorKind::Corruption, "bad checkpoint magic: " + path);
  std::uint32_t version;
  std::memcpy(&version, buf.data() + 4, 4);
  require(version == 1, ErrorKind::Corruption, "unsupported checkpoint version: " + path);
  std::uint64_t len;
  std::memcpy(&len, buf.data() + 8, 8);
  require(buf.size() >= 16 + len, ErrorKind::Corruption, "checkpoint truncated: " + path);
  header = nlohmann::json::parse(buf.substr(16, len), nullptr, false);
  require(!header.is_discarded(), ErrorKind::Corruption, "checkpoint header not JSON: " + path);
  const std::size_t payload = buf.size() - 16 - len;
  require(payload % 4 == 0, ErrorKind::Corruption, "checkpoint payload misaligned: " + path);
  std::vector<float> params(payload / 4);
  std::memcpy(params.data(), buf.data() + 16 + len, payload);
  return params;
}

}  // namespace dexaff::io
