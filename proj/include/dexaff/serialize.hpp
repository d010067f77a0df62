#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace dexaff::io {

// Binary f32 array container, little-endian, 16-byte header:
//   bytes 0-3   magic "DXAB"
//   byte  4     container version (1)
//   byte  5     dtype (1 = f32)
//   bytes 6-7   rank, u16 LE (1 or 2)
//   bytes 8-11  dim0, u32 LE
//   bytes 12-15 dim1, u32 LE (1 when rank == 1)
// followed by dim0*dim1 f32 values.
void write_blob_f32(const std::string& path, const std::vector<float>& data,
                    std::uint32_t dim0, std::uint32_t dim1 = 0);
std::vector<float> read_blob_f32(const std::string& path, std::uint32_t* dim0 = nullptr,
                                 std::uint32_t* dim1 = nullptr);

std::uint32_t crc32_bytes(const void* data, std::size_t size);
std::uint32_t crc32_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Model checkpoint: magic "DXAC", u32 version, u64 header length, JSON header
// (shapes, seed, schedule, vocabulary), then the f32 parameter blob.
void write_checkpoint(const std::string& path, const nlohmann::json& header,
                      const std::vector<float>& params);
std::vector<float> read_checkpoint(const std::string& path, nlohmann::json& header);

}  // namespace dexaff::io
