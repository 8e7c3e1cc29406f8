#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pcl {

// Binary frame-tensor container. Little-endian, row-major:
//   magic "VTEN" | u32 version | u8 dtype | u8 ndims | i32 dims[] | payload
// dtype: 0 = u8, 1 = f32, 2 = f64.
enum class Dtype : std::uint8_t { u8 = 0, f32 = 1, f64 = 2 };

struct RawTensor {
  Dtype dtype = Dtype::u8;
  std::vector<int> dims;
  std::vector<std::uint8_t> bytes;  // payload, element size per dtype

  std::size_t numel() const;
};

void write_raw_tensor(const std::filesystem::path& path, const RawTensor& t);
RawTensor read_raw_tensor(const std::filesystem::path& path);

// One dataset record. `path` is relative to the manifest directory.
struct VideoRecord {
  std::string video_id;
  std::string path;
  std::optional<int> label;
  std::string split;  // train / val / test
};

// Manifest: tab-separated lines "video_id<TAB>path<TAB>label<TAB>split",
// label "-" when absent.
void write_manifest(const std::filesystem::path& path, const std::vector<VideoRecord>& records);
std::vector<VideoRecord> read_manifest(const std::filesystem::path& path);

}  // namespace pcl
