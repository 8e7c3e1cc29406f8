#include "pcl/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pcl {

namespace {

constexpr char kMagic[4] = {'V', 'T', 'E', 'N'};
constexpr std::uint32_t kVersion = 1;

std::size_t elem_size(Dtype d) {
  switch (d) {
    case Dtype::u8: return 1;
    case Dtype::f32: return 4;
    case Dtype::f64: return 8;
  }
  throw std::invalid_argument("bad dtype");
}

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

std::size_t RawTensor::numel() const {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

void write_raw_tensor(const std::filesystem::path& path, const RawTensor& t) {
  if (t.bytes.size() != t.numel() * elem_size(t.dtype))
    throw std::invalid_argument("write_raw_tensor: payload size mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path.string());
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(t.dtype));
  put<std::uint8_t>(os, static_cast<std::uint8_t>(t.dims.size()));
  for (int d : t.dims) put<std::int32_t>(os, d);
  os.write(reinterpret_cast<const char*>(t.bytes.data()),
           static_cast<std::streamsize>(t.bytes.size()));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

RawTensor read_raw_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("bad tensor container magic: " + path.string());
  auto version = get<std::uint32_t>(is);
  if (version != kVersion)
    throw std::runtime_error("unsupported container version " + std::to_string(version));
  RawTensor t;
  t.dtype = static_cast<Dtype>(get<std::uint8_t>(is));
  int nd = get<std::uint8_t>(is);
  t.dims.resize(nd);
  for (int i = 0; i < nd; ++i) {
    t.dims[i] = get<std::int32_t>(is);
    if (t.dims[i] <= 0) throw std::runtime_error("bad dim in " + path.string());
  }
  t.bytes.resize(t.numel() * elem_size(t.dtype));
  is.read(reinterpret_cast<char*>(t.bytes.data()),
          static_cast<std::streamsize>(t.bytes.size()));
  if (!is) throw std::runtime_error("truncated tensor container: " + path.string());
  return t;
}

void write_manifest(const std::filesystem::path& path, const std::vector<VideoRecord>& records) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path.string());
  for (const auto& r : records) {
    os << r.video_id << '\t' << r.path << '\t'
       << (r.label ? std::to_string(*r.label) : std::string("-")) << '\t' << r.split << '\n';
  }
}

std::vector<VideoRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest: " + path.string());
  std::vector<VideoRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    VideoRecord r;
    std::string label;
    if (!std::getline(ss, r.video_id, '\t') || !std::getline(ss, r.path, '\t') ||
        !std::getline(ss, label, '\t') || !std::getline(ss, r.split))
      throw std::runtime_error("malformed manifest line " + std::to_string(lineno));
    if (label != "-") r.label = std::stoi(label);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace pcl
