#include "fbe/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace fbe {

static_assert(std::endian::native == std::endian::little,
              "NIfTI I/O assumes a little-endian host");

namespace {

// Byte offsets inside the 348-byte NIfTI-1 header.
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffMagic = 344;

template <typename T>
T load(const std::string& buf, std::size_t off) {
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  return v;
}

template <typename T>
void store(std::string& buf, std::size_t off, T v) {
  std::memcpy(buf.data() + off, &v, sizeof(T));
}

std::size_t bytes_per_voxel(NiftiType t) {
  switch (t) {
    case NiftiType::uint8: return 1;
    case NiftiType::int16: return 2;
    case NiftiType::float32: return 4;
  }
  return 0;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.size() >= 2 && static_cast<unsigned char>(raw[0]) == 0x1f &&
      static_cast<unsigned char>(raw[1]) == 0x8b) {
    gzFile gz = gzopen(path.string().c_str(), "rb");
    if (!gz) throw IoError("cannot open gzip stream " + path.string());
    std::string out;
    char chunk[1 << 16];
    int n;
    while ((n = gzread(gz, chunk, sizeof(chunk))) > 0) out.append(chunk, static_cast<std::size_t>(n));
    int err = 0;
    const char* msg = gzerror(gz, &err);
    gzclose(gz);
    if (n < 0 || (err != Z_OK && err != Z_STREAM_END))
      throw IoError("gzip decode failed for " + path.string() + ": " + msg);
    return out;
  }
  return raw;
}

}  // namespace

NiftiType default_nifti_type(VolumeKind kind) {
  return (kind == VolumeKind::mask || kind == VolumeKind::label) ? NiftiType::uint8
                                                                  : NiftiType::float32;
}

NiftiHeader parse_nifti_header(const std::string& bytes) {
  if (bytes.size() < kNiftiHeaderSize) throw IoError("truncated NIfTI header");
  if (std::memcmp(bytes.data() + kOffMagic, "n+1\0", 4) != 0)
    throw FormatError("bad NIfTI magic (expected single-file \"n+1\")");
  const auto sizeof_hdr = load<std::int32_t>(bytes, kOffSizeofHdr);
  if (sizeof_hdr != 348) {
    if (__builtin_bswap32(static_cast<std::uint32_t>(sizeof_hdr)) == 348u)
      throw UnsupportedError("big-endian NIfTI is not supported");
    throw FormatError("sizeof_hdr is not 348");
  }

  NiftiHeader h;
  const auto ndim = load<std::int16_t>(bytes, kOffDim);
  if (ndim < 1 || ndim > 7) throw FormatError("dim[0] out of range");
  for (int d = 4; d <= ndim; ++d)
    if (load<std::int16_t>(bytes, kOffDim + 2 * d) > 1)
      throw UnsupportedError("only 3D NIfTI volumes are supported");
  for (int a = 0; a < 3; ++a) {
    std::int16_t n = a < ndim ? load<std::int16_t>(bytes, kOffDim + 2 * (a + 1)) : 1;
    if (n <= 0) throw FormatError("non-positive NIfTI dimension");
    h.dims[a] = n;
    float pd = a < ndim ? std::fabs(load<float>(bytes, kOffPixdim + 4 * (a + 1))) : 1.0f;
    h.pixdim[a] = (pd > 0.0f && std::isfinite(pd)) ? pd : 1.0;
  }

  const auto dt = load<std::int16_t>(bytes, kOffDatatype);
  switch (dt) {
    case 2: h.datatype = NiftiType::uint8; break;
    case 4: h.datatype = NiftiType::int16; break;
    case 16: h.datatype = NiftiType::float32; break;
    default: throw UnsupportedError("unsupported NIfTI datatype " + std::to_string(dt));
  }
  h.vox_offset = load<float>(bytes, kOffVoxOffset);
  if (!(h.vox_offset >= float(kNiftiVoxOffset))) throw FormatError("vox_offset below 352");
  h.scl_slope = load<float>(bytes, kOffSclSlope);
  h.scl_inter = load<float>(bytes, kOffSclInter);
  return h;
}

Volume read_nifti(const std::filesystem::path& path, VolumeKind kind) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  const std::string bytes = read_file_bytes(path);
  const NiftiHeader h = parse_nifti_header(bytes);

  const auto n = static_cast<std::size_t>(voxel_count(h.dims));
  const std::size_t bpv = bytes_per_voxel(h.datatype);
  const auto start = static_cast<std::size_t>(h.vox_offset);
  if (bytes.size() < start + n * bpv) throw IoError("truncated NIfTI payload in " + path.string());

  const bool scaled = h.scl_slope != 0.0f && std::isfinite(h.scl_slope) &&
                      !(h.scl_slope == 1.0f && h.scl_inter == 0.0f);
  auto decode = [&](std::size_t idx) -> float {
    const std::size_t off = start + idx * bpv;
    float v = 0.0f;
    switch (h.datatype) {
      case NiftiType::uint8: v = static_cast<unsigned char>(bytes[off]); break;
      case NiftiType::int16: v = load<std::int16_t>(bytes, off); break;
      case NiftiType::float32: v = load<float>(bytes, off); break;
    }
    return scaled ? v * h.scl_slope + h.scl_inter : v;
  };

  // File order has x fastest; ours has axis 0 slowest.
  const Index3 d{h.dims[0], h.dims[1], h.dims[2]};
  Volume vol(d, h.pixdim, kind);
  std::size_t idx = 0;
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x) vol.at(x, y, z) = decode(idx++);

  if (!vol.values_match_kind())
    throw FormatError(path.string() + " holds values invalid for a " + to_string(kind) + " volume");
  return vol;
}

void write_nifti(const Volume& vol, const std::filesystem::path& path, NiftiType datatype) {
  const Index3& d = vol.dims();
  for (auto n : d)
    if (n > std::numeric_limits<std::int16_t>::max())
      throw std::invalid_argument("dimension too large for NIfTI-1");

  if (vol.kind() == VolumeKind::mask && !vol.values_match_kind())
    throw std::invalid_argument("mask volume holds values other than 0 and 1");

  double lo = 0.0, hi = 0.0;
  bool integral = true;
  switch (datatype) {
    case NiftiType::uint8: lo = 0; hi = 255; break;
    case NiftiType::int16: lo = -32768; hi = 32767; break;
    case NiftiType::float32: integral = false; break;
  }
  if (integral) {
    for (float v : vol.data())
      if (!(v >= lo && v <= hi) || std::floor(v) != v)
        throw std::invalid_argument("value " + std::to_string(v) +
                                    " is not representable in the requested NIfTI datatype");
  }

  std::string hdr(kNiftiVoxOffset, '\0');
  store<std::int32_t>(hdr, kOffSizeofHdr, 348);
  const std::int16_t dim[8] = {3, static_cast<std::int16_t>(d[0]), static_cast<std::int16_t>(d[1]),
                               static_cast<std::int16_t>(d[2]), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) store<std::int16_t>(hdr, kOffDim + 2 * i, dim[i]);
  store<std::int16_t>(hdr, kOffDatatype, static_cast<std::int16_t>(datatype));
  store<std::int16_t>(hdr, kOffBitpix, static_cast<std::int16_t>(8 * bytes_per_voxel(datatype)));
  const float pixdim[8] = {1.0f, float(vol.spacing()[0]), float(vol.spacing()[1]),
                           float(vol.spacing()[2]), 0.0f, 0.0f, 0.0f, 0.0f};
  for (int i = 0; i < 8; ++i) store<float>(hdr, kOffPixdim + 4 * i, pixdim[i]);
  store<float>(hdr, kOffVoxOffset, float(kNiftiVoxOffset));
  store<float>(hdr, kOffSclSlope, 1.0f);
  store<float>(hdr, kOffSclInter, 0.0f);
  hdr[kOffXyztUnits] = 2;  // NIFTI_UNITS_MM
  std::memcpy(hdr.data() + kOffMagic, "n+1\0", 4);

  const std::size_t bpv = bytes_per_voxel(datatype);
  std::string payload(vol.size() * bpv, '\0');
  std::size_t idx = 0;
  for (std::int64_t z = 0; z < d[2]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[0]; ++x, ++idx) {
        const float v = vol.at(x, y, z);
        const std::size_t off = idx * bpv;
        switch (datatype) {
          case NiftiType::uint8: payload[off] = static_cast<char>(static_cast<unsigned char>(v)); break;
          case NiftiType::int16: store<std::int16_t>(payload, off, static_cast<std::int16_t>(v)); break;
          case NiftiType::float32: store<float>(payload, off, v); break;
        }
      }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace fbe
