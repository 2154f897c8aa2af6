#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "fbe/volume.hpp"

namespace fbe {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class NiftiType : std::int16_t { uint8 = 2, int16 = 4, float32 = 16 };

/// The subset of NIfTI-1 header fields this library reads and writes.
struct NiftiHeader {
  Index3 dims{1, 1, 1};
  NiftiType datatype = NiftiType::float32;
  Spacing3 pixdim{1.0, 1.0, 1.0};
  float scl_slope = 1.0f;
  float scl_inter = 0.0f;
  float vox_offset = 352.0f;
};

inline constexpr std::size_t kNiftiHeaderSize = 348;
inline constexpr std::size_t kNiftiVoxOffset = 352;

/// Parses a header from raw bytes (at least 348). Throws FormatError / UnsupportedError.
NiftiHeader parse_nifti_header(const std::string& bytes);

/// Reads a single-file NIfTI-1 volume, gzip-compressed or not.
///
/// NIfTI dim[1] (the fastest file axis) becomes Volume axis 0, so that
/// vol.at(x, y, z) is the file voxel at (x, y, z).
Volume read_nifti(const std::filesystem::path& path, VolumeKind kind = VolumeKind::intensity);

/// Writes an uncompressed single-file NIfTI-1 volume with scl_slope = 1, scl_inter = 0.
/// Throws std::invalid_argument when values are not representable in `datatype`.
void write_nifti(const Volume& vol, const std::filesystem::path& path, NiftiType datatype);

/// uint8 for masks and labels, float32 otherwise.
NiftiType default_nifti_type(VolumeKind kind);

}  // namespace fbe
