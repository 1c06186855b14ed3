#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "occdepth/geometry.hpp"
#include "occdepth/grid.hpp"
#include "occdepth/synth.hpp"

namespace occdepth::io {

/// Writes via a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

/// Little-endian PFM with scale -1.0: "Pf" for one channel, "PF" for three.
/// Rows are stored bottom-to-top as the format requires.
std::string encode_pfm(const Grid& grid);
Grid decode_pfm(const std::string& bytes);
void write_pfm(const std::filesystem::path& path, const Grid& grid);
Grid read_pfm(const std::filesystem::path& path);

/// 8-bit PNG; values in [0, 1] map to round(255 v). Grids with 1 or 3
/// channels become grayscale or RGB.
void write_png(const std::filesystem::path& path, const Grid& image);
/// Raw 8-bit values (no scaling), e.g. class-index maps. Values are rounded
/// and clamped to [0, 255].
void write_png_u8(const std::filesystem::path& path, const Grid& values);
/// Reads any PNG libpng can expand to 8-bit gray or RGB, scaled to [0, 1].
/// Alpha is dropped.
Image read_png(const std::filesystem::path& path);

void write_mask_png(const std::filesystem::path& path, const Mask& mask);

CameraIntrinsics intrinsics_from_json(const nlohmann::json& j);
nlohmann::json intrinsics_to_json(const CameraIntrinsics& intrinsics);
/// 4x4 row-major matrix, either nested rows or a flat list of 16 numbers.
PoseSE3 pose_from_json(const nlohmann::json& j);
nlohmann::json pose_to_json(const PoseSE3& pose);
/// {"kind": "plane"|"tube", "params": {...}, "texture_seed": n}
Scene scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const Scene& scene);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace occdepth::io
