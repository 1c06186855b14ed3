#include "occdepth/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include "occdepth/errors.hpp"

namespace occdepth::io {
namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string());
  }
  fs::path temp = path;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + temp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + temp.string());
  }
  std::error_code ec;
  fs::rename(temp, path, ec);
  if (ec) {
    fs::remove(temp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// ---- PFM ------------------------------------------------------------------

namespace {

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return __builtin_bswap32(v);
}

}  // namespace

std::string encode_pfm(const Grid& grid) {
  if (grid.channels() != 1 && grid.channels() != 3) {
    throw ShapeError("PFM supports 1 or 3 channels, got " + grid.shape_string());
  }
  std::string out = grid.channels() == 1 ? "Pf\n" : "PF\n";
  out += std::to_string(grid.width()) + " " + std::to_string(grid.height()) + "\n-1.0\n";
  const std::size_t header = out.size();
  out.resize(header + grid.size() * sizeof(float));
  char* cursor = out.data() + header;
  for (int y = grid.height() - 1; y >= 0; --y) {
    for (int x = 0; x < grid.width(); ++x) {
      for (int c = 0; c < grid.channels(); ++c) {
        const auto bits = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(grid(y, x, c))));
        std::memcpy(cursor, &bits, sizeof(bits));
        cursor += sizeof(bits);
      }
    }
  }
  return out;
}

Grid decode_pfm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  int width = 0;
  int height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (!in || (magic != "Pf" && magic != "PF") || width <= 0 || height <= 0 || scale == 0.0) {
    throw IoError("malformed PFM header");
  }
  in.get();  // single whitespace byte before the raster
  const int channels = magic == "Pf" ? 1 : 3;
  const auto offset = static_cast<std::size_t>(in.tellg());
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() < offset + count * sizeof(float)) throw IoError("truncated PFM raster");
  const bool big_endian = scale > 0.0;

  Grid grid(height, width, channels);
  const char* cursor = bytes.data() + offset;
  for (int y = height - 1; y >= 0; --y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        std::uint32_t bits = 0;
        std::memcpy(&bits, cursor, sizeof(bits));
        cursor += sizeof(bits);
        const bool swap = big_endian == (std::endian::native == std::endian::little);
        if (swap) bits = __builtin_bswap32(bits);
        grid(y, x, c) = static_cast<double>(std::bit_cast<float>(bits));
      }
    }
  }
  return grid;
}

void write_pfm(const fs::path& path, const Grid& grid) { write_file_atomic(path, encode_pfm(grid)); }

Grid read_pfm(const fs::path& path) {
  try {
    return decode_pfm(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

// ---- PNG ------------------------------------------------------------------

namespace {

void png_append(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), length);
}

void png_error_handler(png_structp, png_const_charp message) { throw IoError(message); }
void png_warning_handler(png_structp, png_const_charp) {}

std::string encode_png_bytes(int width, int height, int channels,
                             const std::vector<std::uint8_t>& pixels) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_handler, png_warning_handler);
  if (png == nullptr) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::string out;
  try {
    if (info == nullptr) throw IoError("png_create_info_struct failed");
    png_set_write_fn(png, &out, png_append, nullptr);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 8, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    for (int y = 0; y < height; ++y) {
      png_write_row(png, const_cast<png_bytep>(pixels.data() + y * stride));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

std::uint8_t to_byte(double v) {
  if (!std::isfinite(v)) return 0;
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void write_png_bytes(const fs::path& path, const Grid& grid, double multiplier) {
  if (grid.channels() != 1 && grid.channels() != 3) {
    throw ShapeError("PNG export supports 1 or 3 channels, got " + grid.shape_string());
  }
  std::vector<std::uint8_t> pixels(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) pixels[i] = to_byte(grid[i] * multiplier);
  write_file_atomic(path, encode_png_bytes(grid.width(), grid.height(), grid.channels(), pixels));
}

}  // namespace

void write_png(const fs::path& path, const Grid& image) { write_png_bytes(path, image, 255.0); }

void write_png_u8(const fs::path& path, const Grid& values) { write_png_bytes(path, values, 1.0); }

void write_mask_png(const fs::path& path, const Mask& mask) {
  Grid values(mask.height(), mask.width(), 1);
  for (std::size_t i = 0; i < mask.size(); ++i) values[i] = mask[i] ? 255.0 : 0.0;
  write_png_u8(path, values);
}

Image read_png(const fs::path& path) {
  std::FILE* file = std::fopen(path.string().c_str(), "rb");
  if (file == nullptr) throw IoError("cannot open " + path.string());
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> guard(file, &std::fclose);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                           png_warning_handler);
  if (png == nullptr) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  try {
    if (info == nullptr) throw IoError("png_create_info_struct failed");
    png_init_io(png, file);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) throw IoError("unsupported PNG channel count");
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height * channels);
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
      rows[static_cast<std::size_t>(y)] = pixels.data() + static_cast<std::size_t>(y) * width * channels;
    }
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    Image image(height, width, channels);
    for (std::size_t i = 0; i < pixels.size(); ++i) image[i] = pixels[i] / 255.0;
    return image;
  } catch (const IoError& e) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path.string() + ": " + e.what());
  }
}

// ---- JSON -----------------------------------------------------------------

namespace {

Eigen::Vector3d vec3(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw DomainError(std::string(what) + " must be a 3-element array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json to_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

}  // namespace

CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  CameraIntrinsics k;
  try {
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("intrinsics: ") + e.what());
  }
  k.validate();
  return k;
}

nlohmann::json intrinsics_to_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx},
          {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

PoseSE3 pose_from_json(const nlohmann::json& j) {
  Eigen::Matrix4d m;
  try {
    if (j.is_array() && j.size() == 4 && j[0].is_array()) {
      for (int r = 0; r < 4; ++r) {
        if (j[r].size() != 4) throw DomainError("pose: each row needs 4 entries");
        for (int c = 0; c < 4; ++c) m(r, c) = j[r][c].get<double>();
      }
    } else if (j.is_array() && j.size() == 16) {
      for (int i = 0; i < 16; ++i) m(i / 4, i % 4) = j[i].get<double>();
    } else {
      throw DomainError("pose: expected a 4x4 row-major matrix");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("pose: ") + e.what());
  }
  return PoseSE3::from_matrix(m);
}

nlohmann::json pose_to_json(const PoseSE3& pose) {
  const Eigen::Matrix4d m = pose.matrix();
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2), m(r, 3)});
  return rows;
}

Scene scene_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    const auto seed = j.value("texture_seed", std::uint64_t{0});
    const double period = j.value("texture_period_mm", 32.0);
    const double contrast = j.value("weak_texture", false) ? Texture::kWeakContrast : 1.0;
    const Texture texture = Texture::seeded(seed, period, contrast);
    if (kind == "plane") {
      const Eigen::Vector3d normal =
          params.contains("normal") ? vec3(params["normal"], "plane normal") : Eigen::Vector3d::UnitZ();
      return Scene::plane(normal, params.value("offset", 50.0), texture);
    }
    if (kind == "tube") {
      const Eigen::Vector3d point = params.contains("axis_point")
                                        ? vec3(params["axis_point"], "tube axis_point")
                                        : Eigen::Vector3d::Zero();
      const Eigen::Vector3d axis = params.contains("axis_direction")
                                       ? vec3(params["axis_direction"], "tube axis_direction")
                                       : Eigen::Vector3d::UnitZ();
      return Scene::tube(point, axis, params.value("radius", 20.0), texture);
    }
    throw DomainError("scene: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("scene: ") + e.what());
  }
}

nlohmann::json scene_to_json(const Scene& scene) {
  nlohmann::json j;
  if (scene.kind == SceneKind::plane) {
    j["kind"] = "plane";
    j["params"] = {{"normal", to_json(scene.plane_normal)}, {"offset", scene.plane_offset}};
  } else {
    j["kind"] = "tube";
    j["params"] = {{"axis_point", to_json(scene.tube_point)},
                   {"axis_direction", to_json(scene.tube_axis)},
                   {"radius", scene.tube_radius}};
  }
  j["texture_seed"] = scene.texture.seed;
  j["texture_period_mm"] = scene.texture.base_period_mm;
  j["weak_texture"] = scene.texture.contrast < 1.0;
  return j;
}

nlohmann::json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace occdepth::io
