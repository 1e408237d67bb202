/**
 * @file io.hpp
 * @brief On-disk formats: PNG images, label masks, partitions, SPXT
 * tensors, and SHA-256 content hashes. See docs/formats.md.
 */

#ifndef SUPIX_IO_HPP
#define SUPIX_IO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "supix/core.hpp"
#include "supix/slic.hpp"

namespace supix::io {

namespace fs = std::filesystem;

/// Reads any 8/16-bit PNG as 8-bit RGB (alpha dropped, gray expanded).
ImageRGB read_rgb_png(const fs::path& path);
void write_rgb_png(const fs::path& path, const ImageRGB& image);

/// Label masks: 8-bit single-channel PNG, value = class index, 255 = IGNORE.
/// K is kept in a "supix:num_classes" tEXt chunk; masks without it get
/// K = max label + 1. Paletted PNGs are read by palette index.
LabelMask read_mask_png(const fs::path& path);
void write_mask_png(const fs::path& path, const LabelMask& mask);

/// Partitions: 16-bit single-channel PNG of ids plus "<path>.txt" sidecar.
struct PartitionFile {
    SuperpixelPartition partition;
    std::optional<slic::SlicParams> params;
};

fs::path partition_sidecar_path(const fs::path& png_path);
PartitionFile read_partition(const fs::path& png_path);
void write_partition(const fs::path& png_path, const SuperpixelPartition& partition,
                     const std::optional<slic::SlicParams>& params = std::nullopt);

/// SPXT: "SPXT", version byte, u32 rank, rank x u32 dims, f32 values;
/// all integers and floats little-endian, values row-major.
inline constexpr std::uint8_t kSpxtVersion = 1;

struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> values;

    std::size_t element_count() const;
    friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor);
Tensor decode_tensor(const std::vector<std::uint8_t>& bytes, const std::string& source = "<memory>");
Tensor read_tensor(const fs::path& path);
void write_tensor(const fs::path& path, const Tensor& tensor);

FeatureMapStack to_feature_stack(const Tensor& t, int depth_id);
ClassifierWeights to_classifier_weights(const Tensor& t);
ScoreMap to_score_map(const Tensor& t);
ProbabilityMap to_probability_map(const Tensor& t);

Tensor from_feature_stack(const FeatureMapStack& f);
Tensor from_classifier_weights(const ClassifierWeights& w);
Tensor from_score_map(const ScoreMap& s);
Tensor from_probability_map(const ProbabilityMap& p);

std::vector<std::uint8_t> read_bytes(const fs::path& path);
void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const fs::path& path, const std::string& text);

/// Lower-case hex SHA-256.
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_file(const fs::path& path);

/// RGB copy of `image` with superpixel boundaries painted red.
ImageRGB boundary_overlay(const ImageRGB& image, const SuperpixelPartition& partition);

}  // namespace supix::io

#endif  // SUPIX_IO_HPP
