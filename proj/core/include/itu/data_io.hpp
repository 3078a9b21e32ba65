#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "itu/tensor.hpp"

namespace itu {

// A loaded image set with pixels mapped into [-1, 1].
struct ImageDataset {
    std::size_t count = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels;  // count * height * width, row-major
    std::string source_path;
    std::string subset_descriptor;  // empty for the full set

    std::size_t image_size() const { return height * width; }
    const double* image(std::size_t i) const { return &pixels[i * image_size()]; }
    Tensor image_tensor(std::size_t i) const;            // [h, w]
    Tensor batch_tensor(const std::vector<std::size_t>& idx) const;  // [n,1,h,w]
};

// Byte <-> [-1,1] pixel mapping (round-trips exactly for all 256 bytes).
double byte_to_pixel(std::uint8_t b);
std::uint8_t pixel_to_byte(double v);

// IDX unsigned-byte 3-D files (magic 0x00000803), big-endian dims; gzipped
// files are accepted transparently.
ImageDataset load_idx(const std::string& path);
void write_idx(const ImageDataset& ds, const std::string& path);

// Seeded uniform subset without replacement.
ImageDataset subset(const ImageDataset& ds, std::size_t n, std::uint64_t seed);

// 8-bit binary PGM (P5). Batch shapes [n,h,w] or [n,1,h,w]; tiles row-major,
// missing tiles of the last row rendered black.
void write_montage(const Tensor& batch, std::size_t grid_cols, const std::string& path);
void write_pgm(const std::vector<std::uint8_t>& gray, std::size_t h, std::size_t w,
               const std::string& path);
std::vector<std::uint8_t> read_pgm(const std::string& path, std::size_t& h, std::size_t& w);

// Plain-text key=value run manifest with output file hashes. Creates the
// directory if needed. Keys are written in sorted order; the timestamp lives
// on its own line so otherwise-identical runs diff cleanly.
void run_manifest(const std::map<std::string, std::string>& config_echo,
                  const std::vector<std::string>& output_files, const std::string& path);

void ensure_parent_dir(const std::string& path);

}  // namespace itu
