#include "itu/data_io.hpp"

#include <zlib.h>

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "itu/hash.hpp"
#include "itu/rng.hpp"

namespace itu {

namespace fs = std::filesystem;

std::string hex64(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return s;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for hashing: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    }
    return h;
}

double byte_to_pixel(std::uint8_t b) { return 2.0 * (static_cast<double>(b) / 255.0) - 1.0; }

std::uint8_t pixel_to_byte(double v) {
    const double p = std::round(255.0 * (v + 1.0) / 2.0);
    return static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, p)));
}

Tensor ImageDataset::image_tensor(std::size_t i) const {
    return Tensor::from({height, width},
                        std::vector<double>(image(i), image(i) + image_size()));
}

Tensor ImageDataset::batch_tensor(const std::vector<std::size_t>& idx) const {
    std::vector<double> data;
    data.reserve(idx.size() * image_size());
    for (std::size_t i : idx) {
        if (i >= count)
            throw std::out_of_range("batch_tensor: index " + std::to_string(i) +
                                    " out of " + std::to_string(count));
        data.insert(data.end(), image(i), image(i) + image_size());
    }
    return Tensor::from({idx.size(), 1, height, width}, std::move(data));
}

namespace {

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in) {
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
        throw std::runtime_error("gunzip: inflateInit failed");
    std::vector<std::uint8_t> out;
    out.reserve(in.size() * 4);
    std::uint8_t buf[1 << 16];
    zs.next_in = const_cast<std::uint8_t*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    do {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw std::runtime_error("gunzip: corrupt stream");
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

std::uint32_t read_be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    const std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24),
                               static_cast<std::uint8_t>(v >> 16),
                               static_cast<std::uint8_t>(v >> 8),
                               static_cast<std::uint8_t>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

ImageDataset load_idx(const std::string& path) {
    std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) bytes = gunzip(bytes);
    if (bytes.size() < 16)
        throw std::runtime_error("IDX " + path + ": truncated header (" +
                                 std::to_string(bytes.size()) + " bytes)");
    const std::uint32_t magic = read_be32(&bytes[0]);
    if (magic != 0x00000803)
        throw std::runtime_error("IDX " + path + ": bad magic at offset 0 (got 0x" +
                                 hex64(magic).substr(8) + ", want 0x00000803)");
    ImageDataset ds;
    ds.count = read_be32(&bytes[4]);
    ds.height = read_be32(&bytes[8]);
    ds.width = read_be32(&bytes[12]);
    ds.source_path = path;
    if (ds.height == 0 || ds.width == 0)
        throw std::runtime_error("IDX " + path + ": zero image dimension");
    const std::size_t need = 16 + ds.count * ds.image_size();
    if (bytes.size() < need)
        throw std::runtime_error("IDX " + path + ": truncated at offset " +
                                 std::to_string(bytes.size()) + ", expected " +
                                 std::to_string(need) + " bytes");
    ds.pixels.resize(ds.count * ds.image_size());
    for (std::size_t i = 0; i < ds.pixels.size(); ++i)
        ds.pixels[i] = byte_to_pixel(bytes[16 + i]);
    return ds;
}

void write_idx(const ImageDataset& ds, const std::string& path) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write: " + path);
    write_be32(out, 0x00000803);
    write_be32(out, static_cast<std::uint32_t>(ds.count));
    write_be32(out, static_cast<std::uint32_t>(ds.height));
    write_be32(out, static_cast<std::uint32_t>(ds.width));
    std::vector<std::uint8_t> bytes(ds.pixels.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = pixel_to_byte(ds.pixels[i]);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

ImageDataset subset(const ImageDataset& ds, std::size_t n, std::uint64_t seed) {
    if (n > ds.count)
        throw std::invalid_argument("subset: n=" + std::to_string(n) + " exceeds count=" +
                                    std::to_string(ds.count));
    std::vector<std::size_t> idx(ds.count);
    for (std::size_t i = 0; i < ds.count; ++i) idx[i] = i;
    Rng rng(seed);
    // Partial Fisher-Yates: the first n entries are the sample.
    for (std::size_t i = 0; i < n && ds.count > 0; ++i)
        std::swap(idx[i], idx[i + rng.below(ds.count - i)]);
    ImageDataset out;
    out.count = n;
    out.height = ds.height;
    out.width = ds.width;
    out.source_path = ds.source_path;
    out.subset_descriptor = "n=" + std::to_string(n) + ",seed=" + std::to_string(seed);
    out.pixels.reserve(n * ds.image_size());
    for (std::size_t i = 0; i < n; ++i)
        out.pixels.insert(out.pixels.end(), ds.image(idx[i]),
                          ds.image(idx[i]) + ds.image_size());
    return out;
}

void write_pgm(const std::vector<std::uint8_t>& gray, std::size_t h, std::size_t w,
               const std::string& path) {
    if (gray.size() != h * w) throw std::invalid_argument("write_pgm: size mismatch");
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << "P5\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(gray.data()),
              static_cast<std::streamsize>(gray.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::uint8_t> read_pgm(const std::string& path, std::size_t& h, std::size_t& w) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string magic;
    std::size_t maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P5" || maxval != 255)
        throw std::runtime_error("read_pgm " + path + ": not an 8-bit P5 file");
    in.get();  // single whitespace after header
    std::vector<std::uint8_t> gray(h * w);
    in.read(reinterpret_cast<char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
    if (!in) throw std::runtime_error("read_pgm " + path + ": truncated");
    return gray;
}

void write_montage(const Tensor& batch, std::size_t grid_cols, const std::string& path) {
    const Shape& s = batch.shape();
    std::size_t n, h, w;
    if (s.size() == 3) {
        n = s[0];
        h = s[1];
        w = s[2];
    } else if (s.size() == 4 && s[1] == 1) {
        n = s[0];
        h = s[2];
        w = s[3];
    } else {
        throw std::invalid_argument("write_montage: expected [n,h,w] or [n,1,h,w], got " +
                                    shape_str(s));
    }
    if (n == 0) throw std::invalid_argument("write_montage: empty batch");
    if (grid_cols == 0) grid_cols = 1;
    const std::size_t rows = (n + grid_cols - 1) / grid_cols;
    std::vector<std::uint8_t> canvas(rows * h * grid_cols * w, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t tr = i / grid_cols, tc = i % grid_cols;
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                canvas[(tr * h + y) * grid_cols * w + tc * w + x] =
                    pixel_to_byte(batch.data()[(i * h + y) * w + x]);
    }
    write_pgm(canvas, rows * h, grid_cols * w, path);
}

void ensure_parent_dir(const std::string& path) {
    const fs::path p(path);
    if (p.has_parent_path() && !p.parent_path().empty())
        fs::create_directories(p.parent_path());
}

void run_manifest(const std::map<std::string, std::string>& config_echo,
                  const std::vector<std::string>& output_files, const std::string& path) {
    ensure_parent_dir(path);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    out << "timestamp_unix_ms="
        << std::chrono::duration_cast<std::chrono::milliseconds>(now).count() << "\n";
    for (const auto& [k, v] : config_echo) out << k << "=" << v << "\n";
    for (const auto& f : output_files) {
        if (fs::exists(f))
            out << "hash." << fs::path(f).filename().string() << "=" << hex64(fnv1a64_file(f))
                << "\n";
        else
            out << "missing." << fs::path(f).filename().string() << "=1\n";
    }
}

}  // namespace itu
