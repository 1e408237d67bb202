#include "supix/io.hpp"

#include <png.h>
#include <openssl/evp.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

namespace supix::io {

namespace {

constexpr const char* kClassesKey = "supix:num_classes";

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_for_read(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorKind::Input, "no such file: " + path.string());
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw Error(ErrorKind::Input, "cannot open for reading: " + path.string());
    return f;
}

FilePtr open_for_write(const fs::path& path) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw Error(ErrorKind::Io, "cannot open for writing: " + path.string());
    return f;
}

void png_error_handler(png_structp png, png_const_charp msg) {
    auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
    if (buf) *buf = msg;
    png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

// Decoded PNG rows after transforms.
struct RawPng {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<std::uint8_t> data;  // row-major; 16-bit samples big-endian
    std::map<std::string, std::string> text;
};

enum class ReadMode { Rgb8, Index8, Gray16 };

// The png_* steps below each hold only plain pointers across setjmp.
bool read_header(png_structp png, png_infop info, std::FILE* file, int* color, int* depth) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_init_io(png, file);
    png_read_info(png, info);
    *color = png_get_color_type(png, info);
    *depth = png_get_bit_depth(png, info);
    return true;
}

bool apply_transforms(png_structp png, png_infop info, ReadMode mode) {
    if (setjmp(png_jmpbuf(png))) return false;
    if (mode == ReadMode::Rgb8) {
        png_set_expand(png);
        png_set_strip_16(png);
        png_set_strip_alpha(png);
        png_set_gray_to_rgb(png);
    } else if (mode == ReadMode::Index8) {
        png_set_packing(png);
    }
    png_read_update_info(png, info);
    return true;
}

bool read_body(png_structp png, png_infop info, png_bytep* rows) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_read_image(png, rows);
    png_read_end(png, info);
    return true;
}

struct ReadStructs {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~ReadStructs() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

RawPng read_png(const fs::path& path, ReadMode mode) {
    FilePtr file = open_for_read(path);
    std::string err;
    ReadStructs s;
    s.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler, png_warning_handler);
    if (!s.png) throw Error(ErrorKind::Internal, "libpng: cannot create read struct");
    s.info = png_create_info_struct(s.png);
    if (!s.info) throw Error(ErrorKind::Internal, "libpng: cannot create info struct");
    auto decode_error = [&] { return Error(ErrorKind::Input, "cannot decode PNG " + path.string() + ": " + err); };

    int color = 0, depth = 0;
    if (!read_header(s.png, s.info, file.get(), &color, &depth)) throw decode_error();
    if (mode == ReadMode::Index8) {
        if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_PALETTE) {
            throw Error(ErrorKind::Input, "label mask must be single-channel or paletted: " + path.string());
        }
        if (depth == 16) throw Error(ErrorKind::Input, "label mask must be 8-bit: " + path.string());
    } else if (mode == ReadMode::Gray16 && (color != PNG_COLOR_TYPE_GRAY || depth != 16)) {
        throw Error(ErrorKind::Input, "partition must be a 16-bit grayscale PNG: " + path.string());
    }
    if (!apply_transforms(s.png, s.info, mode)) throw decode_error();

    RawPng out;
    out.width = static_cast<int>(png_get_image_width(s.png, s.info));
    out.height = static_cast<int>(png_get_image_height(s.png, s.info));
    out.channels = png_get_channels(s.png, s.info);
    out.bit_depth = png_get_bit_depth(s.png, s.info);
    const std::size_t stride = png_get_rowbytes(s.png, s.info);
    out.data.resize(stride * out.height);
    std::vector<png_bytep> rows(out.height);
    for (int y = 0; y < out.height; ++y) rows[y] = out.data.data() + stride * y;
    if (!read_body(s.png, s.info, rows.data())) throw decode_error();

    png_textp text = nullptr;
    int num_text = 0;
    if (png_get_text(s.png, s.info, &text, &num_text) > 0) {
        for (int i = 0; i < num_text; ++i) out.text[text[i].key] = text[i].text ? text[i].text : "";
    }
    return out;
}

bool encode_png(png_structp png, png_infop info, std::FILE* file, int width, int height, int color_type,
                int bit_depth, png_bytep* rows, png_textp chunks, int num_chunks) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_init_io(png, file);
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    if (num_chunks > 0) png_set_text(png, info, chunks, num_chunks);
    png_write_info(png, info);
    png_write_image(png, rows);
    png_write_end(png, info);
    return true;
}

void write_png(const fs::path& path, int width, int height, int color_type, int bit_depth,
               const std::vector<std::uint8_t>& data, std::size_t stride,
               const std::vector<std::pair<std::string, std::string>>& text = {}) {
    FilePtr file = open_for_write(path);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(data.data() + stride * y);
    std::vector<png_text> chunks(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        std::memset(&chunks[i], 0, sizeof(png_text));
        chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
        chunks[i].key = const_cast<char*>(text[i].first.c_str());
        chunks[i].text = const_cast<char*>(text[i].second.c_str());
        chunks[i].text_length = text[i].second.size();
    }
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler,
                                              png_warning_handler);
    if (!png) throw Error(ErrorKind::Internal, "libpng: cannot create write struct");
    png_infop info = png_create_info_struct(png);
    const bool ok = info && encode_png(png, info, file.get(), width, height, color_type, bit_depth, rows.data(),
                                       chunks.data(), static_cast<int>(chunks.size()));
    png_destroy_write_struct(&png, &info);
    if (!ok) throw Error(ErrorKind::Io, "cannot encode PNG " + path.string() + ": " + err);
    if (std::fflush(file.get()) != 0) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.dims.size() != rank) {
        throw Error(ErrorKind::Invalid, std::string(what) + ": expected a rank-" + std::to_string(rank) +
                                            " tensor, got rank " + std::to_string(t.dims.size()));
    }
    for (auto d : t.dims) {
        if (d == 0 || d > 0x7fffffffu) throw Error(ErrorKind::Invalid, std::string(what) + ": bad dimension");
    }
}

int parse_int(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw Error(ErrorKind::Input, what + ": not an integer: '" + s + "'");
    return v;
}

double parse_double(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw Error(ErrorKind::Input, what + ": not a number: '" + s + "'");
    return v;
}

}  // namespace

ImageRGB read_rgb_png(const fs::path& path) {
    RawPng raw = read_png(path, ReadMode::Rgb8);
    if (raw.channels != 3 || raw.bit_depth != 8) {
        throw Error(ErrorKind::Input, "unsupported PNG layout: " + path.string());
    }
    return ImageRGB{raw.width, raw.height, std::move(raw.data)};
}

void write_rgb_png(const fs::path& path, const ImageRGB& image) {
    require_valid(image, "write_rgb_png");
    write_png(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 8, image.pixels,
              static_cast<std::size_t>(image.width) * 3);
}

LabelMask read_mask_png(const fs::path& path) {
    RawPng raw = read_png(path, ReadMode::Index8);
    LabelMask mask{raw.width, raw.height, 0, std::move(raw.data)};
    if (auto it = raw.text.find(kClassesKey); it != raw.text.end()) {
        mask.num_classes = parse_int(it->second, path.string() + " " + kClassesKey);
    } else {
        int max_label = -1;
        for (auto v : mask.labels) {
            if (v != kIgnoreLabel) max_label = std::max<int>(max_label, v);
        }
        mask.num_classes = std::max(max_label + 1, 1);
    }
    const Status s = validate(mask);
    if (!s) throw Error(ErrorKind::Input, "invalid label mask " + path.string() + ": " + s.error().to_string());
    return mask;
}

void write_mask_png(const fs::path& path, const LabelMask& mask) {
    require_valid(mask, "write_mask_png");
    write_png(path, mask.width, mask.height, PNG_COLOR_TYPE_GRAY, 8, mask.labels,
              static_cast<std::size_t>(mask.width), {{kClassesKey, std::to_string(mask.num_classes)}});
}

fs::path partition_sidecar_path(const fs::path& png_path) {
    fs::path p = png_path;
    p += ".txt";
    return p;
}

PartitionFile read_partition(const fs::path& png_path) {
    RawPng raw = read_png(png_path, ReadMode::Gray16);
    PartitionFile out;
    SuperpixelPartition& part = out.partition;
    part.width = raw.width;
    part.height = raw.height;
    part.assignments.resize(static_cast<std::size_t>(raw.width) * raw.height);
    for (std::size_t n = 0; n < part.assignments.size(); ++n) {
        part.assignments[n] = (std::int32_t(raw.data[2 * n]) << 8) | raw.data[2 * n + 1];
    }

    const fs::path sidecar = partition_sidecar_path(png_path);
    std::ifstream in(sidecar);
    if (!in) throw Error(ErrorKind::Input, "missing partition sidecar: " + sidecar.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::Input, "malformed sidecar line in " + sidecar.string());
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    const std::string where = sidecar.string();
    if (kv["format"] != "supix-partition") throw Error(ErrorKind::Input, where + ": not a supix partition sidecar");
    if (parse_int(kv["version"], where + " version") != 1) {
        throw Error(ErrorKind::Input, where + ": unsupported version");
    }
    if (parse_int(kv["width"], where + " width") != part.width ||
        parse_int(kv["height"], where + " height") != part.height) {
        throw Error(ErrorKind::Input, where + ": dimensions disagree with " + png_path.string());
    }
    part.num_superpixels = parse_int(kv["num_superpixels"], where + " num_superpixels");
    if (kv.count("cluster_size")) {
        slic::SlicParams p;
        p.cluster_size = parse_int(kv["cluster_size"], where + " cluster_size");
        p.compactness = parse_double(kv["compactness"], where + " compactness");
        p.max_iterations = parse_int(kv["max_iterations"], where + " max_iterations");
        p.min_region_fraction = parse_double(kv["min_region_fraction"], where + " min_region_fraction");
        out.params = p;
    }
    const Status s = validate(part);
    if (!s) throw Error(ErrorKind::Input, "invalid partition " + png_path.string() + ": " + s.error().to_string());
    return out;
}

void write_partition(const fs::path& png_path, const SuperpixelPartition& partition,
                     const std::optional<slic::SlicParams>& params) {
    require_valid(partition, "write_partition");
    if (partition.num_superpixels > 65535) {
        throw Error(ErrorKind::Invalid, "write_partition: more than 65535 superpixels");
    }
    std::vector<std::uint8_t> data(partition.size() * 2);
    for (std::size_t n = 0; n < partition.size(); ++n) {
        const auto v = static_cast<std::uint16_t>(partition.assignments[n]);
        data[2 * n] = static_cast<std::uint8_t>(v >> 8);
        data[2 * n + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
    write_png(png_path, partition.width, partition.height, PNG_COLOR_TYPE_GRAY, 16, data,
              static_cast<std::size_t>(partition.width) * 2);

    std::string header = "format=supix-partition\nversion=1\n";
    header += "width=" + std::to_string(partition.width) + "\n";
    header += "height=" + std::to_string(partition.height) + "\n";
    header += "num_superpixels=" + std::to_string(partition.num_superpixels) + "\n";
    if (params) {
        header += "cluster_size=" + std::to_string(params->cluster_size) + "\n";
        header += "compactness=" + format_double(params->compactness) + "\n";
        header += "max_iterations=" + std::to_string(params->max_iterations) + "\n";
        header += "min_region_fraction=" + format_double(params->min_region_fraction) + "\n";
    }
    write_text(partition_sidecar_path(png_path), header);
}

std::size_t Tensor::element_count() const {
    std::size_t n = dims.empty() ? 0 : 1;
    for (auto d : dims) n *= d;
    return n;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor) {
    if (tensor.values.size() != tensor.element_count()) {
        throw Error(ErrorKind::Invalid, "encode_tensor: value count does not match dims");
    }
    std::vector<std::uint8_t> out = {'S', 'P', 'X', 'T', kSpxtVersion};
    out.reserve(9 + 4 * tensor.dims.size() + 4 * tensor.values.size());
    put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
    for (auto d : tensor.dims) put_u32(out, d);
    for (float v : tensor.values) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        put_u32(out, bits);
    }
    return out;
}

Tensor decode_tensor(const std::vector<std::uint8_t>& bytes, const std::string& source) {
    auto fail = [&](const std::string& why) { return Error(ErrorKind::Input, "bad SPXT " + source + ": " + why); };
    if (bytes.size() < 9 || std::memcmp(bytes.data(), "SPXT", 4) != 0) throw fail("missing magic");
    if (bytes[4] != kSpxtVersion) throw fail("unsupported version " + std::to_string(bytes[4]));
    const std::uint32_t rank = get_u32(&bytes[5]);
    if (rank == 0 || rank > 8) throw fail("unsupported rank " + std::to_string(rank));
    std::size_t pos = 9;
    if (bytes.size() < pos + 4 * std::size_t(rank)) throw fail("truncated header");
    Tensor t;
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i, pos += 4) {
        const std::uint32_t d = get_u32(&bytes[pos]);
        if (d == 0) throw fail("zero dimension");
        t.dims.push_back(d);
        count *= d;
        if (count > (bytes.size() / 4) + 1) throw fail("dimensions exceed file size");
    }
    if (bytes.size() != pos + 4 * count) throw fail("payload is " + std::to_string(bytes.size() - pos) +
                                                    " bytes, expected " + std::to_string(4 * count));
    t.values.resize(count);
    for (std::size_t n = 0; n < count; ++n, pos += 4) {
        const std::uint32_t bits = get_u32(&bytes[pos]);
        std::memcpy(&t.values[n], &bits, sizeof bits);
    }
    return t;
}

Tensor read_tensor(const fs::path& path) { return decode_tensor(read_bytes(path), path.string()); }

void write_tensor(const fs::path& path, const Tensor& tensor) { write_bytes(path, encode_tensor(tensor)); }

FeatureMapStack to_feature_stack(const Tensor& t, int depth_id) {
    require_rank(t, 3, "feature stack");
    FeatureMapStack f{depth_id, int(t.dims[0]), int(t.dims[1]), int(t.dims[2]), t.values};
    require_valid(f, "feature stack");
    return f;
}

ClassifierWeights to_classifier_weights(const Tensor& t) {
    require_rank(t, 2, "classifier weights");
    ClassifierWeights w{int(t.dims[0]), int(t.dims[1]), t.values};
    require_valid(w, "classifier weights");
    return w;
}

ScoreMap to_score_map(const Tensor& t) {
    require_rank(t, 3, "score map");
    ScoreMap s{int(t.dims[0]), int(t.dims[1]), int(t.dims[2]), t.values};
    require_valid(s, "score map");
    return s;
}

ProbabilityMap to_probability_map(const Tensor& t) {
    require_rank(t, 3, "probability map");
    ProbabilityMap p{int(t.dims[0]), int(t.dims[1]), int(t.dims[2]), t.values};
    require_valid(p, "probability map");
    return p;
}

Tensor from_feature_stack(const FeatureMapStack& f) {
    return {{std::uint32_t(f.num_maps), std::uint32_t(f.height), std::uint32_t(f.width)}, f.values};
}

Tensor from_classifier_weights(const ClassifierWeights& w) {
    return {{std::uint32_t(w.num_classes), std::uint32_t(w.num_maps)}, w.weights};
}

Tensor from_score_map(const ScoreMap& s) {
    return {{std::uint32_t(s.num_classes), std::uint32_t(s.height), std::uint32_t(s.width)}, s.scores};
}

Tensor from_probability_map(const ProbabilityMap& p) {
    return {{std::uint32_t(p.num_classes), std::uint32_t(p.height), std::uint32_t(p.width)}, p.probs};
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorKind::Input, "no such file: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Input, "cannot open for reading: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
    write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::Internal, "sha256 failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_bytes(path)); }

ImageRGB boundary_overlay(const ImageRGB& image, const SuperpixelPartition& partition) {
    require_valid(image, "boundary_overlay image");
    if (image.width != partition.width || image.height != partition.height) {
        throw Error(ErrorKind::Invalid, "boundary_overlay: dimension mismatch");
    }
    ImageRGB out = image;
    const int w = image.width;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t n = static_cast<std::size_t>(y) * w + x;
            const auto id = partition.assignments[n];
            const bool edge = (x + 1 < w && partition.assignments[n + 1] != id) ||
                              (y + 1 < image.height && partition.assignments[n + w] != id);
            if (edge) {
                out.pixels[3 * n] = 255;
                out.pixels[3 * n + 1] = 0;
                out.pixels[3 * n + 2] = 0;
            }
        }
    }
    return out;
}

}  // namespace supix::io
