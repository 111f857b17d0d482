#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "fedgan/data.hpp"
#include "fedgan/error.hpp"

namespace fedgan {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
    if (bytes.size() < offset + 4) {
        throw IdxTruncatedError(path.string() + ": header truncated at byte " + std::to_string(offset));
    }
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                       static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(b, 4);
}

void check_magic(std::uint32_t magic, std::uint32_t expected, const std::filesystem::path& path) {
    if (magic != expected) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "bad magic 0x%08x (expected 0x%08x)", magic, expected);
        throw IdxMagicError(path.string() + ": " + buf);
    }
}

double pixel_to_unit(std::uint8_t p) { return static_cast<double>(p) / 127.5 - 1.0; }

std::uint8_t unit_to_pixel(double v) {
    const double p = std::round((v + 1.0) * 127.5);
    return static_cast<std::uint8_t>(std::clamp(p, 0.0, 255.0));
}

}  // namespace

IdxImages load_idx(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path, const IdxOptions& options) {
    const auto img = read_file(images_path);
    check_magic(read_be32(img, 0, images_path), kImagesMagic, images_path);
    const std::size_t n = read_be32(img, 4, images_path);
    const std::size_t rows = read_be32(img, 8, images_path);
    const std::size_t cols = read_be32(img, 12, images_path);
    const std::size_t pixels = rows * cols;
    if (img.size() < 16 + n * pixels) {
        throw IdxTruncatedError(images_path.string() + ": " + std::to_string(n) + " images of " +
                                std::to_string(rows) + "x" + std::to_string(cols) + " need " +
                                std::to_string(16 + n * pixels) + " bytes, file has " +
                                std::to_string(img.size()));
    }

    const auto lab = read_file(labels_path);
    check_magic(read_be32(lab, 0, labels_path), kLabelsMagic, labels_path);
    const std::size_t n_labels = read_be32(lab, 4, labels_path);
    if (lab.size() < 8 + n_labels) {
        throw IdxTruncatedError(labels_path.string() + ": " + std::to_string(n_labels) +
                                " labels need " + std::to_string(8 + n_labels) + " bytes, file has " +
                                std::to_string(lab.size()));
    }
    if (n_labels != n) {
        throw IdxCountMismatchError("image file declares " + std::to_string(n) +
                                    " items, label file declares " + std::to_string(n_labels));
    }

    std::size_t out_rows = rows;
    std::size_t out_cols = cols;
    if (options.downsample != 0) {
        if (rows % options.downsample != 0 || cols % options.downsample != 0) {
            throw ConfigError("cannot block-average " + std::to_string(rows) + "x" +
                              std::to_string(cols) + " images down to " +
                              std::to_string(options.downsample));
        }
        out_rows = options.downsample;
        out_cols = options.downsample;
    }
    const std::size_t by = rows / out_rows;
    const std::size_t bx = cols / out_cols;
    const double block = static_cast<double>(by * bx);

    IdxImages result;
    result.rows = out_rows;
    result.cols = out_cols;
    auto& ds = result.dataset;
    ds.samples = Matrix(n, out_rows * out_cols);
    ds.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* src = img.data() + 16 + i * pixels;
        auto dst = ds.samples.row(i);
        for (std::size_t r = 0; r < out_rows; ++r) {
            for (std::size_t c = 0; c < out_cols; ++c) {
                double acc = 0.0;
                for (std::size_t y = 0; y < by; ++y) {
                    for (std::size_t x = 0; x < bx; ++x) {
                        acc += pixel_to_unit(src[(r * by + y) * cols + c * bx + x]);
                    }
                }
                dst[r * out_cols + c] = by * bx == 1 ? acc : acc / block;
            }
        }
        ds.labels.push_back(lab[8 + i]);
    }
    return result;
}

void save_idx(const LabeledDataset& ds, std::size_t rows, std::size_t cols,
              const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    if (rows * cols != ds.samples.cols()) {
        throw DimensionError("save_idx: " + std::to_string(rows) + "x" + std::to_string(cols) +
                             " does not match sample width " + std::to_string(ds.samples.cols()));
    }
    std::ofstream img(images_path, std::ios::binary);
    std::ofstream lab(labels_path, std::ios::binary);
    if (!img || !lab) throw IoError("cannot write IDX files");
    write_be32(img, kImagesMagic);
    write_be32(img, static_cast<std::uint32_t>(ds.size()));
    write_be32(img, static_cast<std::uint32_t>(rows));
    write_be32(img, static_cast<std::uint32_t>(cols));
    std::vector<char> buf(ds.samples.cols());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto row = ds.samples.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) buf[j] = static_cast<char>(unit_to_pixel(row[j]));
        img.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    write_be32(lab, kLabelsMagic);
    write_be32(lab, static_cast<std::uint32_t>(ds.size()));
    for (std::size_t l : ds.labels) {
        if (l > 255) throw FormatError("IDX labels must fit in one byte");
        lab.put(static_cast<char>(l));
    }
}

}  // namespace fedgan
