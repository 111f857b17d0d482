#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "fedgan/error.hpp"
#include "fedgan/experiment.hpp"

namespace fedgan {

namespace {

BiasReport read_report(const std::filesystem::path& dir) {
    const auto path = dir / "bias_report.csv";
    std::ifstream in(path);
    if (!in) throw IoError("missing " + path.string());
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    try {
        return bias_report_from_csv(text);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.4f", v);
    return buf;
}

std::string plain(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

int cmd_compare(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
                std::ostream& out) {
    const BiasReport a = read_report(run_a);
    const BiasReport b = read_report(run_b);
    if (a.fractions.size() != b.fractions.size()) {
        throw ParseError("reports disagree on the number of classes (" +
                         std::to_string(a.fractions.size()) + " vs " +
                         std::to_string(b.fractions.size()) + ")");
    }
    out << "metric,a,b,delta\n";
    for (std::size_t c = 0; c < a.fractions.size(); ++c) {
        out << "class" << c << ',' << plain(a.fractions[c]) << ',' << plain(b.fractions[c]) << ','
            << fixed(b.fractions[c] - a.fractions[c]) << '\n';
    }
    out << "balance_entropy," << plain(a.balance_entropy) << ',' << plain(b.balance_entropy) << ','
        << fixed(b.balance_entropy - a.balance_entropy) << '\n';
    out << "minority_share," << plain(a.minority_share) << ',' << plain(b.minority_share) << ','
        << fixed(b.minority_share - a.minority_share) << '\n';
    const bool improved = b.minority_share > a.minority_share;
    out << (improved ? "improved" : "not improved") << '\n';
    return improved ? exit_code::kOk : exit_code::kNotImproved;
}

std::string samples_to_csv(const Matrix& samples, const std::vector<std::size_t>* classes) {
    std::ostringstream os;
    for (std::size_t j = 0; j < samples.cols(); ++j) os << (j ? "," : "") << 'x' << j;
    if (classes) os << ",class";
    os << '\n';
    for (std::size_t r = 0; r < samples.rows(); ++r) {
        const auto row = samples.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << format_double(row[j]);
        if (classes) os << ',' << (*classes)[r];
        os << '\n';
    }
    return os.str();
}

Matrix read_samples_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw ParseError(path.string() + " line 1: missing header");
    std::size_t width = 0;
    bool trailing_label = false;
    {
        std::istringstream hs(line);
        std::string col;
        while (std::getline(hs, col, ',')) {
            if (!col.empty() && col.back() == '\r') col.pop_back();
            if (col.size() > 1 && col[0] == 'x' && !trailing_label) {
                ++width;
            } else if ((col == "class" || col == "label") && !trailing_label) {
                trailing_label = true;
            } else {
                throw ParseError(path.string() + " line 1: unexpected column '" + col + "'");
            }
        }
    }
    if (width == 0) throw ParseError(path.string() + " line 1: no x<j> columns");

    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ls, cell, ',')) {
            if (col < width) {
                double v = 0.0;
                const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
                if (res.ec != std::errc{}) {
                    throw ParseError(path.string() + " line " + std::to_string(line_no) +
                                     ": bad number '" + cell + "'");
                }
                values.push_back(v);
            }
            ++col;
        }
        if (col != width + (trailing_label ? 1 : 0)) {
            throw ParseError(path.string() + " line " + std::to_string(line_no) + ": expected " +
                             std::to_string(width + (trailing_label ? 1 : 0)) + " fields, got " +
                             std::to_string(col));
        }
        ++rows;
    }
    return Matrix::from_data(rows, width, std::move(values));
}

std::vector<std::uint8_t> render_pgm_grid(const Matrix& samples, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw FormatError("grid needs at least one row and column");
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(samples.cols()))));
    if (samples.cols() == 0 || side * side != samples.cols()) {
        throw FormatError("sample width " + std::to_string(samples.cols()) + " is not a perfect square");
    }
    const std::size_t width = cols * side;
    const std::size_t height = rows * side;
    const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const std::size_t base = out.size();
    out.resize(base + width * height, 0);
    const std::size_t tiles = std::min(samples.rows(), rows * cols);
    for (std::size_t t = 0; t < tiles; ++t) {
        const std::size_t ty = t / cols;
        const std::size_t tx = t % cols;
        const auto px = samples.row(t);
        for (std::size_t y = 0; y < side; ++y) {
            for (std::size_t x = 0; x < side; ++x) {
                const double v = std::clamp((px[y * side + x] + 1.0) * 127.5, 0.0, 255.0);
                out[base + (ty * side + y) * width + tx * side + x] = static_cast<std::uint8_t>(std::lround(v));
            }
        }
    }
    return out;
}

void cmd_grid(const std::filesystem::path& samples_path, std::size_t rows, std::size_t cols,
              const std::filesystem::path& out_path) {
    const auto bytes = render_pgm_grid(read_samples_csv(samples_path), rows, cols);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + out_path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace fedgan
