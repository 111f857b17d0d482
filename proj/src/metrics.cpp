#include "fedgan/metrics.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "fedgan/error.hpp"

namespace fedgan {

std::vector<std::size_t> assign_modes(const Matrix& samples, const ModeCenters& centers) {
    if (centers.num_classes() == 0) {
        throw ConfigError("assign_modes: no mode centers");
    }
    if (samples.cols() != centers.dim()) {
        throw DimensionError("assign_modes: sample width " + std::to_string(samples.cols()) +
                             " != center width " + std::to_string(centers.dim()));
    }
    std::vector<std::size_t> labels(samples.rows());
    for (std::size_t r = 0; r < samples.rows(); ++r) {
        const auto x = samples.row(r);
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_class = 0;
        for (std::size_t c = 0; c < centers.num_classes(); ++c) {
            const auto mu = centers.centers.row(c);
            double d2 = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                const double diff = x[j] - mu[j];
                d2 += diff * diff;
            }
            if (d2 < best) {
                best = d2;
                best_class = c;
            }
        }
        labels[r] = best_class;
    }
    return labels;
}

BiasReport bias_report(const std::vector<std::size_t>& assignments, std::size_t num_classes,
                       const std::vector<std::size_t>& minority_classes) {
    if (assignments.empty()) {
        throw ConfigError("bias_report: no assignments");
    }
    if (num_classes < 2) {
        throw ConfigError("bias_report: need at least two classes");
    }
    std::vector<std::size_t> counts(num_classes, 0);
    for (std::size_t a : assignments) {
        if (a >= num_classes) {
            throw ConfigError("bias_report: class id " + std::to_string(a) + " out of range");
        }
        ++counts[a];
    }
    BiasReport report;
    report.sample_count = assignments.size();
    report.minority_classes = minority_classes;
    report.fractions.resize(num_classes);
    const double total = static_cast<double>(assignments.size());
    double entropy = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double f = static_cast<double>(counts[c]) / total;
        report.fractions[c] = f;
        if (counts[c] > 0) entropy -= f * std::log(f);
    }
    report.balance_entropy = entropy / std::log(static_cast<double>(num_classes));
    for (std::size_t m : minority_classes) {
        if (m >= num_classes) {
            throw ConfigError("bias_report: minority class " + std::to_string(m) + " out of range");
        }
        report.minority_share += report.fractions[m];
    }
    return report;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string to_csv(const BiasReport& report) {
    std::ostringstream os;
    os << "class,fraction\n";
    for (std::size_t c = 0; c < report.fractions.size(); ++c) {
        os << c << ',' << format_double(report.fractions[c]) << '\n';
    }
    os << "balance_entropy," << format_double(report.balance_entropy) << '\n';
    os << "minority_share," << format_double(report.minority_share) << '\n';
    os << "samples," << report.sample_count << '\n';
    os << "minority_classes,";
    for (std::size_t i = 0; i < report.minority_classes.size(); ++i) {
        if (i) os << ';';
        os << report.minority_classes[i];
    }
    os << '\n';
    return os.str();
}

namespace {

template <typename T>
bool parse_number(std::string_view text, T& out) {
    const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

}  // namespace

BiasReport bias_report_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& why) {
        throw ParseError("bias report line " + std::to_string(line_no) + ": " + why);
    };

    ++line_no;
    if (!std::getline(in, line) || line != "class,fraction") fail("expected header 'class,fraction'");

    BiasReport report;
    bool have_entropy = false;
    bool have_share = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) fail("missing comma");
        const std::string_view key(line.data(), comma);
        const std::string_view value(line.data() + comma + 1, line.size() - comma - 1);

        std::size_t cls = 0;
        if (parse_number(key, cls)) {
            if (cls != report.fractions.size()) fail("class ids must be consecutive from 0");
            double f = 0.0;
            if (!parse_number(value, f)) fail("bad fraction '" + std::string(value) + "'");
            report.fractions.push_back(f);
        } else if (key == "balance_entropy") {
            if (!parse_number(value, report.balance_entropy)) fail("bad balance_entropy");
            have_entropy = true;
        } else if (key == "minority_share") {
            if (!parse_number(value, report.minority_share)) fail("bad minority_share");
            have_share = true;
        } else if (key == "samples") {
            if (!parse_number(value, report.sample_count)) fail("bad samples");
        } else if (key == "minority_classes") {
            std::size_t pos = 0;
            while (pos < value.size()) {
                auto semi = value.find(';', pos);
                if (semi == std::string_view::npos) semi = value.size();
                std::size_t m = 0;
                if (!parse_number(value.substr(pos, semi - pos), m)) fail("bad minority class list");
                report.minority_classes.push_back(m);
                pos = semi + 1;
            }
        } else {
            fail("unknown key '" + std::string(key) + "'");
        }
    }
    if (report.fractions.empty() || !have_entropy || !have_share) {
        ++line_no;
        fail("incomplete report (needs class rows, balance_entropy, minority_share)");
    }
    return report;
}

std::string to_json(const BiasReport& report) {
    nlohmann::ordered_json j;
    j["fractions"] = report.fractions;
    j["balance_entropy"] = report.balance_entropy;
    j["minority_share"] = report.minority_share;
    j["minority_classes"] = report.minority_classes;
    j["samples"] = report.sample_count;
    return j.dump(2) + "\n";
}

}  // namespace fedgan
