#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fedgan/matrix.hpp"

namespace fedgan {

/// One representative vector per class (row c = class c).
struct ModeCenters {
    Matrix centers;

    std::size_t num_classes() const { return centers.rows(); }
    std::size_t dim() const { return centers.cols(); }
};

/// Nearest center by Euclidean distance; ties go to the lowest class id.
std::vector<std::size_t> assign_modes(const Matrix& samples, const ModeCenters& centers);

struct BiasReport {
    std::vector<double> fractions;
    /// Shannon entropy of `fractions` divided by log(num_classes).
    double balance_entropy = 0.0;
    double minority_share = 0.0;
    std::vector<std::size_t> minority_classes;
    std::size_t sample_count = 0;
};

BiasReport bias_report(const std::vector<std::size_t>& assignments, std::size_t num_classes,
                       const std::vector<std::size_t>& minority_classes);

/// "class,fraction" rows followed by summary rows (balance_entropy, minority_share,
/// samples, minority_classes).
std::string to_csv(const BiasReport& report);
BiasReport bias_report_from_csv(const std::string& text);
std::string to_json(const BiasReport& report);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace fedgan
