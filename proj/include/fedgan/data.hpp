#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fedgan/matrix.hpp"
#include "fedgan/metrics.hpp"
#include "fedgan/rng.hpp"

namespace fedgan {

struct LabeledDataset {
    Matrix samples;
    std::vector<std::size_t> labels;

    std::size_t size() const { return labels.size(); }
    /// 1 + largest label, 0 when empty.
    std::size_t num_classes() const;
    std::vector<std::size_t> class_counts() const;
    LabeledDataset subset(std::span<const std::size_t> rows) const;
};

struct GaussianMode {
    std::vector<double> mean;
    double stdev = 1.0;
};

/// Isotropic Gaussian mixture; mode k is class k.
struct GaussianMixtureSpec {
    std::vector<GaussianMode> modes;

    /// Throws ConfigError unless there is at least one mode, all means share a
    /// dimension, stdevs are positive, and every pair of means is separated by
    /// at least 6x the largest stdev.
    void validate() const;
    std::size_t dim() const { return modes.empty() ? 0 : modes.front().mean.size(); }
    ModeCenters centers() const;

    /// Modes at (-2,0) and (2,0), stdev 0.2.
    static GaussianMixtureSpec two_mode_default();
    /// Modes at (-2,-2), (-2,2), (2,-2), (2,2), stdev 0.2.
    static GaussianMixtureSpec four_mode_default();
};

/// `per_mode` samples per mode, grouped by mode in class order.
LabeledDataset make_gmm_dataset(const GaussianMixtureSpec& spec, std::size_t per_mode, Rng& rng);

/// Per-class mean sample; class c becomes row c.
ModeCenters class_means(const LabeledDataset& ds);

struct IdxOptions {
    /// Target side length for block-average down-sampling; 0 keeps the native size.
    std::size_t downsample = 0;
};

struct IdxImages {
    LabeledDataset dataset;
    std::size_t rows = 0;
    std::size_t cols = 0;
};

/// Reads an IDX3 image file and an IDX1 label file. Pixels map to [-1, 1].
IdxImages load_idx(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path, const IdxOptions& options = {});

/// Writes samples in [-1, 1] back as IDX3 bytes plus an IDX1 label file.
void save_idx(const LabeledDataset& ds, std::size_t rows, std::size_t cols,
              const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Header x0..x{d-1},label.
std::string to_csv(const LabeledDataset& ds);

struct PartitionSpec {
    enum class Kind { Iid, Explicit };
    Kind kind = Kind::Iid;
    /// Explicit mode: one map (class id -> count) per client.
    std::vector<std::map<std::size_t, std::size_t>> per_client;

    static PartitionSpec iid();
    static PartitionSpec explicit_counts(std::vector<std::map<std::size_t, std::size_t>> per_client);

    /// Client 1 holds `minority_count` rows of each minority class; clients 2..M
    /// each hold the matching entry of `majority_counts` rows of every majority class.
    static PartitionSpec minority_split(std::size_t clients,
                                        const std::vector<std::size_t>& minority_classes,
                                        std::size_t minority_count,
                                        const std::vector<std::size_t>& majority_classes,
                                        const std::vector<std::size_t>& majority_counts);
};

/// Splits `ds` into `clients` disjoint datasets.
std::vector<LabeledDataset> partition(const LabeledDataset& ds, const PartitionSpec& spec,
                                      std::size_t clients, Rng& rng);

}  // namespace fedgan
