#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fedgan/data.hpp"
#include "fedgan/federation.hpp"
#include "fedgan/gan.hpp"

namespace fedgan {

enum class Algorithm { FedGan, BiasFree, Both };

struct DatasetSection {
    enum class Kind { Gmm, Idx };
    Kind kind = Kind::Gmm;
    GaussianMixtureSpec gmm = GaussianMixtureSpec::two_mode_default();
    std::size_t per_mode = 10000;
    std::filesystem::path images;
    std::filesystem::path labels;
    std::size_t downsample = 14;
};

struct PartitionSection {
    /// iid | single-minority | equal-total | multi-minority | explicit, or one of
    /// the figure aliases (fig3-single-minority, fig3-equal-total,
    /// fig4-multi-minority, fig4-iid).
    std::string preset = "iid";
    std::vector<std::size_t> minority_classes{0};
    std::vector<std::size_t> majority_classes{1};
    std::size_t minority_count = 10000;
    /// One entry per majority client; a single entry applies to all of them.
    std::vector<std::size_t> majority_counts{10000};
    std::vector<std::map<std::size_t, std::size_t>> explicit_counts;
};

struct ReportSection {
    std::size_t samples = 10000;
    std::size_t grid_rows = 8;
    std::size_t grid_cols = 8;
};

struct ExperimentConfig {
    std::string name = "experiment";
    Algorithm algorithm = Algorithm::Both;
    std::filesystem::path output = "runs/experiment";
    DatasetSection dataset;
    PartitionSection partition;
    /// master_seed has no default; parse_config rejects configs without one.
    FederationConfig federation;
    GanArchitecture model;
    ReportSection report;
};

/// Parses the line-oriented `[section]` / `key = value` format. Errors name the
/// line and field.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical partition kind for a preset name, e.g. "fig3-equal-total" -> "equal-total".
std::string resolve_preset(const std::string& preset);

/// Builds the PartitionSpec the config describes for `clients` clients.
PartitionSpec make_partition_spec(const PartitionSection& section, std::size_t clients);

/// FNV-1a 64 of the text, as 16 hex digits.
std::string content_hash(const std::string& text);

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kValidation = 1;
inline constexpr int kRuntime = 2;
inline constexpr int kNotImproved = 3;
}  // namespace exit_code

struct RunOptions {
    bool parallel = false;
    /// Replaces the config's output directory when non-empty.
    std::filesystem::path output_override;
};

/// Runs the configured algorithm(s) and writes, per algorithm directory:
/// round_<n>.csv, bias_report.csv/.json, samples.csv, generator.fgbf,
/// discriminator.fgbf, manifest.txt and, for image data, grid.pgm.
/// Throws on failure; the CLI maps exception types to exit codes.
void cmd_run(const std::filesystem::path& config_path, const RunOptions& options, std::ostream& log);

/// Prints per-class, entropy and minority-share deltas (b - a). Returns kOk when
/// b has the larger minority share, kNotImproved otherwise.
int cmd_compare(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
                std::ostream& out);

/// Renders samples (CSV rows in [-1, 1], square widths) as a binary PGM grid.
void cmd_grid(const std::filesystem::path& samples_path, std::size_t rows, std::size_t cols,
              const std::filesystem::path& out_path);

/// Samples CSV: header of x<j> columns, optionally followed by a label/class column.
Matrix read_samples_csv(const std::filesystem::path& path);
std::string samples_to_csv(const Matrix& samples, const std::vector<std::size_t>* classes);

/// P5 image of rows x cols tiles; missing tiles stay black.
std::vector<std::uint8_t> render_pgm_grid(const Matrix& samples, std::size_t rows, std::size_t cols);

}  // namespace fedgan
