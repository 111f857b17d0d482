#include "fedgan/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fedgan/error.hpp"

namespace fedgan {

std::size_t LabeledDataset::num_classes() const {
    if (labels.empty()) return 0;
    return *std::max_element(labels.begin(), labels.end()) + 1;
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes(), 0);
    for (std::size_t l : labels) ++counts[l];
    return counts;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
    LabeledDataset out;
    out.samples = samples.gather_rows(rows);
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) out.labels.push_back(labels[r]);
    return out;
}

void GaussianMixtureSpec::validate() const {
    if (modes.empty()) throw ConfigError("gaussian mixture needs at least one mode");
    const std::size_t d = dim();
    if (d == 0) throw ConfigError("gaussian mixture means must have at least one coordinate");
    double max_stdev = 0.0;
    for (std::size_t k = 0; k < modes.size(); ++k) {
        if (modes[k].mean.size() != d) {
            throw ConfigError("mode " + std::to_string(k) + " mean has dimension " +
                              std::to_string(modes[k].mean.size()) + ", expected " +
                              std::to_string(d));
        }
        if (!(modes[k].stdev > 0.0)) {
            throw ConfigError("mode " + std::to_string(k) + " stdev must be positive");
        }
        max_stdev = std::max(max_stdev, modes[k].stdev);
    }
    for (std::size_t a = 0; a < modes.size(); ++a) {
        for (std::size_t b = a + 1; b < modes.size(); ++b) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = modes[a].mean[j] - modes[b].mean[j];
                d2 += diff * diff;
            }
            if (std::sqrt(d2) < 6.0 * max_stdev) {
                throw ConfigError("modes " + std::to_string(a) + " and " + std::to_string(b) +
                                  " are closer than 6x the largest stdev");
            }
        }
    }
}

ModeCenters GaussianMixtureSpec::centers() const {
    ModeCenters mc{Matrix(modes.size(), dim())};
    for (std::size_t k = 0; k < modes.size(); ++k) {
        std::copy(modes[k].mean.begin(), modes[k].mean.end(), mc.centers.row(k).begin());
    }
    return mc;
}

GaussianMixtureSpec GaussianMixtureSpec::two_mode_default() {
    return {{{{-2.0, 0.0}, 0.2}, {{2.0, 0.0}, 0.2}}};
}

GaussianMixtureSpec GaussianMixtureSpec::four_mode_default() {
    return {{{{-2.0, -2.0}, 0.2}, {{-2.0, 2.0}, 0.2}, {{2.0, -2.0}, 0.2}, {{2.0, 2.0}, 0.2}}};
}

LabeledDataset make_gmm_dataset(const GaussianMixtureSpec& spec, std::size_t per_mode, Rng& rng) {
    spec.validate();
    if (per_mode == 0) throw ConfigError("per_mode must be at least 1");
    LabeledDataset ds;
    ds.samples = Matrix(spec.modes.size() * per_mode, spec.dim());
    ds.labels.reserve(spec.modes.size() * per_mode);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::size_t r = 0;
    for (std::size_t k = 0; k < spec.modes.size(); ++k) {
        const auto& mode = spec.modes[k];
        for (std::size_t i = 0; i < per_mode; ++i, ++r) {
            auto row = ds.samples.row(r);
            for (std::size_t j = 0; j < row.size(); ++j) row[j] = mode.mean[j] + mode.stdev * noise(rng);
            ds.labels.push_back(k);
        }
    }
    return ds;
}

ModeCenters class_means(const LabeledDataset& ds) {
    const std::size_t k = ds.num_classes();
    ModeCenters mc{Matrix(k, ds.samples.cols())};
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t r = 0; r < ds.size(); ++r) {
        auto dst = mc.centers.row(ds.labels[r]);
        const auto src = ds.samples.row(r);
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        ++counts[ds.labels[r]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) continue;
        for (double& v : mc.centers.row(c)) v /= static_cast<double>(counts[c]);
    }
    return mc;
}

std::string to_csv(const LabeledDataset& ds) {
    std::ostringstream os;
    for (std::size_t j = 0; j < ds.samples.cols(); ++j) os << 'x' << j << ',';
    os << "label\n";
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (double v : ds.samples.row(r)) os << format_double(v) << ',';
        os << ds.labels[r] << '\n';
    }
    return os.str();
}

PartitionSpec PartitionSpec::iid() { return {}; }

PartitionSpec PartitionSpec::explicit_counts(std::vector<std::map<std::size_t, std::size_t>> per_client) {
    PartitionSpec spec;
    spec.kind = Kind::Explicit;
    spec.per_client = std::move(per_client);
    return spec;
}

PartitionSpec PartitionSpec::minority_split(std::size_t clients,
                                            const std::vector<std::size_t>& minority_classes,
                                            std::size_t minority_count,
                                            const std::vector<std::size_t>& majority_classes,
                                            const std::vector<std::size_t>& majority_counts) {
    if (clients < 2) throw ConfigError("a minority split needs at least two clients");
    if (majority_counts.size() != clients - 1) {
        throw ConfigError("expected " + std::to_string(clients - 1) + " majority counts, got " +
                          std::to_string(majority_counts.size()));
    }
    std::vector<std::map<std::size_t, std::size_t>> per_client(clients);
    for (std::size_t c : minority_classes) per_client[0][c] = minority_count;
    for (std::size_t i = 1; i < clients; ++i) {
        for (std::size_t c : majority_classes) per_client[i][c] = majority_counts[i - 1];
    }
    return explicit_counts(std::move(per_client));
}

namespace {

std::vector<std::vector<std::size_t>> shuffled_rows_by_class(const LabeledDataset& ds, Rng& rng) {
    std::vector<std::vector<std::size_t>> by_class(ds.num_classes());
    for (std::size_t r = 0; r < ds.size(); ++r) by_class[ds.labels[r]].push_back(r);
    for (auto& rows : by_class) std::shuffle(rows.begin(), rows.end(), rng);
    return by_class;
}

}  // namespace

std::vector<LabeledDataset> partition(const LabeledDataset& ds, const PartitionSpec& spec,
                                      std::size_t clients, Rng& rng) {
    if (clients == 0) throw PartitionError("partition needs at least one client");
    if (ds.labels.size() != ds.samples.rows()) {
        throw DimensionError("dataset has " + std::to_string(ds.samples.rows()) + " rows but " +
                             std::to_string(ds.labels.size()) + " labels");
    }
    auto by_class = shuffled_rows_by_class(ds, rng);
    std::vector<std::vector<std::size_t>> assigned(clients);

    if (spec.kind == PartitionSpec::Kind::Iid) {
        std::size_t next = 0;
        for (const auto& rows : by_class) {
            const std::size_t base = rows.size() / clients;
            const std::size_t extra = rows.size() % clients;
            std::size_t pos = 0;
            for (std::size_t i = 0; i < clients; ++i) {
                assigned[i].insert(assigned[i].end(), rows.begin() + pos, rows.begin() + pos + base);
                pos += base;
            }
            for (std::size_t e = 0; e < extra; ++e) {
                assigned[next].push_back(rows[pos++]);
                next = (next + 1) % clients;
            }
        }
    } else {
        if (spec.per_client.size() != clients) {
            throw PartitionError("explicit partition lists " + std::to_string(spec.per_client.size()) +
                                 " clients, federation has " + std::to_string(clients));
        }
        std::map<std::size_t, std::size_t> requested;
        for (const auto& client : spec.per_client) {
            for (const auto& [cls, count] : client) requested[cls] += count;
        }
        std::string deficit;
        for (const auto& [cls, count] : requested) {
            const std::size_t available = cls < by_class.size() ? by_class[cls].size() : 0;
            if (count > available) {
                if (!deficit.empty()) deficit += "; ";
                deficit += "class " + std::to_string(cls) + ": requested " + std::to_string(count) +
                           ", available " + std::to_string(available) + ", short " +
                           std::to_string(count - available);
            }
        }
        if (!deficit.empty()) throw PartitionError("unsatisfiable partition: " + deficit);

        std::vector<std::size_t> cursor(by_class.size(), 0);
        for (std::size_t i = 0; i < clients; ++i) {
            for (const auto& [cls, count] : spec.per_client[i]) {
                const auto& rows = by_class[cls];
                assigned[i].insert(assigned[i].end(), rows.begin() + cursor[cls],
                                   rows.begin() + cursor[cls] + count);
                cursor[cls] += count;
            }
        }
    }

    std::vector<LabeledDataset> out;
    out.reserve(clients);
    for (std::size_t i = 0; i < clients; ++i) {
        if (assigned[i].empty()) {
            throw PartitionError("client " + std::to_string(i + 1) + " would receive no samples");
        }
        std::shuffle(assigned[i].begin(), assigned[i].end(), rng);
        out.push_back(ds.subset(assigned[i]));
    }
    return out;
}

}  // namespace fedgan
