#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <sstream>

#include "fedgan/error.hpp"
#include "fedgan/experiment.hpp"

namespace fedgan {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (true) {
        const auto next = s.find(sep, pos);
        parts.push_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return parts;
}

class FieldError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::size_t to_count(const std::string& v) {
    std::size_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw FieldError("expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

std::size_t to_positive(const std::string& v) {
    const auto n = to_count(v);
    if (n == 0) throw FieldError("must be positive");
    return n;
}

std::uint64_t to_u64(const std::string& v) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw FieldError("expected an unsigned integer, got '" + v + "'");
    }
    return out;
}

double to_real(const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw FieldError("expected a number, got '" + v + "'");
    }
    return out;
}

double to_positive_real(const std::string& v) {
    const double x = to_real(v);
    if (!(x > 0.0)) throw FieldError("must be positive");
    return x;
}

std::vector<std::size_t> to_counts(const std::string& v) {
    std::vector<std::size_t> out;
    for (const auto& part : split(v, ',')) out.push_back(to_count(part));
    return out;
}

std::vector<std::size_t> to_positive_counts(const std::string& v) {
    auto out = to_counts(v);
    for (auto n : out) {
        if (n == 0) throw FieldError("entries must be positive");
    }
    return out;
}

std::map<std::size_t, std::size_t> to_class_counts(const std::string& v) {
    std::map<std::size_t, std::size_t> out;
    for (const auto& part : split(v, ',')) {
        const auto kv = split(part, ':');
        if (kv.size() != 2) throw FieldError("expected class:count pairs, got '" + part + "'");
        out[to_count(kv[0])] += to_count(kv[1]);
    }
    return out;
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw FieldError("expected true/false, got '" + v + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"experiment.name", [](ExperimentConfig& c, const std::string& v) { c.name = v; }},
        {"experiment.seed",
         [](ExperimentConfig& c, const std::string& v) { c.federation.master_seed = to_u64(v); }},
        {"experiment.algorithm",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "fedgan") c.algorithm = Algorithm::FedGan;
             else if (v == "biasfree") c.algorithm = Algorithm::BiasFree;
             else if (v == "both") c.algorithm = Algorithm::Both;
             else throw FieldError("expected fedgan, biasfree or both, got '" + v + "'");
         }},
        {"experiment.output", [](ExperimentConfig& c, const std::string& v) { c.output = v; }},

        {"dataset.kind",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "gmm") c.dataset.kind = DatasetSection::Kind::Gmm;
             else if (v == "idx") c.dataset.kind = DatasetSection::Kind::Idx;
             else throw FieldError("expected gmm or idx, got '" + v + "'");
         }},
        {"dataset.modes",
         [](ExperimentConfig& c, const std::string& v) {
             const double stdev = c.dataset.gmm.modes.empty() ? 0.2 : c.dataset.gmm.modes.front().stdev;
             c.dataset.gmm.modes.clear();
             for (const auto& mode : split(v, ';')) {
                 GaussianMode m;
                 for (const auto& x : split(mode, ',')) m.mean.push_back(to_real(x));
                 m.stdev = stdev;
                 c.dataset.gmm.modes.push_back(std::move(m));
             }
         }},
        {"dataset.stdev",
         [](ExperimentConfig& c, const std::string& v) {
             const double s = to_positive_real(v);
             for (auto& m : c.dataset.gmm.modes) m.stdev = s;
         }},
        {"dataset.per_mode",
         [](ExperimentConfig& c, const std::string& v) { c.dataset.per_mode = to_positive(v); }},
        {"dataset.images", [](ExperimentConfig& c, const std::string& v) { c.dataset.images = v; }},
        {"dataset.labels", [](ExperimentConfig& c, const std::string& v) { c.dataset.labels = v; }},
        {"dataset.downsample",
         [](ExperimentConfig& c, const std::string& v) { c.dataset.downsample = to_count(v); }},

        {"partition.preset",
         [](ExperimentConfig& c, const std::string& v) {
             resolve_preset(v);
             c.partition.preset = v;
         }},
        {"partition.minority",
         [](ExperimentConfig& c, const std::string& v) { c.partition.minority_classes = to_counts(v); }},
        {"partition.majority",
         [](ExperimentConfig& c, const std::string& v) { c.partition.majority_classes = to_counts(v); }},
        {"partition.minority_count",
         [](ExperimentConfig& c, const std::string& v) { c.partition.minority_count = to_positive(v); }},
        {"partition.majority_count",
         [](ExperimentConfig& c, const std::string& v) {
             c.partition.majority_counts = to_positive_counts(v);
         }},

        {"federation.clients",
         [](ExperimentConfig& c, const std::string& v) { c.federation.num_clients = to_positive(v); }},
        {"federation.rounds",
         [](ExperimentConfig& c, const std::string& v) { c.federation.rounds = to_count(v); }},
        {"federation.local_epochs",
         [](ExperimentConfig& c, const std::string& v) { c.federation.local.epochs = to_count(v); }},
        {"federation.aggregator_epochs",
         [](ExperimentConfig& c, const std::string& v) { c.federation.aggregator_epochs = to_count(v); }},
        {"federation.samples_per_client",
         [](ExperimentConfig& c, const std::string& v) { c.federation.samples_per_client = to_count(v); }},
        {"federation.batch_size",
         [](ExperimentConfig& c, const std::string& v) { c.federation.local.batch_size = to_positive(v); }},
        {"federation.gen_lr",
         [](ExperimentConfig& c, const std::string& v) { c.federation.local.gen_lr = to_positive_real(v); }},
        {"federation.disc_lr",
         [](ExperimentConfig& c, const std::string& v) { c.federation.local.disc_lr = to_positive_real(v); }},
        {"federation.disc_steps",
         [](ExperimentConfig& c, const std::string& v) {
             c.federation.local.disc_steps_per_gen_step = to_positive(v);
         }},
        {"federation.beta1",
         [](ExperimentConfig& c, const std::string& v) { c.federation.local.beta1 = to_real(v); }},
        {"federation.beta2",
         [](ExperimentConfig& c, const std::string& v) { c.federation.local.beta2 = to_real(v); }},
        {"federation.aggregation",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "mean") c.federation.aggregation = Aggregation::Mean;
             else if (v == "sum") c.federation.aggregation = Aggregation::Sum;
             else throw FieldError("expected mean or sum, got '" + v + "'");
         }},
        {"federation.parallel",
         [](ExperimentConfig& c, const std::string& v) { c.federation.parallel = to_bool(v); }},

        {"model.latent_dim",
         [](ExperimentConfig& c, const std::string& v) { c.model.latent.dim = to_positive(v); }},
        {"model.latent",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "normal") c.model.latent.distribution = LatentDistribution::StandardNormal;
             else if (v == "uniform") c.model.latent.distribution = LatentDistribution::Uniform;
             else throw FieldError("expected normal or uniform, got '" + v + "'");
         }},
        {"model.gen_hidden",
         [](ExperimentConfig& c, const std::string& v) { c.model.gen_hidden = to_positive_counts(v); }},
        {"model.disc_hidden",
         [](ExperimentConfig& c, const std::string& v) { c.model.disc_hidden = to_positive_counts(v); }},
        {"model.gen_output",
         [](ExperimentConfig& c, const std::string& v) {
             try {
                 c.model.gen_output = activation_from_string(v);
             } catch (const ConfigError& e) {
                 throw FieldError(e.what());
             }
         }},

        {"report.samples",
         [](ExperimentConfig& c, const std::string& v) { c.report.samples = to_positive(v); }},
        {"report.grid",
         [](ExperimentConfig& c, const std::string& v) {
             const auto rc = split(v, 'x');
             if (rc.size() != 2) throw FieldError("expected <rows>x<cols>, got '" + v + "'");
             c.report.grid_rows = to_positive(rc[0]);
             c.report.grid_cols = to_positive(rc[1]);
         }},
    };
    return table;
}

}  // namespace

std::string resolve_preset(const std::string& preset) {
    static const std::map<std::string, std::string> aliases = {
        {"iid", "iid"},
        {"single-minority", "single-minority"},
        {"equal-total", "equal-total"},
        {"multi-minority", "multi-minority"},
        {"explicit", "explicit"},
        {"fig4-iid", "iid"},
        {"fig3-single-minority", "single-minority"},
        {"fig3-equal-total", "equal-total"},
        {"fig4-multi-minority", "multi-minority"},
    };
    const auto it = aliases.find(preset);
    if (it == aliases.end()) throw ConfigError("unknown partition preset '" + preset + "'");
    return it->second;
}

PartitionSpec make_partition_spec(const PartitionSection& section, std::size_t clients) {
    const std::string kind = resolve_preset(section.preset);
    if (kind == "iid") return PartitionSpec::iid();
    if (kind == "explicit") {
        if (section.explicit_counts.size() != clients) {
            throw ConfigError("explicit partition lists " + std::to_string(section.explicit_counts.size()) +
                              " clients, federation has " + std::to_string(clients));
        }
        return PartitionSpec::explicit_counts(section.explicit_counts);
    }
    if (clients < 2) throw ConfigError("preset '" + section.preset + "' needs at least two clients");
    std::vector<std::size_t> majority = section.majority_counts;
    if (majority.size() == 1) majority.assign(clients - 1, majority.front());
    if (majority.size() != clients - 1) {
        throw ConfigError("majority_count lists " + std::to_string(majority.size()) +
                          " entries, expected 1 or " + std::to_string(clients - 1));
    }
    return PartitionSpec::minority_split(clients, section.minority_classes, section.minority_count,
                                         section.majority_classes, majority);
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    bool have_seed = false;
    bool majority_counts_set = false;
    bool minority_count_set = false;
    bool classes_set = false;
    bool gen_output_set = false;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;

    static const std::vector<std::string> sections = {"experiment", "dataset", "partition",
                                                      "federation", "model", "report"};
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const std::string where = "config line " + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
                throw ConfigError(where + ": unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        if (section.empty()) throw ConfigError(where + ": key outside of any [section]");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string field = "[" + section + "] " + key;

        try {
            if (section == "partition" && key.rfind("client.", 0) == 0) {
                const std::size_t id = to_positive(key.substr(7));
                if (cfg.partition.explicit_counts.size() < id) cfg.partition.explicit_counts.resize(id);
                cfg.partition.explicit_counts[id - 1] = to_class_counts(value);
                continue;
            }
            const auto it = setters().find(section + "." + key);
            if (it == setters().end()) throw ConfigError(where + ": unknown field " + field);
            it->second(cfg, value);
        } catch (const FieldError& e) {
            throw ConfigError(where + ": " + field + ": " + e.what());
        } catch (const ConfigError& e) {
            if (std::string(e.what()).rfind("config line", 0) == 0) throw;
            throw ConfigError(where + ": " + field + ": " + e.what());
        }
        if (section == "experiment" && key == "seed") have_seed = true;
        if (section == "partition" && key == "majority_count") majority_counts_set = true;
        if (section == "partition" && key == "minority_count") minority_count_set = true;
        if (section == "partition" && (key == "minority" || key == "majority")) classes_set = true;
        if (section == "model" && key == "gen_output") gen_output_set = true;
    }

    if (!have_seed) throw ConfigError("[experiment] seed: required field is missing");

    // Preset defaults, unless set explicitly.
    const std::string kind = resolve_preset(cfg.partition.preset);
    if (kind == "equal-total" && !majority_counts_set) cfg.partition.majority_counts = {2500};
    if (kind == "multi-minority") {
        if (!classes_set) {
            cfg.partition.minority_classes = {0, 1};
            cfg.partition.majority_classes = {2, 3, 4, 5, 6, 7, 8, 9};
        }
        if (!minority_count_set) cfg.partition.minority_count = 5000;
        if (!majority_counts_set) cfg.partition.majority_counts = {1000};
    }
    if (cfg.dataset.kind == DatasetSection::Kind::Idx) {
        if (cfg.dataset.images.empty() || cfg.dataset.labels.empty()) {
            throw ConfigError("[dataset] images/labels: required for kind = idx");
        }
        if (!gen_output_set) cfg.model.gen_output = Activation::Tanh;
    } else {
        try {
            cfg.dataset.gmm.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("[dataset] modes: ") + e.what());
        }
    }
    try {
        cfg.federation.local.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("[federation] ") + e.what());
    }
    make_partition_spec(cfg.partition, cfg.federation.num_clients);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_config(text);
}

std::string content_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace fedgan
