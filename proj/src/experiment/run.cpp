#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fedgan/error.hpp"
#include "fedgan/experiment.hpp"
#include "fedgan/snapshot.hpp"

namespace fedgan {

namespace {

struct PreparedData {
    std::vector<Matrix> client_data;
    ModeCenters centers;
    std::size_t image_side = 0;  // 0 for non-image data
};

PreparedData prepare_data(const ExperimentConfig& cfg) {
    PreparedData out;
    LabeledDataset ds;
    if (cfg.dataset.kind == DatasetSection::Kind::Gmm) {
        Rng rng = substream(cfg.federation.master_seed, 0, streams::kData);
        ds = make_gmm_dataset(cfg.dataset.gmm, cfg.dataset.per_mode, rng);
        out.centers = cfg.dataset.gmm.centers();
    } else {
        auto images = load_idx(cfg.dataset.images, cfg.dataset.labels, {cfg.dataset.downsample});
        ds = std::move(images.dataset);
        out.centers = class_means(ds);
        out.image_side = images.rows == images.cols ? images.rows : 0;
    }
    Rng rng = substream(cfg.federation.master_seed, 0, streams::kPartition);
    const auto spec = make_partition_spec(cfg.partition, cfg.federation.num_clients);
    for (auto& part : partition(ds, spec, cfg.federation.num_clients, rng)) {
        out.client_data.push_back(std::move(part.samples));
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string round_csv(const RoundReport& r) {
    std::ostringstream os;
    os << "party,disc_loss,gen_loss,upload_messages,upload_bytes,download_messages,download_bytes\n";
    const std::size_t m = r.client_losses.size();
    const std::size_t up_msgs = m ? r.ledger.upload_messages / m : 0;
    const std::size_t up_bytes = m ? r.ledger.upload_bytes / m : 0;
    const std::size_t down_msgs = m ? r.ledger.download_messages / m : 0;
    const std::size_t down_bytes = m ? r.ledger.download_bytes / m : 0;
    for (std::size_t i = 0; i < m; ++i) {
        os << "client" << (i + 1) << ',' << format_double(r.client_losses[i].disc) << ','
           << format_double(r.client_losses[i].gen) << ',' << up_msgs << ',' << up_bytes << ','
           << down_msgs << ',' << down_bytes << '\n';
    }
    os << "aggregator,";
    if (r.aggregator_loss) {
        os << format_double(r.aggregator_loss->disc) << ',' << format_double(r.aggregator_loss->gen);
    } else {
        os << ',';
    }
    os << ",0,0,0,0\n";
    os << "total,,," << r.ledger.upload_messages << ',' << r.ledger.upload_bytes << ','
       << r.ledger.download_messages << ',' << r.ledger.download_bytes << '\n';
    return os.str();
}

std::string algorithm_name(Algorithm a) { return a == Algorithm::FedGan ? "fedgan" : "biasfree"; }

void run_one(const ExperimentConfig& cfg, Algorithm algo, const PreparedData& data,
             const std::string& config_text, const RunOptions& options,
             const std::filesystem::path& dir, std::ostream& log) {
    std::filesystem::create_directories(dir);

    FederationConfig fed = cfg.federation;
    fed.parallel = fed.parallel || options.parallel;
    fed.report = ReportSpec{data.centers, cfg.partition.minority_classes, cfg.report.samples};

    GanArchitecture arch = cfg.model;
    arch.data_width = data.client_data.front().cols();

    auto clients = make_clients(data.client_data, arch, fed);
    const auto result = algo == Algorithm::FedGan ? run_fedgan(clients, fed) : run_biasfree_fedgan(clients, fed);

    for (const auto& r : result.rounds) {
        write_text(dir / ("round_" + std::to_string(r.round) + ".csv"), round_csv(r));
        log << algorithm_name(algo) << " round " << r.round << ": minority_share "
            << format_double(r.bias->minority_share) << ", balance_entropy "
            << format_double(r.bias->balance_entropy) << ", messages " << r.ledger.messages()
            << ", bytes " << r.ledger.bytes() << '\n';
    }

    Rng report_rng = substream(fed.master_seed, fed.rounds + 1, streams::kReport);
    const Matrix samples = generate(result.global, cfg.report.samples, report_rng);
    const auto classes = assign_modes(samples, data.centers);
    const auto bias = bias_report(classes, data.centers.num_classes(), cfg.partition.minority_classes);
    write_text(dir / "bias_report.csv", to_csv(bias));
    write_text(dir / "bias_report.json", to_json(bias));

    if (data.image_side == 0) {
        write_text(dir / "samples.csv", samples_to_csv(samples, &classes));
    } else {
        const std::size_t tiles = std::min(samples.rows(), cfg.report.grid_rows * cfg.report.grid_cols);
        std::vector<std::size_t> first(tiles);
        std::iota(first.begin(), first.end(), std::size_t{0});
        const Matrix shown = samples.gather_rows(first);
        const std::vector<std::size_t> shown_classes(classes.begin(), classes.begin() + tiles);
        write_text(dir / "samples.csv", samples_to_csv(shown, &shown_classes));
        write_bytes(dir / "grid.pgm", render_pgm_grid(shown, cfg.report.grid_rows, cfg.report.grid_cols));
    }
    save_snapshot(result.global.generator, dir / "generator.fgbf");
    save_snapshot(result.global.discriminator, dir / "discriminator.fgbf");

    std::ostringstream manifest;
    manifest << "fedgan-run-manifest 1\n"
             << "name = " << cfg.name << '\n'
             << "algorithm = " << algorithm_name(algo) << '\n'
             << "seed = " << fed.master_seed << '\n'
             << "config_hash = " << content_hash(config_text) << '\n'
             << "rounds = " << fed.rounds << '\n'
             << "clients = " << fed.num_clients << '\n'
             << "final_minority_share = " << format_double(bias.minority_share) << '\n'
             << "final_balance_entropy = " << format_double(bias.balance_entropy) << '\n'
             << "--- config ---\n"
             << config_text;
    if (!config_text.empty() && config_text.back() != '\n') manifest << '\n';
    write_text(dir / "manifest.txt", manifest.str());

    log << algorithm_name(algo) << " final: minority_share " << format_double(bias.minority_share)
        << ", balance_entropy " << format_double(bias.balance_entropy) << " -> " << dir.string() << '\n';
}

}  // namespace

void cmd_run(const std::filesystem::path& config_path, const RunOptions& options, std::ostream& log) {
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open config " + config_path.string());
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    const ExperimentConfig cfg = parse_config(text);

    const PreparedData data = prepare_data(cfg);
    const std::filesystem::path root = options.output_override.empty() ? cfg.output : options.output_override;

    if (cfg.algorithm == Algorithm::FedGan || cfg.algorithm == Algorithm::Both) {
        run_one(cfg, Algorithm::FedGan, data, text, options, root / "fedgan", log);
    }
    if (cfg.algorithm == Algorithm::BiasFree || cfg.algorithm == Algorithm::Both) {
        run_one(cfg, Algorithm::BiasFree, data, text, options, root / "biasfree", log);
    }
}

}  // namespace fedgan
