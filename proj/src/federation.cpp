#include "fedgan/federation.hpp"

#include <algorithm>
#include <future>
#include <string>

#include "fedgan/error.hpp"
#include "fedgan/snapshot.hpp"

namespace fedgan {

void FederationConfig::validate() const {
    if (num_clients == 0) throw ConfigError("federation needs at least one client");
    local.validate();
    if (report && report->samples == 0) throw ConfigError("report sample count must be positive");
}

ModelParams average_params(std::span<const ModelParams> models, Aggregation aggregation) {
    if (models.empty()) throw AggregationError("cannot aggregate an empty model list");
    const ModelParams& first = models.front();
    std::vector<std::vector<double>> flats;
    flats.reserve(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) {
        if (!models[i].same_shape(first)) {
            throw AggregationError("model from client " + std::to_string(i + 1) +
                                   " does not match the shape of client 1");
        }
        flats.push_back(models[i].flatten());
    }

    const std::size_t m = models.size();
    std::vector<double> out(flats.front().size());
    std::vector<double> column(m);
    for (std::size_t k = 0; k < out.size(); ++k) {
        for (std::size_t i = 0; i < m; ++i) column[i] = flats[i][k];
        std::sort(column.begin(), column.end());
        if (aggregation == Aggregation::Sum) {
            double sum = 0.0;
            for (double v : column) sum += v;
            out[k] = sum;
        } else {
            // Offsets from the minimum keep the mean of equal values exact.
            double offset = 0.0;
            for (double v : column) offset += v - column.front();
            out[k] = column.front() + offset / static_cast<double>(m);
        }
    }
    ModelParams result = first;
    result.assign_flat(out);
    return result;
}

Metadata generate_metadata(std::span<const DenseNet> generators, const LatentSpec& latent,
                           std::size_t samples_per_client, Rng& rng) {
    Metadata md;
    const std::size_t width = generators.empty() ? 0 : generators.front().output_width();
    md.samples = Matrix(0, width);
    md.origin.reserve(generators.size() * samples_per_client);
    if (samples_per_client == 0) return md;
    for (std::size_t i = 0; i < generators.size(); ++i) {
        if (generators[i].output_width() != width) {
            throw DimensionError("generator " + std::to_string(i + 1) + " output width differs");
        }
        md.samples.append_rows(predict(generators[i], sample_latent(latent, samples_per_client, rng)));
        md.origin.insert(md.origin.end(), samples_per_client, i + 1);
    }
    return md;
}

Metadata generate_metadata(std::span<const ClientState> clients, std::size_t samples_per_client,
                           Rng& rng) {
    std::vector<DenseNet> gens;
    gens.reserve(clients.size());
    for (const auto& c : clients) gens.push_back(c.pair.generator);
    const LatentSpec latent = clients.empty() ? LatentSpec{} : clients.front().pair.latent;
    Metadata md = generate_metadata(gens, latent, samples_per_client, rng);
    for (std::size_t& o : md.origin) o = clients[o - 1].id;
    return md;
}

TrainTrace retrain_on_metadata(GanPair& global, const Metadata& md, std::size_t epochs,
                               const TrainConfig& cfg, Rng& rng) {
    if (epochs == 0) return {};
    if (md.samples.rows() == 0) throw EmptyMetadataError("cannot retrain on empty metadata");
    if (md.samples.cols() != global.generator.output_width()) {
        throw DimensionError("metadata width " + std::to_string(md.samples.cols()) +
                             " does not match generator output width " +
                             std::to_string(global.generator.output_width()));
    }
    TrainConfig retrain = cfg;
    retrain.epochs = epochs;
    return local_train(global, md.samples, retrain, rng);
}

std::vector<ClientState> make_clients(std::span<const Matrix> datasets, const GanArchitecture& arch,
                                      const FederationConfig& cfg) {
    Rng init = substream(cfg.master_seed, 0, streams::kInit);
    const GanPair initial = make_gan_pair(arch, cfg.local, init);
    std::vector<ClientState> clients;
    clients.reserve(datasets.size());
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        if (datasets[i].rows() == 0) {
            throw ConfigError("client " + std::to_string(i + 1) + " has an empty dataset");
        }
        clients.push_back({i + 1, datasets[i], initial});
    }
    return clients;
}

BiasReport evaluate_bias(const GanPair& pair, const ReportSpec& spec, Rng& rng) {
    const Matrix samples = generate(pair, spec.samples, rng);
    return bias_report(assign_modes(samples, spec.centers), spec.centers.num_classes(),
                       spec.minority_classes);
}

namespace {

void check_clients(const std::vector<ClientState>& clients, const FederationConfig& cfg) {
    cfg.validate();
    if (clients.empty()) throw ConfigError("federation has zero clients");
    if (clients.size() != cfg.num_clients) {
        throw ConfigError("config expects " + std::to_string(cfg.num_clients) + " clients, got " +
                          std::to_string(clients.size()));
    }
    const auto& ref = clients.front().pair;
    for (const auto& c : clients) {
        if (!c.pair.generator.same_shape(ref.generator) ||
            !c.pair.discriminator.same_shape(ref.discriminator)) {
            throw ConfigError("client " + std::to_string(c.id) + " architecture differs from client " +
                              std::to_string(clients.front().id));
        }
        if (c.dataset.rows() == 0) {
            throw ConfigError("client " + std::to_string(c.id) + " has an empty dataset");
        }
    }
}

std::vector<EpochLoss> train_clients(std::vector<ClientState>& clients, const FederationConfig& cfg,
                                     std::size_t round) {
    auto train_one = [&](ClientState& c) {
        Rng rng = substream(cfg.master_seed, round, c.id);
        const auto trace = local_train(c.pair, c.dataset, cfg.local, rng);
        return trace.epochs.empty() ? EpochLoss{} : trace.epochs.back();
    };
    std::vector<EpochLoss> losses(clients.size());
    if (cfg.parallel && clients.size() > 1) {
        std::vector<std::future<EpochLoss>> jobs;
        jobs.reserve(clients.size());
        for (auto& c : clients) jobs.push_back(std::async(std::launch::async, train_one, std::ref(c)));
        for (std::size_t i = 0; i < jobs.size(); ++i) losses[i] = jobs[i].get();
    } else {
        for (std::size_t i = 0; i < clients.size(); ++i) losses[i] = train_one(clients[i]);
    }
    return losses;
}

FederationResult run_rounds(std::vector<ClientState>& clients, const FederationConfig& cfg,
                            bool retrain_at_aggregator) {
    check_clients(clients, cfg);
    FederationResult result;
    result.global = clients.front().pair;

    for (std::size_t n = 1; n <= cfg.rounds; ++n) {
        RoundReport report;
        report.round = n;
        report.client_losses = train_clients(clients, cfg, n);

        // Upload: every client ships its generator and discriminator.
        std::vector<DenseNet> generators;
        std::vector<DenseNet> discriminators;
        for (const auto& c : clients) {
            const auto g_bytes = encode_snapshot(c.pair.generator);
            const auto d_bytes = encode_snapshot(c.pair.discriminator);
            report.ledger.upload_messages += 2;
            report.ledger.upload_bytes += g_bytes.size() + d_bytes.size();
            generators.push_back(decode_snapshot(g_bytes));
            discriminators.push_back(decode_snapshot(d_bytes));
        }

        Metadata md;
        if (retrain_at_aggregator) {
            Rng md_rng = substream(cfg.master_seed, n, streams::kAggregatorMetadata);
            md = generate_metadata(generators, clients.front().pair.latent, cfg.samples_per_client,
                                   md_rng);
        }

        GanPair& global = result.global;
        global.latent = clients.front().pair.latent;
        global.generator = average_params(generators, cfg.aggregation);
        global.discriminator = average_params(discriminators, cfg.aggregation);
        reset_optimizers(global, cfg.local);

        if (retrain_at_aggregator) {
            Rng train_rng = substream(cfg.master_seed, n, streams::kAggregatorTrain);
            const auto trace = retrain_on_metadata(global, md, cfg.aggregator_epochs, cfg.local, train_rng);
            if (!trace.epochs.empty()) report.aggregator_loss = trace.epochs.back();
            reset_optimizers(global, cfg.local);
        }

        // Broadcast: one generator and one discriminator message per client.
        const auto g_bytes = encode_snapshot(global.generator);
        const auto d_bytes = encode_snapshot(global.discriminator);
        for (auto& c : clients) {
            report.ledger.download_messages += 2;
            report.ledger.download_bytes += g_bytes.size() + d_bytes.size();
            c.pair.generator = decode_snapshot(g_bytes);
            c.pair.discriminator = decode_snapshot(d_bytes);
            reset_optimizers(c.pair, cfg.local);
        }

        report.generator_id = snapshot_id(global.generator);
        report.discriminator_id = snapshot_id(global.discriminator);
        if (cfg.report) {
            Rng report_rng = substream(cfg.master_seed, n, streams::kReport);
            report.bias = evaluate_bias(global, *cfg.report, report_rng);
        }
        result.rounds.push_back(std::move(report));
    }
    return result;
}

}  // namespace

FederationResult run_fedgan(std::vector<ClientState>& clients, const FederationConfig& cfg) {
    return run_rounds(clients, cfg, false);
}

FederationResult run_biasfree_fedgan(std::vector<ClientState>& clients, const FederationConfig& cfg) {
    return run_rounds(clients, cfg, true);
}

}  // namespace fedgan
