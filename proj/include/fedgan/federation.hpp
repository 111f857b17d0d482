#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fedgan/gan.hpp"
#include "fedgan/metrics.hpp"
#include "fedgan/nn.hpp"

namespace fedgan {

/// Parameters of one generator or discriminator as exchanged with the aggregator.
using ModelParams = DenseNet;

struct ClientState {
    std::size_t id = 1;  // 1-based
    Matrix dataset;
    GanPair pair;
};

enum class Aggregation { Mean, Sum };

/// Optional per-round evaluation of the global generator.
struct ReportSpec {
    ModeCenters centers;
    std::vector<std::size_t> minority_classes;
    std::size_t samples = 10000;
};

struct FederationConfig {
    std::size_t num_clients = 5;
    std::size_t rounds = 3;
    TrainConfig local;
    std::size_t aggregator_epochs = 100;
    std::size_t samples_per_client = 10000;
    std::uint64_t master_seed = 0;
    Aggregation aggregation = Aggregation::Mean;
    /// Train clients on separate threads. Every client draws from its own
    /// substream, so results do not depend on scheduling.
    bool parallel = false;
    std::optional<ReportSpec> report;

    void validate() const;
};

struct Metadata {
    Matrix samples;
    std::vector<std::size_t> origin;  // client id per row
};

/// Parameter traffic between clients and aggregator during one round.
struct MessageLedger {
    std::size_t upload_messages = 0;
    std::size_t upload_bytes = 0;
    std::size_t download_messages = 0;
    std::size_t download_bytes = 0;

    std::size_t messages() const { return upload_messages + download_messages; }
    std::size_t bytes() const { return upload_bytes + download_bytes; }
    friend bool operator==(const MessageLedger&, const MessageLedger&) = default;
};

struct RoundReport {
    std::size_t round = 0;
    std::vector<EpochLoss> client_losses;      // final-epoch losses, client order
    std::optional<EpochLoss> aggregator_loss;  // final retraining epoch, Bias-Free only
    std::uint64_t generator_id = 0;
    std::uint64_t discriminator_id = 0;
    MessageLedger ledger;
    std::optional<BiasReport> bias;
};

struct FederationResult {
    std::vector<RoundReport> rounds;
    GanPair global;
};

/// Element-wise mean (or sum) of identically shaped models. Each element is
/// reduced over its sorted values, so the result does not depend on input order.
ModelParams average_params(std::span<const ModelParams> models,
                           Aggregation aggregation = Aggregation::Mean);

/// `samples_per_client` rows from each generator, tagged with origin ids 1..M in
/// generator order.
Metadata generate_metadata(std::span<const DenseNet> generators, const LatentSpec& latent,
                           std::size_t samples_per_client, Rng& rng);
Metadata generate_metadata(std::span<const ClientState> clients, std::size_t samples_per_client,
                           Rng& rng);

/// Trains the global pair on metadata as if it were real data.
TrainTrace retrain_on_metadata(GanPair& global, const Metadata& md, std::size_t epochs,
                               const TrainConfig& cfg, Rng& rng);

/// One client per dataset, ids 1..M, all initialised with the same parameters
/// drawn from the master seed.
std::vector<ClientState> make_clients(std::span<const Matrix> datasets, const GanArchitecture& arch,
                                      const FederationConfig& cfg);

FederationResult run_fedgan(std::vector<ClientState>& clients, const FederationConfig& cfg);

/// FedGAN plus metadata generation and retraining of the averaged pair at the
/// aggregator before each broadcast.
FederationResult run_biasfree_fedgan(std::vector<ClientState>& clients, const FederationConfig& cfg);

/// Evaluates `generator` on `spec.samples` latent draws.
BiasReport evaluate_bias(const GanPair& pair, const ReportSpec& spec, Rng& rng);

}  // namespace fedgan
