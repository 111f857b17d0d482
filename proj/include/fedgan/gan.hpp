#pragma once

#include <cstddef>
#include <vector>

#include "fedgan/matrix.hpp"
#include "fedgan/nn.hpp"
#include "fedgan/rng.hpp"

namespace fedgan {

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before any log.
inline constexpr double kProbClamp = 1e-7;

enum class LatentDistribution { StandardNormal, Uniform };

struct LatentSpec {
    std::size_t dim = 2;
    LatentDistribution distribution = LatentDistribution::StandardNormal;
};

Matrix sample_latent(const LatentSpec& spec, std::size_t n, Rng& rng);

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    double gen_lr = 1e-4;   // eta_1
    double disc_lr = 1e-4;  // eta_2
    std::size_t disc_steps_per_gen_step = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;

    /// Throws ConfigError unless every count and rate is positive.
    void validate() const;
};

/// Generator/discriminator sizes. Hidden layers use relu; the generator output
/// is identity or tanh, the discriminator ends in a single sigmoid unit.
struct GanArchitecture {
    std::size_t data_width = 2;
    LatentSpec latent;
    std::vector<std::size_t> gen_hidden{32, 32};
    std::vector<std::size_t> disc_hidden{32, 32};
    Activation gen_output = Activation::Identity;
};

struct GanPair {
    DenseNet generator;
    DenseNet discriminator;
    AdamState gen_opt;
    AdamState disc_opt;
    LatentSpec latent;
};

GanPair make_gan_pair(const GanArchitecture& arch, const TrainConfig& cfg, Rng& rng);

/// Replaces both optimizer states with zeroed moments sized for the current nets.
void reset_optimizers(GanPair& pair, const TrainConfig& cfg);

/// -mean log p_real - mean log(1 - p_fake), on column vectors of probabilities.
double disc_loss(const Matrix& disc_out_real, const Matrix& disc_out_fake);
/// Non-saturating generator loss: -mean log p_fake.
double gen_loss(const Matrix& disc_out_fake);

/// d disc_loss / d p_real and d disc_loss / d p_fake, using clamped probabilities.
std::pair<Matrix, Matrix> disc_loss_grad(const Matrix& disc_out_real, const Matrix& disc_out_fake);
Matrix gen_loss_grad(const Matrix& disc_out_fake);

struct EpochLoss {
    double disc = 0.0;
    double gen = 0.0;
};

struct TrainTrace {
    std::vector<EpochLoss> epochs;
};

/// Trains `pair` in place on `data` for cfg.epochs epochs. Each epoch shuffles the
/// rows; each mini-batch takes disc_steps_per_gen_step discriminator steps against
/// fresh fakes followed by one generator step. A final partial batch is kept.
TrainTrace local_train(GanPair& pair, const Matrix& data, const TrainConfig& cfg, Rng& rng);

/// `n` generator samples.
Matrix generate(const GanPair& pair, std::size_t n, Rng& rng);

}  // namespace fedgan
