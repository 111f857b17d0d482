#include "fedgan/gan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedgan/error.hpp"

namespace fedgan {

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

void check_probabilities(const Matrix& m, const char* what) {
    if (m.rows() == 0) {
        throw EmptyBatchError(std::string(what) + ": empty batch");
    }
    if (m.cols() != 1) {
        throw DimensionError(std::string(what) + ": expected a column vector of probabilities");
    }
}

AdamConfig adam_config(const TrainConfig& cfg, double lr) {
    return {lr, cfg.beta1, cfg.beta2, 1e-8};
}

Matrix stack(const Matrix& top, const Matrix& bottom) {
    Matrix out = top;
    out.append_rows(bottom);
    return out;
}

}  // namespace

Matrix sample_latent(const LatentSpec& spec, std::size_t n, Rng& rng) {
    Matrix z(n, spec.dim);
    if (spec.distribution == LatentDistribution::StandardNormal) {
        std::normal_distribution<double> dist(0.0, 1.0);
        for (double& v : z.values()) v = dist(rng);
    } else {
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (double& v : z.values()) v = dist(rng);
    }
    return z;
}

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (disc_steps_per_gen_step == 0) throw ConfigError("disc_steps_per_gen_step must be positive");
    if (!(gen_lr > 0.0) || !(disc_lr > 0.0)) throw ConfigError("learning rates must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in (0,1)");
    }
}

GanPair make_gan_pair(const GanArchitecture& arch, const TrainConfig& cfg, Rng& rng) {
    if (arch.latent.dim == 0) throw ConfigError("latent dimension must be at least 1");
    if (arch.data_width == 0) throw ConfigError("data width must be at least 1");
    GanPair pair;
    pair.latent = arch.latent;
    pair.generator = make_mlp(arch.latent.dim, arch.gen_hidden, arch.data_width, Activation::Relu,
                              arch.gen_output, rng);
    pair.discriminator = make_mlp(arch.data_width, arch.disc_hidden, 1, Activation::Relu,
                                  Activation::Sigmoid, rng);
    reset_optimizers(pair, cfg);
    return pair;
}

void reset_optimizers(GanPair& pair, const TrainConfig& cfg) {
    pair.gen_opt = make_adam(pair.generator, adam_config(cfg, cfg.gen_lr));
    pair.disc_opt = make_adam(pair.discriminator, adam_config(cfg, cfg.disc_lr));
}

double disc_loss(const Matrix& disc_out_real, const Matrix& disc_out_fake) {
    check_probabilities(disc_out_real, "disc_loss(real)");
    check_probabilities(disc_out_fake, "disc_loss(fake)");
    double real = 0.0;
    for (double p : disc_out_real.values()) real -= std::log(clamp_prob(p));
    double fake = 0.0;
    for (double p : disc_out_fake.values()) fake -= std::log(1.0 - clamp_prob(p));
    return real / static_cast<double>(disc_out_real.rows()) +
           fake / static_cast<double>(disc_out_fake.rows());
}

double gen_loss(const Matrix& disc_out_fake) {
    check_probabilities(disc_out_fake, "gen_loss");
    double loss = 0.0;
    for (double p : disc_out_fake.values()) loss -= std::log(clamp_prob(p));
    return loss / static_cast<double>(disc_out_fake.rows());
}

std::pair<Matrix, Matrix> disc_loss_grad(const Matrix& disc_out_real, const Matrix& disc_out_fake) {
    check_probabilities(disc_out_real, "disc_loss(real)");
    check_probabilities(disc_out_fake, "disc_loss(fake)");
    const double nr = static_cast<double>(disc_out_real.rows());
    const double nf = static_cast<double>(disc_out_fake.rows());
    Matrix gr(disc_out_real.rows(), 1);
    Matrix gf(disc_out_fake.rows(), 1);
    for (std::size_t i = 0; i < gr.rows(); ++i) gr(i, 0) = -1.0 / (nr * clamp_prob(disc_out_real(i, 0)));
    for (std::size_t i = 0; i < gf.rows(); ++i) {
        gf(i, 0) = 1.0 / (nf * (1.0 - clamp_prob(disc_out_fake(i, 0))));
    }
    return {std::move(gr), std::move(gf)};
}

Matrix gen_loss_grad(const Matrix& disc_out_fake) {
    check_probabilities(disc_out_fake, "gen_loss");
    const double n = static_cast<double>(disc_out_fake.rows());
    Matrix g(disc_out_fake.rows(), 1);
    for (std::size_t i = 0; i < g.rows(); ++i) g(i, 0) = -1.0 / (n * clamp_prob(disc_out_fake(i, 0)));
    return g;
}

TrainTrace local_train(GanPair& pair, const Matrix& data, const TrainConfig& cfg, Rng& rng) {
    cfg.validate();
    TrainTrace trace;
    if (cfg.epochs == 0) return trace;

    if (data.cols() != pair.generator.output_width()) {
        throw DimensionError("training data width " + std::to_string(data.cols()) +
                             " does not match generator output width " +
                             std::to_string(pair.generator.output_width()));
    }
    if (pair.discriminator.input_width() != pair.generator.output_width() ||
        pair.discriminator.output_width() != 1) {
        throw DimensionError("discriminator does not fit the generator");
    }
    if (data.rows() == 0) {
        throw EmptyBatchError("local_train: no training rows");
    }
    if (pair.gen_opt.m.size() != pair.generator.parameter_count() ||
        pair.disc_opt.m.size() != pair.discriminator.parameter_count()) {
        reset_optimizers(pair, cfg);
    }
    pair.gen_opt.config = adam_config(cfg, cfg.gen_lr);
    pair.disc_opt.config = adam_config(cfg, cfg.disc_lr);

    const std::size_t batch = std::min(cfg.batch_size, data.rows());
    std::vector<std::size_t> order(data.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});

    trace.epochs.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochLoss sum;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t count = std::min(batch, order.size() - start);
            const Matrix real = data.gather_rows(std::span(order).subspan(start, count));

            for (std::size_t k = 0; k < cfg.disc_steps_per_gen_step; ++k) {
                const Matrix fake = predict(pair.generator, sample_latent(pair.latent, count, rng));
                auto d = forward(pair.discriminator, stack(real, fake));
                Matrix p_real(count, 1);
                Matrix p_fake(count, 1);
                for (std::size_t i = 0; i < count; ++i) {
                    p_real(i, 0) = d.output(i, 0);
                    p_fake(i, 0) = d.output(count + i, 0);
                }
                const double loss = disc_loss(p_real, p_fake);
                auto [g_real, g_fake] = disc_loss_grad(p_real, p_fake);
                const auto grads = backward(pair.discriminator, d.tape, stack(g_real, g_fake));
                adam_step(pair.discriminator, grads, pair.disc_opt);
                if (k + 1 == cfg.disc_steps_per_gen_step) sum.disc += loss;
            }

            auto g = forward(pair.generator, sample_latent(pair.latent, count, rng));
            auto d = forward(pair.discriminator, g.output);
            sum.gen += gen_loss(d.output);
            const auto d_grads = backward(pair.discriminator, d.tape, gen_loss_grad(d.output));
            const auto g_grads = backward(pair.generator, g.tape, d_grads.input);
            adam_step(pair.generator, g_grads, pair.gen_opt);
            ++batches;
        }
        const double n = static_cast<double>(batches);
        trace.epochs.push_back({sum.disc / n, sum.gen / n});
    }
    return trace;
}

Matrix generate(const GanPair& pair, std::size_t n, Rng& rng) {
    if (n == 0) return Matrix(0, pair.generator.output_width());
    return predict(pair.generator, sample_latent(pair.latent, n, rng));
}

}  // namespace fedgan
