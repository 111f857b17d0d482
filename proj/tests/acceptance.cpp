// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <future>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fedgan/data.hpp"
#include "fedgan/error.hpp"
#include "fedgan/experiment.hpp"
#include "fedgan/federation.hpp"
#include "fedgan/gan.hpp"
#include "support.hpp"

using namespace fedgan;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2e", v);
    return buf;
}

std::string fmt(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};

// ---------------------------------------------------------------------------
// Property criteria

Outcome gradient_oracle() {
    const auto t0 = Clock::now();
    Rng rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        // Half the trials score a sigmoid discriminator with the GAN losses,
        // the rest use a random linear functional of an arbitrary net.
        const bool gan_loss = trial % 2 == 0;
        DenseNet net = fedgan::testing::random_net(rng, false);
        if (gan_loss) {
            auto layers = net.layers();
            const std::size_t in = layers.back().out();
            std::vector<LayerShape> head{{in, 1, Activation::Sigmoid}};
            layers.push_back(init_dense(head, rng).layers().front());
            net = DenseNet(std::move(layers));
        }
        std::uniform_int_distribution<std::size_t> rows_dist(1, 8);
        const std::size_t rows = rows_dist(rng);
        const Matrix batch = fedgan::testing::random_matrix(rows, net.input_width(), rng);
        const Matrix weights = fedgan::testing::random_matrix(rows, net.output_width(), rng);
        const std::size_t split = rows / 2;

        auto loss_of = [&](const Matrix& out) {
            if (gan_loss) {
                Matrix real(split, 1), fake(rows - split, 1);
                for (std::size_t r = 0; r < rows; ++r) (r < split ? real(r, 0) : fake(r - split, 0)) = out(r, 0);
                if (split == 0) return gen_loss(fake);
                return disc_loss(real, fake);
            }
            double s = 0.0;
            for (std::size_t k = 0; k < out.size(); ++k) s += out.values()[k] * weights.values()[k];
            return s;
        };
        auto loss_grad = [&](const Matrix& out) {
            if (!gan_loss) return weights;
            Matrix g(rows, 1);
            Matrix real(split, 1), fake(rows - split, 1);
            for (std::size_t r = 0; r < rows; ++r) (r < split ? real(r, 0) : fake(r - split, 0)) = out(r, 0);
            if (split == 0) {
                const Matrix gf = gen_loss_grad(fake);
                for (std::size_t r = 0; r < rows; ++r) g(r, 0) = gf(r, 0);
                return g;
            }
            const auto [gr, gf] = disc_loss_grad(real, fake);
            for (std::size_t r = 0; r < rows; ++r) g(r, 0) = r < split ? gr(r, 0) : gf(r - split, 0);
            return g;
        };

        auto fr = forward(net, batch);
        const auto analytic = fedgan::testing::flatten(backward(net, fr.tape, loss_grad(fr.output)));
        const auto numeric = fedgan::testing::numeric_param_grad(
            net, [&](const DenseNet& n) { return loss_of(fedgan::testing::naive_forward(n, batch)); });
        for (std::size_t k = 0; k < analytic.size(); ++k)
            worst = std::max(worst, fedgan::testing::relative_error(analytic[k], numeric[k]));
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-4 && secs < 10.0,
            "max relative error " + sci(worst) + " over 50 nets, " + fmt(secs, 2) + " s"};
}

Outcome aggregation_identities() {
    Rng rng(7);
    const DenseNet base = fedgan::testing::random_net(rng, false);
    const std::vector<DenseNet> same(5, base);
    const bool idempotent = average_params(same) == base;

    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<DenseNet> models;
    for (int i = 0; i < 5; ++i) {
        DenseNet m = base;
        m.update_each([&](double& p, std::size_t) { p = noise(rng); });
        models.push_back(m);
    }
    const auto avg = average_params(models).flatten();
    double worst = 0.0;
    std::vector<std::vector<double>> flat;
    for (const auto& m : models) flat.push_back(m.flatten());
    for (std::size_t k = 0; k < avg.size(); ++k) {
        double sum = 0.0;
        for (const auto& f : flat) sum += f[k];
        worst = std::max(worst, std::abs(avg[k] - sum / 5.0));
    }
    std::vector<std::size_t> order(5);
    std::iota(order.begin(), order.end(), 0);
    bool invariant = true;
    while (std::next_permutation(order.begin(), order.end())) {
        std::vector<DenseNet> perm;
        for (auto i : order) perm.push_back(models[i]);
        invariant = invariant && average_params(perm).flatten() == avg;
    }
    return {idempotent && invariant && worst <= 1e-12,
            std::string("identical->same ") + (idempotent ? "yes" : "no") + ", 120 permutations exact " +
                (invariant ? "yes" : "no") + ", max oracle deviation " + sci(worst)};
}

Outcome metadata_arithmetic() {
    const auto t0 = Clock::now();
    FederationConfig cfg;
    cfg.num_clients = 5;
    cfg.master_seed = 3;
    GanArchitecture arch;
    arch.gen_hidden = {4};
    arch.disc_hidden = {4};
    const std::vector<Matrix> data(5, Matrix(4, 2, 0.0));
    const auto clients = make_clients(data, arch, cfg);
    Rng rng(1);
    const Metadata md = generate_metadata(clients, 10000, rng);
    bool tags = md.origin.size() == 50000;
    for (std::size_t r = 0; tags && r < md.origin.size(); ++r) tags = md.origin[r] == r / 10000 + 1;
    const double secs = seconds_since(t0);
    return {md.samples.rows() == 50000 && tags && secs < 5.0,
            std::to_string(md.samples.rows()) + " rows, origin tags " + (tags ? "ok" : "wrong") + ", " +
                fmt(secs, 2) + " s"};
}

Outcome degenerate_equivalence() {
    Rng data_rng(11);
    const auto ds = make_gmm_dataset(GaussianMixtureSpec::two_mode_default(), 100, data_rng);
    const std::vector<Matrix> data{ds.samples};
    FederationConfig cfg;
    cfg.num_clients = 1;
    cfg.rounds = 3;
    cfg.local.epochs = 5;
    cfg.samples_per_client = 0;
    cfg.aggregator_epochs = 0;
    cfg.master_seed = 99;
    GanArchitecture arch;
    arch.gen_hidden = {16, 16};
    arch.disc_hidden = {16, 16};

    auto a = make_clients(data, arch, cfg);
    auto b = make_clients(data, arch, cfg);
    GanPair plain = a.front().pair;
    const DenseNet initial = plain.generator;
    const auto fed = run_fedgan(a, cfg);
    const auto free = run_biasfree_fedgan(b, cfg);
    for (std::size_t n = 1; n <= cfg.rounds; ++n) {
        Rng rng = substream(cfg.master_seed, n, 1);
        local_train(plain, data.front(), cfg.local, rng);
        reset_optimizers(plain, cfg.local);
    }
    const bool same = fed.global.generator == free.global.generator &&
                      fed.global.discriminator == free.global.discriminator &&
                      fed.global.generator == plain.generator &&
                      fed.global.discriminator == plain.discriminator;
    const bool moved = !(plain.generator == initial);
    return {same && moved, same ? "FedGAN, Bias-Free and plain local training bit-identical"
                                : "final parameters differ"};
}

// ---------------------------------------------------------------------------
// Scaled reproductions on Gaussian mixtures

struct Scenario {
    std::string name;
    GaussianMixtureSpec mixture;
    std::size_t per_mode = 0;
    std::size_t clients = 5;
    PartitionSpec split;
    std::vector<std::size_t> minority;
};

/// Desk-scale training setup shared by the mixture scenarios.
FederationConfig desk_config(std::size_t clients, std::uint64_t seed) {
    FederationConfig cfg;
    cfg.num_clients = clients;
    cfg.rounds = 3;
    cfg.local.epochs = 100;
    cfg.local.batch_size = 64;
    cfg.local.gen_lr = 1e-4;
    cfg.local.disc_lr = 1e-4;
    cfg.local.beta1 = 0.5;
    cfg.aggregator_epochs = 100;
    cfg.samples_per_client = 2000;
    cfg.master_seed = seed;
    return cfg;
}

struct PairedRun {
    double seconds = 0.0;
    BiasReport fedgan;
    BiasReport biasfree;
    bool ledgers_equal = true;
    std::size_t messages = 0;
    std::size_t bytes = 0;
};

PairedRun run_scenario(const Scenario& sc, std::uint64_t seed, bool with_biasfree) {
    const auto t0 = Clock::now();
    Rng data_rng = substream(seed, 0, streams::kData);
    const auto ds = make_gmm_dataset(sc.mixture, sc.per_mode, data_rng);
    Rng part_rng = substream(seed, 0, streams::kPartition);
    const auto parts = partition(ds, sc.split, sc.clients, part_rng);
    std::vector<Matrix> data;
    for (const auto& p : parts) data.push_back(p.samples);

    FederationConfig cfg = desk_config(sc.clients, seed);
    cfg.report = ReportSpec{sc.mixture.centers(), sc.minority, 10000};
    GanArchitecture arch;
    arch.data_width = sc.mixture.dim();

    PairedRun out;
    auto fed_clients = make_clients(data, arch, cfg);
    const auto fed = run_fedgan(fed_clients, cfg);
    out.fedgan = *fed.rounds.back().bias;
    if (with_biasfree) {
        auto free_clients = make_clients(data, arch, cfg);
        const auto free = run_biasfree_fedgan(free_clients, cfg);
        out.biasfree = *free.rounds.back().bias;
        out.ledgers_equal = fed.rounds.size() == free.rounds.size();
        for (std::size_t n = 0; out.ledgers_equal && n < fed.rounds.size(); ++n)
            out.ledgers_equal = fed.rounds[n].ledger == free.rounds[n].ledger;
    }
    out.messages = fed.rounds.back().ledger.messages();
    out.bytes = fed.rounds.back().ledger.bytes();
    out.seconds = seconds_since(t0);
    return out;
}

/// Runs the seeds concurrently, at most one per hardware thread.
std::vector<PairedRun> run_seeds(const Scenario& sc, bool with_biasfree) {
    const std::size_t width = std::max(1u, std::thread::hardware_concurrency());
    std::vector<PairedRun> runs;
    for (std::size_t start = 0; start < kSeeds.size(); start += width) {
        std::vector<std::future<PairedRun>> jobs;
        for (std::size_t i = start; i < std::min(kSeeds.size(), start + width); ++i)
            jobs.push_back(std::async(std::launch::async, run_scenario, std::cref(sc), kSeeds[i], with_biasfree));
        for (auto& j : jobs) runs.push_back(j.get());
    }
    return runs;
}

Scenario iid_scenario() {
    return {"iid", GaussianMixtureSpec::two_mode_default(), 5000, 5, PartitionSpec::iid(), {0}};
}

Scenario single_minority_scenario() {
    return {"single-minority", GaussianMixtureSpec::two_mode_default(), 8000, 5,
            PartitionSpec::minority_split(5, {0}, 2000, {1}, {2000, 2000, 2000, 2000}), {0}};
}

Scenario equal_total_scenario() {
    return {"equal-total", GaussianMixtureSpec::two_mode_default(), 2000, 4,
            PartitionSpec::minority_split(4, {0}, 2000, {1}, {667, 667, 666}), {0}};
}

Scenario multi_minority_scenario() {
    return {"multi-minority", GaussianMixtureSpec::four_mode_default(), 4000, 5,
            PartitionSpec::minority_split(5, {0, 1}, 1000, {2, 3}, {1000, 1000, 1000, 1000}), {0, 1}};
}

std::string per_seed(const std::vector<PairedRun>& runs, const std::function<std::string(const PairedRun&)>& f) {
    std::string s;
    for (std::size_t i = 0; i < runs.size(); ++i) s += (i ? " " : "") + ("s" + std::to_string(kSeeds[i]) + "=" + f(runs[i]));
    return s;
}

double max_seconds(const std::vector<PairedRun>& runs) {
    double m = 0.0;
    for (const auto& r : runs) m = std::max(m, r.seconds);
    return m;
}

Outcome biased_fedgan(const std::vector<PairedRun>& runs) {
    const auto hits = std::count_if(runs.begin(), runs.end(),
                                    [](const PairedRun& r) { return r.fedgan.minority_share <= 0.15; });
    return {hits >= 3, "FedGAN minority_share " +
                           per_seed(runs, [](const PairedRun& r) { return fmt(r.fedgan.minority_share); }) +
                           " (" + std::to_string(hits) + "/5 <= 0.15)"};
}

Outcome corrected_biasfree(const std::vector<PairedRun>& runs, double floor, double time_limit) {
    bool all = true;
    for (const auto& r : runs)
        all = all && r.biasfree.minority_share >= floor && r.biasfree.minority_share > r.fedgan.minority_share;
    const double secs = max_seconds(runs);
    return {all && secs < time_limit,
            "Bias-Free vs FedGAN minority_share " +
                per_seed(runs, [](const PairedRun& r) {
                    return fmt(r.biasfree.minority_share) + "/" + fmt(r.fedgan.minority_share);
                }) +
                " (need >= " + fmt(floor, 2) + " and greater on every seed), slowest seed " + fmt(secs, 1) + " s"};
}

// ---------------------------------------------------------------------------
// Runner artifacts

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool trees_equal(const fs::path& a, const fs::path& b, std::size_t& compared) {
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension();
        if (ext != ".csv" && ext != ".pgm") continue;
        const auto other = b / fs::relative(entry.path(), a);
        if (!fs::exists(other) || read_text(entry.path()) != read_text(other)) return false;
        ++compared;
    }
    return true;
}

Outcome determinism(const fs::path& configs) {
    const fs::path root = fs::temp_directory_path() / "fedgan_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);

    // An image preset needs IDX files; a small synthetic pair stands in for MNIST.
    LabeledDataset images;
    images.samples = Matrix(60, 16);
    Rng rng(5);
    std::uniform_real_distribution<double> jitter(-0.2, 0.2);
    for (std::size_t r = 0; r < 60; ++r) {
        images.labels.push_back(r % 3);
        for (std::size_t j = 0; j < 16; ++j)
            images.samples(r, j) = std::clamp((j % 3 == r % 3 ? 0.8 : -0.8) + jitter(rng), -1.0, 1.0);
    }
    save_idx(images, 4, 4, root / "images.idx", root / "labels.idx");
    {
        std::ofstream cfg(root / "images.cfg");
        cfg << "[experiment]\nname = determinism-images\nseed = 17\n"
            << "[dataset]\nkind = idx\nimages = " << (root / "images.idx").string()
            << "\nlabels = " << (root / "labels.idx").string() << "\ndownsample = 0\n"
            << "[partition]\npreset = fig3-single-minority\nminority_count = 20\nmajority_count = 10\n"
            << "[federation]\nclients = 3\nrounds = 2\nlocal_epochs = 3\naggregator_epochs = 3\n"
            << "samples_per_client = 50\nbatch_size = 16\n"
            << "[model]\ngen_hidden = 16\ndisc_hidden = 16\n[report]\nsamples = 200\ngrid = 4x4\n";
    }

    std::size_t compared = 0;
    bool ok = true;
    std::ostringstream log;
    for (const fs::path& cfg : {configs / "gmm-smoke.cfg", root / "images.cfg"}) {
        const auto stem = cfg.stem().string();
        cmd_run(cfg, {false, root / (stem + "-a")}, log);
        cmd_run(cfg, {false, root / (stem + "-b")}, log);
        ok = ok && trees_equal(root / (stem + "-a"), root / (stem + "-b"), compared);
    }
    const bool has_pgm = fs::exists(root / "images-a/fedgan/grid.pgm");
    return {ok && has_pgm && compared > 0,
            std::to_string(compared) + " CSV/PGM files compared across two runs of two presets, " +
                (ok ? "all identical" : "mismatch")};
}

Outcome idx_ingestion() {
    const fs::path root = fs::temp_directory_path() / "fedgan_acceptance_idx";
    fs::create_directories(root);
    auto put = [](std::vector<std::uint8_t>& b, std::uint32_t v) {
        for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
    };
    auto write = [](const fs::path& p, const std::vector<std::uint8_t>& b) {
        std::ofstream out(p, std::ios::binary);
        out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    };
    std::vector<std::uint8_t> labels;
    put(labels, 0x801);
    put(labels, 2);
    labels.insert(labels.end(), {3, 4});
    write(root / "labels", labels);

    std::vector<std::uint8_t> bad_magic;
    put(bad_magic, 0x802);
    put(bad_magic, 2);
    put(bad_magic, 2);
    put(bad_magic, 2);
    bad_magic.resize(bad_magic.size() + 8, 0);
    write(root / "bad_magic", bad_magic);

    std::vector<std::uint8_t> truncated;
    put(truncated, 0x803);
    put(truncated, 2);
    put(truncated, 28);
    put(truncated, 28);
    truncated.resize(truncated.size() + 28 * 28 + 100, 0);
    write(root / "truncated", truncated);

    auto throws = [&](const fs::path& img, auto tag) {
        try {
            (void)load_idx(img, root / "labels");
        } catch (const decltype(tag)&) {
            return true;
        } catch (...) {
            return false;
        }
        return false;
    };
    const bool magic = throws(root / "bad_magic", IdxMagicError(""));
    const bool trunc = throws(root / "truncated", IdxTruncatedError(""));
    std::string detail = std::string("bad magic -> IdxMagicError ") + (magic ? "yes" : "no") +
                         ", truncation -> IdxTruncatedError " + (trunc ? "yes" : "no");

    bool mnist_ok = true;
    const char* dir = std::getenv("FEDGAN_MNIST_DIR");
    const fs::path mnist = dir ? fs::path(dir) : fs::path("data/mnist");
    const auto img = mnist / "train-images-idx3-ubyte";
    const auto lab = mnist / "train-labels-idx1-ubyte";
    if (fs::exists(img) && fs::exists(lab)) {
        const auto loaded = load_idx(img, lab);
        const auto [lo, hi] = std::minmax_element(loaded.dataset.labels.begin(), loaded.dataset.labels.end());
        mnist_ok = loaded.dataset.size() == 60000 && *lo == 0 && *hi == 9;
        detail += ", MNIST " + std::to_string(loaded.dataset.size()) + " samples, labels " +
                  std::to_string(*lo) + "-" + std::to_string(*hi);
    } else {
        detail += ", MNIST files absent (canonical check skipped)";
    }
    return {magic && trunc && mnist_ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path configs = argc > 1 ? fs::path(argv[1]) : fs::path(FEDGAN_CONFIG_DIR);
    int failures = 0;
    auto report = [&](int id, const std::string& name, const std::function<Outcome()>& check) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("%s [%2d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "gradient oracle", gradient_oracle);
    report(2, "aggregation identities", aggregation_identities);
    report(3, "metadata arithmetic", metadata_arithmetic);
    report(4, "degenerate equivalence", degenerate_equivalence);

    report(5, "iid FedGAN covers both modes", [] {
        const auto runs = run_seeds(iid_scenario(), false);
        const auto hits = std::count_if(runs.begin(), runs.end(),
                                        [](const PairedRun& r) { return r.fedgan.balance_entropy >= 0.85; });
        const double secs = max_seconds(runs);
        return Outcome{hits >= 3 && secs < 120.0,
                       "balance_entropy " +
                           per_seed(runs, [](const PairedRun& r) { return fmt(r.fedgan.balance_entropy); }) +
                           " (" + std::to_string(hits) + "/5 >= 0.85), slowest seed " + fmt(secs, 1) + " s"};
    });

    std::vector<PairedRun> single, equal, multi;
    bool single_ok = true;
    try {
        single = run_seeds(single_minority_scenario(), true);
    } catch (const std::exception& e) {
        single_ok = false;
        std::printf("single-minority runs threw: %s\n", e.what());
    }
    report(6, "non-iid FedGAN is biased", [&] {
        if (!single_ok) return Outcome{false, "runs failed"};
        return biased_fedgan(single);
    });
    report(7, "Bias-Free recovers the minority", [&] {
        if (!single_ok) return Outcome{false, "runs failed"};
        return corrected_biasfree(single, 0.25, 300.0);
    });
    report(8, "equal-total variant", [&] {
        equal = run_seeds(equal_total_scenario(), true);
        const Outcome a = biased_fedgan(equal);
        const Outcome b = corrected_biasfree(equal, 0.25, 300.0);
        return Outcome{a.pass && b.pass, a.detail + "; " + b.detail};
    });
    report(9, "multi-minority variant", [&] {
        multi = run_seeds(multi_minority_scenario(), true);
        return corrected_biasfree(multi, 0.2, 300.0);
    });
    report(10, "communication parity", [&] {
        bool all = single_ok && !equal.empty() && !multi.empty();
        std::size_t pairs = 0;
        for (const auto* runs : {&single, &equal, &multi})
            for (const auto& r : *runs) {
                all = all && r.ledgers_equal;
                ++pairs;
            }
        const std::string sample = single.empty() ? "" : ", e.g. " + std::to_string(single.front().messages) +
                                                             " messages / " + std::to_string(single.front().bytes) +
                                                             " bytes per round";
        return Outcome{all, std::to_string(pairs) + " paired runs with identical per-round ledgers" + sample};
    });
    report(11, "determinism", [&] { return determinism(configs); });
    report(12, "IDX ingestion", idx_ingestion);

    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
