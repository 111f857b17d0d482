#include <iostream>

#include "CLI11.hpp"
#include "fedgan/error.hpp"
#include "fedgan/experiment.hpp"

int main(int argc, char** argv) {
    using namespace fedgan;

    CLI::App app{"Federated GAN laboratory: FedGAN vs Bias-Free FedGAN"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    bool parallel = false;
    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--out", out_override, "override the config's output directory");
    run->add_flag("--parallel", parallel, "train clients on separate threads");

    std::string dir_a;
    std::string dir_b;
    auto* compare = app.add_subcommand("compare", "compare two run directories (a = FedGAN, b = Bias-Free)");
    compare->add_option("dir_a", dir_a)->required();
    compare->add_option("dir_b", dir_b)->required();

    std::string samples_path;
    std::string grid_out;
    std::size_t rows = 8;
    std::size_t cols = 8;
    auto* grid = app.add_subcommand("grid", "render a samples CSV as a PGM image grid");
    grid->add_option("samples", samples_path)->required();
    grid->add_option("--rows", rows)->required();
    grid->add_option("--cols", cols)->required();
    grid->add_option("--out", grid_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_code::kOk : exit_code::kValidation;
    }

    try {
        if (*run) {
            cmd_run(config_path, {parallel, out_override}, std::cout);
            return exit_code::kOk;
        }
        if (*compare) return cmd_compare(dir_a, dir_b, std::cout);
        if (*grid) {
            cmd_grid(samples_path, rows, cols, grid_out);
            return exit_code::kOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_code::kValidation;
    } catch (const PartitionError& e) {
        std::cerr << "partition error: " << e.what() << '\n';
        return exit_code::kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code::kRuntime;
    }
    return exit_code::kRuntime;
}
