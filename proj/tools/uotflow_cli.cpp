#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uotflow/config.hpp"
#include "uotflow/experiment.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::string checkpoint;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool need_checkpoint) {
    cmd->add_option("--config", args.config_path, "experiment config JSON")->required();
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_option("--out", args.out, "output directory override");
    if (need_checkpoint)
        cmd->add_option("--checkpoint", args.checkpoint, "checkpoint path")->required();
}

uotflow::config::ExperimentConfig load(const CommonArgs& args) {
    auto cfg = uotflow::config::load_config(args.config_path);
    uotflow::config::apply_overrides(cfg, args.seed, args.out);
    return cfg;
}

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        out.push_back(std::stod(csv.substr(pos, next - pos)));
        pos = next + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"uotflow: UOT-reweighted flow matching laboratory"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, sample_args, eval_args, sweep_args, plot_args;
    std::string sweep_taus = "1", sweep_ks = "0,1,2,4";
    std::string plot_in;

    add_common(app.add_subcommand("gen-data", "write train/test dataset CSVs"), gen_args, false);
    add_common(app.add_subcommand("train", "train a model per the config"), train_args, false);
    add_common(app.add_subcommand("sample", "sample from a checkpoint"), sample_args, true);
    add_common(app.add_subcommand("eval", "run all enabled metrics"), eval_args, true);
    auto* sweep = app.add_subcommand("sweep", "train+eval over a (tau, k) grid");
    add_common(sweep, sweep_args, false);
    sweep->add_option("--taus", sweep_taus, "comma-separated tau grid");
    sweep->add_option("--ks", sweep_ks, "comma-separated k grid");
    auto* plot = app.add_subcommand("plot", "emit SVG plots from run artifacts");
    add_common(plot, plot_args, false);
    plot->add_option("--in", plot_in, "directory holding samples.csv (default: output dir)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("gen-data")) {
            auto cfg = load(gen_args);
            uotflow::experiment::cmd_gen_data(cfg, cfg.output_dir);
        } else if (app.got_subcommand("train")) {
            auto cfg = load(train_args);
            std::cout << uotflow::experiment::cmd_train(cfg, cfg.output_dir) << '\n';
        } else if (app.got_subcommand("sample")) {
            auto cfg = load(sample_args);
            uotflow::experiment::cmd_sample(cfg, sample_args.checkpoint, cfg.output_dir);
        } else if (app.got_subcommand("eval")) {
            auto cfg = load(eval_args);
            uotflow::experiment::cmd_eval(cfg, eval_args.checkpoint, cfg.output_dir);
        } else if (app.got_subcommand("sweep")) {
            auto cfg = load(sweep_args);
            uotflow::experiment::cmd_sweep(cfg, parse_grid(sweep_taus), parse_grid(sweep_ks),
                                           cfg.output_dir);
        } else if (app.got_subcommand("plot")) {
            auto cfg = load(plot_args);
            std::string in = plot_in.empty() ? cfg.output_dir : plot_in;
            uotflow::experiment::cmd_plot(cfg, in, cfg.output_dir);
        }
    } catch (const std::exception& e) {
        std::cerr << "{\"error\":\"" << e.what() << "\"}\n";
        return 1;
    }
    return 0;
}
