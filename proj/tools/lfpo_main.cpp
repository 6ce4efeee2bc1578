// Command-line entry point: train / verify / eval / compare.

#include <CLI11.hpp>

#include "lfpo/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Masked-diffusion policy optimization on synthetic tasks"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string algo = "lfpo";
    std::uint64_t seed = 0;

    CLI::App* train = app.add_subcommand("train", "run a training session");
    train->add_option("--config", config_path, "config JSON path")->required();
    train->add_option("--seed", seed, "run seed");
    train->add_option("--out", out_dir, "output directory");
    train->add_option("--algo", algo, "lfpo or pg-baseline");

    bool inject_fault = false;
    CLI::App* verify = app.add_subcommand("verify", "run the property suite");
    verify->add_option("--seed", seed, "suite seed");
    verify->add_flag("--inject-fault", inject_fault,
                     "corrupt the ce-gradient sign (failure-path test)");

    std::string checkpoint_path;
    std::string task_override;
    std::size_t n_prompts = 200;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint path")
        ->required();
    eval->add_option("--task", task_override, "override the task kind");
    eval->add_option("--n-prompts", n_prompts, "number of eval prompts");
    eval->add_option("--seed", seed, "eval seed");

    std::vector<std::string> algos = {"lfpo", "pg-baseline"};
    std::vector<std::uint64_t> seeds = {0};
    double target_reward = 0.9;
    CLI::App* compare =
        app.add_subcommand("compare", "run algorithms with shared seeds");
    compare->add_option("--config", config_path, "config JSON path")->required();
    compare->add_option("--algos", algos, "algorithms to run");
    compare->add_option("--seeds", seeds, "run seeds");
    compare->add_option("--out", out_dir, "output directory");
    compare->add_option("--target-reward", target_reward,
                        "reward level to report first-reach iterations for");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return lfpo::cli::kExitUsage;
    }

    if (train->parsed()) {
        return lfpo::cli::run_train(config_path, seed, out_dir, algo);
    }
    if (verify->parsed()) {
        return lfpo::cli::run_verify(seed, inject_fault);
    }
    if (eval->parsed()) {
        return lfpo::cli::run_eval(checkpoint_path, task_override, n_prompts,
                                   seed);
    }
    if (compare->parsed()) {
        return lfpo::cli::run_compare(config_path, algos, seeds, out_dir,
                                      target_reward);
    }
    return lfpo::cli::kExitUsage;
}
