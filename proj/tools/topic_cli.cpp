// Command-line harness: parse a config, run every (method, seed) pair, write
// results under the output directory.

#include "topic/config.hpp"
#include "topic/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
    CLI::App app{"Topology-preserving few-shot class-incremental experiments"};
    std::string config_path;
    std::string out_dir;
    std::string seeds;
    std::string methods;
    bool quiet = false;
    app.add_option("--config", config_path, "key = value config file (defaults when omitted)");
    app.add_option("--out", out_dir, "output directory (overrides out_dir)");
    app.add_option("--seeds", seeds, "comma separated seeds (overrides seeds)");
    app.add_option("--methods", methods, "comma separated method tags (overrides methods)");
    app.add_flag("--quiet", quiet, "only print diagnostics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return topic::kExitConfig;
    }

    topic::ExperimentConfig config;
    try {
        std::string text;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "config error: cannot open " << config_path << '\n';
                return topic::kExitConfig;
            }
            std::ostringstream buf;
            buf << in.rdbuf();
            text = buf.str();
        }
        config = topic::parse_config(text);
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (!seeds.empty()) config.seeds = topic::parse_seed_list(seeds);
        if (!methods.empty()) config.methods = topic::parse_method_list(methods);
    } catch (const topic::InputError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return topic::kExitConfig;
    }

    return topic::run_experiment(config, std::cerr, quiet);
}
