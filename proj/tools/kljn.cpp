// Command-line driver for the KLJN simulation lab.
//
//   kljn solve     CONFIG            solve the scheme, print temperatures and security report
//   kljn simulate  CONFIG            per-bit CSV of wire moments and zero-crossing statistics
//   kljn attack    CONFIG            zero-crossing attack: Eve's success probability
//   kljn hist      CONFIG --stat S   LH/HL histograms of u2, i2 or u_zc2
//   kljn table1   [CONFIG]           all reference schemes, moments side by side
//   kljn table2   [CONFIG]           all reference schemes, attack side by side
//
// Every command accepts --set key=value to override configuration entries.

#include "kljn/errors.hpp"
#include "kljn/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw kljn::ConfigurationError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool config_required) {
    auto* cfg = cmd->add_option("config", opts.config_path, "key = value configuration file");
    if (config_required) cfg->required();
    cmd->add_option("-s,--set", opts.overrides, "override a configuration entry (key=value)");
    cmd->add_option("-j,--threads", opts.threads, "worker threads (0 = all cores)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"KLJN key exchange simulation lab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kljn::kVersion));

    CommonOptions opts;
    std::string stat = "u_zc2";
    std::size_t bins = 40;

    auto* solve = app.add_subcommand("solve", "solve a scheme and check its security equalities");
    auto* simulate = app.add_subcommand("simulate", "simulate a key exchange session");
    auto* attack = app.add_subcommand("attack", "run the zero-crossing attack");
    auto* hist = app.add_subcommand("hist", "histogram a per-bit statistic for LH and HL");
    auto* table1 = app.add_subcommand("table1", "moment table for all reference schemes");
    auto* table2 = app.add_subcommand("table2", "attack table for all reference schemes");
    for (auto* cmd : {solve, simulate, attack, hist}) add_common(cmd, opts, true);
    for (auto* cmd : {table1, table2}) add_common(cmd, opts, false);
    hist->add_option("--stat", stat, "u2, i2 or u_zc2")->check(CLI::IsMember({"u2", "i2", "u_zc2"}));
    hist->add_option("--bins", bins, "number of bins")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kljn::kExitConfig;
    }

    kljn::ExperimentConfig config;
    try {
        std::string text;
        if (!opts.config_path.empty()) {
            text = read_file(opts.config_path);
        } else {
            text = "scheme = classic\nr_l = 1000\nr_h = 10000\n";
        }
        config = kljn::parse_config(text, opts.overrides);
    } catch (const kljn::ConfigurationError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kljn::kExitConfig;
    }

    if (solve->parsed()) return kljn::cmd_solve(config, std::cout, std::cerr);
    if (simulate->parsed()) return kljn::cmd_simulate(config, std::cout, std::cerr, opts.threads);
    if (attack->parsed()) return kljn::cmd_attack(config, std::cout, std::cerr, opts.threads);
    if (hist->parsed()) {
        return kljn::cmd_hist(config, *kljn::parse_hist_statistic(stat), bins, std::cout,
                              std::cerr, opts.threads);
    }
    if (table1->parsed()) return kljn::cmd_table1(config, std::cout, std::cerr, opts.threads);
    if (table2->parsed()) return kljn::cmd_table2(config, std::cout, std::cerr, opts.threads);
    return kljn::kExitConfig;
}
