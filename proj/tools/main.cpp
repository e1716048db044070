#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kinfluid/runner.hpp"

namespace {

std::vector<double> parse_p_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            std::size_t pos = 0;
            double v = std::stod(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw kinfluid::ConfigError("invalid p value '" + tok + "' in --p list");
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coupled Vlasov / power-law-fluid simulator on the periodic unit box"};
    app.require_subcommand(1);

    std::string config_path, out_dir, p_list_str, csv_path;
    double fit_p = 2.0;

    auto* sim = app.add_subcommand("simulate", "run a configured simulation");
    sim->add_option("--config", config_path, "JSON config file")->required();
    sim->add_option("--out", out_dir, "output directory (overrides output.dir)");

    auto* sweep = app.add_subcommand("sweep", "run one simulation per power-law exponent");
    sweep->add_option("--config", config_path, "base JSON config file")->required();
    sweep->add_option("--p", p_list_str, "comma-separated exponents, e.g. 1.5,2,3")->required();
    sweep->add_option("--out", out_dir, "output directory (overrides output.dir)");

    auto* fit = app.add_subcommand("fit", "fit decay law to a series.csv");
    fit->add_option("--input", csv_path, "series.csv path")->required();
    fit->add_option("--p", fit_p, "power-law exponent for the regime transform")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return kinfluid::cmd_simulate(config_path, out_dir);
        if (sweep->parsed()) return kinfluid::cmd_sweep(config_path, parse_p_list(p_list_str), out_dir);
        if (fit->parsed()) return kinfluid::cmd_fit(csv_path, fit_p);
    } catch (const kinfluid::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
