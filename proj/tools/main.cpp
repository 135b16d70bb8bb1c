// Command-line front end; all functionality sits behind the C API.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "poisonbench/poisonbench.h"

namespace {

int report_failure(pb_status st) {
    std::fprintf(stderr, "error: %s\n", pb_last_error());
    return static_cast<int>(st);
}

// Extra tokens are config overrides of the form --section.key=value.
pb_status apply_extras(pb_config* cfg, const std::vector<std::string>& extras) {
    for (const std::string& raw : extras) {
        if (raw.rfind("--", 0) != 0) {
            std::fprintf(stderr, "error: expected --section.key=value, got '%s'\n", raw.c_str());
            return PB_CONFIG_ERROR;
        }
        const std::size_t eq = raw.find('=');
        if (eq == std::string::npos || eq == 2) {
            std::fprintf(stderr, "error: expected --section.key=value, got '%s'\n", raw.c_str());
            return PB_CONFIG_ERROR;
        }
        const pb_status st =
            pb_config_set(cfg, raw.substr(2, eq - 2).c_str(), raw.substr(eq + 1).c_str());
        if (st != PB_OK) {
            std::fprintf(stderr, "error: %s\n", pb_last_error());
            return st;
        }
    }
    return PB_OK;
}

struct ConfigHandle {
    pb_config* ptr = nullptr;
    ~ConfigHandle() { pb_config_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("poisonbench ") + pb_version() +
                 ": distributed momentum training under label poisoning"};
    app.require_subcommand(1);

    std::string run_config, run_out;
    CLI::App* run = app.add_subcommand("run", "Run one experiment from a JSON config or manifest");
    run->add_option("-c,--config", run_config, "Config or manifest file")->required();
    run->add_option("-o,--out", run_out, "Output directory (overrides output_dir)");
    run->allow_extras();

    std::string sweep_config, sweep_out = "sweep_out";
    int jobs = 1;
    CLI::App* sweep = app.add_subcommand("sweep", "Run a grid of experiments");
    sweep->add_option("-c,--config", sweep_config, "Sweep spec file")->required();
    sweep->add_option("-o,--out", sweep_out, "Output directory");
    sweep->add_option("-j,--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

    std::string report_path = "theory_report.json";
    CLI::App* theory = app.add_subcommand("theory", "Run the analytical check suite");
    theory->add_option("-r,--report", report_path, "Report file");

    std::string val_config;
    CLI::App* validate = app.add_subcommand("validate-config", "Validate and print a config");
    validate->add_option("-c,--config", val_config, "Config or manifest file")->required();
    validate->allow_extras();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(PB_CONFIG_ERROR);
    }

    if (run->parsed()) {
        ConfigHandle cfg;
        pb_status st = pb_config_from_file(run_config.c_str(), &cfg.ptr);
        if (st != PB_OK) return report_failure(st);
        st = apply_extras(cfg.ptr, run->remaining());
        if (st != PB_OK) return static_cast<int>(st);
        st = pb_run_experiment(cfg.ptr, run_out.empty() ? nullptr : run_out.c_str());
        if (st != PB_OK) return report_failure(st);
        if (!run_out.empty())
            std::printf("run complete: %s/metrics.csv\n", run_out.c_str());
        else
            std::printf("run complete\n");
        return 0;
    }

    if (sweep->parsed()) {
        const pb_status st = pb_run_sweep(sweep_config.c_str(), sweep_out.c_str(), jobs);
        if (st != PB_OK) return report_failure(st);
        std::printf("sweep complete: %s/summary.csv\n", sweep_out.c_str());
        return 0;
    }

    if (theory->parsed()) {
        char* summary = nullptr;
        const pb_status st = pb_run_theory_suite(report_path.c_str(), &summary);
        if (summary != nullptr) {
            std::fputs(summary, stdout);
            pb_string_free(summary);
        }
        if (st != PB_OK) return report_failure(st);
        return 0;
    }

    if (validate->parsed()) {
        ConfigHandle cfg;
        pb_status st = pb_config_from_file(val_config.c_str(), &cfg.ptr);
        if (st != PB_OK) return report_failure(st);
        st = apply_extras(cfg.ptr, validate->remaining());
        if (st != PB_OK) return static_cast<int>(st);
        st = pb_config_validate(cfg.ptr);
        if (st != PB_OK) return report_failure(st);
        char* rendered = nullptr;
        st = pb_config_render(cfg.ptr, &rendered);
        if (st != PB_OK) return report_failure(st);
        std::fputs(rendered, stdout);
        pb_string_free(rendered);
        return 0;
    }

    return 0;
}
