#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <poisonbench/poisonbench.h>

namespace {

struct ConfigHandle {
    pb_config* cfg = nullptr;
    ~ConfigHandle() { pb_config_free(cfg); }
};

struct StringHandle {
    char* s = nullptr;
    ~StringHandle() { pb_string_free(s); }
};

std::string scratch(const std::string& name) {
    std::filesystem::path p = std::filesystem::path("scratch") / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

constexpr const char* kTinyConfig = R"({
  "dataset": {"kind": "synth", "classes": 3, "dim": 4, "per_class": 12, "test_per_class": 6},
  "hyper": {"W": 3, "R": 2, "T": 6},
  "log_every": 3
})";

}  // namespace

TEST_CASE("version string is exposed") {
    REQUIRE(pb_version() != nullptr);
    CHECK(std::string(pb_version()) == "0.1.0");
}

TEST_CASE("parse failures set the thread error message") {
    pb_config* cfg = nullptr;
    CHECK(pb_config_from_text("{oops", &cfg) == PB_CONFIG_ERROR);
    CHECK(cfg == nullptr);
    CHECK(std::strlen(pb_last_error()) > 0);

    CHECK(pb_config_from_text(nullptr, &cfg) == PB_CONFIG_ERROR);
    CHECK(pb_config_from_file("definitely_missing.json", &cfg) == PB_CONFIG_ERROR);
}

TEST_CASE("configs parse, mutate, validate, and render") {
    ConfigHandle h;
    REQUIRE(pb_config_from_text(kTinyConfig, &h.cfg) == PB_OK);
    CHECK(pb_config_validate(h.cfg) == PB_OK);

    CHECK(pb_config_set(h.cfg, "hyper.gamma", "0.02") == PB_OK);
    CHECK(pb_config_set(h.cfg, "aggregator.kind", "faba") == PB_OK);
    StringHandle rendered;
    REQUIRE(pb_config_render(h.cfg, &rendered.s) == PB_OK);
    std::string text(rendered.s);
    CHECK(text.find("\"faba\"") != std::string::npos);
    CHECK(text.find("0.02") != std::string::npos);

    // Unknown keys surface at validation, naming the path.
    CHECK(pb_config_set(h.cfg, "hyper.bogus", "1") == PB_OK);
    CHECK(pb_config_validate(h.cfg) == PB_CONFIG_ERROR);
    CHECK(std::string(pb_last_error()).find("hyper.bogus") != std::string::npos);
}

TEST_CASE("cross-field rules are enforced through the api") {
    ConfigHandle h;
    REQUIRE(pb_config_from_text("{}", &h.cfg) == PB_OK);
    REQUIRE(pb_config_set(h.cfg, "partition.kind", "one_class") == PB_OK);
    REQUIRE(pb_config_set(h.cfg, "hyper.W", "7") == PB_OK);
    CHECK(pb_config_validate(h.cfg) == PB_CONFIG_ERROR);
    CHECK(std::string(pb_last_error()).find("one_class") != std::string::npos);
}

TEST_CASE("experiments run end to end through the c api") {
    std::string dir = scratch("capi_run");
    ConfigHandle h;
    REQUIRE(pb_config_from_text(kTinyConfig, &h.cfg) == PB_OK);
    CHECK(pb_run_experiment(h.cfg, (dir + "/out").c_str()) == PB_OK);
    CHECK(std::filesystem::exists(dir + "/out/metrics.csv"));
    CHECK(std::filesystem::exists(dir + "/out/manifest.json"));

    // The manifest is itself a loadable config.
    ConfigHandle again;
    REQUIRE(pb_config_from_file((dir + "/out/manifest.json").c_str(), &again.cfg) == PB_OK);
    CHECK(pb_config_validate(again.cfg) == PB_OK);

    CHECK(pb_run_experiment(nullptr, nullptr) == PB_CONFIG_ERROR);

    // An invalid configuration refuses to run.
    ConfigHandle bad;
    REQUIRE(pb_config_from_text("{\"hyper\": {\"gamma\": -1}}", &bad.cfg) == PB_OK);
    CHECK(pb_run_experiment(bad.cfg, (dir + "/nope").c_str()) == PB_CONFIG_ERROR);
}

TEST_CASE("sweeps run through the c api and report cell failures") {
    std::string dir = scratch("capi_sweep");
    std::string spec = R"({
      "base": {"dataset": {"kind": "synth", "classes": 3, "dim": 3, "per_class": 9,
                           "test_per_class": 3},
               "hyper": {"W": 3, "R": 2, "T": 4}},
      "aggregators": ["mean", "trimean"],
      "grid": {"hyper.gamma": [0.01, 0.03]}
    })";
    {
        std::ofstream out(dir + "/sweep.json");
        out << spec;
    }
    CHECK(pb_run_sweep((dir + "/sweep.json").c_str(), (dir + "/out").c_str(), 2) == PB_OK);
    CHECK(std::filesystem::exists(dir + "/out/summary.csv"));
    CHECK(std::filesystem::exists(dir + "/out/cell_001/trimean/metrics.csv"));

    CHECK(pb_run_sweep("missing_sweep.json", (dir + "/x").c_str(), 1) == PB_CONFIG_ERROR);
    CHECK(pb_run_sweep(nullptr, nullptr, 1) == PB_CONFIG_ERROR);
}

TEST_CASE("the theory suite runs and writes its report") {
    std::string dir = scratch("capi_theory");
    StringHandle summary;
    CHECK(pb_run_theory_suite((dir + "/report.json").c_str(), &summary.s) == PB_OK);
    REQUIRE(summary.s != nullptr);
    CHECK(std::string(summary.s).find("[PASS]") != std::string::npos);
    CHECK(std::filesystem::exists(dir + "/report.json"));

    // The summary pointer is optional.
    CHECK(pb_run_theory_suite((dir + "/report2.json").c_str(), nullptr) == PB_OK);
}
