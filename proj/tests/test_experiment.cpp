#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "exp/experiment.hpp"
#include "exp/sweep.hpp"
#include "helpers.hpp"

using namespace pb;
using namespace pb::exp;
using nlohmann::json;

namespace {

constexpr const char* kHeader =
    "t,train_loss,test_acc,grad_norm_sq,xi_hat,a_hat,sigma2_hat_max,agg_dev";

// Small, fast experiment: 3-class blobs, 3 workers, one poisoned.
ExperimentConfig tiny_config(const std::string& outdir) {
    json doc = {{"dataset",
                 {{"kind", "synth"}, {"classes", 3}, {"dim", 4}, {"per_class", 20},
                  {"test_per_class", 8}}},
                {"hyper", {{"W", 3}, {"R", 2}, {"T", 12}, {"gamma", 0.05}, {"alpha", 0.2}}},
                {"log_every", 5},
                {"output_dir", outdir}};
    return parse_config(doc);
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

TEST_CASE("a run writes schema-exact metrics and a reusable manifest") {
    std::string dir = testutil::scratch_dir("exp_run");
    auto cfg = tiny_config(dir + "/a");
    auto res = run_experiment(cfg);

    auto rows = read_csv(dir + "/a/metrics.csv");
    REQUIRE(rows.size() >= 2);
    // Header is pinned verbatim.
    {
        std::ifstream in(dir + "/a/metrics.csv");
        std::string first;
        std::getline(in, first);
        CHECK(first == kHeader);
    }
    // Logged steps: 0, multiples of 5, and T itself.
    std::vector<long> ts;
    for (size_t i = 1; i < rows.size(); ++i) ts.push_back(std::stol(rows[i][0]));
    CHECK(ts == std::vector<long>{0, 5, 10, 12});
    CHECK(res.rows.size() == ts.size());

    // The t = T row has no following aggregation, so its deviation is nan.
    CHECK(rows.back()[7] == "nan");
    for (size_t i = 1; i + 1 < rows.size(); ++i) CHECK(std::stod(rows[i][7]) >= 0.0);
    // One worker is poisoned, so the disturbance column is measured.
    CHECK(std::isfinite(std::stod(rows[1][5])));
    // Test accuracy present and sane.
    CHECK(res.final_test_acc >= 0.0);
    CHECK(res.final_test_acc <= 1.0);
    CHECK(res.best_test_acc >= res.final_test_acc - 1e-12);

    // Manifest wraps the resolved config and reruns byte-identically in place.
    auto manifest = json::parse(testutil::slurp(dir + "/a/manifest.json"));
    CHECK(manifest["format"] == kManifestFormat);
    CHECK(manifest["code_version"] == kCodeVersion);
    CHECK(manifest["config"]["output_dir"] == dir + "/a");

    std::string before = testutil::slurp(dir + "/a/metrics.csv");
    auto cfg2 = parse_config(load_config_document(dir + "/a/manifest.json"));
    run_experiment(cfg2);
    CHECK(testutil::slurp(dir + "/a/metrics.csv") == before);
}

TEST_CASE("seeds reproduce runs and the output override lands in the manifest") {
    std::string dir = testutil::scratch_dir("exp_seeds");
    auto cfg = tiny_config(dir + "/x");
    run_experiment(cfg, dir + "/o1");
    run_experiment(cfg, dir + "/o2");
    CHECK(testutil::slurp(dir + "/o1/metrics.csv") == testutil::slurp(dir + "/o2/metrics.csv"));
    auto manifest = json::parse(testutil::slurp(dir + "/o1/manifest.json"));
    CHECK(manifest["config"]["output_dir"] == dir + "/o1");

    // A different seed changes the trajectory.
    auto cfg3 = cfg;
    cfg3.hyper.seed = 99;
    run_experiment(cfg3, dir + "/o3");
    CHECK(testutil::slurp(dir + "/o3/metrics.csv") != testutil::slurp(dir + "/o1/metrics.csv"));
}

TEST_CASE("no attack and no test set mark the unused columns nan") {
    std::string dir = testutil::scratch_dir("exp_nan");
    json doc = {{"dataset",
                 {{"kind", "synth"}, {"classes", 3}, {"dim", 4}, {"per_class", 15},
                  {"test_per_class", 0}}},
                {"attack", {{"kind", "none"}}},
                {"hyper", {{"W", 3}, {"R", 3}, {"T", 4}}},
                {"log_every", 2},
                {"output_dir", dir + "/r"}};
    auto res = run_experiment(parse_config(doc));
    auto rows = read_csv(dir + "/r/metrics.csv");
    for (size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i][2] == "nan");  // no test set
        CHECK(rows[i][5] == "nan");  // nothing poisoned
    }
    CHECK(std::isnan(res.best_test_acc));
}

TEST_CASE("the theorem schedule resolves gamma and alpha from measurements") {
    std::string dir = testutil::scratch_dir("exp_sched");
    auto cfg = tiny_config(dir + "/s");
    cfg.hyper.schedule = "theorem";
    cfg.hyper.T = 20;
    auto res = run_experiment(cfg);
    CHECK(res.schedule.gamma > 0.0);
    CHECK(res.schedule.alpha > 0.0);
    CHECK(res.schedule.alpha <= 1.0);
    // The manifest keeps the requested schedule mode, not the resolved numbers.
    auto manifest = json::parse(testutil::slurp(dir + "/s/manifest.json"));
    CHECK(manifest["config"]["hyper"]["schedule"] == "theorem");

    // Fixed runs report the configured values unchanged.
    auto fixed = tiny_config(dir + "/f");
    auto fres = run_experiment(fixed);
    CHECK(fres.schedule.gamma == fixed.hyper.gamma);
    CHECK(fres.schedule.alpha == fixed.hyper.alpha);
}

TEST_CASE("metrics csv uses full float precision") {
    MetricsRow r;
    r.t = 3;
    r.train_loss = 1.0 / 3.0;
    r.test_acc = std::nan("");
    r.grad_norm_sq = 0.1;
    r.xi_hat = 2.0;
    r.a_hat = 1e-17;
    r.sigma2_hat_max = 0.0;
    r.agg_dev = 12345.678901234567;
    auto csv = metrics_to_csv({r});
    std::istringstream in(csv);
    std::string header, line;
    std::getline(in, header);
    CHECK(header == kHeader);
    std::getline(in, line);
    // Every double survives a parse round trip.
    auto cells = [&] {
        std::vector<std::string> c;
        std::stringstream ss(line);
        std::string x;
        while (std::getline(ss, x, ',')) c.push_back(x);
        return c;
    }();
    REQUIRE(cells.size() == 8);
    CHECK(std::stod(cells[1]) == 1.0 / 3.0);
    CHECK(cells[2] == "nan");
    CHECK(std::stod(cells[5]) == 1e-17);
    CHECK(std::stod(cells[7]) == 12345.678901234567);
}

TEST_CASE("a sweep crosses the grid, ranks aggregators, and tolerates failures") {
    std::string dir = testutil::scratch_dir("sweep");
    json base = {{"dataset",
                  {{"kind", "synth"}, {"classes", 3}, {"dim", 4}, {"per_class", 15},
                   {"test_per_class", 6}}},
                 {"hyper", {{"W", 3}, {"R", 2}, {"T", 6}}},
                 {"log_every", 3}};
    json doc = {{"base", base},
                {"aggregators", json::array({"mean", json{{"kind", "faba"}, {"name", "fb"}}})},
                {"grid", {{"hyper.gamma", {0.01, 0.05}}, {"hyper.alpha", {0.2}}}}};

    auto res = run_sweep(doc, dir + "/ok", 2);
    CHECK(res.cells == 2);
    CHECK(res.runs == 4);
    CHECK(res.failed_runs == 0);
    auto rows = read_csv(dir + "/ok/summary.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"cell", "hyper.alpha", "hyper.gamma",
                                              "best_acc_mean", "best_acc_fb", "winner", "errors"});
    CHECK(rows[1][0] == "cell_000");
    for (size_t i = 1; i < rows.size(); ++i) {
        CHECK((rows[i][5] == "mean" || rows[i][5] == "fb"));
        CHECK(rows[i][6] == "");
        CHECK(std::filesystem::exists(dir + "/ok/" + rows[i][0] + "/mean/metrics.csv"));
        CHECK(std::filesystem::exists(dir + "/ok/" + rows[i][0] + "/fb/metrics.csv"));
    }

    // Concurrency does not change any produced bytes.
    run_sweep(doc, dir + "/ok2", 1);
    CHECK(testutil::slurp(dir + "/ok/summary.csv") == testutil::slurp(dir + "/ok2/summary.csv"));
    CHECK(testutil::slurp(dir + "/ok/cell_001/fb/metrics.csv") ==
          testutil::slurp(dir + "/ok2/cell_001/fb/metrics.csv"));

    // A failing cell is recorded in the summary and leaves an error file.
    json bad = doc;
    bad["grid"]["hyper.gamma"] = {0.01, -1.0};
    auto res2 = run_sweep(bad, dir + "/bad", 2);
    CHECK(res2.failed_runs == 2);
    auto rows2 = read_csv(dir + "/bad/summary.csv");
    bool saw_error = false;
    for (size_t i = 1; i < rows2.size(); ++i)
        if (!rows2[i][6].empty()) {
            saw_error = true;
            CHECK(rows2[i][6].find("exit2") != std::string::npos);
        }
    CHECK(saw_error);
    CHECK(std::filesystem::exists(dir + "/bad/cell_001/mean/error.txt"));
}

TEST_CASE("sweep documents reject unknown sections and empty grids run once") {
    json doc = {{"base", json::object()}, {"aggregators", json::array({"mean"})},
                {"grid", json::object()}, {"bogus", 1}};
    CHECK_THROWS_AS(run_sweep(doc, "unused", 1), ConfigError);

    std::string dir = testutil::scratch_dir("sweep_empty");
    json ok = {{"base",
                {{"dataset",
                  {{"kind", "synth"}, {"classes", 3}, {"dim", 3}, {"per_class", 9},
                   {"test_per_class", 3}}},
                 {"hyper", {{"W", 3}, {"R", 2}, {"T", 3}}}}},
               {"aggregators", json::array({"mean"})},
               {"grid", json::object()}};
    auto res = run_sweep(ok, dir, 1);
    CHECK(res.cells == 1);
    CHECK(res.runs == 1);
}
