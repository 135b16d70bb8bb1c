#include "exp/sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>
#include <vector>

#include "core/error.hpp"
#include "exp/config.hpp"
#include "exp/experiment.hpp"

namespace pb::exp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct AggEntry {
    std::string name;
    json patch;  // merged into the aggregator section
};

struct GridAxis {
    std::string key;
    std::vector<json> values;
};

struct Task {
    std::size_t cell = 0;
    std::size_t agg = 0;
    json doc;
    std::string dir;
};

struct Outcome {
    bool ran = false;
    int status = 0;
    std::string message;
    double best_acc = std::numeric_limits<double>::quiet_NaN();
};

std::string render_scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<AggEntry> parse_aggregators(const json& arr) {
    if (!arr.is_array() || arr.empty())
        throw ConfigError("sweep.aggregators: expected a non-empty array");
    std::vector<AggEntry> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const json& e = arr[i];
        AggEntry entry;
        if (e.is_string()) {
            entry.name = e.get<std::string>();
            entry.patch = json{{"kind", entry.name}};
        } else if (e.is_object()) {
            if (!e.contains("kind") || !e.at("kind").is_string())
                throw ConfigError("sweep.aggregators[" + std::to_string(i) +
                                  "].kind: required string");
            entry.patch = e;
            entry.patch.erase("name");
            entry.name = e.contains("name") && e.at("name").is_string()
                             ? e.at("name").get<std::string>()
                             : e.at("kind").get<std::string>();
        } else {
            throw ConfigError("sweep.aggregators[" + std::to_string(i) +
                              "]: expected a string or an object");
        }
        for (const AggEntry& prev : out)
            if (prev.name == entry.name)
                throw ConfigError("sweep.aggregators: duplicate name '" + entry.name + "'");
        out.push_back(std::move(entry));
    }
    return out;
}

std::vector<GridAxis> parse_grid(const json& grid) {
    std::vector<GridAxis> axes;
    if (grid.is_null()) return axes;
    if (!grid.is_object()) throw ConfigError("sweep.grid: expected an object");
    for (auto it = grid.begin(); it != grid.end(); ++it) {  // sorted key order
        if (!it.value().is_array() || it.value().empty())
            throw ConfigError("sweep.grid." + it.key() + ": expected a non-empty array");
        GridAxis axis;
        axis.key = it.key();
        for (const json& v : it.value()) {
            if (v.is_object() || v.is_array())
                throw ConfigError("sweep.grid." + it.key() + ": values must be scalars");
            axis.values.push_back(v);
        }
        axes.push_back(std::move(axis));
    }
    return axes;
}

}  // namespace

SweepResult run_sweep(const json& doc, const std::string& output_dir, int jobs) {
    if (!doc.is_object()) throw ConfigError("sweep: expected an object");
    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (it.key() != "base" && it.key() != "aggregators" && it.key() != "grid")
            throw ConfigError("sweep." + it.key() + ": unknown key");
    if (!doc.contains("base") || !doc.at("base").is_object())
        throw ConfigError("sweep.base: required object");

    const std::vector<AggEntry> aggs = parse_aggregators(doc.value("aggregators", json()));
    const std::vector<GridAxis> axes = parse_grid(doc.contains("grid") ? doc.at("grid") : json());

    std::size_t cells = 1;
    for (const GridAxis& a : axes) cells *= a.values.size();

    std::vector<Task> tasks;
    tasks.reserve(cells * aggs.size());
    for (std::size_t ci = 0; ci < cells; ++ci) {
        json cell_doc = doc.at("base");
        std::size_t rem = ci;
        for (std::size_t ax = axes.size(); ax-- > 0;) {
            const GridAxis& a = axes[ax];
            set_path(cell_doc, a.key, a.values[rem % a.values.size()]);
            rem /= a.values.size();
        }
        char cell_name[32];
        std::snprintf(cell_name, sizeof cell_name, "cell_%03zu", ci);
        for (std::size_t ai = 0; ai < aggs.size(); ++ai) {
            Task t;
            t.cell = ci;
            t.agg = ai;
            t.doc = cell_doc;
            for (auto it = aggs[ai].patch.begin(); it != aggs[ai].patch.end(); ++it)
                set_path(t.doc, "aggregator." + it.key(), it.value());
            t.dir = (fs::path(output_dir) / cell_name / aggs[ai].name).string();
            tasks.push_back(std::move(t));
        }
    }

    std::vector<Outcome> outcomes(tasks.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            Outcome& o = outcomes[i];
            o.ran = true;
            try {
                const ExperimentConfig cfg = parse_config(tasks[i].doc);
                const RunResult r = run_experiment(cfg, tasks[i].dir);
                o.best_acc = r.best_test_acc;
            } catch (const Error& e) {
                o.status = static_cast<int>(e.status());
                o.message = e.what();
            } catch (const std::exception& e) {
                o.status = static_cast<int>(Status::Internal);
                o.message = e.what();
            }
            if (o.status != 0) {
                std::error_code ec;
                fs::create_directories(tasks[i].dir, ec);
                std::ofstream err(fs::path(tasks[i].dir) / "error.txt",
                                  std::ios::binary | std::ios::trunc);
                err << "exit " << o.status << ": " << o.message << "\n";
            }
        }
    };

    const std::size_t nthreads =
        std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(tasks.size(), 1));
    if (nthreads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(work);
        for (std::thread& th : pool) th.join();
    }

    std::string csv = "cell";
    for (const GridAxis& a : axes) csv += "," + a.key;
    for (const AggEntry& a : aggs) csv += ",best_acc_" + a.name;
    csv += ",winner,errors\n";

    SweepResult result;
    result.cells = static_cast<int>(cells);
    result.runs = static_cast<int>(tasks.size());

    for (std::size_t ci = 0; ci < cells; ++ci) {
        char cell_name[32];
        std::snprintf(cell_name, sizeof cell_name, "cell_%03zu", ci);
        csv += cell_name;
        std::size_t rem = ci;
        std::vector<std::string> vals(axes.size());
        for (std::size_t ax = axes.size(); ax-- > 0;) {
            vals[ax] = render_scalar(axes[ax].values[rem % axes[ax].values.size()]);
            rem /= axes[ax].values.size();
        }
        for (const std::string& v : vals) csv += "," + v;

        std::string winner = "none";
        double winner_acc = -std::numeric_limits<double>::infinity();
        std::string errors;
        for (std::size_t ai = 0; ai < aggs.size(); ++ai) {
            const Outcome& o = outcomes[ci * aggs.size() + ai];
            csv += ",";
            if (o.status == 0) {
                csv += fmt_g(o.best_acc);
                if (!std::isnan(o.best_acc) && o.best_acc > winner_acc) {
                    winner_acc = o.best_acc;
                    winner = aggs[ai].name;
                }
            } else {
                result.failed_runs += 1;
                if (!errors.empty()) errors += ';';
                errors += aggs[ai].name + "=exit" + std::to_string(o.status);
            }
        }
        csv += "," + winner + "," + errors + "\n";
    }

    fs::create_directories(output_dir);
    std::ofstream out(fs::path(output_dir) / "summary.csv", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Status::Internal, "cannot write summary.csv under " + output_dir);
    out << csv;
    return result;
}

SweepResult run_sweep_file(const std::string& sweep_path, const std::string& output_dir,
                           int jobs) {
    std::ifstream in(sweep_path, std::ios::binary);
    if (!in) throw ConfigError("sweep: cannot open " + sweep_path);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("sweep: " + sweep_path + " is not valid JSON");
    return run_sweep(doc, output_dir, jobs);
}

}  // namespace pb::exp
