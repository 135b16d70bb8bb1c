#include "poisonbench/poisonbench.h"

#include <cstring>
#include <new>
#include <string>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "exp/config.hpp"
#include "exp/experiment.hpp"
#include "exp/sweep.hpp"
#include "exp/theory_suite.hpp"

struct pb_config {
    nlohmann::json doc;
};

namespace {

thread_local std::string g_last_error;

pb_status to_status(pb::Status s) { return static_cast<pb_status>(static_cast<int>(s)); }

template <typename F>
pb_status guarded(F&& f) {
    try {
        return f();
    } catch (const pb::Error& e) {
        g_last_error = e.what();
        return to_status(e.status());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return PB_INTERNAL_ERROR;
    } catch (...) {
        g_last_error = "unknown error";
        return PB_INTERNAL_ERROR;
    }
}

pb_status fail_null_arg(const char* what) {
    g_last_error = std::string(what) + ": null argument";
    return PB_CONFIG_ERROR;
}

char* dup_string(const std::string& s) {
    char* out = new (std::nothrow) char[s.size() + 1];
    if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

}  // namespace

extern "C" {

const char* pb_version(void) { return pb::exp::kCodeVersion; }

const char* pb_last_error(void) { return g_last_error.c_str(); }

void pb_string_free(char* s) { delete[] s; }

pb_status pb_config_from_text(const char* json_text, pb_config** out) {
    if (json_text == nullptr || out == nullptr) return fail_null_arg("pb_config_from_text");
    *out = nullptr;
    return guarded([&]() {
        nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
        if (doc.is_discarded()) throw pb::ConfigError("config: text is not valid JSON");
        if (doc.is_object() && doc.contains("config")) {
            auto fmt = doc.find("format");
            if (fmt == doc.end() || !fmt->is_string() ||
                fmt->get<std::string>() != pb::exp::kManifestFormat)
                throw pb::ConfigError("config: unsupported manifest format tag");
            doc = doc.at("config");
        }
        *out = new pb_config{std::move(doc)};
        return PB_OK;
    });
}

pb_status pb_config_from_file(const char* path, pb_config** out) {
    if (path == nullptr || out == nullptr) return fail_null_arg("pb_config_from_file");
    *out = nullptr;
    return guarded([&]() {
        *out = new pb_config{pb::exp::load_config_document(path)};
        return PB_OK;
    });
}

pb_status pb_config_set(pb_config* cfg, const char* dotted_key, const char* value) {
    if (cfg == nullptr || dotted_key == nullptr || value == nullptr)
        return fail_null_arg("pb_config_set");
    return guarded([&]() {
        pb::exp::apply_override(cfg->doc, dotted_key, value);
        return PB_OK;
    });
}

pb_status pb_config_validate(const pb_config* cfg) {
    if (cfg == nullptr) return fail_null_arg("pb_config_validate");
    return guarded([&]() {
        pb::exp::validate_config(pb::exp::parse_config(cfg->doc));
        return PB_OK;
    });
}

pb_status pb_config_render(const pb_config* cfg, char** out_json) {
    if (cfg == nullptr || out_json == nullptr) return fail_null_arg("pb_config_render");
    *out_json = nullptr;
    return guarded([&]() {
        const std::string text =
            pb::exp::to_json(pb::exp::parse_config(cfg->doc)).dump(2) + "\n";
        *out_json = dup_string(text);
        if (*out_json == nullptr) throw pb::Error(pb::Status::Internal, "out of memory");
        return PB_OK;
    });
}

void pb_config_free(pb_config* cfg) { delete cfg; }

pb_status pb_run_experiment(const pb_config* cfg, const char* output_dir) {
    if (cfg == nullptr) return fail_null_arg("pb_run_experiment");
    return guarded([&]() {
        pb::exp::run_experiment(pb::exp::parse_config(cfg->doc),
                                output_dir == nullptr ? "" : output_dir);
        return PB_OK;
    });
}

pb_status pb_run_sweep(const char* sweep_path, const char* output_dir, int jobs) {
    if (sweep_path == nullptr || output_dir == nullptr) return fail_null_arg("pb_run_sweep");
    return guarded([&]() {
        const pb::exp::SweepResult r = pb::exp::run_sweep_file(sweep_path, output_dir, jobs);
        if (r.failed_runs > 0) {
            g_last_error = std::to_string(r.failed_runs) + " of " + std::to_string(r.runs) +
                           " sweep runs failed; see summary.csv";
            return PB_PROPERTY_FAILURE;
        }
        return PB_OK;
    });
}

pb_status pb_run_theory_suite(const char* report_path, char** out_summary) {
    if (report_path == nullptr) return fail_null_arg("pb_run_theory_suite");
    if (out_summary != nullptr) *out_summary = nullptr;
    return guarded([&]() {
        const pb::exp::TheorySuiteResult r = pb::exp::run_theory_suite();
        pb::exp::write_theory_report(r, report_path);
        if (out_summary != nullptr) {
            *out_summary = dup_string(r.summary);
            if (*out_summary == nullptr) throw pb::Error(pb::Status::Internal, "out of memory");
        }
        if (!r.all_pass) {
            g_last_error = std::to_string(r.total - r.passed) + " of " +
                           std::to_string(r.total) + " checks failed; see " +
                           std::string(report_path);
            return PB_PROPERTY_FAILURE;
        }
        return PB_OK;
    });
}

}  // extern "C"
