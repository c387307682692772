#include "uqfarm/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "uqfarm/csv.hpp"
#include "uqfarm/rng.hpp"
#include "uqfarm/sampler.hpp"

namespace uqfarm {

namespace fs = std::filesystem;
using nlohmann::json;

SampleMatrix select_columns(const SampleMatrix& samples, const std::vector<Eigen::Index>& cols) {
    SampleMatrix out;
    out.origin = samples.origin;
    out.values.resize(samples.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
        out.values.col(static_cast<Eigen::Index>(k)) = samples.values.col(cols[k]);
        out.variable_names.push_back(samples.variable_names[static_cast<std::size_t>(cols[k])]);
    }
    return out;
}

SensitivityScores surrogate_sensitivity(const SurrogateModel& model, const SampleMatrix& X1,
                                        const Vector& sigmas, SensitivityMode mode) {
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < sigmas.size(); ++i)
        if (sigmas[i] > 0.0) active.push_back(i);
    if (active.size() == static_cast<std::size_t>(sigmas.size()))
        return compute_sensitivity_scores(model, X1, sigmas, mode);

    SurrogateModel sub;
    sub.basis = Basis::LinearIntercept;
    sub.metric_names = model.metric_names;
    sub.coefficients.resize(model.coefficients.rows(), 1 + static_cast<Eigen::Index>(active.size()));
    sub.coefficients.col(0) = model.coefficients.col(0);
    Vector sub_sigmas(static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) {
        sub.variable_names.push_back(model.variable_names[static_cast<std::size_t>(active[k])]);
        sub.coefficients.col(1 + static_cast<Eigen::Index>(k)) =
            model.coefficients.col(1 + active[k]);
        sub_sigmas[static_cast<Eigen::Index>(k)] = sigmas[active[k]];
    }
    return compute_sensitivity_scores(sub, select_columns(X1, active), sub_sigmas, mode);
}

namespace {

void write_summaries_csv(const std::string& path, const ResponseSet& responses) {
    write_csv_file(path, responses.metric_names, responses.summaries);
}

std::vector<Eigen::Index> selected_indices(const StudySpec& spec,
                                           const std::vector<std::string>& selected) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(spec.variables.size()); ++i)
        for (const auto& name : selected)
            if (spec.variables[static_cast<std::size_t>(i)].name == name) {
                idx.push_back(i);
                break;
            }
    return idx;
}

} // namespace

std::string report_to_json(const StudyReport& report) {
    json doc;
    doc["analyses"] = json::array();
    for (const auto& a : report.analyses) {
        json ja{{"label", a.label}, {"present", a.present}, {"n_sims", a.n_sims}, {"dir", a.dir}};
        if (a.converged_at) ja["converged_at"] = *a.converged_at;
        doc["analyses"].push_back(std::move(ja));
    }
    doc["reduced"] = {{"k", report.reduced.k},
                      {"selected", report.reduced.selected},
                      {"drop_index", report.reduced.gap_report.drop_index},
                      {"max_gap_ratio", report.reduced.gap_report.max_gap_ratio},
                      {"sorted_totals", report.reduced.gap_report.sorted_totals}};
    doc["diffs"] = json::array();
    for (const auto& d : report.diffs) {
        json jd{{"a", d.a}, {"b", d.b}, {"metrics", json::array()}};
        for (std::size_t j = 0; j < d.diff.metric_names.size(); ++j)
            jd["metrics"].push_back({{"metric", d.diff.metric_names[j]},
                                     {"d_p_lo", d.diff.d_p_lo[j]},
                                     {"d_mean", d.diff.d_mean[j]},
                                     {"d_p_hi", d.diff.d_p_hi[j]},
                                     {"headline", d.diff.headline[j]}});
        doc["diffs"].push_back(std::move(jd));
    }
    doc["timing"] = {{"serial_equivalent_ms", report.serial_equivalent_ms},
                     {"wall_ms", report.wall_ms},
                     {"backend", report.backend}};
    if (!report.failed_stage.empty()) doc["failed_stage"] = report.failed_stage;
    return doc.dump(2);
}

StudyReport run_study(const StudySpec& spec, ExecutionBackend& backend,
                      const std::string& out_dir, StudyOutputs* outputs) {
    spec.validate();
    fs::create_directories(out_dir);

    StudyReport report;
    report.backend = backend.description();
    StudyOutputs local_outputs;
    StudyOutputs& out = outputs ? *outputs : local_outputs;

    std::vector<std::string> metric_names;
    for (const auto& m : spec.metrics) metric_names.push_back(m.name);
    const Vector sigmas = spec.sigmas();

    const auto wall_start = std::chrono::steady_clock::now();
    auto finish = [&](const std::string& failed_stage) {
        report.failed_stage = failed_stage;
        report.wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - wall_start)
                             .count();
        std::ofstream rj(out_dir + "/report.json");
        rj << report_to_json(report) << '\n';
    };

    auto account = [&](const std::vector<SimulationResult>& results) {
        for (const auto& r : results) report.serial_equivalent_ms += r.duration_ms;
    };

    std::string stage = "mcst_full";
    try {
        // (1) MCST over the full variable set.
        AnalysisRecord rec{.label = "mcst_full", .dir = "mcst_full"};
        if (spec.n_mc > 0) {
            fs::create_directories(out_dir + "/mcst_full");
            auto samples = draw_monte_carlo(spec, spec.n_mc, substream_seed(spec.seed, 1));
            validate_alignment(samples, spec);
            write_samples_csv(out_dir + "/mcst_full/samples.csv", samples);
            auto results = backend.run_batch(samples, substream_seed(spec.seed, 1));
            account(results);
            auto responses = to_response_set(results, metric_names);
            write_summaries_csv(out_dir + "/mcst_full/summaries.csv", responses);
            out.mcst_full = pointwise_envelope(responses, spec.p_lo, spec.p_hi);
            write_envelope_csvs(out_dir + "/mcst_full", *out.mcst_full);
            out.trace_full =
                convergence_trace(responses.summaries.col(0), spec.p_lo, spec.p_hi,
                                  spec.convergence.window, spec.convergence.rel_tol);
            write_convergence_csv(out_dir + "/mcst_full/convergence.csv", *out.trace_full);
            rec.present = true;
            rec.n_sims = spec.n_mc;
            rec.converged_at = out.trace_full->converged_at;
        }
        report.analyses.push_back(rec);

        // (2) RSM over the full set: design, fit, propagate, rank, reduce.
        stage = "rsm_full";
        fs::create_directories(out_dir + "/rsm_full");
        auto design = draw_regular_design(spec, spec.n_rsm, substream_seed(spec.seed, 2));
        write_samples_csv(out_dir + "/rsm_full/samples.csv", design);
        auto design_results = backend.run_batch(design, substream_seed(spec.seed, 2));
        account(design_results);
        auto design_responses = to_response_set(design_results, metric_names);
        auto surrogate = fit_rse(design, design_responses.summaries, metric_names,
                                 Basis::LinearIntercept);
        fit_series(surrogate, design, design_responses);
        write_surrogate_csv(out_dir + "/rsm_full/surrogate.csv", surrogate);

        auto propagation = draw_monte_carlo(spec, spec.n_surrogate, substream_seed(spec.seed, 3));
        propagation.origin = SampleOrigin::Surrogate;
        auto propagated = predict_responses(surrogate, propagation);
        out.rsm_full = pointwise_envelope(propagated, spec.p_lo, spec.p_hi);
        write_envelope_csvs(out_dir + "/rsm_full", *out.rsm_full);

        auto scores = surrogate_sensitivity(surrogate, propagation, sigmas,
                                            SensitivityMode::CenteredOverSigma);
        out.reduced = reduce_key_set(scores, spec.reduction.k_override, spec.reduction);
        report.reduced = out.reduced;
        write_sensitivity_csv(out_dir + "/rsm_full/sensitivity.csv", scores, out.reduced);
        out.surrogate_full = surrogate;
        report.analyses.push_back(
            {.label = "rsm_full", .present = true, .n_sims = spec.n_rsm, .dir = "rsm_full"});

        // Reduced spec: non-selected variables pinned at their means.
        auto reduced_spec = spec;
        for (auto& v : reduced_spec.variables) {
            bool keep = false;
            for (const auto& name : out.reduced.selected) keep |= (v.name == name);
            if (!keep) v.std_dev = 0.0;
        }
        const auto key_cols = selected_indices(spec, out.reduced.selected);

        // (3) MCST over the reduced set (fresh redraw).
        stage = "mcst_reduced";
        AnalysisRecord rec3{.label = "mcst_reduced", .dir = "mcst_reduced"};
        if (spec.n_mc > 0) {
            fs::create_directories(out_dir + "/mcst_reduced");
            auto samples = draw_monte_carlo(reduced_spec, spec.n_mc, substream_seed(spec.seed, 4));
            write_samples_csv(out_dir + "/mcst_reduced/samples.csv", samples);
            auto results = backend.run_batch(samples, substream_seed(spec.seed, 4));
            account(results);
            auto responses = to_response_set(results, metric_names);
            write_summaries_csv(out_dir + "/mcst_reduced/summaries.csv", responses);
            out.mcst_reduced = pointwise_envelope(responses, spec.p_lo, spec.p_hi);
            write_envelope_csvs(out_dir + "/mcst_reduced", *out.mcst_reduced);
            auto trace = convergence_trace(responses.summaries.col(0), spec.p_lo, spec.p_hi,
                                           spec.convergence.window, spec.convergence.rel_tol);
            write_convergence_csv(out_dir + "/mcst_reduced/convergence.csv", trace);
            rec3.present = true;
            rec3.n_sims = spec.n_mc;
            rec3.converged_at = trace.converged_at;
        }
        report.analyses.push_back(rec3);

        // (4) RSM over the reduced set, one pass per requested trial count.
        auto variants = spec.rsm_variants.empty() ? std::vector<int>{spec.n_rsm}
                                                  : spec.rsm_variants;
        for (std::size_t v = 0; v < variants.size(); ++v) {
            const int n_trials = variants[v];
            stage = "rsm_reduced_" + std::to_string(n_trials);
            if (n_trials < static_cast<int>(key_cols.size()) + 2)
                throw ValidationError(stage + ": trial count too small for " +
                                      std::to_string(key_cols.size()) + " key variables");
            const std::string dir = out_dir + "/" + stage;
            fs::create_directories(dir);
            auto design_r =
                draw_regular_design(reduced_spec, n_trials, substream_seed(spec.seed, 5 + v));
            write_samples_csv(dir + "/samples.csv", design_r);
            auto results_r = backend.run_batch(design_r, substream_seed(spec.seed, 5 + v));
            account(results_r);
            auto responses_r = to_response_set(results_r, metric_names);

            // Fit on the key columns only; pinned columns are constant.
            auto design_key = select_columns(design_r, key_cols);
            auto surrogate_r =
                fit_rse(design_key, responses_r.summaries, metric_names, Basis::LinearIntercept);
            fit_series(surrogate_r, design_key, responses_r);
            write_surrogate_csv(dir + "/surrogate.csv", surrogate_r);

            auto prop_r =
                draw_monte_carlo(reduced_spec, spec.n_surrogate, substream_seed(spec.seed, 20 + v));
            auto prop_key = select_columns(prop_r, key_cols);
            prop_key.origin = SampleOrigin::Surrogate;
            auto propagated_r = predict_responses(surrogate_r, prop_key);
            Envelope env_r = pointwise_envelope(propagated_r, spec.p_lo, spec.p_hi);
            write_envelope_csvs(dir, env_r);
            out.rsm_reduced.emplace_back(n_trials, env_r);
            report.analyses.push_back({.label = stage,
                                       .present = true,
                                       .n_sims = n_trials,
                                       .dir = stage});
        }

        // Comparison tables.
        stage = "compare";
        auto add_diff = [&](const std::string& a, const Envelope& ea, const std::string& b,
                            const Envelope& eb) {
            DiffRecord d{a, b, compare_envelopes(ea, eb)};
            write_diff_report_csv(out_dir + "/diff_" + a + "_vs_" + b + ".csv", d.diff);
            report.diffs.push_back(std::move(d));
        };
        if (out.mcst_full) add_diff("rsm_full", *out.rsm_full, "mcst_full", *out.mcst_full);
        if (out.mcst_full && out.mcst_reduced)
            add_diff("mcst_reduced", *out.mcst_reduced, "mcst_full", *out.mcst_full);
        for (const auto& [n_trials, env_r] : out.rsm_reduced)
            if (out.mcst_reduced)
                add_diff("rsm_reduced_" + std::to_string(n_trials), env_r, "mcst_reduced",
                         *out.mcst_reduced);
    } catch (...) {
        finish(stage);
        throw;
    }

    finish("");
    return report;
}

} // namespace uqfarm
