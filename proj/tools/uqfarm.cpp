// Command-line surface for probabilistic simulator studies: sampling,
// simulation, surrogate fitting, sensitivity ranking, envelopes, the full
// four-analysis study, and the coordinator/worker farm.

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "uqfarm/config.hpp"
#include "uqfarm/coordinator.hpp"
#include "uqfarm/csv.hpp"
#include "uqfarm/envelope.hpp"
#include "uqfarm/pipeline.hpp"
#include "uqfarm/sampler.hpp"
#include "uqfarm/sensitivity.hpp"
#include "uqfarm/worker.hpp"

namespace fs = std::filesystem;
using namespace uqfarm;

namespace {

std::pair<std::string, int> parse_hostport(const std::string& s) {
    auto pos = s.rfind(':');
    if (pos == std::string::npos) throw ValidationError("expected HOST:PORT, got '" + s + "'");
    return {s.substr(0, pos), std::stoi(s.substr(pos + 1))};
}

void write_responses(const std::string& dir, const ResponseSet& responses) {
    fs::create_directories(dir);
    write_csv_file(dir + "/summaries.csv", responses.metric_names, responses.summaries);
    for (std::size_t j = 0; j < responses.series.size(); ++j) {
        std::vector<std::string> header;
        for (Eigen::Index t = 0; t < responses.series[j].cols(); ++t)
            header.push_back("t" + std::to_string(t));
        write_csv_file(dir + "/series_" + responses.metric_names[j] + ".csv", header,
                       responses.series[j]);
    }
}

ResponseSet read_responses(const std::string& dir, const StudySpec& spec) {
    ResponseSet responses;
    auto summaries = read_csv_file(dir + "/summaries.csv");
    responses.summaries = std::move(summaries.values);
    for (const auto& m : spec.metrics) {
        responses.metric_names.push_back(m.name);
        auto series = read_csv_file(dir + "/series_" + m.name + ".csv");
        responses.series.push_back(std::move(series.values));
    }
    for (Eigen::Index r = 0; r < responses.summaries.rows(); ++r)
        responses.sample_ids.push_back(r);
    return responses;
}

Envelope read_envelope(const std::string& dir, const StudySpec& spec) {
    Envelope env;
    env.p_lo_pct = spec.p_lo;
    env.p_hi_pct = spec.p_hi;
    for (const auto& m : spec.metrics) {
        env.metric_names.push_back(m.name);
        auto table = read_csv_file(dir + "/envelope_" + m.name + ".csv");
        env.bands.push_back(table.values.rightCols(3));
    }
    return env;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"probabilistic simulator study toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    std::string format = "csv";
    app.add_option("--config", config_path, "study configuration (JSON)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed_override, "override the study seed")
        ->each([&](const std::string&) { seed_given = true; });
    app.add_option("--format", format, "output format")->check(CLI::IsMember({"csv"}));

    auto load_spec = [&] {
        if (config_path.empty()) throw ValidationError("--config is required");
        auto spec = load_study_spec_file(config_path);
        if (seed_given) spec.seed = seed_override;
        return spec;
    };

    // sample
    auto* cmd_sample = app.add_subcommand("sample", "draw input samples");
    int sample_n = 0;
    std::string design = "mc";
    cmd_sample->add_option("--n", sample_n, "sample count (default: study n_mc / n_rsm)");
    cmd_sample->add_option("--design", design, "mc | regular")
        ->check(CLI::IsMember({"mc", "regular"}));

    // simulate
    auto* cmd_simulate = app.add_subcommand("simulate", "run the simulator over a sample file");
    std::string samples_path;
    cmd_simulate->add_option("--samples", samples_path, "samples CSV")->required();
    int sim_threads = 1;
    cmd_simulate->add_option("--threads", sim_threads, "local worker threads");

    // fit
    auto* cmd_fit = app.add_subcommand("fit", "fit the response surface");
    std::string fit_samples, fit_summaries, fit_basis = "linear";
    cmd_fit->add_option("--samples", fit_samples, "training samples CSV")->required();
    cmd_fit->add_option("--summaries", fit_summaries, "training summaries CSV")->required();
    cmd_fit->add_option("--basis", fit_basis, "linear | quad")
        ->check(CLI::IsMember({"linear", "quad"}));

    // sensitivity
    auto* cmd_sens = app.add_subcommand("sensitivity", "score and rank input variables");
    std::string sens_surrogate, sens_samples, sens_mode = "centered";
    cmd_sens->add_option("--surrogate", sens_surrogate, "surrogate CSV")->required();
    cmd_sens->add_option("--samples", sens_samples, "propagation samples CSV")->required();
    cmd_sens->add_option("--mode", sens_mode, "raw | centered")
        ->check(CLI::IsMember({"raw", "centered"}));

    // reduce
    auto* cmd_reduce = app.add_subcommand("reduce", "cut the ranked list at the score drop");
    std::string reduce_sensitivity;
    int reduce_k = 0;
    cmd_reduce->add_option("--sensitivity", reduce_sensitivity, "sensitivity CSV")->required();
    cmd_reduce->add_option("--k", reduce_k, "override the detected cut");

    // envelope
    auto* cmd_env = app.add_subcommand("envelope", "percentile bands and convergence trace");
    std::string env_responses;
    cmd_env->add_option("--responses", env_responses, "directory from 'simulate'")->required();

    // compare
    auto* cmd_cmp = app.add_subcommand("compare", "envelope difference report");
    std::string cmp_a, cmp_b;
    cmd_cmp->add_option("--a", cmp_a, "first envelope directory")->required();
    cmd_cmp->add_option("--b", cmp_b, "second envelope directory")->required();

    // study
    auto* cmd_study = app.add_subcommand("study", "run the full four-analysis study");
    int study_threads = 1;
    cmd_study->add_option("--threads", study_threads, "local worker threads");

    // coordinator
    auto* cmd_coord = app.add_subcommand("coordinator", "run the study, farming jobs to workers");
    std::string bind_addr = "127.0.0.1:0";
    cmd_coord->add_option("--bind", bind_addr, "HOST:PORT (port 0 = ephemeral)");

    // worker
    auto* cmd_worker = app.add_subcommand("worker", "pull and execute jobs from a coordinator");
    std::string connect_addr;
    int slots = 1;
    double speed = 1.0;
    std::string worker_id;
    cmd_worker->add_option("--connect", connect_addr, "coordinator HOST:PORT")->required();
    cmd_worker->add_option("--slots", slots, "concurrent jobs");
    cmd_worker->add_option("--speed", speed, "declared speed factor (informational)");
    cmd_worker->add_option("--id", worker_id, "worker id (default: host-pid)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_sample) {
            auto spec = load_spec();
            fs::create_directories(out_dir);
            int n = sample_n > 0 ? sample_n : (design == "mc" ? spec.n_mc : spec.n_rsm);
            auto samples = design == "mc" ? draw_monte_carlo(spec, n, spec.seed)
                                          : draw_regular_design(spec, n, spec.seed);
            write_samples_csv(out_dir + "/samples.csv", samples);
            std::cout << "wrote " << n << " samples to " << out_dir << "/samples.csv\n";
        } else if (*cmd_simulate) {
            auto spec = load_spec();
            auto samples = read_samples_csv(samples_path, SampleOrigin::MonteCarlo);
            validate_alignment(samples, spec);
            LocalBackend backend(make_simulator(spec), sim_threads);
            std::vector<std::string> metric_names;
            for (const auto& m : spec.metrics) metric_names.push_back(m.name);
            auto responses = to_response_set(backend.run_batch(samples, spec.seed), metric_names);
            write_responses(out_dir, responses);
            std::cout << "simulated " << samples.rows() << " samples into " << out_dir << "\n";
        } else if (*cmd_fit) {
            auto spec = load_spec();
            auto samples = read_samples_csv(fit_samples, SampleOrigin::RegularDesign);
            auto summaries = read_csv_file(fit_summaries);
            auto model = fit_rse(samples, summaries.values, summaries.header,
                                 fit_basis == "quad" ? Basis::LinearPlusQuadDiag
                                                     : Basis::LinearIntercept);
            fs::create_directories(out_dir);
            write_surrogate_csv(out_dir + "/surrogate.csv", model);
            std::cout << "fitted " << model.metric_names.size() << " metrics, condition "
                      << model.training_stats.condition << "\n";
        } else if (*cmd_sens) {
            auto spec = load_spec();
            auto model = read_surrogate_csv(sens_surrogate);
            auto samples = read_samples_csv(sens_samples, SampleOrigin::Surrogate);
            auto scores = surrogate_sensitivity(model, samples, spec.sigmas(),
                                                sens_mode == "raw"
                                                    ? SensitivityMode::RawOverSigma
                                                    : SensitivityMode::CenteredOverSigma);
            auto reduced = reduce_key_set(scores, spec.reduction.k_override, spec.reduction);
            fs::create_directories(out_dir);
            write_sensitivity_csv(out_dir + "/sensitivity.csv", scores, reduced);
            std::cout << "ranked " << scores.variable_names.size() << " variables\n";
        } else if (*cmd_reduce) {
            // Rebuild totals from the sensitivity CSV and re-run the cut.
            std::ifstream in(reduce_sensitivity);
            if (!in) throw Error("cannot open " + reduce_sensitivity);
            std::string line;
            std::getline(in, line); // header
            SensitivityScores scores;
            std::vector<double> totals;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                auto first = line.find(',');
                auto last = line.rfind(',');
                auto second_last = line.rfind(',', last - 1);
                scores.variable_names.push_back(line.substr(0, first));
                totals.push_back(std::stod(line.substr(second_last + 1, last - second_last - 1)));
            }
            scores.totals = Eigen::Map<Vector>(totals.data(),
                                               static_cast<Eigen::Index>(totals.size()));
            scores.s.resize(0, static_cast<Eigen::Index>(totals.size()));
            ReductionConfig rc;
            auto reduced =
                reduce_key_set(scores, reduce_k > 0 ? std::optional<int>(reduce_k) : std::nullopt, rc);
            fs::create_directories(out_dir);
            std::ofstream outf(out_dir + "/reduced.csv");
            outf << "variable\n";
            for (const auto& name : reduced.selected) outf << name << "\n";
            std::cout << "selected k=" << reduced.k << " (drop at position "
                      << reduced.gap_report.drop_index << ")\n";
        } else if (*cmd_env) {
            auto spec = load_spec();
            auto responses = read_responses(env_responses, spec);
            auto env = pointwise_envelope(responses, spec.p_lo, spec.p_hi);
            fs::create_directories(out_dir);
            write_envelope_csvs(out_dir, env);
            auto trace = convergence_trace(responses.summaries.col(0), spec.p_lo, spec.p_hi,
                                           spec.convergence.window, spec.convergence.rel_tol);
            write_convergence_csv(out_dir + "/convergence.csv", trace);
            std::cout << "envelopes for " << env.metric_names.size() << " metrics in " << out_dir
                      << "\n";
        } else if (*cmd_cmp) {
            auto spec = load_spec();
            auto diff = compare_envelopes(read_envelope(cmp_a, spec), read_envelope(cmp_b, spec));
            fs::create_directories(out_dir);
            write_diff_report_csv(out_dir + "/diff_report.csv", diff);
            std::cout << "wrote " << out_dir << "/diff_report.csv\n";
        } else if (*cmd_study) {
            auto spec = load_spec();
            LocalBackend backend(make_simulator(spec), study_threads);
            auto report = run_study(spec, backend, out_dir);
            std::cout << "study complete: " << report.analyses.size() << " analyses, wall "
                      << report.wall_ms / 1000.0 << " s (serial-equivalent "
                      << report.serial_equivalent_ms / 1000.0 << " s)\n";
        } else if (*cmd_coord) {
            auto spec = load_spec();
            auto [host, port] = parse_hostport(bind_addr);
            Coordinator coordinator(host, port, spec.distributed);
            std::cout << "coordinator listening on " << host << ":" << coordinator.port()
                      << std::endl;
            DistributedBackend backend(coordinator);
            auto report = run_study(spec, backend, out_dir);
            coordinator.shutdown();
            std::cout << "study complete: wall " << report.wall_ms / 1000.0
                      << " s (serial-equivalent " << report.serial_equivalent_ms / 1000.0
                      << " s)\n";
        } else if (*cmd_worker) {
            auto spec = load_spec();
            auto [host, port] = parse_hostport(connect_addr);
            WorkerConfig wc;
            wc.host = host;
            wc.port = port;
            wc.slots = slots;
            wc.speed = speed;
            wc.worker_id = worker_id;
            run_worker_loop(wc, make_simulator(spec));
        }
    } catch (const std::exception& e) {
        // For 'study', report.json already records the failed stage.
        std::string stage;
        if ((*cmd_study || *cmd_coord) && fs::exists(out_dir + "/report.json")) {
            std::ifstream rj(out_dir + "/report.json");
            std::string text((std::istreambuf_iterator<char>(rj)),
                             std::istreambuf_iterator<char>());
            auto pos = text.find("\"failed_stage\"");
            if (pos != std::string::npos) {
                auto start = text.find('"', pos + 14 + 1);
                auto end = text.find('"', start + 1);
                if (start != std::string::npos && end != std::string::npos)
                    stage = " [stage " + text.substr(start + 1, end - start - 1) + "]";
            }
        }
        std::cerr << "error" << stage << ": " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
