#include "uqfarm/simulator.hpp"

#include <chrono>
#include <csignal>
#include <sstream>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "uqfarm/csv.hpp"
#include "uqfarm/rng.hpp"

namespace uqfarm {

using nlohmann::json;

SimulationResult Simulator::simulate(const SimulationJob& job) const {
    if (job.inputs.size() != d_)
        throw ShapeMismatch("job " + job.job_id + " has " + std::to_string(job.inputs.size()) +
                            " inputs, model expects " + std::to_string(d_));
    auto t0 = std::chrono::steady_clock::now();
    if (job_latency_ms_ > 0.0)
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(job_latency_ms_));

    SimulationResult result;
    result.job_id = job.job_id;
    try {
        result.series = run(job.inputs);
        if (result.series.rows() != n_metrics() || result.series.cols() != t_steps_ ||
            !result.series.allFinite())
            throw SimFailure("model returned a malformed series");
        result.summaries.resize(n_metrics());
        for (Eigen::Index j = 0; j < n_metrics(); ++j)
            result.summaries[j] =
                apply_summary(summary_kinds_[static_cast<std::size_t>(j)], result.series.row(j));
        result.status = SimStatus::Ok;
    } catch (const SimFailure& e) {
        result.status = SimStatus::Failed;
        result.failure_reason = e.what();
        result.series.resize(0, 0);
        result.summaries.resize(0);
    }
    result.duration_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

double SyntheticModelSpec::profile(Eigen::Index t) const {
    if (t < 0 || t >= t_steps) throw IndexOutOfRange("profile: step out of range");
    if (t < settle_steps) return 0.0;
    double u = static_cast<double>(t - settle_steps) / static_cast<double>(t_steps - 1 - settle_steps);
    return u * u * (3.0 - 2.0 * u);
}

void SyntheticModelSpec::validate() const {
    const auto m = baseline.size();
    const auto d = means.size();
    if (coefficients.rows() != m || coefficients.cols() != d)
        throw ValidationError("coefficient matrix shape does not match baseline/means");
    if (quad_diag.rows() != m || quad_diag.cols() != d)
        throw ValidationError("quad_diag shape does not match baseline/means");
    if (settle_steps < 0 || settle_steps >= t_steps - 1)
        throw ValidationError("settle_steps must lie in [0, t_steps-1)");
    std::vector<bool> is_key(static_cast<std::size_t>(d), false);
    for (auto i : key_set) {
        if (i < 0 || i >= d) throw ValidationError("key_set index out of range");
        is_key[static_cast<std::size_t>(i)] = true;
    }
    if (key_set.empty()) return;
    Vector minor_max = Vector::Zero(m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < d; ++i)
            if (!is_key[static_cast<std::size_t>(i)])
                minor_max[j] = std::max(minor_max[j], std::abs(coefficients(j, i)));
    for (auto i : key_set) {
        bool dominant = false;
        for (Eigen::Index j = 0; j < m && !dominant; ++j)
            dominant = std::abs(coefficients(j, i)) > dominance_factor * minor_max[j];
        if (!dominant)
            throw ValidationError("planted key variable " + std::to_string(i) +
                                  " does not dominate the minor coefficients");
    }
}

Vector synthetic_response(const SyntheticModelSpec& model, const Vector& x, Eigen::Index t) {
    double g = model.profile(t);
    Vector dx = x - model.means;
    Vector y = model.baseline + model.coefficients * dx + model.quad_diag * dx.cwiseProduct(dx);
    return y * g;
}

SyntheticSimulator::SyntheticSimulator(SyntheticModelSpec model,
                                       std::vector<SummaryKind> summary_kinds,
                                       double job_latency_ms)
    : Simulator(model.means.size(), std::move(summary_kinds), model.t_steps, job_latency_ms),
      model_(std::move(model)) {
    model_.validate();
    if (static_cast<Eigen::Index>(n_metrics()) != model_.baseline.size())
        throw ValidationError("metric count does not match the synthetic model baseline");
}

Matrix SyntheticSimulator::run(const Vector& x) const {
    Vector dx = x - model_.means;
    Vector base = model_.baseline + model_.coefficients * dx +
                  model_.quad_diag * dx.cwiseProduct(dx);
    Matrix series(base.size(), model_.t_steps);
    for (Eigen::Index t = 0; t < model_.t_steps; ++t) series.col(t) = base * model_.profile(t);
    return series;
}

SyntheticModelSpec generate_synthetic_model(const StudySpec& spec, const SyntheticGenConfig& cfg) {
    const auto d = static_cast<Eigen::Index>(spec.variables.size());
    const auto m = static_cast<Eigen::Index>(spec.metrics.size());
    SyntheticModelSpec model;
    model.means = spec.means();
    model.t_steps = cfg.t_steps;
    model.settle_steps = cfg.settle_steps;
    model.baseline = cfg.baseline.size() ? cfg.baseline : Vector::Constant(m, 100.0);
    if (model.baseline.size() != m)
        throw ValidationError("baseline length does not match metric count");

    model.key_set = cfg.key_set;
    if (model.key_set.empty()) {
        int k = std::min<int>(cfg.key_count, static_cast<int>(d));
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(d));
        for (Eigen::Index i = 0; i < d; ++i) idx[static_cast<std::size_t>(i)] = i;
        Rng shuffler(substream_seed(cfg.seed, 0x4b455953));
        shuffler.shuffle(idx);
        model.key_set.assign(idx.begin(), idx.begin() + k);
        std::sort(model.key_set.begin(), model.key_set.end());
    }

    const Vector sigma = spec.sigmas();
    std::vector<bool> is_key(static_cast<std::size_t>(d), false);
    for (auto i : model.key_set) is_key[static_cast<std::size_t>(i)] = true;

    model.coefficients = Matrix::Zero(m, d);
    model.quad_diag = Matrix::Zero(m, d);

    Rng rng(substream_seed(cfg.seed, 0x5e3d));

    // Keys first: a descending strength schedule, jittered per metric, so the
    // seven rank lists agree on the key ordering while the minors scatter.
    const auto n_key = static_cast<Eigen::Index>(model.key_set.size());
    Vector key_min_mag = Vector::Constant(m, std::numeric_limits<double>::max());
    for (Eigen::Index p = 0; p < n_key; ++p) {
        Eigen::Index i = model.key_set[static_cast<std::size_t>(p)];
        double strength = n_key > 1 ? 1.0 - 0.45 * static_cast<double>(p) / (n_key - 1) : 1.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            double kappa = cfg.coeff_scale_key * std::abs(model.baseline[j]);
            double mag = strength * kappa * (0.9 + 0.2 * rng.uniform01());
            double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
            double s = sigma[i];
            model.coefficients(j, i) = sign * (s > 0.0 ? mag / s : mag);
            key_min_mag[j] = std::min(key_min_mag[j], mag);
        }
    }

    // Minor magnitudes are capped both in score space (|C| sigma) and in raw
    // coefficient space so the dominance invariant holds for any sigma mix.
    Vector key_min_coeff = Vector::Constant(m, std::numeric_limits<double>::max());
    for (Eigen::Index j = 0; j < m; ++j)
        for (auto i : model.key_set)
            key_min_coeff[j] = std::min(key_min_coeff[j], std::abs(model.coefficients(j, i)));

    for (Eigen::Index i = 0; i < d; ++i) {
        if (is_key[static_cast<std::size_t>(i)]) continue;
        for (Eigen::Index j = 0; j < m; ++j) {
            double u = (0.2 + 0.8 * rng.uniform01()) * std::min(cfg.coeff_scale_minor, 1.0);
            double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
            double cap_coeff = n_key ? key_min_coeff[j] / (model.dominance_factor * 1.2)
                                     : cfg.coeff_scale_key * std::abs(model.baseline[j]);
            double s = sigma[i];
            double c;
            if (s > 0.0 && n_key) {
                double cap_score = key_min_mag[j] / 4.0;
                c = u * std::min(cap_coeff, cap_score / s);
            } else {
                c = u * cap_coeff;
            }
            model.coefficients(j, i) = sign * c;
        }
    }

    if (cfg.quad_scale != 0.0) model.quad_diag = cfg.quad_scale * model.coefficients;
    model.validate();
    return model;
}

// ---- exec escape hatch ----------------------------------------------------

namespace {

void ignore_sigpipe() {
    static bool done = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)done;
}

} // namespace

ExecSimulator::ExecSimulator(std::string command, Eigen::Index d,
                             std::vector<SummaryKind> summary_kinds, Eigen::Index t_steps,
                             double job_latency_ms)
    : Simulator(d, std::move(summary_kinds), t_steps, job_latency_ms),
      command_(std::move(command)) {
    ignore_sigpipe();
}

Matrix ExecSimulator::run(const Vector& x) const {
    int in_pipe[2];  // parent -> child stdin
    int out_pipe[2]; // child stdout -> parent
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
        throw SimFailure("exec simulator: pipe() failed");

    pid_t pid = fork();
    if (pid < 0) throw SimFailure("exec simulator: fork() failed");
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);

    std::string input;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (i) input += ',';
        input += format_double(x[i]);
    }
    input += '\n';
    // EPIPE just means the child never reads its stdin; its exit code decides.
    ssize_t ignored = write(in_pipe[1], input.data(), input.size());
    (void)ignored;
    close(in_pipe[1]);

    std::string output;
    char buf[4096];
    ssize_t got;
    while ((got = read(out_pipe[0], buf, sizeof(buf))) > 0) output.append(buf, static_cast<std::size_t>(got));
    close(out_pipe[0]);

    int status = 0;
    waitpid(pid, &status, 0);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
        throw SimFailure("exec simulator: command exited with status " +
                         std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));

    Matrix series(n_metrics(), n_steps());
    std::stringstream ss(output);
    std::string line;
    for (Eigen::Index j = 0; j < n_metrics(); ++j) {
        if (!std::getline(ss, line))
            throw SimFailure("exec simulator: expected " + std::to_string(n_metrics()) +
                             " output lines");
        std::stringstream ls(line);
        std::string field;
        for (Eigen::Index t = 0; t < n_steps(); ++t) {
            if (!std::getline(ls, field, ','))
                throw SimFailure("exec simulator: expected " + std::to_string(n_steps()) +
                                 " values per line");
            try {
                series(j, t) = std::stod(field);
            } catch (const std::exception&) {
                throw SimFailure("exec simulator: bad numeric field '" + field + "'");
            }
        }
    }
    return series;
}

SimulatorHandle make_simulator(const StudySpec& spec) {
    std::vector<SummaryKind> kinds;
    for (const auto& metric : spec.metrics) kinds.push_back(metric.summary);

    json sim = spec.simulator_json.empty() ? json{{"type", "synthetic"}}
                                           : json::parse(spec.simulator_json);
    const std::string type = sim.value("type", std::string("synthetic"));
    const double latency = sim.value("job_latency_ms", 0.0);

    if (type == "exec") {
        if (!sim.contains("command")) throw ValidationError("exec simulator needs a 'command'");
        return std::make_shared<ExecSimulator>(sim["command"].get<std::string>(),
                                               static_cast<Eigen::Index>(spec.variables.size()),
                                               std::move(kinds), sim.value("t_steps", 101),
                                               latency);
    }
    if (type != "synthetic")
        throw ValidationError("unknown simulator type '" + type + "'");

    SyntheticGenConfig cfg;
    cfg.seed = sim.value("seed", spec.seed);
    cfg.key_count = sim.value("key_count", cfg.key_count);
    if (sim.contains("key_set"))
        for (const auto& i : sim["key_set"]) cfg.key_set.push_back(i.get<Eigen::Index>());
    cfg.coeff_scale_key = sim.value("coeff_scale_key", cfg.coeff_scale_key);
    cfg.coeff_scale_minor = sim.value("coeff_scale_minor", cfg.coeff_scale_minor);
    cfg.quad_scale = sim.value("quad_scale", cfg.quad_scale);
    cfg.t_steps = sim.value("t_steps", cfg.t_steps);
    cfg.settle_steps = sim.value("settle_steps", cfg.settle_steps);
    if (sim.contains("baseline")) {
        auto b = sim["baseline"].get<std::vector<double>>();
        cfg.baseline = Eigen::Map<Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
    }

    auto model = generate_synthetic_model(spec, cfg);
    if (sim.contains("coefficients")) {
        auto rows = sim["coefficients"].get<std::vector<std::vector<double>>>();
        for (std::size_t j = 0; j < rows.size(); ++j)
            for (std::size_t i = 0; i < rows[j].size(); ++i)
                model.coefficients(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
                    rows[j][i];
        model.validate();
    }
    return std::make_shared<SyntheticSimulator>(std::move(model), std::move(kinds), latency);
}

} // namespace uqfarm
