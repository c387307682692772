#include "uqfarm/sensitivity.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "uqfarm/csv.hpp"

namespace uqfarm {

static void check_inputs(const SurrogateModel& model, const SampleMatrix& X1,
                         const Vector& sigmas) {
    const auto d = model.dims();
    if (X1.rows() < 1) throw ShapeMismatch("sensitivity: empty sample matrix");
    if (X1.cols() != d)
        throw ShapeMismatch("sensitivity: sample matrix has " + std::to_string(X1.cols()) +
                            " columns, model has " + std::to_string(d) + " variables");
    if (sigmas.size() != d)
        throw ShapeMismatch("sensitivity: sigma vector length " + std::to_string(sigmas.size()) +
                            ", expected " + std::to_string(d));
    for (Eigen::Index i = 0; i < d; ++i)
        if (!(sigmas[i] > 0.0))
            throw ZeroSigma("variable '" + model.variable_names[static_cast<std::size_t>(i)] +
                            "' has sigma = 0; exclude it or pick another mode");
}

static Matrix metric_matrix(const SurrogateModel& model, const SampleMatrix& X1,
                            const Vector& sigmas, SensitivityMode mode, Eigen::Index j) {
    const auto d = model.dims();
    const auto n = X1.rows();
    Matrix a(d, n);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double b = model.slope(j, i);
        if (mode == SensitivityMode::RawOverSigma) {
            a.row(i) = (b / sigmas[i]) * X1.values.col(i).transpose();
        } else {
            const double center = X1.values.col(i).mean();
            a.row(i) = b * (X1.values.col(i).transpose().array() - center);
        }
    }
    return a;
}

SensitivityMatrix sensitivity_matrix(const SurrogateModel& model, const SampleMatrix& X1,
                                     const Vector& sigmas, SensitivityMode mode) {
    check_inputs(model, X1, sigmas);
    SensitivityMatrix out;
    out.mode = mode;
    out.variable_names = model.variable_names;
    out.metric_names = model.metric_names;
    const auto m = static_cast<Eigen::Index>(model.metric_names.size());
    for (Eigen::Index j = 0; j < m; ++j)
        out.per_metric.push_back(metric_matrix(model, X1, sigmas, mode, j));
    return out;
}

static void rank_scores(SensitivityScores& scores) {
    const auto m = scores.s.rows();
    const auto d = scores.s.cols();
    scores.ranks.resize(m, d);
    scores.totals = Vector::Zero(d);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < m; ++j) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            return scores.s(j, a) > scores.s(j, b); // ties keep lower index first
        });
        for (Eigen::Index r = 0; r < d; ++r)
            scores.ranks(j, order[static_cast<std::size_t>(r)]) = static_cast<int>(r + 1);
    }
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < m; ++j) scores.totals[i] += scores.ranks(j, i);
}

SensitivityScores sensitivity_scores(const SensitivityMatrix& matrices) {
    SensitivityScores scores;
    scores.variable_names = matrices.variable_names;
    scores.metric_names = matrices.metric_names;
    const auto m = static_cast<Eigen::Index>(matrices.per_metric.size());
    const auto d = static_cast<Eigen::Index>(matrices.variable_names.size());
    scores.s.resize(m, d);
    for (Eigen::Index j = 0; j < m; ++j)
        scores.s.row(j) = matrices.per_metric[static_cast<std::size_t>(j)].cwiseAbs().rowwise().mean();
    rank_scores(scores);
    return scores;
}

SensitivityScores compute_sensitivity_scores(const SurrogateModel& model, const SampleMatrix& X1,
                                             const Vector& sigmas, SensitivityMode mode) {
    check_inputs(model, X1, sigmas);
    SensitivityScores scores;
    scores.variable_names = model.variable_names;
    scores.metric_names = model.metric_names;
    const auto m = static_cast<Eigen::Index>(model.metric_names.size());
    scores.s.resize(m, model.dims());
    for (Eigen::Index j = 0; j < m; ++j)
        scores.s.row(j) = metric_matrix(model, X1, sigmas, mode, j).cwiseAbs().rowwise().mean();
    rank_scores(scores);
    return scores;
}

ReducedSet reduce_key_set(const SensitivityScores& scores, std::optional<int> k_override,
                          const ReductionConfig& config) {
    const auto d = scores.totals.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return scores.totals[a] < scores.totals[b];
    });

    ReducedSet out;
    for (auto idx : order) {
        out.gap_report.sorted_names.push_back(scores.variable_names[static_cast<std::size_t>(idx)]);
        out.gap_report.sorted_totals.push_back(scores.totals[idx]);
    }

    // Max relative drop in the sorted totals, searched inside the window.
    const auto lo = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(d * config.gap_lo_frac));
    const auto hi = std::min<Eigen::Index>(d - 1, static_cast<Eigen::Index>(d * config.gap_hi_frac));
    out.gap_report.drop_index = static_cast<int>(lo);
    for (Eigen::Index i = lo; i <= hi && i < d; ++i) {
        const double cur = out.gap_report.sorted_totals[static_cast<std::size_t>(i - 1)];
        const double next = out.gap_report.sorted_totals[static_cast<std::size_t>(i)];
        double ratio;
        if (cur > 0.0)
            ratio = next / cur;
        else
            ratio = next > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
        if (ratio > out.gap_report.max_gap_ratio) {
            out.gap_report.max_gap_ratio = ratio;
            out.gap_report.drop_index = static_cast<int>(i);
        }
    }

    out.k = k_override ? std::min<int>(*k_override, static_cast<int>(d))
                       : out.gap_report.drop_index;
    out.selected.assign(out.gap_report.sorted_names.begin(),
                        out.gap_report.sorted_names.begin() + out.k);
    return out;
}

void write_sensitivity_csv(const std::string& path, const SensitivityScores& scores,
                           const ReducedSet& reduced) {
    std::unordered_set<std::string> selected(reduced.selected.begin(), reduced.selected.end());
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "variable";
    for (const auto& m : scores.metric_names) out << ",s_" << m;
    for (const auto& m : scores.metric_names) out << ",rank_" << m;
    out << ",total,selected\n";
    const auto m = scores.s.rows();
    for (Eigen::Index i = 0; i < scores.s.cols(); ++i) {
        const auto& name = scores.variable_names[static_cast<std::size_t>(i)];
        out << name;
        for (Eigen::Index j = 0; j < m; ++j) out << ',' << format_double(scores.s(j, i));
        for (Eigen::Index j = 0; j < m; ++j) out << ',' << scores.ranks(j, i);
        out << ',' << format_double(scores.totals[i]) << ',' << (selected.count(name) ? 1 : 0)
            << '\n';
    }
}

} // namespace uqfarm
