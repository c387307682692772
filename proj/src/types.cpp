#include "uqfarm/types.hpp"

#include <cmath>
#include <unordered_set>

namespace uqfarm {

double apply_summary(SummaryKind kind, const Eigen::Ref<const Eigen::RowVectorXd>& series) {
    if (series.size() == 0) throw EmptyInput("apply_summary: empty series");
    switch (kind) {
    case SummaryKind::PeakAbsSigned: {
        Eigen::Index idx = 0;
        series.cwiseAbs().maxCoeff(&idx);
        return series[idx];
    }
    case SummaryKind::Max:
        return series.maxCoeff();
    case SummaryKind::Min:
        return series.minCoeff();
    case SummaryKind::Final:
        return series[series.size() - 1];
    }
    throw Error("apply_summary: unreachable");
}

void StudySpec::validate() const {
    if (variables.empty()) throw ValidationError("study needs at least one variable");
    if (metrics.empty()) throw ValidationError("study needs at least one metric");
    std::unordered_set<std::string> seen;
    for (const auto& v : variables) {
        if (v.name.empty()) throw ValidationError("variable with empty name");
        if (!(v.std_dev >= 0.0) || !std::isfinite(v.std_dev))
            throw ValidationError("variable '" + v.name + "' has negative or non-finite std_dev");
        if (!std::isfinite(v.mean))
            throw ValidationError("variable '" + v.name + "' has non-finite mean");
        if (!seen.insert(v.name).second)
            throw ValidationError("duplicate variable name '" + v.name + "'");
    }
    std::unordered_set<std::string> seen_m;
    for (const auto& m : metrics) {
        if (m.name.empty()) throw ValidationError("metric with empty name");
        if (!seen_m.insert(m.name).second)
            throw ValidationError("duplicate metric name '" + m.name + "'");
    }
    if (!(p_lo > 0.0 && p_hi < 100.0 && p_lo < p_hi))
        throw ValidationError("percentiles must satisfy 0 < p_lo < p_hi < 100");
    if (n_mc < 0) throw ValidationError("n_mc must be >= 0");
    if (n_rsm < 1) throw ValidationError("n_rsm must be >= 1");
    if (n_rsm < static_cast<int>(variables.size()) + 2)
        throw ValidationError("n_rsm must be at least d+2 for least-squares fitting (d=" +
                              std::to_string(variables.size()) + ", n_rsm=" +
                              std::to_string(n_rsm) + ")");
    if (n_surrogate < 2) throw ValidationError("n_surrogate must be >= 2");
    if (convergence.window < 1) throw ValidationError("convergence window must be >= 1");
    if (!(convergence.rel_tol > 0.0)) throw ValidationError("convergence rel_tol must be > 0");
    if (reduction.k_override && *reduction.k_override < 1)
        throw ValidationError("reduction k_override must be >= 1");
    for (int n : rsm_variants)
        if (n < 2) throw ValidationError("rsm variant counts must be >= 2");
}

Vector StudySpec::means() const {
    Vector mu(variables.size());
    for (std::size_t i = 0; i < variables.size(); ++i) mu[static_cast<Eigen::Index>(i)] = variables[i].mean;
    return mu;
}

Vector StudySpec::sigmas() const {
    Vector s(variables.size());
    for (std::size_t i = 0; i < variables.size(); ++i) s[static_cast<Eigen::Index>(i)] = variables[i].std_dev;
    return s;
}

void validate_alignment(const SampleMatrix& samples, const StudySpec& spec) {
    const auto d = static_cast<Eigen::Index>(spec.variables.size());
    if (samples.cols() != d)
        throw ShapeMismatch("sample matrix has " + std::to_string(samples.cols()) +
                            " columns, spec has " + std::to_string(d) + " variables");
    if (static_cast<Eigen::Index>(samples.variable_names.size()) != d)
        throw ShapeMismatch("sample matrix carries " +
                            std::to_string(samples.variable_names.size()) + " column names, expected " +
                            std::to_string(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        const auto& expect = spec.variables[static_cast<std::size_t>(i)].name;
        if (samples.variable_names[static_cast<std::size_t>(i)] != expect)
            throw ShapeMismatch("column " + std::to_string(i) + " is '" +
                                samples.variable_names[static_cast<std::size_t>(i)] +
                                "', expected '" + expect + "'");
    }
    if (!samples.values.allFinite())
        throw ShapeMismatch("sample matrix contains non-finite entries");
}

} // namespace uqfarm
