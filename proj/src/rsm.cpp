#include "uqfarm/rsm.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <fstream>

#include "uqfarm/csv.hpp"

namespace uqfarm {

namespace {
constexpr double kRankTol = 1e-10;
}

std::vector<std::string> basis_term_names(const std::vector<std::string>& variable_names,
                                          Basis basis) {
    std::vector<std::string> names{"intercept"};
    for (const auto& v : variable_names) names.push_back(v);
    if (basis == Basis::LinearPlusQuadDiag)
        for (const auto& v : variable_names) names.push_back(v + "^2");
    return names;
}

Matrix build_basis(const SampleMatrix& X, Basis basis) {
    const auto n = X.rows();
    const auto d = X.cols();
    const auto p = basis == Basis::LinearIntercept ? 1 + d : 1 + 2 * d;
    Matrix phi(n, p);
    phi.col(0).setOnes();
    phi.middleCols(1, d) = X.values;
    if (basis == Basis::LinearPlusQuadDiag)
        phi.middleCols(1 + d, d) = X.values.cwiseProduct(X.values);
    return phi;
}

static std::string describe_dependent_columns(const Matrix& phi,
                                              const std::vector<std::string>& term_names) {
    // Non-pivot columns from a pivoted QR are the redundant ones; for each,
    // also report any column it exactly duplicates (up to scale).
    Eigen::ColPivHouseholderQR<Matrix> qr(phi);
    qr.setThreshold(kRankTol);
    const auto rank = qr.rank();
    const auto& perm = qr.colsPermutation().indices();
    std::vector<bool> offending(static_cast<std::size_t>(phi.cols()), false);
    for (Eigen::Index k = rank; k < phi.cols(); ++k)
        offending[static_cast<std::size_t>(perm[k])] = true;
    for (Eigen::Index c = 0; c < phi.cols(); ++c) {
        if (!offending[static_cast<std::size_t>(c)]) continue;
        for (Eigen::Index c2 = 0; c2 < phi.cols(); ++c2) {
            if (c2 == c) continue;
            double n1 = phi.col(c).norm(), n2 = phi.col(c2).norm();
            if (n1 == 0.0 || n2 == 0.0) continue;
            double cosine = std::abs(phi.col(c).dot(phi.col(c2))) / (n1 * n2);
            if (cosine > 1.0 - 1e-8) offending[static_cast<std::size_t>(c2)] = true;
        }
    }
    std::string out;
    for (Eigen::Index c = 0; c < phi.cols(); ++c)
        if (offending[static_cast<std::size_t>(c)]) {
            if (!out.empty()) out += ", ";
            out += term_names[static_cast<std::size_t>(c)];
        }
    return out;
}

SurrogateModel fit_rse(const SampleMatrix& X, const Matrix& summaries,
                       const std::vector<std::string>& metric_names, Basis basis) {
    if (summaries.rows() != X.rows())
        throw ShapeMismatch("fit_rse: " + std::to_string(X.rows()) + " samples vs " +
                            std::to_string(summaries.rows()) + " response rows");
    if (static_cast<std::size_t>(summaries.cols()) != metric_names.size())
        throw ShapeMismatch("fit_rse: metric name count does not match response columns");
    if (!X.values.allFinite() || !summaries.allFinite())
        throw ShapeMismatch("fit_rse: non-finite training data");

    Matrix phi = build_basis(X, basis);
    const auto p = phi.cols();
    if (X.rows() <= p)
        throw ValidationError("fit_rse: need more than " + std::to_string(p) +
                              " samples for " + std::to_string(p) + " basis terms, got " +
                              std::to_string(X.rows()));

    Eigen::BDCSVD<Matrix> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv[k] > kRankTol * sv[0]) ++rank;
    if (rank < p) {
        auto term_names = basis_term_names(X.variable_names, basis);
        throw RankDeficient("design matrix rank " + std::to_string(rank) + " < " +
                            std::to_string(p) + "; dependent columns: " +
                            describe_dependent_columns(phi, term_names));
    }

    SurrogateModel model;
    model.basis = basis;
    model.variable_names = X.variable_names;
    model.metric_names = metric_names;
    model.coefficients = svd.solve(summaries).transpose(); // m x p

    model.training_stats.n_train = X.rows();
    model.training_stats.condition = sv[0] / sv[sv.size() - 1];
    model.training_stats.residual_rms.resize(summaries.cols());
    Matrix resid = phi * model.coefficients.transpose() - summaries;
    for (Eigen::Index j = 0; j < summaries.cols(); ++j)
        model.training_stats.residual_rms[j] =
            std::sqrt(resid.col(j).squaredNorm() / static_cast<double>(X.rows()));
    return model;
}

void fit_series(SurrogateModel& model, const SampleMatrix& X, const ResponseSet& responses) {
    if (responses.n_samples() != X.rows())
        throw ShapeMismatch("fit_series: sample count mismatch");
    if (responses.metric_names != model.metric_names)
        throw ShapeMismatch("fit_series: metric names differ from the fitted model");

    Matrix phi = build_basis(X, model.basis);
    Eigen::BDCSVD<Matrix> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    model.series_coefficients.clear();
    for (const auto& series : responses.series)
        // series is N x T; coefficients come out T x p
        model.series_coefficients.push_back(svd.solve(series).transpose());
}

Matrix predict(const SurrogateModel& model, const SampleMatrix& X1) {
    if (static_cast<std::size_t>(X1.cols()) != model.variable_names.size())
        throw ShapeMismatch("predict: sample matrix has " + std::to_string(X1.cols()) +
                            " columns, model expects " +
                            std::to_string(model.variable_names.size()));
    for (std::size_t i = 0; i < model.variable_names.size(); ++i)
        if (X1.variable_names[i] != model.variable_names[i])
            throw ShapeMismatch("predict: column " + std::to_string(i) + " is '" +
                                X1.variable_names[i] + "', model expects '" +
                                model.variable_names[i] + "'");
    return build_basis(X1, model.basis) * model.coefficients.transpose();
}

ResponseSet predict_responses(const SurrogateModel& model, const SampleMatrix& X1) {
    if (model.series_coefficients.empty())
        throw ValidationError("predict_responses: model has no series coefficients (run fit_series)");
    ResponseSet out;
    out.metric_names = model.metric_names;
    out.summaries = predict(model, X1);
    Matrix phi = build_basis(X1, model.basis);
    for (const auto& coeff : model.series_coefficients) out.series.push_back(phi * coeff.transpose());
    out.sample_ids.resize(static_cast<std::size_t>(X1.rows()));
    for (std::size_t i = 0; i < out.sample_ids.size(); ++i)
        out.sample_ids[i] = static_cast<std::int64_t>(i);
    return out;
}

void write_surrogate_csv(const std::string& path, const SurrogateModel& model) {
    auto header = basis_term_names(model.variable_names, model.basis);
    header.insert(header.begin(), "metric");
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (Eigen::Index j = 0; j < model.coefficients.rows(); ++j) {
        out << model.metric_names[static_cast<std::size_t>(j)];
        for (Eigen::Index c = 0; c < model.coefficients.cols(); ++c)
            out << ',' << format_double(model.coefficients(j, c));
        out << '\n';
    }
}

SurrogateModel read_surrogate_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open for reading: " + path);
    auto split = [](const std::string& line) {
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            auto pos = line.find(',', start);
            fields.push_back(line.substr(start, pos - start));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        return fields;
    };

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty surrogate CSV");
    auto header = split(line);
    if (header.size() < 3 || header[0] != "metric" || header[1] != "intercept")
        throw ParseError("surrogate CSV header must start with metric,intercept");

    SurrogateModel model;
    model.basis = header.back().size() > 2 && header.back().ends_with("^2")
                      ? Basis::LinearPlusQuadDiag
                      : Basis::LinearIntercept;
    const std::size_t d = model.basis == Basis::LinearPlusQuadDiag ? (header.size() - 2) / 2
                                                                   : header.size() - 2;
    for (std::size_t i = 0; i < d; ++i) model.variable_names.push_back(header[2 + i]);

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split(line);
        if (fields.size() != header.size()) throw ParseError("ragged surrogate CSV row");
        model.metric_names.push_back(fields[0]);
        std::vector<double> row;
        for (std::size_t c = 1; c < fields.size(); ++c) row.push_back(std::stod(fields[c]));
        rows.push_back(std::move(row));
    }
    model.coefficients.resize(static_cast<Eigen::Index>(rows.size()),
                              static_cast<Eigen::Index>(header.size() - 1));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            model.coefficients(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                rows[r][c];
    return model;
}

} // namespace uqfarm
