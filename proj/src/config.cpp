#include "uqfarm/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace uqfarm {

using nlohmann::json;

std::string summary_kind_name(SummaryKind kind) {
    switch (kind) {
    case SummaryKind::PeakAbsSigned: return "peak";
    case SummaryKind::Max: return "max";
    case SummaryKind::Min: return "min";
    case SummaryKind::Final: return "final";
    }
    throw Error("summary_kind_name: unreachable");
}

SummaryKind summary_kind_from_name(const std::string& name) {
    if (name == "peak") return SummaryKind::PeakAbsSigned;
    if (name == "max") return SummaryKind::Max;
    if (name == "min") return SummaryKind::Min;
    if (name == "final") return SummaryKind::Final;
    throw ValidationError("unknown summary functional '" + name + "'");
}

StudySpec load_study_spec(const std::string& document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }

    StudySpec spec;
    try {
        if (!doc.contains("variables") || !doc["variables"].is_array())
            throw ValidationError("config needs a 'variables' array");
        for (const auto& v : doc["variables"]) {
            InputVariable var;
            var.name = v.at("name").get<std::string>();
            var.mean = v.at("mean").get<double>();
            var.std_dev = v.at("std").get<double>();
            var.group = v.value("group", std::string{});
            spec.variables.push_back(std::move(var));
        }

        if (!doc.contains("metrics") || !doc["metrics"].is_array())
            throw ValidationError("config needs a 'metrics' array");
        json summaries = doc.value("metric_summaries", json::object());
        for (const auto& m : doc["metrics"]) {
            OutputMetric metric;
            metric.name = m.get<std::string>();
            if (summaries.contains(metric.name))
                metric.summary = summary_kind_from_name(summaries[metric.name].get<std::string>());
            spec.metrics.push_back(std::move(metric));
        }

        if (doc.contains("study")) {
            const auto& s = doc["study"];
            spec.n_mc = s.value("n_mc", spec.n_mc);
            spec.n_rsm = s.value("n_rsm", spec.n_rsm);
            spec.n_surrogate = s.value("n_surrogate", spec.n_surrogate);
            if (s.contains("rsm_variants"))
                spec.rsm_variants = s["rsm_variants"].get<std::vector<int>>();
            if (s.contains("percentiles")) {
                auto p = s["percentiles"].get<std::vector<double>>();
                if (p.size() != 2) throw ValidationError("'percentiles' must be [lo, hi]");
                spec.p_lo = p[0];
                spec.p_hi = p[1];
            }
            if (s.contains("convergence")) {
                const auto& c = s["convergence"];
                spec.convergence.window = c.value("window", spec.convergence.window);
                spec.convergence.rel_tol = c.value("rel_tol", spec.convergence.rel_tol);
            }
            spec.seed = s.value("seed", spec.seed);
        }

        if (doc.contains("reduction")) {
            const auto& r = doc["reduction"];
            if (r.contains("k_override") && !r["k_override"].is_null())
                spec.reduction.k_override = r["k_override"].get<int>();
            if (r.contains("gap_window")) {
                auto w = r["gap_window"].get<std::vector<double>>();
                if (w.size() != 2 || !(w[0] > 0.0 && w[0] < w[1] && w[1] <= 1.0))
                    throw ValidationError("'gap_window' must be [lo, hi] fractions of d");
                spec.reduction.gap_lo_frac = w[0];
                spec.reduction.gap_hi_frac = w[1];
            }
        }

        if (doc.contains("distributed")) {
            const auto& dd = doc["distributed"];
            spec.distributed.max_attempts = dd.value("max_attempts", spec.distributed.max_attempts);
            spec.distributed.timeout_floor_s =
                dd.value("timeout_floor_s", spec.distributed.timeout_floor_s);
            spec.distributed.timeout_factor =
                dd.value("timeout_factor", spec.distributed.timeout_factor);
        }

        if (doc.contains("simulator")) spec.simulator_json = doc["simulator"].dump();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad config value: ") + e.what());
    }

    spec.validate();
    return spec;
}

StudySpec load_study_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_study_spec(ss.str());
}

std::string save_study_spec(const StudySpec& spec) {
    json doc;
    doc["variables"] = json::array();
    for (const auto& v : spec.variables) {
        json jv{{"name", v.name}, {"mean", v.mean}, {"std", v.std_dev}};
        if (!v.group.empty()) jv["group"] = v.group;
        doc["variables"].push_back(std::move(jv));
    }
    doc["metrics"] = json::array();
    json summaries = json::object();
    for (const auto& m : spec.metrics) {
        doc["metrics"].push_back(m.name);
        if (m.summary != SummaryKind::PeakAbsSigned)
            summaries[m.name] = summary_kind_name(m.summary);
    }
    if (!summaries.empty()) doc["metric_summaries"] = summaries;

    json study{{"n_mc", spec.n_mc},
               {"n_rsm", spec.n_rsm},
               {"n_surrogate", spec.n_surrogate},
               {"percentiles", {spec.p_lo, spec.p_hi}},
               {"convergence", {{"window", spec.convergence.window}, {"rel_tol", spec.convergence.rel_tol}}},
               {"seed", spec.seed}};
    if (!spec.rsm_variants.empty()) study["rsm_variants"] = spec.rsm_variants;
    doc["study"] = std::move(study);

    json reduction{{"gap_window", {spec.reduction.gap_lo_frac, spec.reduction.gap_hi_frac}}};
    if (spec.reduction.k_override) reduction["k_override"] = *spec.reduction.k_override;
    doc["reduction"] = std::move(reduction);

    doc["distributed"] = {{"max_attempts", spec.distributed.max_attempts},
                          {"timeout_floor_s", spec.distributed.timeout_floor_s},
                          {"timeout_factor", spec.distributed.timeout_factor}};

    if (!spec.simulator_json.empty()) doc["simulator"] = json::parse(spec.simulator_json);
    return doc.dump(2);
}

} // namespace uqfarm
