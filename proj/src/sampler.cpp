#include "uqfarm/sampler.hpp"

#include <numeric>

#include "uqfarm/rng.hpp"

namespace uqfarm {

static SampleMatrix make_shell(const StudySpec& spec, int n, SampleOrigin origin) {
    SampleMatrix out;
    out.origin = origin;
    out.values.resize(n, static_cast<Eigen::Index>(spec.variables.size()));
    out.variable_names.reserve(spec.variables.size());
    for (const auto& v : spec.variables) out.variable_names.push_back(v.name);
    return out;
}

SampleMatrix draw_monte_carlo(const StudySpec& spec, int n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("draw_monte_carlo: n must be >= 1");
    auto out = make_shell(spec, n, SampleOrigin::MonteCarlo);
    for (std::size_t i = 0; i < spec.variables.size(); ++i) {
        const auto& var = spec.variables[i];
        Rng rng(substream_seed(seed, i));
        for (int r = 0; r < n; ++r)
            out.values(r, static_cast<Eigen::Index>(i)) = rng.normal(var.mean, var.std_dev);
    }
    return out;
}

SampleMatrix draw_regular_design(const StudySpec& spec, int n, std::uint64_t seed) {
    if (n < 2) throw ValidationError("draw_regular_design: n must be >= 2");
    auto out = make_shell(spec, n, SampleOrigin::RegularDesign);
    std::vector<int> order(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < spec.variables.size(); ++i) {
        const auto& var = spec.variables[i];
        std::iota(order.begin(), order.end(), 0);
        Rng rng(substream_seed(seed, i));
        rng.shuffle(order);
        for (int r = 0; r < n; ++r) {
            double p = (order[static_cast<std::size_t>(r)] + 0.5) / n;
            out.values(r, static_cast<Eigen::Index>(i)) = var.mean + var.std_dev * inv_normal_cdf(p);
        }
    }
    return out;
}

} // namespace uqfarm
