#include "anchortest/divergence.hpp"

#include "anchortest/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace anchortest {

double wasserstein1(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ArityError("wasserstein1 needs non-empty samples");
    if (a.size() != b.size()) {
        throw PairingError("wasserstein1 needs equal sample sizes, got " + std::to_string(a.size()) + " and " +
                           std::to_string(b.size()));
    }
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    double total = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) total += std::abs(sa[i] - sb[i]);
    return total / static_cast<double>(sa.size());
}

KlEstimate kl_divergence(std::span<const double> a, std::span<const double> b, std::size_t bins, double smoothing) {
    if (a.empty() || b.empty()) throw ArityError("kl_divergence needs non-empty samples");
    if (bins < 2) throw ParameterError("kl_divergence needs at least 2 bins");
    if (!(smoothing > 0.0)) throw ParameterError("kl_divergence needs smoothing > 0");

    const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
    const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
    const double lo = std::min(*amin, *bmin);
    const double hi = std::max(*amax, *bmax);
    if (!(hi > lo)) return {0.0, true};

    const double width = (hi - lo) / static_cast<double>(bins);
    auto histogram = [&](std::span<const double> s) {
        std::vector<double> h(bins, smoothing);
        for (double v : s) {
            auto idx = static_cast<std::size_t>((v - lo) / width);
            h[std::min(idx, bins - 1)] += 1.0;
        }
        const double total = static_cast<double>(s.size()) + smoothing * static_cast<double>(bins);
        for (auto& x : h) x /= total;
        return h;
    };
    const auto p = histogram(a);
    const auto q = histogram(b);
    double kl = 0.0;
    for (std::size_t i = 0; i < bins; ++i) kl += p[i] * std::log(p[i] / q[i]);
    return {kl, false};
}

}  // namespace anchortest
