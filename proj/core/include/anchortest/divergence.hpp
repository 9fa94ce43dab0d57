#pragma once

#include <cstddef>
#include <span>

namespace anchortest {

/// Exact 1-D optimal-transport distance between equal-size samples: the mean absolute
/// difference of the sorted values.
double wasserstein1(std::span<const double> a, std::span<const double> b);

struct KlEstimate {
    double value = 0.0;
    /// Set when every value of both samples is identical (no bin range).
    bool degenerate = false;
};

inline constexpr std::size_t kDefaultKlBins = 50;
inline constexpr double kDefaultKlSmoothing = 0.5;

/// KL(P || Q) from histograms of a and b on shared equal-width bins spanning
/// [min, max] of the pooled values. Each bin count gets `smoothing` added before
/// normalization, so Q is strictly positive.
KlEstimate kl_divergence(std::span<const double> a, std::span<const double> b, std::size_t bins = kDefaultKlBins,
                         double smoothing = kDefaultKlSmoothing);

}  // namespace anchortest
