#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace cpd {

inline constexpr int kSeriesLength = 100;
inline constexpr int kPartitionLength = 10;
inline constexpr int kPartitionCount = 10;

enum class DatasetKind {
    kMeanShift,       // per-partition constant means
    kFirstDifference, // discrete differences of a mean-shift draw
    kSlope,           // per-partition constant slopes accumulated into a ramp
};

/// Generative recipe for one synthetic benchmark: ten partitions of ten
/// points, change points fixed at t = 11, 21, ..., 91.
struct SyntheticSpec {
    int dataset_id;
    std::array<double, kPartitionCount> partition_values; // means or slopes
    double sigma;
    DatasetKind kind;
    bool baseline_shifts;
};

struct LabeledSeries {
    std::vector<double> values;
    std::vector<int> truth; // 1-based time indices of the true change points
    SyntheticSpec spec;
    std::uint64_t seed;
};

/// Standard normal variates from a fixed, portable recipe: mt19937_64
/// (whose output sequence the standard pins down exactly) feeding a
/// Box-Muller pair. std::normal_distribution is implementation-defined and
/// would break cross-toolchain reproducibility of the benchmark tables.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // uniform in (0, 1]: top 53 bits of the engine output, reflected so
        // log(u1) stays finite
        const double u1 = 1.0 - static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline SyntheticSpec dataset_spec(int dataset_id) {
    switch (dataset_id) {
    case 1:
        return SyntheticSpec{1, {0, 10, 0, -20, 0, 20, 0, -30, 0, 30}, 1.0, DatasetKind::kMeanShift, false};
    case 2:
        return SyntheticSpec{2, {0, 10, 20, 30, 40, 50, 60, 70, 80, 70}, 1.0, DatasetKind::kMeanShift, true};
    case 3:
        return SyntheticSpec{3, {0, 10, 0, -20, 0, 20, 0, -30, 0, 30}, 1.0, DatasetKind::kFirstDifference, false};
    case 4:
        return SyntheticSpec{4, {0, 10, 20, 30, 40, 50, 60, 70, 80, 70}, 1.0, DatasetKind::kFirstDifference, false};
    case 5:
        return SyntheticSpec{5, {0, 1, 0, -1, 0, 2, 0, -2, 0, 3}, 0.1, DatasetKind::kSlope, false};
    case 6:
        return SyntheticSpec{6, {-0.1, 2, -0.1, 2, -0.1, 2, -0.1, 2, -0.1, 2}, 0.1, DatasetKind::kSlope, true};
    default:
        throw std::invalid_argument("dataset_spec: dataset_id must be in 1..6");
    }
}

inline std::vector<int> true_change_points() {
    std::vector<int> truth;
    for (int t = kPartitionLength + 1; t < kSeriesLength; t += kPartitionLength) {
        truth.push_back(t);
    }
    return truth;
}

/// y_1 = 0 and y_t = x_t - x_{t-1}: length and time alignment are preserved
/// so truth indices carry over unchanged (a shift at t spikes at index t).
inline std::vector<double> first_difference(std::span<const double> series) {
    if (series.size() < 2) {
        throw std::invalid_argument("first_difference: need at least 2 points");
    }
    std::vector<double> out(series.size());
    out[0] = 0.0;
    for (std::size_t i = 1; i < series.size(); ++i) {
        out[i] = series[i] - series[i - 1];
    }
    return out;
}

/// The noiseless generative path. Mean-shift datasets step between the
/// partition means; slope datasets accumulate m_t = m_{t-1} + slope_{p(t)}
/// from m_0 = 0; first-difference datasets difference the underlying path.
inline std::vector<double> mean_path(const SyntheticSpec& spec) {
    std::vector<double> path(kSeriesLength);
    if (spec.kind == DatasetKind::kSlope) {
        double level = 0.0;
        for (int t = 1; t <= kSeriesLength; ++t) {
            level += spec.partition_values[static_cast<std::size_t>((t - 1) / kPartitionLength)];
            path[static_cast<std::size_t>(t - 1)] = level;
        }
        return path;
    }
    for (int t = 1; t <= kSeriesLength; ++t) {
        path[static_cast<std::size_t>(t - 1)] =
            spec.partition_values[static_cast<std::size_t>((t - 1) / kPartitionLength)];
    }
    if (spec.kind == DatasetKind::kFirstDifference) {
        return first_difference(path);
    }
    return path;
}

inline LabeledSeries generate(int dataset_id, std::uint64_t seed) {
    const SyntheticSpec spec = dataset_spec(dataset_id);
    SyntheticSpec draw_spec = spec;
    if (spec.kind == DatasetKind::kFirstDifference) {
        draw_spec.kind = DatasetKind::kMeanShift;
    }
    const std::vector<double> path = mean_path(draw_spec);
    GaussianSampler noise(seed);
    std::vector<double> values(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) {
        values[i] = path[i] + spec.sigma * noise.next();
    }
    if (spec.kind == DatasetKind::kFirstDifference) {
        values = first_difference(values);
    }
    return LabeledSeries{std::move(values), true_change_points(), spec, seed};
}

} // namespace cpd
