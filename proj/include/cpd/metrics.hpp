#pragma once

#include "cpd/datagen.hpp"
#include "cpd/detector.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cpd {

/// Eight log-spaced hazard scales spanning the benchmark range 10..1000.
inline constexpr std::array<double, 8> kValidationLambdaGrid = {10, 19, 37, 72, 139, 268, 518, 1000};

/// How detections are matched against ground truth. The F-score uses the
/// strict window [g, g+allowed_delay]; Miss, Delay and Duplication use the
/// whole partition [g, g+partition_len-1] as their horizon.
struct MatchRule {
    int allowed_delay = 0;
    int partition_len = kPartitionLength;
};

/// Zero tolerated delay for level-style datasets, five for the slope ones.
inline MatchRule rule_for_dataset(int dataset_id) {
    if (dataset_id < 1 || dataset_id > 6) {
        throw std::invalid_argument("rule_for_dataset: dataset_id must be in 1..6");
    }
    return MatchRule{dataset_id >= 5 ? 5 : 0, kPartitionLength};
}

struct MatchResult {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    std::vector<std::optional<int>> delays; // per truth; nullopt when its partition saw nothing
    std::vector<int> duplication_counts;    // per truth partition: max(0, detections - 1)
};

namespace detail {
inline void require_sorted_in_range(std::span<const int> xs, int series_len, const char* what) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] < 1 || xs[i] > series_len) {
            throw std::invalid_argument(std::string(what) + ": index out of [1, series_len]");
        }
        if (i > 0 && xs[i] <= xs[i - 1]) {
            throw std::invalid_argument(std::string(what) + ": indices must be strictly increasing");
        }
    }
}
} // namespace detail

/// Classify detections against truth. A truth with at least one detection
/// inside its strict window is a single TP no matter how many land there;
/// detections outside every window are FPs. Miss/Delay/Duplication are
/// computed independently over the partition horizon.
inline MatchResult match_detections(std::span<const int> truth, std::span<const int> detections,
                                    MatchRule rule, int series_len) {
    if (rule.allowed_delay < 0 || rule.allowed_delay >= rule.partition_len) {
        throw std::invalid_argument("match_detections: need 0 <= allowed_delay < partition_len");
    }
    detail::require_sorted_in_range(truth, series_len, "truth");
    detail::require_sorted_in_range(detections, series_len, "detections");

    MatchResult out;
    std::vector<bool> consumed(detections.size(), false);
    for (int g : truth) {
        bool hit = false;
        for (std::size_t i = 0; i < detections.size(); ++i) {
            if (detections[i] < g || detections[i] > g + rule.allowed_delay) continue;
            if (!consumed[i]) {
                consumed[i] = true;
                hit = true;
            }
        }
        hit ? ++out.tp : ++out.fn;

        int in_partition = 0;
        std::optional<int> first;
        for (int d : detections) {
            if (d < g || d > g + rule.partition_len - 1) continue;
            ++in_partition;
            if (!first.has_value()) first = d - g;
        }
        out.delays.push_back(first);
        out.duplication_counts.push_back(std::max(0, in_partition - 1));
    }
    for (bool c : consumed) {
        if (!c) ++out.fp;
    }
    return out;
}

/// Harmonic mean of precision and recall; zero whenever tp is zero.
inline double f_score(int tp, int fp, int fn) {
    if (tp < 0 || fp < 0 || fn < 0) {
        throw std::invalid_argument("f_score: counts must be non-negative");
    }
    if (tp == 0) return 0.0;
    return 2.0 * tp / (2.0 * tp + fp + fn);
}

/// The four benchmark metrics for one detection run.
struct RunMetrics {
    double f_score = 0.0;
    int miss = 0;
    double mean_delay = 0.0;
    bool delay_defined = false; // false when every truth partition was empty
    double duplication = 0.0;
    int tp = 0;
    int fp = 0;
    int fn = 0;
};

inline RunMetrics run_metrics(const MatchResult& match) {
    RunMetrics m;
    m.tp = match.tp;
    m.fp = match.fp;
    m.fn = match.fn;
    m.f_score = f_score(match.tp, match.fp, match.fn);
    double delay_sum = 0.0;
    int delay_n = 0;
    for (const auto& d : match.delays) {
        if (d.has_value()) {
            delay_sum += *d;
            ++delay_n;
        } else {
            ++m.miss;
        }
    }
    m.delay_defined = delay_n > 0;
    m.mean_delay = delay_n > 0 ? delay_sum / delay_n : 0.0;
    if (!match.duplication_counts.empty()) {
        double dup_sum = 0.0;
        for (int c : match.duplication_counts) dup_sum += c;
        m.duplication = dup_sum / static_cast<double>(match.duplication_counts.size());
    }
    return m;
}

/// Mean and standard error of the mean (sample stddev / sqrt(n)).
struct MetricAggregate {
    double mean = 0.0;
    double sem = 0.0;
    int n = 0;
    bool sem_defined = false; // false for n < 2
};

inline MetricAggregate aggregate(std::span<const double> xs) {
    MetricAggregate agg;
    agg.n = static_cast<int>(xs.size());
    if (xs.empty()) return agg;
    double sum = 0.0;
    for (double x : xs) sum += x;
    agg.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return agg;
    double ss = 0.0;
    for (double x : xs) ss += (x - agg.mean) * (x - agg.mean);
    const double var = ss / static_cast<double>(xs.size() - 1);
    agg.sem = std::sqrt(var / static_cast<double>(xs.size()));
    agg.sem_defined = true;
    return agg;
}

/// Aggregates over the runs of one grid cell (or of the pooled grid).
struct CellSummary {
    double lambda = 0.0; // NaN in the pooled row
    int runs = 0;
    MetricAggregate f;
    MetricAggregate miss;
    MetricAggregate delay; // over runs whose delay was defined
    MetricAggregate dup;
    int delay_runs = 0;
};

struct MetricsReport {
    int dataset_id = 0;
    Algorithm algorithm = Algorithm::kBocpd;
    std::vector<CellSummary> per_lambda;
    CellSummary pooled;
};

namespace detail {

inline CellSummary summarize(double lambda, std::span<const RunMetrics> runs) {
    CellSummary cell;
    cell.lambda = lambda;
    cell.runs = static_cast<int>(runs.size());
    std::vector<double> f, miss, delay, dup;
    for (const RunMetrics& r : runs) {
        f.push_back(r.f_score);
        miss.push_back(static_cast<double>(r.miss));
        dup.push_back(r.duplication);
        if (r.delay_defined) delay.push_back(r.mean_delay);
    }
    cell.f = aggregate(f);
    cell.miss = aggregate(miss);
    cell.delay = aggregate(delay);
    cell.dup = aggregate(dup);
    cell.delay_runs = static_cast<int>(delay.size());
    return cell;
}

inline int resolve_thread_count(int requested, std::size_t cells) {
    int threads = requested;
    if (threads <= 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads <= 0) threads = 1;
    }
    if (const char* env = std::getenv("CPD_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) threads = std::min(threads, cap);
    }
    return std::max(1, std::min<int>(threads, static_cast<int>(cells)));
}

} // namespace detail

/// Detection routine under evaluation: series and hazard scale in, 1-based
/// change-point indices out.
using DetectFn = std::function<std::vector<int>(const std::vector<double>&, double)>;

/// Run the full benchmark protocol for one dataset with an arbitrary
/// detection routine. Iteration k reuses seed0 + k across the whole lambda
/// grid; cells are independent, so they fan out to worker threads (capped
/// by the CPD_THREADS environment variable) and reduce deterministically.
inline MetricsReport evaluate_with(const DetectFn& detect, int dataset_id,
                                   std::span<const double> lambdas, int iterations,
                                   std::uint64_t seed0, int threads = 0) {
    if (iterations < 1) {
        throw std::invalid_argument("evaluate_with: iterations must be >= 1");
    }
    for (double l : lambdas) {
        if (!(l > 1.0)) throw std::invalid_argument("evaluate_with: all lambdas must be > 1");
    }
    const MatchRule rule = rule_for_dataset(dataset_id);
    const std::size_t n_cells = lambdas.size() * static_cast<std::size_t>(iterations);
    std::vector<RunMetrics> runs(n_cells);

    auto run_cell = [&](std::size_t idx) {
        const std::size_t li = idx / static_cast<std::size_t>(iterations);
        const std::size_t k = idx % static_cast<std::size_t>(iterations);
        const LabeledSeries series = generate(dataset_id, seed0 + k);
        const std::vector<int> detections = detect(series.values, lambdas[li]);
        const MatchResult match = match_detections(series.truth, detections, rule,
                                                   static_cast<int>(series.values.size()));
        runs[idx] = run_metrics(match);
    };

    const int threads_n = detail::resolve_thread_count(threads, n_cells);
    if (threads_n <= 1) {
        for (std::size_t i = 0; i < n_cells; ++i) run_cell(i);
    } else {
        std::atomic<std::size_t> cursor{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads_n));
        for (int w = 0; w < threads_n; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = cursor.fetch_add(1); i < n_cells; i = cursor.fetch_add(1)) {
                    run_cell(i);
                }
            });
        }
        for (std::thread& th : pool) th.join();
    }

    MetricsReport report;
    report.dataset_id = dataset_id;
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
        report.per_lambda.push_back(detail::summarize(
            lambdas[li],
            std::span<const RunMetrics>(runs).subspan(li * static_cast<std::size_t>(iterations),
                                                      static_cast<std::size_t>(iterations))));
    }
    report.pooled = detail::summarize(std::numeric_limits<double>::quiet_NaN(), runs);
    return report;
}

inline MetricsReport evaluate(int dataset_id, Algorithm algorithm, std::span<const double> lambdas,
                              int iterations, std::uint64_t seed0, int threads = 0) {
    DetectFn detect = [algorithm](const std::vector<double>& values, double lambda) {
        return detect_series(algorithm, lambda, values).change_points;
    };
    MetricsReport report = evaluate_with(detect, dataset_id, lambdas, iterations, seed0, threads);
    report.algorithm = algorithm;
    return report;
}

} // namespace cpd
