#pragma once

#include "cpd/log_sum_exp.hpp"
#include "cpd/nig.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cpd {

enum class Algorithm {
    kBocpd,    // full run-length recursion over the whole history
    kBocpdBls, // partition-local recursion with baseline re-initialization
};

inline const char* algorithm_name(Algorithm a) {
    return a == Algorithm::kBocpd ? "bocpd" : "bocpd-bls";
}

/// Constant per-step change probability 1/lambda. lambda > 1 keeps both the
/// hazard and the survival probability inside (0, 1).
struct HazardSpec {
    double lambda;

    double hazard() const { return 1.0 / lambda; }
};

/// Normalized distribution over run lengths after a step, in natural-log
/// space. Index is the run length; cells removed by pruning hold -inf.
/// logsumexp(log_probs) stays within 1e-9 of zero.
struct RunLengthPosterior {
    std::vector<double> log_probs;
    int time_index = 0;
};

/// Per-observation output of one detector step.
struct StepResult {
    int t;                   // 1-based observation index
    double x;                // raw observation
    double x_prime;          // re-baselined value; equals x for plain BOCPD
    int delta;               // argmax growth; 1 by convention on a partition's first step
    int change_point;        // 1 iff delta <= 0
    int argmax_run_length;   // smallest index wins ties
    RunLengthPosterior posterior;
};

struct Decision {
    int delta;
    int change_point;
};

/// The argmax-difference rule: a change point exists whenever the
/// most-probable run length fails to grow. An undefined previous argmax
/// (first step of a partition) counts as growth.
inline Decision decide(std::optional<int> prev_argmax, int cur_argmax) {
    if (cur_argmax < 0) {
        throw std::invalid_argument("decide: cur_argmax must be >= 0");
    }
    if (!prev_argmax.has_value()) {
        return Decision{1, 0};
    }
    const int delta = cur_argmax - *prev_argmax;
    return Decision{delta, delta <= 0 ? 1 : 0};
}

struct DetectorOptions {
    // Hypotheses whose normalized posterior log-probability falls below this
    // are dropped and the survivors renormalized. Off by default; desk-scale
    // runs need no pruning.
    double prune_log_threshold = kNegInf;
};

/// Streaming change-point detector: one observation at a time, one
/// observe() in flight per instance. Distinct detectors share no state.
class Detector {
public:
    Detector(Algorithm algorithm, double lambda, double prior_loc = 0.0,
             DetectorOptions options = DetectorOptions{})
        : algorithm_(algorithm), hazard_{lambda}, prior_loc_(prior_loc), options_(options) {
        if (!(lambda > 1.0)) {
            throw std::invalid_argument("Detector: lambda must be > 1 (survival probability would vanish)");
        }
        if (!std::isfinite(prior_loc)) {
            throw std::invalid_argument("Detector: prior_loc must be finite");
        }
        cells_.push_back(Cell{0, 0.0, init_nig(prior_loc_)});
        // The first observation of the first partition seeds the baseline.
        pending_reset_ = (algorithm_ == Algorithm::kBocpdBls);
    }

    StepResult observe(double x) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument("Detector::observe: x must be finite");
        }
        if (pending_reset_) {
            apply_reset(x);
        }
        const double x_prime = x - baseline_;
        const double log_h = std::log(hazard_.hazard());
        const double log_s = std::log1p(-hazard_.hazard());

        // One recursion step: every hypothesis either grows by one or feeds
        // the change mass collected at run length zero.
        std::vector<Cell> next;
        next.reserve(cells_.size() + 1);
        next.push_back(Cell{0, kNegInf, init_nig(fresh_prior_loc())});
        double log_change_mass = kNegInf;
        for (const Cell& cell : cells_) {
            const double log_pred = log_pdf_student_t(x_prime, predictive_spec(cell.params));
            const double mass = cell.log_prob + log_pred;
            log_change_mass = log_sum_exp(log_change_mass, mass + log_h);
            next.push_back(Cell{cell.run_length + 1, mass + log_s, update_nig(cell.params, x_prime)});
        }
        next.front().log_prob = log_change_mass;
        normalize(next);
        if (options_.prune_log_threshold > kNegInf) {
            prune(next);
        }
        cells_ = std::move(next);

        const int cur_argmax = argmax_run_length();
        const Decision decision = decide(prev_argmax_, cur_argmax);

        ++t_;
        ++partition_data_count_;
        prev_argmax_ = cur_argmax;
        if (decision.change_point == 1 && algorithm_ == Algorithm::kBocpdBls) {
            pending_reset_ = true;
        }
        return StepResult{t_, x, x_prime, decision.delta, decision.change_point, cur_argmax, snapshot()};
    }

    Algorithm algorithm() const { return algorithm_; }
    double lambda() const { return hazard_.lambda; }
    int time_index() const { return t_; }
    int partition() const { return partition_; }
    int partition_data_count() const { return partition_data_count_; }
    bool pending_reset() const { return pending_reset_; }
    double baseline() const { return baseline_; }
    std::size_t support_size() const { return cells_.size(); }
    RunLengthPosterior posterior() const { return snapshot(); }

private:
    struct Cell {
        int run_length;
        double log_prob;
        NigParams params;
    };

    double fresh_prior_loc() const {
        // After re-baselining the partition's first datum maps to zero, so
        // BLS hypotheses are always re-initialized at zero.
        return algorithm_ == Algorithm::kBocpdBls ? 0.0 : prior_loc_;
    }

    void apply_reset(double x) {
        baseline_ = x;
        if (t_ > 0) {
            ++partition_;
        }
        cells_.clear();
        cells_.push_back(Cell{0, 0.0, init_nig(0.0)});
        prev_argmax_.reset();
        partition_data_count_ = 0;
        pending_reset_ = false;
    }

    static void normalize(std::vector<Cell>& cells) {
        double max_val = kNegInf;
        for (const Cell& c : cells) {
            if (c.log_prob > max_val) max_val = c.log_prob;
        }
        double sum = 0.0;
        for (const Cell& c : cells) {
            sum += std::exp(c.log_prob - max_val);
        }
        const double log_z = max_val + std::log(sum);
        for (Cell& c : cells) {
            c.log_prob -= log_z;
        }
    }

    void prune(std::vector<Cell>& cells) const {
        std::vector<Cell> kept;
        kept.reserve(cells.size());
        for (Cell& c : cells) {
            if (c.log_prob >= options_.prune_log_threshold) {
                kept.push_back(std::move(c));
            }
        }
        if (kept.empty() || kept.size() == cells.size()) {
            if (kept.size() == cells.size()) cells = std::move(kept);
            return;
        }
        normalize(kept);
        cells = std::move(kept);
    }

    int argmax_run_length() const {
        int best_run = cells_.front().run_length;
        double best = cells_.front().log_prob;
        for (const Cell& c : cells_) {
            if (c.log_prob > best) {
                best = c.log_prob;
                best_run = c.run_length;
            }
        }
        return best_run;
    }

    RunLengthPosterior snapshot() const {
        RunLengthPosterior out;
        out.time_index = t_;
        out.log_probs.assign(static_cast<std::size_t>(cells_.back().run_length) + 1, kNegInf);
        for (const Cell& c : cells_) {
            out.log_probs[static_cast<std::size_t>(c.run_length)] = c.log_prob;
        }
        return out;
    }

    Algorithm algorithm_;
    HazardSpec hazard_;
    double prior_loc_;
    DetectorOptions options_;
    std::vector<Cell> cells_;
    std::optional<int> prev_argmax_;
    double baseline_ = 0.0;
    int partition_ = 1;
    bool pending_reset_ = false;
    int t_ = 0;
    int partition_data_count_ = 0;
};

/// Batch result of folding observe() over a series. Row t of the
/// run-length matrix is steps[t-1].posterior.log_probs (ragged; run lengths
/// beyond a row's support are absent).
struct SeriesResult {
    std::vector<StepResult> steps;
    std::vector<int> change_points; // 1-based observation indices with c_t = 1
};

inline SeriesResult detect_series(Algorithm algorithm, double lambda,
                                  std::span<const double> series, double prior_loc = 0.0,
                                  DetectorOptions options = DetectorOptions{}) {
    if (series.empty()) {
        throw std::invalid_argument("detect_series: series is empty");
    }
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!std::isfinite(series[i])) {
            throw std::invalid_argument("detect_series: non-finite value at index " + std::to_string(i));
        }
    }
    Detector detector(algorithm, lambda, prior_loc, options);
    SeriesResult out;
    out.steps.reserve(series.size());
    for (double x : series) {
        out.steps.push_back(detector.observe(x));
        if (out.steps.back().change_point == 1) {
            out.change_points.push_back(out.steps.back().t);
        }
    }
    return out;
}

} // namespace cpd
