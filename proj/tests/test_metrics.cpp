#include "cpd/metrics.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <set>
#include <vector>

using cpd::Algorithm;
using cpd::MatchResult;
using cpd::MatchRule;
using cpd::MetricAggregate;
using cpd::MetricsReport;
using cpd::RunMetrics;
using cpd::aggregate;
using cpd::evaluate_with;
using cpd::f_score;
using cpd::match_detections;
using cpd::rule_for_dataset;
using cpd::run_metrics;

namespace {

const std::vector<int> kTruth = {11, 21, 31, 41, 51, 61, 71, 81, 91};

} // namespace

TEST_CASE("matching rules per dataset") {
    for (int id : {1, 2, 3, 4}) CHECK(rule_for_dataset(id).allowed_delay == 0);
    for (int id : {5, 6}) CHECK(rule_for_dataset(id).allowed_delay == 5);
    for (int id : {1, 6}) CHECK(rule_for_dataset(id).partition_len == 10);
    CHECK_THROWS_AS(rule_for_dataset(0), std::invalid_argument);
    CHECK_THROWS_AS(rule_for_dataset(7), std::invalid_argument);
}

TEST_CASE("perfect detection") {
    const MatchResult match = match_detections(kTruth, kTruth, MatchRule{0, 10}, 100);
    CHECK(match.tp == 9);
    CHECK(match.fp == 0);
    CHECK(match.fn == 0);
    const RunMetrics m = run_metrics(match);
    CHECK(m.f_score == 1.0);
    CHECK(m.miss == 0);
    CHECK(m.mean_delay == 0.0);
    CHECK(m.delay_defined);
    CHECK(m.duplication == 0.0);
}

TEST_CASE("no detections at all") {
    const MatchResult match = match_detections(kTruth, std::vector<int>{}, MatchRule{0, 10}, 100);
    CHECK(match.tp == 0);
    CHECK(match.fn == 9);
    const RunMetrics m = run_metrics(match);
    CHECK(m.f_score == 0.0);
    CHECK(m.miss == 9);
    CHECK_FALSE(m.delay_defined);
    CHECK(m.mean_delay == 0.0); // reported as zero, flagged undefined
    CHECK(m.duplication == 0.0);
}

TEST_CASE("window miss but partition hit: strict FP yet zero Miss, delay 1") {
    const MatchResult match =
        match_detections(std::vector<int>{11}, std::vector<int>{12}, MatchRule{0, 10}, 100);
    CHECK(match.tp == 0);
    CHECK(match.fp == 1);
    CHECK(match.fn == 1);
    const RunMetrics m = run_metrics(match);
    CHECK(m.miss == 0);
    CHECK(m.delay_defined);
    CHECK(m.mean_delay == 1.0);
    CHECK(m.duplication == 0.0);
}

TEST_CASE("several detections in one window: one TP plus duplication") {
    const MatchResult match =
        match_detections(std::vector<int>{11}, std::vector<int>{11, 12, 13}, MatchRule{5, 10}, 100);
    CHECK(match.tp == 1);
    CHECK(match.fp == 0);
    CHECK(match.fn == 0);
    const RunMetrics m = run_metrics(match);
    CHECK(m.duplication == 2.0);
    CHECK(m.mean_delay == 0.0);
    CHECK(m.miss == 0);
}

TEST_CASE("f-score arithmetic") {
    CHECK(f_score(9, 0, 0) == 1.0);
    CHECK(f_score(0, 3, 7) == 0.0);
    CHECK(f_score(0, 0, 0) == 0.0);
    CHECK(f_score(5, 5, 4) == Catch::Approx(10.0 / 19.0).margin(1e-15));
    CHECK_THROWS_AS(f_score(-1, 0, 0), std::invalid_argument);
}

TEST_CASE("inputs must be sorted and in range") {
    CHECK_THROWS_AS(match_detections(std::vector<int>{21, 11}, std::vector<int>{}, MatchRule{0, 10}, 100),
                    std::invalid_argument);
    CHECK_THROWS_AS(match_detections(kTruth, std::vector<int>{5, 5}, MatchRule{0, 10}, 100),
                    std::invalid_argument);
    CHECK_THROWS_AS(match_detections(kTruth, std::vector<int>{0}, MatchRule{0, 10}, 100),
                    std::invalid_argument);
    CHECK_THROWS_AS(match_detections(kTruth, std::vector<int>{101}, MatchRule{0, 10}, 100),
                    std::invalid_argument);
    CHECK_THROWS_AS(match_detections(kTruth, std::vector<int>{12}, MatchRule{10, 10}, 100),
                    std::invalid_argument); // allowed_delay must stay below partition_len
}

TEST_CASE("every detection is classified exactly once; tp + fn covers truth") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const MatchRule rule{static_cast<int>(rng() % 6), 10};
        std::set<int> detection_set;
        const int count = static_cast<int>(rng() % 12);
        for (int i = 0; i < count; ++i) detection_set.insert(1 + static_cast<int>(rng() % 100));
        const std::vector<int> detections(detection_set.begin(), detection_set.end());

        const MatchResult match = match_detections(kTruth, detections, rule, 100);
        CHECK(match.tp + match.fn == static_cast<int>(kTruth.size()));
        CHECK(match.tp >= 0);
        CHECK(match.fp >= 0);
        CHECK(match.fp <= static_cast<int>(detections.size()));
        // consumed (window) detections + FPs = all detections
        int consumed = static_cast<int>(detections.size()) - match.fp;
        CHECK(consumed >= match.tp);
        CHECK(match.delays.size() == kTruth.size());
        CHECK(match.duplication_counts.size() == kTruth.size());
    }
}

TEST_CASE("metrics ignore trailing data after the last partition") {
    const std::vector<int> detections = {11, 14, 55};
    const MatchResult a = match_detections(kTruth, detections, MatchRule{0, 10}, 100);
    const MatchResult b = match_detections(kTruth, detections, MatchRule{0, 10}, 5000);
    CHECK(a.tp == b.tp);
    CHECK(a.fp == b.fp);
    CHECK(a.fn == b.fn);
    CHECK(run_metrics(a).miss == run_metrics(b).miss);
    CHECK(run_metrics(a).mean_delay == run_metrics(b).mean_delay);
    CHECK(run_metrics(a).duplication == run_metrics(b).duplication);
}

TEST_CASE("aggregate: mean and SEM") {
    const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
    const MetricAggregate agg = aggregate(xs);
    CHECK(agg.mean == Catch::Approx(2.5).margin(1e-15));
    CHECK(agg.sem == Catch::Approx(std::sqrt(5.0 / 12.0)).margin(1e-12));
    CHECK(agg.n == 4);
    CHECK(agg.sem_defined);

    const std::vector<double> one = {7.0};
    const MetricAggregate single = aggregate(one);
    CHECK(single.mean == 7.0);
    CHECK(single.sem == 0.0);
    CHECK_FALSE(single.sem_defined);

    const MetricAggregate empty = aggregate(std::vector<double>{});
    CHECK(empty.n == 0);
    CHECK_FALSE(empty.sem_defined);
}

TEST_CASE("a truth-echoing stub scores perfectly through the whole pipeline") {
    const cpd::DetectFn echo_truth = [](const std::vector<double>&, double) {
        return std::vector<int>{11, 21, 31, 41, 51, 61, 71, 81, 91};
    };
    const std::vector<double> grid = {10.0, 30.0};
    const MetricsReport report = evaluate_with(echo_truth, 2, grid, 5, 1);
    REQUIRE(report.per_lambda.size() == 2);
    for (const cpd::CellSummary& cell : report.per_lambda) {
        CHECK(cell.runs == 5);
        CHECK(cell.f.mean == 1.0);
        CHECK(cell.miss.mean == 0.0);
        CHECK(cell.delay.mean == 0.0);
        CHECK(cell.dup.mean == 0.0);
        CHECK(cell.delay_runs == 5);
    }
    CHECK(report.pooled.runs == 10);
    CHECK(report.pooled.f.mean == 1.0);
    CHECK(report.pooled.f.sem == 0.0);
}

TEST_CASE("evaluation is deterministic and thread-count independent") {
    const std::vector<double> grid = {10.0, 37.0, 139.0};
    const MetricsReport serial = cpd::evaluate(1, Algorithm::kBocpdBls, grid, 6, 11, 1);
    const MetricsReport parallel = cpd::evaluate(1, Algorithm::kBocpdBls, grid, 6, 11, 4);
    REQUIRE(serial.per_lambda.size() == parallel.per_lambda.size());
    for (std::size_t i = 0; i < serial.per_lambda.size(); ++i) {
        CHECK(serial.per_lambda[i].f.mean == parallel.per_lambda[i].f.mean);
        CHECK(serial.per_lambda[i].miss.mean == parallel.per_lambda[i].miss.mean);
        CHECK(serial.per_lambda[i].delay.mean == parallel.per_lambda[i].delay.mean);
        CHECK(serial.per_lambda[i].dup.mean == parallel.per_lambda[i].dup.mean);
        CHECK(serial.per_lambda[i].f.sem == parallel.per_lambda[i].f.sem);
    }
    CHECK(serial.pooled.f.mean == parallel.pooled.f.mean);
}

TEST_CASE("the same seeds land in the same cells regardless of grid order") {
    const std::vector<double> forward = {19.0, 72.0};
    const std::vector<double> backward = {72.0, 19.0};
    const MetricsReport a = cpd::evaluate(2, Algorithm::kBocpd, forward, 4, 3);
    const MetricsReport b = cpd::evaluate(2, Algorithm::kBocpd, backward, 4, 3);
    CHECK(a.per_lambda[0].f.mean == b.per_lambda[1].f.mean);
    CHECK(a.per_lambda[1].miss.mean == b.per_lambda[0].miss.mean);
    CHECK(a.pooled.f.mean == Catch::Approx(b.pooled.f.mean).margin(1e-12));
}

TEST_CASE("metric ranges hold on a real evaluation") {
    const std::vector<double> grid = {10.0, 139.0};
    for (Algorithm algorithm : {Algorithm::kBocpd, Algorithm::kBocpdBls}) {
        const MetricsReport report = cpd::evaluate(5, algorithm, grid, 3, 2);
        for (const cpd::CellSummary& cell : report.per_lambda) {
            CHECK(cell.f.mean >= 0.0);
            CHECK(cell.f.mean <= 1.0);
            CHECK(cell.miss.mean >= 0.0);
            CHECK(cell.miss.mean <= 9.0);
            CHECK(cell.delay.mean >= 0.0);
            CHECK(cell.delay.mean <= 9.0);
            CHECK(cell.dup.mean >= 0.0);
        }
    }
}

TEST_CASE("lambdas at or below 1 and bad iteration counts are rejected") {
    const std::vector<double> bad_grid = {10.0, 1.0};
    CHECK_THROWS_AS(cpd::evaluate(1, Algorithm::kBocpd, bad_grid, 2, 1), std::invalid_argument);
    const std::vector<double> grid = {10.0};
    CHECK_THROWS_AS(cpd::evaluate(1, Algorithm::kBocpd, grid, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(cpd::evaluate(9, Algorithm::kBocpd, grid, 2, 1), std::invalid_argument);
}

TEST_CASE("CPD_THREADS caps the worker count") {
    setenv("CPD_THREADS", "2", 1);
    CHECK(cpd::detail::resolve_thread_count(8, 100) == 2);
    CHECK(cpd::detail::resolve_thread_count(1, 100) == 1);
    setenv("CPD_THREADS", "1", 1);
    CHECK(cpd::detail::resolve_thread_count(0, 100) == 1);
    unsetenv("CPD_THREADS");
    CHECK(cpd::detail::resolve_thread_count(3, 2) == 2); // never more workers than cells
}
