// cpd: change-point detection front door.
//
// Subcommands: detect, synth, validate, sweep, ingest. Data goes to stdout
// (or --output); diagnostics go to stderr. Exit codes: 0 success, 1
// component error, 2 usage error.

#include "cpd/datagen.hpp"
#include "cpd/detector.hpp"
#include "cpd/ingest.hpp"
#include "cpd/metrics.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitComponentError = 1;
constexpr int kExitUsageError = 2;

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_metric(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

/// Data sink: a file when --output is given, stdout otherwise.
class DataSink {
public:
    explicit DataSink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) {
                throw std::runtime_error("cannot open output file: " + path);
            }
        }
    }
    std::ostream& out() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

struct InputOptions {
    std::string input_path;
    std::string time_column = "Timestamp";
    std::string value_column = "Close";
    bool no_header = false;
    std::string wide_country;
    std::string date_start = "1/22/20";
    std::string date_end = "10/6/20";
    int resample_k = 1;
    double window_start = -std::numeric_limits<double>::infinity();
    double window_end = std::numeric_limits<double>::infinity();
    int synth_dataset = 0; // 0 = not set
    std::uint64_t seed = 1;
};

struct LoadedSeries {
    std::vector<double> values;
    std::string label;
};

void add_file_options(CLI::App* sub, InputOptions& opt) {
    sub->add_option("--input", opt.input_path, "input CSV path");
    sub->add_option("--time-column", opt.time_column, "time column name or 0-based index")
        ->capture_default_str();
    sub->add_option("--value-column", opt.value_column, "value column name or 0-based index")
        ->capture_default_str();
    sub->add_flag("--no-header", opt.no_header, "input file has no header row");
    sub->add_option("--wide-country", opt.wide_country,
                    "extract a country row sum from a wide-format table instead of long-format columns");
    sub->add_option("--date-start", opt.date_start, "wide-format window start (M/D/YY or YYYY-MM-DD)")
        ->capture_default_str();
    sub->add_option("--date-end", opt.date_end, "wide-format window end (inclusive)")
        ->capture_default_str();
    sub->add_option("--resample-k", opt.resample_k, "keep every k-th row after windowing")
        ->check(CLI::PositiveNumber);
    sub->add_option("--window-start", opt.window_start, "numeric timestamp window start");
    sub->add_option("--window-end", opt.window_end, "numeric timestamp window end");
}

void add_synth_options(CLI::App* sub, InputOptions& opt) {
    sub->add_option("--synth-dataset", opt.synth_dataset, "synthetic benchmark dataset id")
        ->check(CLI::Range(1, 6));
    sub->add_option("--seed", opt.seed, "RNG seed for synthetic input")->capture_default_str();
}

/// Exactly one of --input / --synth-dataset. Throws a CLI11 validation
/// error (usage error) otherwise.
void require_one_source(const InputOptions& opt) {
    const bool has_file = !opt.input_path.empty();
    const bool has_synth = opt.synth_dataset != 0;
    if (has_file == has_synth) {
        throw CLI::ValidationError("input", "exactly one of --input or --synth-dataset is required");
    }
}

LoadedSeries load_series(const InputOptions& opt) {
    if (opt.synth_dataset != 0) {
        const cpd::LabeledSeries series = cpd::generate(opt.synth_dataset, opt.seed);
        return {series.values, "dataset " + std::to_string(opt.synth_dataset) + " seed " +
                                   std::to_string(opt.seed)};
    }
    cpd::TimeSeriesFrame frame;
    if (!opt.wide_country.empty()) {
        frame = cpd::extract_wide_row(opt.input_path, opt.wide_country, opt.date_start, opt.date_end);
    } else {
        cpd::CsvReadResult read = cpd::read_series_csv(opt.input_path, opt.time_column,
                                                       opt.value_column, !opt.no_header);
        if (read.skipped_rows > 0) {
            std::cerr << "skipped " << read.skipped_rows << " unparseable row(s)\n";
        }
        frame = std::move(read.frame);
    }
    const bool windowed = std::isfinite(opt.window_start) || std::isfinite(opt.window_end);
    if (opt.resample_k != 1 || windowed) {
        frame = cpd::resample_every_k(frame, opt.resample_k, opt.window_start, opt.window_end);
    }
    return {std::move(frame.values), frame.source_label};
}

cpd::Algorithm parse_algorithm(const std::string& name) {
    if (name == "bocpd") return cpd::Algorithm::kBocpd;
    if (name == "bocpd-bls") return cpd::Algorithm::kBocpdBls;
    throw CLI::ValidationError("--algorithm", "unknown algorithm '" + name + "'");
}

cpd::DetectorOptions detector_options(const std::optional<double>& prune_threshold) {
    cpd::DetectorOptions options;
    if (prune_threshold.has_value()) {
        if (!(*prune_threshold > 0.0) || !(*prune_threshold < 1.0)) {
            throw CLI::ValidationError("--prune-threshold", "must lie strictly between 0 and 1");
        }
        options.prune_log_threshold = std::log(*prune_threshold);
    }
    return options;
}

void write_events_csv(std::ostream& out, const cpd::SeriesResult& result) {
    out << "t,delta,argmax_run_length\n";
    for (const cpd::StepResult& step : result.steps) {
        if (step.change_point != 0) {
            out << step.t << ',' << step.delta << ',' << step.argmax_run_length << '\n';
        }
    }
}

/// Row t carries cells for r = 0..t; absent/pruned hypotheses stay empty.
/// Cell values are natural-log probabilities.
void write_runlength_csv(std::ostream& out, const cpd::SeriesResult& result) {
    for (const cpd::StepResult& step : result.steps) {
        out << step.t;
        const std::vector<double>& lp = step.posterior.log_probs;
        for (int r = 0; r <= step.t; ++r) {
            out << ',';
            if (r < static_cast<int>(lp.size()) && std::isfinite(lp[r])) {
                out << format_value(lp[r]);
            }
        }
        out << '\n';
    }
}

void write_metrics_row(std::ostream& out, int dataset_id, const std::string& algorithm,
                       const std::string& lambda_label, const cpd::CellSummary& cell) {
    out << dataset_id << ',' << algorithm << ',' << lambda_label << ',' << cell.runs << ','
        << format_metric(cell.f.mean) << ',' << format_metric(3.0 * cell.f.sem) << ','
        << format_metric(cell.miss.mean) << ',' << format_metric(3.0 * cell.miss.sem) << ','
        << format_metric(cell.delay.mean) << ',' << format_metric(3.0 * cell.delay.sem) << ','
        << format_metric(cell.dup.mean) << ',' << format_metric(3.0 * cell.dup.sem) << ','
        << cell.delay_runs << '\n';
}

void write_metrics_text(std::ostream& out, const cpd::MetricsReport& report) {
    out << "dataset " << report.dataset_id << " algorithm " << algorithm_name(report.algorithm)
        << "\n";
    auto line = [&out](const std::string& label, const cpd::CellSummary& cell) {
        out << "  " << label << ": runs=" << cell.runs << " f=" << format_metric(cell.f.mean)
            << "±" << format_metric(3.0 * cell.f.sem) << " miss=" << format_metric(cell.miss.mean)
            << "±" << format_metric(3.0 * cell.miss.sem) << " delay="
            << format_metric(cell.delay.mean) << "±" << format_metric(3.0 * cell.delay.sem)
            << " dup=" << format_metric(cell.dup.mean) << "±" << format_metric(3.0 * cell.dup.sem);
        if (!cell.delay.sem_defined || !cell.f.sem_defined) {
            out << " (sem undefined: n<2)";
        }
        out << "\n";
    };
    for (const cpd::CellSummary& cell : report.per_lambda) {
        line("lambda " + format_value(cell.lambda), cell);
    }
    line("pooled", report.pooled);
}

const CLI::Validator kLambdaGtOne{
    [](std::string& s) -> std::string {
        try {
            if (std::stod(s) > 1.0) return {};
        } catch (...) {
        }
        return "lambda must be a number > 1";
    },
    "FLOAT>1"};

int run_cli(int argc, char** argv) {
    CLI::App app{"Bayesian online change-point detection (BOCPD and its baseline-shift variant)"};
    app.require_subcommand(1);

    // --- detect ---
    CLI::App* detect = app.add_subcommand("detect", "run one detector over one series");
    InputOptions detect_in;
    double detect_lambda = 0.0;
    std::string detect_algorithm = "bocpd-bls";
    std::string detect_output;
    std::string detect_runlength;
    std::optional<double> detect_prune;
    detect->add_option("--lambda", detect_lambda, "expected run length of the hazard prior")
        ->required()
        ->check(kLambdaGtOne);
    detect->add_option("--algorithm", detect_algorithm, "bocpd or bocpd-bls")->capture_default_str();
    detect->add_option("--output", detect_output, "events CSV path (default stdout)");
    detect->add_option("--emit-runlength", detect_runlength, "write the run-length log-probability matrix CSV here");
    detect->add_option("--prune-threshold", detect_prune,
                       "drop hypotheses whose posterior probability falls below this");
    add_file_options(detect, detect_in);
    add_synth_options(detect, detect_in);

    // --- synth ---
    CLI::App* synth = app.add_subcommand("synth", "emit one synthetic benchmark series");
    int synth_dataset = 0;
    std::uint64_t synth_seed = 1;
    std::string synth_output;
    std::string synth_truth_output;
    synth->add_option("--dataset", synth_dataset, "benchmark dataset id")
        ->required()
        ->check(CLI::Range(1, 6));
    synth->add_option("--seed", synth_seed, "RNG seed")->capture_default_str();
    synth->add_option("--output", synth_output, "values CSV path")->required();
    synth->add_option("--truth-output", synth_truth_output,
                      "truth sidecar path (default: <output>.truth.csv)");

    // --- validate ---
    CLI::App* validate = app.add_subcommand("validate", "reproduce the benchmark metric tables");
    std::string validate_dataset = "all";
    std::vector<std::string> validate_algorithms = {"bocpd", "bocpd-bls"};
    int validate_iterations = 100;
    std::uint64_t validate_seed = 1;
    std::vector<double> validate_grid(cpd::kValidationLambdaGrid.begin(),
                                      cpd::kValidationLambdaGrid.end());
    std::string validate_output;
    std::string validate_csv;
    validate->add_option("--dataset", validate_dataset, "dataset id 1..6 or 'all'")
        ->capture_default_str();
    validate->add_option("--algorithms", validate_algorithms, "comma-separated algorithm list")
        ->delimiter(',');
    validate->add_option("--iterations", validate_iterations, "seeds per (dataset, lambda) cell")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    validate->add_option("--seed", validate_seed, "base seed; run k uses seed+k")
        ->capture_default_str();
    validate->add_option("--lambda-grid", validate_grid, "comma-separated lambda grid")
        ->delimiter(',');
    validate->add_option("--output", validate_output, "text report path (default stdout)");
    validate->add_option("--csv", validate_csv, "also write the report as CSV here");

    // --- sweep ---
    CLI::App* sweep = app.add_subcommand("sweep", "detected change points per lambda over a grid");
    InputOptions sweep_in;
    std::vector<std::string> sweep_algorithms = {"bocpd", "bocpd-bls"};
    std::vector<double> sweep_grid = {10, 30, 100, 300, 1000};
    std::string sweep_output;
    std::optional<double> sweep_prune;
    sweep->add_option("--algorithms", sweep_algorithms, "comma-separated algorithm list")
        ->delimiter(',');
    sweep->add_option("--lambda-grid", sweep_grid, "comma-separated lambda grid")->delimiter(',');
    sweep->add_option("--output", sweep_output, "rows CSV path (default stdout)");
    sweep->add_option("--prune-threshold", sweep_prune,
                      "drop hypotheses whose posterior probability falls below this");
    add_file_options(sweep, sweep_in);
    add_synth_options(sweep, sweep_in);

    // --- ingest ---
    CLI::App* ingest = app.add_subcommand("ingest", "parse/resample a CSV into timestamp,value rows");
    InputOptions ingest_in;
    std::string ingest_output;
    add_file_options(ingest, ingest_in);
    ingest->get_option("--input")->required();
    ingest->add_option("--output", ingest_output, "output CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exits 0
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    }

    if (detect->parsed()) {
        require_one_source(detect_in);
        const cpd::Algorithm algorithm = parse_algorithm(detect_algorithm);
        const cpd::DetectorOptions options = detector_options(detect_prune);
        const LoadedSeries series = load_series(detect_in);
        const cpd::SeriesResult result =
            cpd::detect_series(algorithm, detect_lambda, series.values, 0.0, options);
        DataSink sink(detect_output);
        write_events_csv(sink.out(), result);
        if (!detect_runlength.empty()) {
            DataSink matrix_sink(detect_runlength);
            write_runlength_csv(matrix_sink.out(), result);
        }
        std::cerr << "algorithm=" << algorithm_name(algorithm) << " lambda=" << detect_lambda
                  << " points=" << series.values.size()
                  << " change_points=" << result.change_points.size() << "\n";
        return kExitOk;
    }

    if (synth->parsed()) {
        const cpd::LabeledSeries series = cpd::generate(synth_dataset, synth_seed);
        DataSink values_sink(synth_output);
        values_sink.out() << "t,value\n";
        for (std::size_t i = 0; i < series.values.size(); ++i) {
            values_sink.out() << (i + 1) << ',' << format_value(series.values[i]) << '\n';
        }
        const std::string truth_path =
            synth_truth_output.empty() ? synth_output + ".truth.csv" : synth_truth_output;
        DataSink truth_sink(truth_path);
        truth_sink.out() << "t\n";
        for (int g : series.truth) {
            truth_sink.out() << g << '\n';
        }
        std::cerr << "dataset=" << synth_dataset << " seed=" << synth_seed << " points="
                  << series.values.size() << " truth=" << series.truth.size() << "\n";
        return kExitOk;
    }

    if (validate->parsed()) {
        for (double l : validate_grid) {
            if (!(l > 1.0)) throw CLI::ValidationError("--lambda-grid", "every lambda must be > 1");
        }
        std::vector<int> datasets;
        if (validate_dataset == "all") {
            datasets = {1, 2, 3, 4, 5, 6};
        } else {
            try {
                datasets.push_back(std::stoi(validate_dataset));
            } catch (...) {
                throw CLI::ValidationError("--dataset", "expected 1..6 or 'all'");
            }
            if (datasets.back() < 1 || datasets.back() > 6) {
                throw CLI::ValidationError("--dataset", "expected 1..6 or 'all'");
            }
        }
        std::vector<cpd::Algorithm> algorithms;
        algorithms.reserve(validate_algorithms.size());
        for (const std::string& name : validate_algorithms) {
            algorithms.push_back(parse_algorithm(name));
        }
        DataSink text_sink(validate_output);
        std::ofstream csv_file;
        if (!validate_csv.empty()) {
            csv_file.open(validate_csv);
            if (!csv_file) throw std::runtime_error("cannot open output file: " + validate_csv);
            csv_file << "dataset,algorithm,lambda,runs,f_mean,f_sem3,miss_mean,miss_sem3,"
                        "delay_mean,delay_sem3,duplication_mean,duplication_sem3,delay_runs\n";
        }
        for (int dataset_id : datasets) {
            for (cpd::Algorithm algorithm : algorithms) {
                const cpd::MetricsReport report = cpd::evaluate(
                    dataset_id, algorithm, validate_grid, validate_iterations, validate_seed);
                write_metrics_text(text_sink.out(), report);
                if (csv_file.is_open()) {
                    for (const cpd::CellSummary& cell : report.per_lambda) {
                        write_metrics_row(csv_file, dataset_id, algorithm_name(algorithm),
                                          format_value(cell.lambda), cell);
                    }
                    write_metrics_row(csv_file, dataset_id, algorithm_name(algorithm), "pooled",
                                      report.pooled);
                }
            }
        }
        return kExitOk;
    }

    if (sweep->parsed()) {
        require_one_source(sweep_in);
        for (double l : sweep_grid) {
            if (!(l > 1.0)) throw CLI::ValidationError("--lambda-grid", "every lambda must be > 1");
        }
        std::vector<cpd::Algorithm> algorithms;
        algorithms.reserve(sweep_algorithms.size());
        for (const std::string& name : sweep_algorithms) {
            algorithms.push_back(parse_algorithm(name));
        }
        const cpd::DetectorOptions options = detector_options(sweep_prune);
        const LoadedSeries series = load_series(sweep_in);
        DataSink sink(sweep_output);
        sink.out() << "algorithm,lambda,detections\n";
        for (cpd::Algorithm algorithm : algorithms) {
            for (double lambda : sweep_grid) {
                const cpd::SeriesResult result =
                    cpd::detect_series(algorithm, lambda, series.values, 0.0, options);
                sink.out() << algorithm_name(algorithm) << ',' << format_value(lambda);
                for (int t : result.change_points) {
                    sink.out() << ',' << t;
                }
                sink.out() << '\n';
            }
        }
        std::cerr << "source=" << series.label << " points=" << series.values.size() << " rows="
                  << algorithms.size() * sweep_grid.size() << "\n";
        return kExitOk;
    }

    if (ingest->parsed()) {
        if (ingest_in.synth_dataset != 0) {
            throw CLI::ValidationError("--synth-dataset", "ingest reads files only");
        }
        cpd::TimeSeriesFrame frame;
        if (!ingest_in.wide_country.empty()) {
            frame = cpd::extract_wide_row(ingest_in.input_path, ingest_in.wide_country,
                                          ingest_in.date_start, ingest_in.date_end);
        } else {
            cpd::CsvReadResult read =
                cpd::read_series_csv(ingest_in.input_path, ingest_in.time_column,
                                     ingest_in.value_column, !ingest_in.no_header);
            if (read.skipped_rows > 0) {
                std::cerr << "skipped " << read.skipped_rows << " unparseable row(s)\n";
            }
            frame = std::move(read.frame);
        }
        const bool windowed =
            std::isfinite(ingest_in.window_start) || std::isfinite(ingest_in.window_end);
        if (ingest_in.resample_k != 1 || windowed) {
            frame = cpd::resample_every_k(frame, ingest_in.resample_k, ingest_in.window_start,
                                          ingest_in.window_end);
        }
        DataSink sink(ingest_output);
        sink.out() << "timestamp,value\n";
        for (std::size_t i = 0; i < frame.values.size(); ++i) {
            sink.out() << frame.timestamps[i] << ',' << format_value(frame.values[i]) << '\n';
        }
        std::cerr << "source=" << frame.source_label << " points=" << frame.values.size() << "\n";
        return kExitOk;
    }

    return kExitUsageError; // unreachable: require_subcommand(1)
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitComponentError;
    }
}
