#pragma once

#include "cpd/csv.hpp"

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cpd {

/// Raw ingested series: timestamps kept verbatim (epoch-second strings or
/// date labels), values parsed, input order preserved. Ingestion never
/// reorders or interpolates.
struct TimeSeriesFrame {
    std::vector<std::string> timestamps;
    std::vector<double> values;
    std::string source_label;
};

struct CsvReadResult {
    TimeSeriesFrame frame;
    std::size_t skipped_rows = 0; // rows whose value cell was empty or non-numeric
};

namespace detail {

inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path);
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

/// A column is addressed by header name or by zero-based index written as
/// digits. Headerless files must use indices.
inline std::size_t resolve_column(const std::string& selector,
                                  const std::vector<std::string>& header, bool has_header,
                                  std::size_t column_count) {
    if (has_header) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == selector) return i;
        }
    }
    if (const auto idx = parse_int(selector); idx.has_value() && *idx >= 0) {
        if (static_cast<std::size_t>(*idx) < column_count) return static_cast<std::size_t>(*idx);
        throw std::runtime_error("column index out of range: " + selector);
    }
    throw std::runtime_error("cannot resolve column '" + selector + "'");
}

/// Days since 1970-01-01 for a proleptic Gregorian date (Hinnant's
/// days-from-civil).
inline long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<long>(era) * 146097 + static_cast<long>(doe) - 719468;
}

/// Accepts M/D/YY, M/D/YYYY and YYYY-MM-DD. Two-digit years mean 20YY.
inline std::optional<long> parse_date_days(std::string_view s) {
    int parts[3] = {0, 0, 0};
    char sep = 0;
    int n = 0;
    int cur = 0;
    bool have_digit = false;
    for (char c : s) {
        if (c >= '0' && c <= '9') {
            cur = cur * 10 + (c - '0');
            have_digit = true;
        } else if (c == '/' || c == '-') {
            if (!have_digit || n >= 2 || (sep != 0 && c != sep)) return std::nullopt;
            sep = c;
            parts[n++] = cur;
            cur = 0;
            have_digit = false;
        } else {
            return std::nullopt;
        }
    }
    if (!have_digit || n != 2) return std::nullopt;
    parts[2] = cur;
    int y, m, d;
    if (sep == '-') {
        y = parts[0];
        m = parts[1];
        d = parts[2];
    } else {
        m = parts[0];
        d = parts[1];
        y = parts[2] < 100 ? 2000 + parts[2] : parts[2];
    }
    if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
    return days_from_civil(y, m, d);
}

} // namespace detail

/// Parse a long-format CSV into a series. Rows whose value cell is empty or
/// non-numeric are skipped and counted. When every timestamp parses as a
/// number, strict increase is enforced.
inline CsvReadResult read_series_csv(const std::string& path, const std::string& time_column,
                                     const std::string& value_column, bool has_header) {
    const std::vector<std::string> lines = detail::read_lines(path);
    std::size_t row = 0;
    std::vector<std::string> header;
    std::size_t column_count = 0;
    if (has_header) {
        if (lines.empty()) throw std::runtime_error("empty file: " + path);
        header = split_csv_line(lines[0]);
        column_count = header.size();
        row = 1;
    } else {
        for (const std::string& l : lines) {
            if (!l.empty()) {
                column_count = split_csv_line(l).size();
                break;
            }
        }
    }
    const std::size_t time_idx = detail::resolve_column(time_column, header, has_header, column_count);
    const std::size_t value_idx = detail::resolve_column(value_column, header, has_header, column_count);

    CsvReadResult out;
    out.frame.source_label = path;
    for (; row < lines.size(); ++row) {
        if (lines[row].empty()) continue;
        const std::vector<std::string> fields = split_csv_line(lines[row]);
        if (time_idx >= fields.size() || value_idx >= fields.size()) {
            ++out.skipped_rows;
            continue;
        }
        const std::optional<double> value = parse_double(fields[value_idx]);
        if (!value.has_value()) {
            ++out.skipped_rows;
            continue;
        }
        out.frame.timestamps.push_back(fields[time_idx]);
        out.frame.values.push_back(*value);
    }
    if (out.frame.values.empty()) {
        throw std::runtime_error("no parseable rows in " + path);
    }

    bool all_numeric = true;
    double prev = -std::numeric_limits<double>::infinity();
    for (const std::string& ts : out.frame.timestamps) {
        const std::optional<double> t = parse_double(ts);
        if (!t.has_value()) {
            all_numeric = false;
            break;
        }
        if (*t <= prev) {
            throw std::runtime_error("timestamps not strictly increasing in " + path);
        }
        prev = *t;
    }
    (void)all_numeric;
    return out;
}

/// Window the frame to timestamps in [start, end], then keep every k-th row
/// starting from the first retained one (row-stride decimation). With the
/// default infinite window no timestamp parsing happens at all.
inline TimeSeriesFrame resample_every_k(const TimeSeriesFrame& frame, int k,
                                        double start = -std::numeric_limits<double>::infinity(),
                                        double end = std::numeric_limits<double>::infinity()) {
    if (k < 1) {
        throw std::invalid_argument("resample_every_k: k must be >= 1");
    }
    if (!(start <= end)) {
        throw std::invalid_argument("resample_every_k: start must be <= end");
    }
    const bool windowed = std::isfinite(start) || std::isfinite(end);
    TimeSeriesFrame out;
    out.source_label = frame.source_label;
    std::size_t kept_since_first = 0;
    bool has_first = false;
    for (std::size_t i = 0; i < frame.timestamps.size(); ++i) {
        if (windowed) {
            const std::optional<double> t = parse_double(frame.timestamps[i]);
            if (!t.has_value()) {
                throw std::runtime_error("resample window requires numeric timestamps");
            }
            if (*t < start || *t > end) continue;
        }
        if (!has_first || kept_since_first == static_cast<std::size_t>(k)) {
            out.timestamps.push_back(frame.timestamps[i]);
            out.values.push_back(frame.values[i]);
            kept_since_first = 0;
            has_first = true;
        }
        ++kept_since_first;
    }
    if (out.values.empty()) {
        throw std::runtime_error("resample_every_k: empty selection");
    }
    return out;
}

/// Extract one country's series from a wide-format table (region rows,
/// date columns from column 4 onward). All rows whose country field matches
/// exactly are summed; the window [date_start, date_end] is inclusive.
inline TimeSeriesFrame extract_wide_row(const std::string& path, const std::string& country,
                                        const std::string& date_start, const std::string& date_end) {
    const std::vector<std::string> lines = detail::read_lines(path);
    if (lines.empty()) throw std::runtime_error("empty file: " + path);
    const std::vector<std::string> header = split_csv_line(lines[0]);
    if (header.size() < 5 || header[1] != "Country/Region") {
        throw std::runtime_error("malformed wide-format header in " + path);
    }
    const std::optional<long> start_day = detail::parse_date_days(date_start);
    const std::optional<long> end_day = detail::parse_date_days(date_end);
    if (!start_day.has_value() || !end_day.has_value()) {
        throw std::invalid_argument("unparseable date bound");
    }
    if (*start_day > *end_day) {
        throw std::invalid_argument("date_start must not be after date_end");
    }

    std::vector<std::size_t> date_columns;
    for (std::size_t i = 4; i < header.size(); ++i) {
        const std::optional<long> day = detail::parse_date_days(header[i]);
        if (!day.has_value()) {
            throw std::runtime_error("malformed date column '" + header[i] + "' in " + path);
        }
        if (*day >= *start_day && *day <= *end_day) {
            date_columns.push_back(i);
        }
    }
    if (date_columns.empty()) {
        throw std::runtime_error("no date columns in the requested window");
    }

    TimeSeriesFrame out;
    out.source_label = path;
    out.values.assign(date_columns.size(), 0.0);
    for (std::size_t c = 0; c < date_columns.size(); ++c) {
        out.timestamps.push_back(header[date_columns[c]]);
    }
    bool found = false;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        if (lines[row].empty()) continue;
        const std::vector<std::string> fields = split_csv_line(lines[row]);
        if (fields.size() < 2 || fields[1] != country) continue;
        found = true;
        for (std::size_t c = 0; c < date_columns.size(); ++c) {
            if (date_columns[c] >= fields.size()) {
                throw std::runtime_error("short row in " + path);
            }
            const std::optional<double> v = parse_double(fields[date_columns[c]]);
            if (!v.has_value()) {
                throw std::runtime_error("non-numeric cell in " + path);
            }
            out.values[c] += *v;
        }
    }
    if (!found) {
        throw std::runtime_error("country not found: " + country);
    }
    return out;
}

} // namespace cpd
