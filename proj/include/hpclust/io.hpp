#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "hpclust/bench.hpp"
#include "hpclust/core.hpp"

namespace hpclust {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TableFormat {
    char delimiter = ',';
    bool has_header = false;
};

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view field, const std::string& where) {
    double v = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw ParseError("cannot parse numeric field at " + where + ": '" + std::string(field) + "'");
    if (!std::isfinite(v)) throw ParseError("non-finite value at " + where + ": '" + std::string(field) + "'");
    return v;
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == delim) {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline std::string location(std::size_t line, std::size_t col) {
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

// Reads a delimiter-separated numeric table. Every row must have the same
// field count and every field must parse as a finite real; violations are
// reported with their line and column.
inline Dataset load_dataset(const std::string& path, const TableFormat& fmt = {}) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t line_no = 0;
    bool header_pending = fmt.has_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        const auto fields = detail::split_fields(line, fmt.delimiter);
        if (cols == 0) {
            cols = fields.size();
        } else if (fields.size() != cols) {
            throw ParseError("ragged row at line " + std::to_string(line_no) + ": expected " +
                             std::to_string(cols) + " fields, got " + std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c)
            values.push_back(parse_double(fields[c], detail::location(line_no, c + 1)));
        ++rows;
    }
    if (rows == 0) throw ParseError("no data rows in file: " + path);
    Dataset d;
    d.values = std::move(values);
    d.rows = rows;
    d.cols = cols;
    return d;
}

inline void save_dataset(const Dataset& X, const std::string& path, const TableFormat& fmt = {}) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    for (std::size_t i = 0; i < X.rows; ++i) {
        auto r = X.row(i);
        for (std::size_t d = 0; d < X.cols; ++d) {
            if (d) out << fmt.delimiter;
            out << format_double(r[d]);
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

// Companion file carrying the per-series summary block.
inline std::string summary_path(const std::string& path) {
    const auto dot = path.find_last_of('.');
    const auto slash = path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + "_summary";
    return path.substr(0, dot) + "_summary" + path.substr(dot);
}

inline const char* kRecordHeader = "algorithm,k,repetition,epsilon,t,t_bar,n_d";
inline const char* kSummaryHeader =
    "dataset,algorithm,k,eps_med,eps_std,tbar_med,tbar_std,t_med,t_std,s,n_s,T,T1,T2,n_d,succ";

// Writes one record per (algorithm, k, repetition) to `path` and the
// summary block (epsilon/t_bar/t medians and deviations plus the run
// parameters) to the companion summary file. Numbers round-trip exactly.
inline void save_results(const std::vector<RunSeries>& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << kRecordHeader << '\n';
    for (const auto& s : series) {
        for (const auto& r : s.records) {
            out << r.algorithm << ',' << r.k << ',' << r.repetition << ',' << format_double(r.epsilon)
                << ',' << format_double(r.t) << ',' << (r.t_bar ? format_double(*r.t_bar) : std::string{})
                << ',' << r.n_d << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);

    std::ofstream sum(summary_path(path));
    if (!sum) throw std::runtime_error("cannot open file for writing: " + summary_path(path));
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; };
    sum << kSummaryHeader << '\n';
    for (const auto& s : series) {
        sum << s.dataset << ',' << s.algorithm << ',' << s.k << ',' << format_double(s.epsilon.median)
            << ',' << opt(s.epsilon.stddev) << ','
            << (s.t_bar ? format_double(s.t_bar->median) : std::string{}) << ','
            << (s.t_bar ? opt(s.t_bar->stddev) : std::string{}) << ',' << format_double(s.t.median)
            << ',' << opt(s.t.stddev) << ',' << format_double(s.sample_size) << ','
            << format_double(s.n_s_median) << ',' << format_double(s.time_limit) << ','
            << format_double(s.t1) << ',' << format_double(s.t2) << ',' << format_double(s.n_d_median)
            << ',' << (s.succ ? 1 : 0) << '\n';
    }
    if (!sum) throw std::runtime_error("write failed: " + summary_path(path));
}

// Reads the records emitted by save_results.
inline std::vector<MetricRecord> load_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::string line;
    std::size_t line_no = 0;
    std::vector<MetricRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != kRecordHeader) throw ParseError("unexpected results header: " + line);
            continue;
        }
        const auto f = detail::split_fields(line, ',');
        if (f.size() != 7)
            throw ParseError("ragged record at line " + std::to_string(line_no));
        MetricRecord r;
        r.algorithm = std::string(f[0]);
        r.k = static_cast<std::size_t>(parse_double(f[1], detail::location(line_no, 2)));
        r.repetition = static_cast<int>(parse_double(f[2], detail::location(line_no, 3)));
        r.epsilon = parse_double(f[3], detail::location(line_no, 4));
        r.t = parse_double(f[4], detail::location(line_no, 5));
        if (!f[5].empty()) r.t_bar = parse_double(f[5], detail::location(line_no, 6));
        r.n_d = static_cast<std::int64_t>(std::stoll(std::string(f[6])));
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace hpclust
