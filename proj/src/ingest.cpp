#include "varq/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

namespace varq {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace

std::size_t RawPanel::column_index(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::invalid_argument("unknown column: " + name);
    return static_cast<std::size_t>(it - names.begin());
}

bool RawPanel::any_missing(std::size_t col, IndexRange range) const {
    for (std::size_t t = range.begin; t < range.end; ++t)
        if (missing[col][t]) return true;
    return false;
}

RawPanel parse_ff_csv(std::istream& in, const std::vector<double>& missing_sentinels) {
    RawPanel panel;
    std::string line;
    std::size_t line_no = 0;

    // Header: date column first, then portfolio names.
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        break;
    }
    if (line_no == 0 || trim(line).empty()) throw ParseError("empty file");
    auto header = split_csv_line(line);
    if (header.size() < 2) throw ParseError("header needs a date column and at least one series", line_no);
    panel.names.assign(header.begin() + 1, header.end());
    panel.columns.resize(panel.names.size());
    panel.missing.resize(panel.names.size());

    auto is_sentinel = [&](double v) {
        for (double s : missing_sentinels)
            if (std::abs(v - s) < 1e-9) return true;
        return false;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError("ragged row: expected " + std::to_string(header.size()) +
                                 " fields, got " + std::to_string(fields.size()),
                             line_no);
        int date = 0;
        try {
            std::size_t pos = 0;
            date = std::stoi(fields[0], &pos);
            if (pos != fields[0].size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ParseError("malformed date '" + fields[0] + "'", line_no);
        }
        if (date < 10000101 || date > 99991231)
            throw ParseError("malformed date '" + fields[0] + "' (want YYYYMMDD)", line_no);
        if (!panel.dates.empty() && date <= panel.dates.back())
            throw ParseError("dates not increasing ('" + fields[0] + "')", line_no);
        panel.dates.push_back(date);
        for (std::size_t j = 0; j < panel.names.size(); ++j) {
            double v = 0.0;
            try {
                std::size_t pos = 0;
                v = std::stod(fields[j + 1], &pos);
                if (pos != fields[j + 1].size()) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw ParseError("malformed value '" + fields[j + 1] + "'", line_no);
            }
            bool miss = is_sentinel(v);
            panel.columns[j].push_back(miss ? std::nan("") : v);
            panel.missing[j].push_back(miss ? 1 : 0);
        }
    }
    if (panel.dates.empty()) throw ParseError("no data rows");
    return panel;
}

ReturnSeries to_log_returns(const RawPanel& panel, const std::string& column) {
    std::size_t j = panel.column_index(column);
    ReturnSeries out;
    out.dates = panel.dates;
    out.values.reserve(panel.n_rows());
    for (std::size_t t = 0; t < panel.n_rows(); ++t) {
        if (panel.missing[j][t])
            throw std::invalid_argument("missing value in column " + column + " at row " +
                                        std::to_string(t));
        double r = panel.columns[j][t];
        if (r <= -100.0)
            throw std::domain_error("net return <= -100% at row " + std::to_string(t));
        out.values.push_back(std::log1p(r / 100.0));
    }
    return out;
}

WindowScheme split_windows(std::size_t length, std::size_t is_length,
                           std::size_t oos_length, std::size_t step) {
    if (is_length == 0 || oos_length == 0 || step == 0)
        throw std::invalid_argument("window lengths and step must be positive");
    if (length < is_length + oos_length)
        throw std::invalid_argument("series too short for one (IS, OOS) window pair");
    WindowScheme scheme{is_length, oos_length, step, {}};
    for (std::size_t start = 0; start + is_length + oos_length <= length; start += step) {
        IndexRange is{start, start + is_length};
        IndexRange oos{is.end, is.end + oos_length};
        scheme.windows.emplace_back(is, oos);
    }
    return scheme;
}

WindowScheme split_year_windows(const std::vector<int>& dates, int is_years, int oos_years,
                                int step_years) {
    if (is_years <= 0 || oos_years <= 0 || step_years <= 0)
        throw std::invalid_argument("year counts must be positive");
    if (dates.empty()) throw std::invalid_argument("empty date vector");

    auto year_of = [](int d) { return d / 10000; };
    int first = year_of(dates.front());
    int last = year_of(dates.back());

    // first index with year >= y
    auto lower_index = [&](int y) {
        return static_cast<std::size_t>(
            std::lower_bound(dates.begin(), dates.end(), y * 10000) - dates.begin());
    };

    WindowScheme scheme;
    scheme.step = static_cast<std::size_t>(step_years);
    for (int y = first; y + is_years + oos_years - 1 <= last; y += step_years) {
        IndexRange is{lower_index(y), lower_index(y + is_years)};
        IndexRange oos{is.end, lower_index(y + is_years + oos_years)};
        if (is.size() == 0 || oos.size() == 0) continue;
        scheme.windows.emplace_back(is, oos);
    }
    if (scheme.windows.empty())
        throw std::invalid_argument("no (IS, OOS) window fits in the date span");
    scheme.is_length = scheme.windows.front().first.size();
    scheme.oos_length = scheme.windows.front().second.size();
    return scheme;
}

ReturnSeries demean_in_sample(const ReturnSeries& series, IndexRange is_range) {
    if (is_range.end > series.values.size() || is_range.size() == 0)
        throw std::invalid_argument("bad in-sample range");
    double mean = std::accumulate(series.values.begin() + is_range.begin,
                                  series.values.begin() + is_range.end, 0.0) /
                  static_cast<double>(is_range.size());
    ReturnSeries out = series;
    out.mean_is = mean;
    for (double& v : out.values) v -= mean;
    return out;
}

}  // namespace varq
