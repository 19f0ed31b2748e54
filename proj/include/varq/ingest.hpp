#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace varq {

// Half-open index range [begin, end).
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    bool operator==(const IndexRange&) const = default;
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_number(line) {}
    std::size_t line_number;
};

// Daily return panel: one date column (YYYYMMDD integers, strictly increasing)
// and one column of net returns in percent per portfolio. Sentinel values are
// flagged missing, never used as returns.
struct RawPanel {
    std::vector<int> dates;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;       // columns[j][t]
    std::vector<std::vector<std::uint8_t>> missing; // missing[j][t]

    std::size_t n_rows() const { return dates.size(); }
    std::size_t n_cols() const { return names.size(); }
    std::size_t column_index(const std::string& name) const;
    bool any_missing(std::size_t col, IndexRange range) const;
};

// Log returns for one portfolio; mean_is records the in-sample mean subtracted
// from the whole series (zero until demean_in_sample is applied).
struct ReturnSeries {
    std::vector<int> dates;
    std::vector<double> values;
    double mean_is = 0.0;
};

struct WindowScheme {
    std::size_t is_length = 0;
    std::size_t oos_length = 0;
    std::size_t step = 0;
    std::vector<std::pair<IndexRange, IndexRange>> windows;
};

// Default Fama-French missing-value sentinels.
inline const std::vector<double> kDefaultSentinels = {-99.99, -999.0};

RawPanel parse_ff_csv(std::istream& in,
                      const std::vector<double>& missing_sentinels = kDefaultSentinels);

// values[t] = ln(1 + R_t/100). Throws std::domain_error on R <= -100 and
// std::invalid_argument if the requested range contains missing values.
ReturnSeries to_log_returns(const RawPanel& panel, const std::string& column);

// Maximal list of rolling (IS, OOS) index pairs stepping by `step`.
WindowScheme split_windows(std::size_t length, std::size_t is_length,
                           std::size_t oos_length, std::size_t step);

// Calendar-year variant: windows are resolved to index ranges by the date's
// year prefix; a window is kept only if all its years are present in `dates`.
WindowScheme split_year_windows(const std::vector<int>& dates, int is_years,
                                int oos_years, int step_years);

// Subtract the arithmetic mean of the in-sample segment from every value
// (IS and OOS alike) and record it in mean_is.
ReturnSeries demean_in_sample(const ReturnSeries& series, IndexRange is_range);

}  // namespace varq
