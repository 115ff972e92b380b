#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lppl {

using Date = std::chrono::year_month_day;

// Parses a strict ISO-8601 calendar date (YYYY-MM-DD). Throws InputError.
Date parse_date(std::string_view text);
std::string format_date(Date date);

// `count` consecutive weekdays starting at `first` (moved forward if it falls on a weekend).
std::vector<Date> business_days(Date first, std::size_t count);

struct Observation {
    Date date;
    double log_price = 0.0;
};

// Daily log-price series indexed by trading day (0..n-1). Immutable once built.
//
// Invariants: at least two observations, dates strictly increasing, every
// log-price finite.
class PriceSeries {
public:
    PriceSeries(std::vector<Date> dates, std::vector<double> log_prices,
                std::string source_column = {});
    explicit PriceSeries(const std::vector<Observation>& observations,
                         std::string source_column = {});

    std::size_t size() const noexcept { return log_prices_.size(); }
    std::span<const double> log_prices() const noexcept { return log_prices_; }
    std::span<const Date> dates() const noexcept { return dates_; }
    double log_price(std::size_t index) const { return log_prices_.at(index); }
    Date date(std::size_t index) const { return dates_.at(index); }
    std::size_t last_index() const noexcept { return log_prices_.size() - 1; }

    // Column the values came from, recorded as run metadata.
    const std::string& source_column() const noexcept { return source_column_; }

    // First index whose date is >= `date`, or nullopt if none.
    std::optional<std::size_t> first_on_or_after(Date date) const;
    // Last index whose date is <= `date`, or nullopt if none.
    std::optional<std::size_t> last_on_or_before(Date date) const;

    bool operator==(const PriceSeries& other) const {
        return dates_ == other.dates_ && log_prices_ == other.log_prices_;
    }

private:
    std::vector<Date> dates_;
    std::vector<double> log_prices_;
    std::string source_column_;
};

struct Window {
    std::size_t start_index = 0;
    std::size_t length = 0;
};

// Sub-series re-indexed from 0. Throws std::out_of_range for invalid windows.
PriceSeries slice(const PriceSeries& series, Window window);

// Inclusive calendar range. Either bound may be omitted. Throws InputError when
// fewer than two observations fall inside.
PriceSeries select_dates(const PriceSeries& series, std::optional<Date> from,
                         std::optional<Date> to);

enum class PriceTransform { log, as_is };

struct CsvOptions {
    std::string date_column = "date";
    std::string price_column = "close";
    PriceTransform transform = PriceTransform::log;
};

PriceSeries ingest_csv(const std::filesystem::path& path, const CsvOptions& options = {});
PriceSeries parse_csv(std::istream& in, const CsvOptions& options = {},
                      std::string_view source_name = "<stream>");

// Writes `date,<column>`. With PriceTransform::log the column holds exp(log_price)
// so that ingesting with the same options inverts the write; with as_is the
// log-price is written verbatim (17 significant digits, exact round trip).
void write_csv(const PriceSeries& series, std::ostream& out, const CsvOptions& options = {});
void write_csv(const PriceSeries& series, const std::filesystem::path& path,
               const CsvOptions& options = {});

// 64-bit FNV-1a over dates and the bit patterns of the log-prices, as 16 hex digits.
std::string fingerprint(const PriceSeries& series);

// Reads one numeric column from a headed CSV (used for residual files).
std::vector<double> read_numeric_column(const std::filesystem::path& path,
                                        const std::string& column);

}  // namespace lppl
