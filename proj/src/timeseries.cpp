#include "lpplscan/timeseries.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "lpplscan/errors.hpp"

namespace lppl {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ||
                          s.back() == '"')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(pos)));
            break;
        }
        fields.push_back(trim(line.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return fields;
}

std::optional<double> parse_double(std::string_view text) {
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

std::size_t column_index(const std::vector<std::string_view>& header, const std::string& name,
                         std::string_view source) {
    const auto it = std::find(header.begin(), header.end(), std::string_view(name));
    if (it == header.end()) {
        throw InputError(std::string(source) + ": header has no column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

void strip_bom(std::string& line) {
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
        line.erase(0, 3);
    }
}

}  // namespace

Date parse_date(std::string_view text) {
    text = trim(text);
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    const bool shape_ok = text.size() == 10 && text[4] == '-' && text[7] == '-';
    if (shape_ok) {
        const char* b = text.data();
        const bool ok = std::from_chars(b, b + 4, y).ptr == b + 4 &&
                        std::from_chars(b + 5, b + 7, m).ptr == b + 7 &&
                        std::from_chars(b + 8, b + 10, d).ptr == b + 10;
        if (ok) {
            const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
            if (date.ok()) return date;
        }
    }
    throw InputError("invalid ISO date '" + std::string(text) + "'");
}

std::string format_date(Date date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

std::vector<Date> business_days(Date first, std::size_t count) {
    using namespace std::chrono;
    std::vector<Date> out;
    out.reserve(count);
    sys_days day{first};
    while (out.size() < count) {
        const weekday wd{day};
        if (wd != Saturday && wd != Sunday) out.emplace_back(day);
        day += days{1};
    }
    return out;
}

PriceSeries::PriceSeries(std::vector<Date> dates, std::vector<double> log_prices,
                         std::string source_column)
    : dates_(std::move(dates)),
      log_prices_(std::move(log_prices)),
      source_column_(std::move(source_column)) {
    if (dates_.size() != log_prices_.size()) {
        throw std::invalid_argument("PriceSeries: dates and log-prices differ in length");
    }
    if (log_prices_.size() < 2) {
        throw InputError("price series needs at least 2 observations");
    }
    for (std::size_t i = 0; i < log_prices_.size(); ++i) {
        if (!std::isfinite(log_prices_[i])) {
            throw InputError("non-finite log-price at index " + std::to_string(i));
        }
        if (i > 0 && !(dates_[i - 1] < dates_[i])) {
            throw InputError("dates not strictly increasing at " + format_date(dates_[i]));
        }
    }
}

PriceSeries::PriceSeries(const std::vector<Observation>& observations, std::string source_column)
    : PriceSeries(
          [&] {
              std::vector<Date> d;
              d.reserve(observations.size());
              for (const auto& o : observations) d.push_back(o.date);
              return d;
          }(),
          [&] {
              std::vector<double> p;
              p.reserve(observations.size());
              for (const auto& o : observations) p.push_back(o.log_price);
              return p;
          }(),
          std::move(source_column)) {}

std::optional<std::size_t> PriceSeries::first_on_or_after(Date date) const {
    const auto it = std::lower_bound(dates_.begin(), dates_.end(), date);
    if (it == dates_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - dates_.begin());
}

std::optional<std::size_t> PriceSeries::last_on_or_before(Date date) const {
    const auto it = std::upper_bound(dates_.begin(), dates_.end(), date);
    if (it == dates_.begin()) return std::nullopt;
    return static_cast<std::size_t>(it - dates_.begin()) - 1;
}

PriceSeries slice(const PriceSeries& series, Window window) {
    if (window.length < 2 || window.start_index >= series.size() ||
        window.length > series.size() - window.start_index) {
        throw std::out_of_range("window (" + std::to_string(window.start_index) + ", " +
                                std::to_string(window.length) + ") outside series of length " +
                                std::to_string(series.size()));
    }
    const auto first = static_cast<std::ptrdiff_t>(window.start_index);
    const auto last = first + static_cast<std::ptrdiff_t>(window.length);
    std::vector<Date> dates(series.dates().begin() + first, series.dates().begin() + last);
    std::vector<double> prices(series.log_prices().begin() + first,
                               series.log_prices().begin() + last);
    return PriceSeries(std::move(dates), std::move(prices), series.source_column());
}

PriceSeries select_dates(const PriceSeries& series, std::optional<Date> from,
                         std::optional<Date> to) {
    const std::size_t begin = from ? series.first_on_or_after(*from).value_or(series.size()) : 0;
    const std::size_t end_incl = to ? series.last_on_or_before(*to).value_or(series.size())
                                    : series.last_index();
    if (begin >= series.size() || end_incl >= series.size() || end_incl < begin + 1) {
        throw InputError("date range selects fewer than 2 observations");
    }
    return slice(series, Window{begin, end_incl - begin + 1});
}

PriceSeries parse_csv(std::istream& in, const CsvOptions& options, std::string_view source_name) {
    std::string line;
    if (!std::getline(in, line)) throw InputError(std::string(source_name) + ": empty file");
    strip_bom(line);
    const std::string header_line = line;
    const auto header = split_fields(header_line);
    const std::size_t date_col = column_index(header, options.date_column, source_name);
    const std::size_t price_col = column_index(header, options.price_column, source_name);

    std::vector<Observation> rows;
    std::size_t row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        const auto where = std::string(source_name) + " row " + std::to_string(row_number);
        if (fields.size() <= std::max(date_col, price_col)) {
            throw InputError(where + ": expected at least " +
                             std::to_string(std::max(date_col, price_col) + 1) + " fields");
        }
        Date date;
        try {
            date = parse_date(fields[date_col]);
        } catch (const InputError& e) {
            throw InputError(where + ": " + e.what());
        }
        const auto value = parse_double(fields[price_col]);
        if (!value || !std::isfinite(*value)) {
            throw InputError(where + ": malformed price '" + std::string(fields[price_col]) + "'");
        }
        double log_price = *value;
        if (options.transform == PriceTransform::log) {
            if (*value <= 0.0) {
                throw InputError(where + ": non-positive price under log transform");
            }
            log_price = std::log(*value);
        }
        rows.push_back({date, log_price});
    }

    std::stable_sort(rows.begin(), rows.end(),
                     [](const Observation& a, const Observation& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].date == rows[i - 1].date) {
            throw InputError(std::string(source_name) + ": duplicate date " +
                             format_date(rows[i].date));
        }
    }
    return PriceSeries(rows, options.price_column);
}

PriceSeries ingest_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    return parse_csv(in, options, path.string());
}

void write_csv(const PriceSeries& series, std::ostream& out, const CsvOptions& options) {
    out << options.date_column << ',' << options.price_column << '\n';
    char buf[64];
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double v = options.transform == PriceTransform::log
                             ? std::exp(series.log_prices()[i])
                             : series.log_prices()[i];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << format_date(series.dates()[i]) << ',' << buf << '\n';
    }
}

void write_csv(const PriceSeries& series, const std::filesystem::path& path,
               const CsvOptions& options) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    write_csv(series, out, options);
}

std::string fingerprint(const PriceSeries& series) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t word) {
        for (int b = 0; b < 8; ++b) {
            h ^= (word >> (8 * b)) & 0xFFu;
            h *= 0x100000001b3ULL;
        }
    };
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto days = std::chrono::sys_days{series.dates()[i]}.time_since_epoch().count();
        mix(static_cast<std::uint64_t>(days));
        mix(std::bit_cast<std::uint64_t>(series.log_prices()[i]));
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<double> read_numeric_column(const std::filesystem::path& path,
                                        const std::string& column) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
    strip_bom(line);
    const std::string header_line = line;
    const auto header = split_fields(header_line);
    const std::size_t col = column_index(header, column, path.string());
    std::vector<double> values;
    std::size_t row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() <= col || fields[col].empty()) continue;
        const auto v = parse_double(fields[col]);
        if (!v || !std::isfinite(*v)) {
            throw InputError(path.string() + " row " + std::to_string(row_number) +
                             ": malformed value '" + std::string(fields[col]) + "'");
        }
        values.push_back(*v);
    }
    return values;
}

}  // namespace lppl
