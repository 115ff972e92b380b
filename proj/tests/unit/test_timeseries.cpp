#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lpplscan/errors.hpp"
#include "lpplscan/timeseries.hpp"

using namespace lppl;
using namespace std::chrono;

namespace {

PriceSeries parse(const std::string& text, CsvOptions options = {}) {
    std::istringstream in(text);
    return parse_csv(in, options, "test.csv");
}

PriceSeries ramp(std::size_t n) {
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = 0.1 * static_cast<double>(i);
    return PriceSeries(business_days(Date{2020y, January, 1d}, n), values, "close");
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const InputError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Ingest, LogTransformAndTradingDayIndex) {
    const auto s = parse("date,close\n2020-01-02,100\n2020-01-03,110\n2020-01-06,121\n");
    ASSERT_EQ(s.size(), 3u);
    EXPECT_DOUBLE_EQ(s.log_price(0), std::log(100.0));
    EXPECT_DOUBLE_EQ(s.log_price(1), std::log(110.0));
    EXPECT_DOUBLE_EQ(s.log_price(2), std::log(121.0));
    EXPECT_EQ(s.date(2), (Date{2020y, January, 6d}));
    EXPECT_EQ(s.last_index(), 2u);
    EXPECT_EQ(s.source_column(), "close");
}

TEST(Ingest, DuplicateDateIsNamed) {
    const auto msg = error_of("date,close\n2020-01-02,100\n2020-01-02,101\n2020-01-03,99\n");
    EXPECT_NE(msg.find("duplicate date 2020-01-02"), std::string::npos) << msg;
}

TEST(Ingest, MalformedRowReportsRowNumber) {
    auto msg = error_of("date,close\n2020-01-02,100\n2020-01-03,abc\n");
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
    msg = error_of("date,close\n2020-01-02,100\n2020-13-03,100\n");
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
    msg = error_of("date,close\n2020-01-02\n");
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
}

TEST(Ingest, NonPositivePriceRejectedUnderLog) {
    const auto msg = error_of("date,close\n2020-01-02,100\n2020-01-03,0\n");
    EXPECT_NE(msg.find("non-positive"), std::string::npos) << msg;

    CsvOptions as_is;
    as_is.transform = PriceTransform::as_is;
    const auto s = parse("date,close\n2020-01-02,-1.5\n2020-01-03,0\n", as_is);
    EXPECT_EQ(s.log_price(0), -1.5);
    EXPECT_EQ(s.log_price(1), 0.0);
}

TEST(Ingest, ConfigurableColumnsAndUnsortedRows) {
    CsvOptions o;
    o.date_column = "Date";
    o.price_column = "Adj Close";
    const auto s = parse("Date,Open,Adj Close\n2020-01-03,1,20\n2020-01-02,1,10\n", o);
    EXPECT_EQ(s.date(0), (Date{2020y, January, 2d}));
    EXPECT_DOUBLE_EQ(s.log_price(0), std::log(10.0));
    EXPECT_EQ(s.source_column(), "Adj Close");
    EXPECT_THROW(parse("date,open\n2020-01-02,1\n2020-01-03,2\n"), InputError);
}

TEST(Ingest, TooFewRows) {
    EXPECT_THROW(parse("date,close\n2020-01-02,100\n"), InputError);
    EXPECT_THROW(parse(""), InputError);
}

TEST(Slice, ReindexesAndPreservesDates) {
    const auto s = ramp(10);
    const auto w = slice(s, Window{2, 5});
    ASSERT_EQ(w.size(), 5u);
    EXPECT_EQ(w.log_price(0), s.log_price(2));
    EXPECT_EQ(w.date(0), s.date(2));
    EXPECT_EQ(w.date(4), s.date(6));
}

TEST(Slice, FullWindowIsIdentity) {
    const auto s = ramp(10);
    EXPECT_EQ(slice(s, Window{0, s.size()}), s);
}

TEST(Slice, OutOfBoundsThrows) {
    const auto s = ramp(10);
    EXPECT_THROW(slice(s, Window{9, 2}), std::out_of_range);
    EXPECT_THROW(slice(s, Window{0, 11}), std::out_of_range);
    EXPECT_THROW(slice(s, Window{3, 1}), std::out_of_range);
}

TEST(SelectDates, InclusiveCalendarRange) {
    const auto s = ramp(20);
    const auto sub = select_dates(s, s.date(3), s.date(7));
    EXPECT_EQ(sub.size(), 5u);
    EXPECT_EQ(sub.date(0), s.date(3));
    // Weekend bounds snap inward.
    const auto weekend = select_dates(s, Date{2020y, January, 4d}, Date{2020y, January, 12d});
    EXPECT_EQ(weekend.date(0), (Date{2020y, January, 6d}));
    EXPECT_EQ(weekend.date(weekend.last_index()), (Date{2020y, January, 10d}));
    EXPECT_THROW(select_dates(s, Date{2030y, January, 1d}, std::nullopt), InputError);
}

TEST(RoundTrip, AsIsIsExact) {
    std::vector<double> v{0.1, -2.0 / 3.0, 1e-300, 12345.6789, std::nextafter(1.0, 2.0)};
    const PriceSeries s(business_days(Date{2021y, March, 1d}, v.size()), v, "close");
    CsvOptions o;
    o.transform = PriceTransform::as_is;
    std::stringstream buf;
    write_csv(s, buf, o);
    EXPECT_EQ(parse_csv(buf, o), s);
}

TEST(RoundTrip, LogTransformIsIdempotent) {
    const auto s = ramp(50);
    std::stringstream first;
    write_csv(s, first);
    const auto once = parse_csv(first);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(once.log_price(i), s.log_price(i), 1e-14);
    }
    std::stringstream second;
    write_csv(once, second);
    const auto twice = parse_csv(second);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(twice.log_price(i), once.log_price(i), 1e-15);
    }
    EXPECT_EQ(twice.dates().size(), s.dates().size());
}

TEST(Fingerprint, SensitiveToValuesAndDates) {
    const auto a = ramp(30);
    std::vector<double> v(a.log_prices().begin(), a.log_prices().end());
    v[17] = std::nextafter(v[17], 10.0);
    const PriceSeries b(std::vector<Date>(a.dates().begin(), a.dates().end()), v);
    const auto c = PriceSeries(business_days(Date{2020y, January, 2d}, 30),
                               std::vector<double>(a.log_prices().begin(), a.log_prices().end()));
    EXPECT_EQ(fingerprint(a), fingerprint(ramp(30)));
    EXPECT_NE(fingerprint(a), fingerprint(b));
    EXPECT_NE(fingerprint(a), fingerprint(c));
    EXPECT_EQ(fingerprint(a).size(), 16u);
}

TEST(Dates, ParseAndBusinessDays) {
    EXPECT_EQ(format_date(parse_date("1987-09-30")), "1987-09-30");
    EXPECT_THROW(parse_date("1987-02-30"), InputError);
    EXPECT_THROW(parse_date("30/09/1987"), InputError);
    const auto days = business_days(Date{2024y, June, 1d}, 6);  // a Saturday
    EXPECT_EQ(days.front(), (Date{2024y, June, 3d}));
    EXPECT_EQ(days.back(), (Date{2024y, June, 10d}));
}

TEST(PriceSeriesInvariants, RejectsBadConstruction) {
    const auto d = business_days(Date{2020y, January, 1d}, 3);
    EXPECT_THROW(PriceSeries(d, {1.0, NAN, 2.0}), InputError);
    EXPECT_THROW(PriceSeries({d[0], d[0], d[2]}, {1.0, 2.0, 3.0}), InputError);
    EXPECT_THROW(PriceSeries({d[1], d[0], d[2]}, {1.0, 2.0, 3.0}), InputError);
    EXPECT_THROW(PriceSeries(d, {1.0, 2.0}), std::invalid_argument);
}
