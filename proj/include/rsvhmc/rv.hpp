#pragma once

// Daily realized variance from intraday prices and the Hansen-Lunde
// scale factor c = sum (y_t - ybar)^2 / sum RV_t.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rsvhmc/error.hpp"
#include "rsvhmc/model.hpp"

namespace rsvhmc {

using Date = std::chrono::year_month_day;

[[nodiscard]] inline std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

struct Tick {
    double seconds = 0.0;  // seconds since midnight
    double log_price = 0.0;
};

struct IntradayDay {
    Date date;
    std::vector<Tick> ticks;
};

enum class ReturnConvention { OpenToClose, CloseToClose };

struct RvOptions {
    int grid_seconds = 60;
    /// Session window in seconds since midnight; defaults to the first and
    /// last tick of each day.
    std::optional<double> session_open;
    std::optional<double> session_close;
    /// Minimum fraction of grid intervals that must contain a tick.
    double min_coverage = 0.5;
    ReturnConvention returns = ReturnConvention::OpenToClose;

    void validate() const {
        if (grid_seconds < 1) throw ValidationError("grid spacing must be at least one second");
        if (session_open && session_close && !(*session_open < *session_close)) {
            throw ValidationError("session open must precede session close");
        }
        if (!(min_coverage >= 0.0 && min_coverage <= 1.0)) {
            throw ValidationError("coverage threshold must lie in [0, 1]");
        }
    }
};

/// A day that cannot produce a realized variance.
class DayRejected : public Error {
public:
    using Error::Error;
};

/// Previous-tick sampled log-prices on a regular grid anchored at the
/// session open.
struct GridSample {
    std::vector<double> log_prices;
    /// Fraction of grid intervals (g_{k-1}, g_k] holding at least one tick.
    double coverage = 0.0;
};

[[nodiscard]] inline GridSample sample_grid(const IntradayDay& day, const RvOptions& opts) {
    const auto& ticks = day.ticks;
    if (ticks.empty()) throw DayRejected("no ticks");
    for (std::size_t i = 1; i < ticks.size(); ++i) {
        if (!(ticks[i].seconds > ticks[i - 1].seconds)) {
            throw DayRejected("timestamps not strictly increasing");
        }
    }
    const double open = opts.session_open.value_or(ticks.front().seconds);
    const double close = opts.session_close.value_or(ticks.back().seconds);
    const double step = opts.grid_seconds;
    if (!(close >= open)) throw DayRejected("empty session");
    const auto intervals = static_cast<std::size_t>(std::floor((close - open) / step + 1e-9));
    if (intervals < 1) throw DayRejected("fewer than 2 grid points");

    GridSample g;
    g.log_prices.resize(intervals + 1);
    std::size_t next = 0;  // first tick not yet at or before the current grid point
    std::size_t covered = 0;
    for (std::size_t k = 0; k <= intervals; ++k) {
        const double at = open + step * static_cast<double>(k);
        const std::size_t before = next;
        while (next < ticks.size() && ticks[next].seconds <= at + 1e-9) ++next;
        if (k > 0 && next > before) ++covered;
        // Before the first tick the opening price is back-filled.
        g.log_prices[k] = next == 0 ? ticks.front().log_price : ticks[next - 1].log_price;
    }
    g.coverage = static_cast<double>(covered) / static_cast<double>(intervals);
    return g;
}

/// Sum of squared grid returns over the session.
[[nodiscard]] inline double daily_rv(const IntradayDay& day, int grid_seconds) {
    RvOptions opts;
    opts.grid_seconds = grid_seconds;
    opts.validate();
    const auto g = sample_grid(day, opts);
    double rv = 0.0;
    for (std::size_t k = 1; k < g.log_prices.size(); ++k) {
        const double r = g.log_prices[k] - g.log_prices[k - 1];
        rv += r * r;
    }
    return rv;
}

[[nodiscard]] inline double hansen_lunde_c(std::span<const double> y, std::span<const double> rv) {
    if (y.size() != rv.size() || y.size() < 2) {
        throw ValidationError("hansen_lunde_c needs equal-length series with n >= 2");
    }
    double ybar = 0.0;
    for (double v : y) ybar += v;
    ybar /= static_cast<double>(y.size());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        if (!(rv[t] > 0.0)) throw ValidationError("realized variances must be positive");
        num += (y[t] - ybar) * (y[t] - ybar);
        den += rv[t];
    }
    if (!(den > 0.0)) throw Error("realized variance sum is zero");
    return num / den;
}

/// Delta-method standard error of log(c), treating the per-day influence
/// terms (y_t - ybar)^2 / S_y - RV_t / S_rv as serially uncorrelated.
[[nodiscard]] inline double hansen_lunde_log_c_se(std::span<const double> y,
                                                  std::span<const double> rv) {
    static_cast<void>(hansen_lunde_c(y, rv));  // input validation
    const auto n = static_cast<double>(y.size());
    double ybar = 0.0, rbar = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        ybar += y[t];
        rbar += rv[t];
    }
    ybar /= n;
    rbar /= n;
    double sy = 0.0;
    for (double v : y) sy += (v - ybar) * (v - ybar);
    sy /= n;
    std::vector<double> z(y.size());
    double zbar = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        z[t] = (y[t] - ybar) * (y[t] - ybar) / sy - rv[t] / rbar;
        zbar += z[t];
    }
    zbar /= n;
    double vz = 0.0;
    for (double v : z) vz += (v - zbar) * (v - zbar);
    vz /= n - 1.0;
    return std::sqrt(vz / n);
}

struct RvSeries {
    std::vector<Date> dates;
    std::vector<double> rv;
    std::vector<double> y;

    [[nodiscard]] std::size_t size() const noexcept { return rv.size(); }

    /// Returns paired with ln(scale * RV_t).
    [[nodiscard]] ObservedSeries to_observed(double scale = 1.0) const {
        ObservedSeries s;
        s.y = y;
        s.ln_rv.reserve(rv.size());
        for (double v : rv) s.ln_rv.push_back(std::log(scale * v));
        return s;
    }
};

struct Rejection {
    Date date;
    std::string reason;
};

struct BuildResult {
    RvSeries series;
    std::vector<Rejection> rejected;
    /// Set when the input days were not in date order.
    bool reordered = false;
};

namespace detail {

template <class T, class DateOf>
bool sort_and_check_dates(std::vector<T>& items, DateOf date_of) {
    const bool sorted = std::is_sorted(items.begin(), items.end(),
                                       [&](const T& a, const T& b) { return date_of(a) < date_of(b); });
    if (!sorted) {
        std::stable_sort(items.begin(), items.end(),
                         [&](const T& a, const T& b) { return date_of(a) < date_of(b); });
    }
    for (std::size_t i = 1; i < items.size(); ++i) {
        if (date_of(items[i]) == date_of(items[i - 1])) {
            throw ValidationError("duplicate date " + format_date(date_of(items[i])));
        }
    }
    return !sorted;
}

}  // namespace detail

/// Daily returns and realized variances from intraday data. Days that fail
/// validation (too few grid points, insufficient coverage, zero RV) are
/// dropped and listed in the rejection report.
[[nodiscard]] inline BuildResult build_series(std::vector<IntradayDay> days,
                                              const RvOptions& opts = {}) {
    opts.validate();
    if (days.empty()) throw ValidationError("no intraday days supplied");
    BuildResult result;
    result.reordered =
        detail::sort_and_check_dates(days, [](const IntradayDay& d) { return d.date; });

    std::optional<double> prev_close;
    for (const auto& day : days) {
        try {
            const auto g = sample_grid(day, opts);
            if (g.coverage < opts.min_coverage) {
                throw DayRejected("grid coverage " + std::to_string(g.coverage) +
                                  " below threshold");
            }
            double rv = 0.0;
            for (std::size_t k = 1; k < g.log_prices.size(); ++k) {
                const double r = g.log_prices[k] - g.log_prices[k - 1];
                rv += r * r;
            }
            const double close = g.log_prices.back();
            double y = close - g.log_prices.front();
            if (opts.returns == ReturnConvention::CloseToClose) {
                const auto last = prev_close;
                prev_close = close;
                if (!last) throw DayRejected("no previous close for close-to-close return");
                y = close - *last;
            }
            if (!(rv > 0.0)) throw DayRejected("zero realized variance");
            result.series.dates.push_back(day.date);
            result.series.rv.push_back(rv);
            result.series.y.push_back(y);
        } catch (const DayRejected& e) {
            result.rejected.push_back({day.date, e.what()});
        }
    }
    if (result.series.size() == 0) throw Error("every day was rejected");
    return result;
}

struct DailyRow {
    Date date;
    double y = 0.0;
    double rv = 0.0;
};

/// Validates pre-aggregated daily rows; values pass through unchanged.
[[nodiscard]] inline BuildResult build_series_from_daily(std::vector<DailyRow> rows) {
    if (rows.empty()) throw ValidationError("no daily rows supplied");
    BuildResult result;
    result.reordered = detail::sort_and_check_dates(rows, [](const DailyRow& r) { return r.date; });
    for (const auto& r : rows) {
        if (!std::isfinite(r.y) || !std::isfinite(r.rv)) {
            result.rejected.push_back({r.date, "non-finite value"});
        } else if (!(r.rv > 0.0)) {
            result.rejected.push_back({r.date, "non-positive realized variance"});
        } else {
            result.series.dates.push_back(r.date);
            result.series.y.push_back(r.y);
            result.series.rv.push_back(r.rv);
        }
    }
    if (result.series.size() == 0) throw Error("every day was rejected");
    return result;
}

}  // namespace rsvhmc
