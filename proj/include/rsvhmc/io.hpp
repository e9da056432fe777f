#pragma once

// Text formats. Every table is comma-separated with a header row; numbers
// are written in shortest round-trip form so reading a file back yields the
// exact in-memory values. Each output file may carry a companion
// "<file>.meta" block of key=value lines.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "rsvhmc/diagnostics.hpp"
#include "rsvhmc/error.hpp"
#include "rsvhmc/hmc.hpp"
#include "rsvhmc/model.hpp"
#include "rsvhmc/rv.hpp"
#include "rsvhmc/synth.hpp"

namespace rsvhmc::io {

namespace fs = std::filesystem;

[[nodiscard]] inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

[[nodiscard]] inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

[[nodiscard]] inline std::optional<double> try_parse_double(std::string_view s) {
    const std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    const char* first = t.data();
    if (*first == '+') ++first;
    double v = 0.0;
    const auto res = std::from_chars(first, t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
    return v;
}

[[nodiscard]] inline double parse_double(std::string_view s, std::string_view what) {
    if (auto v = try_parse_double(s)) return *v;
    throw IoError("cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
}

[[nodiscard]] inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Ordered key=value block.
class Metadata {
public:
    void set(const std::string& key, std::string value) {
        for (auto& [k, v] : entries_) {
            if (k == key) {
                v = std::move(value);
                return;
            }
        }
        entries_.emplace_back(key, std::move(value));
    }
    void set(const std::string& key, double value) { set(key, format_double(value)); }
    void set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }
    void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }

    [[nodiscard]] std::optional<std::string> get(const std::string& key) const {
        for (const auto& [k, v] : entries_) {
            if (k == key) return v;
        }
        return std::nullopt;
    }

    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& entries() const {
        return entries_;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

[[nodiscard]] inline fs::path meta_path(const fs::path& file) {
    return fs::path(file.string() + ".meta");
}

inline std::ofstream open_output(const fs::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    return os;
}

inline std::ifstream open_input(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    return is;
}

inline void close_checked(std::ofstream& os, const fs::path& path) {
    os.close();
    if (!os) throw IoError("failed writing '" + path.string() + "'");
}

inline void write_metadata(const fs::path& file, const Metadata& meta) {
    const auto path = meta_path(file);
    auto os = open_output(path);
    for (const auto& [k, v] : meta.entries()) os << k << '=' << v << '\n';
    close_checked(os, path);
}

[[nodiscard]] inline Metadata read_metadata(const fs::path& file) {
    auto is = open_input(meta_path(file));
    Metadata meta;
    std::string line;
    while (std::getline(is, line)) {
        if (trim(line).empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("malformed metadata line '" + line + "'");
        meta.set(trim(std::string_view(line).substr(0, eq)),
                 trim(std::string_view(line).substr(eq + 1)));
    }
    return meta;
}

/// Header-indexed table of text cells.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    }

    [[nodiscard]] std::size_t column(std::string_view name) const {
        if (auto i = find(name)) return *i;
        throw IoError("missing column '" + std::string(name) + "'");
    }

    [[nodiscard]] std::vector<double> numeric(std::string_view name) const {
        const auto c = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(parse_double(r.at(c), name));
        return out;
    }
};

[[nodiscard]] inline Table read_table(const fs::path& path) {
    auto is = open_input(path);
    Table t;
    std::string line;
    if (!std::getline(is, line)) throw IoError("'" + path.string() + "' is empty");
    t.header = split(line);
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        auto cells = split(line);
        if (cells.size() != t.header.size()) {
            throw IoError("row " + std::to_string(t.rows.size() + 2) + " of '" + path.string() +
                          "' has " + std::to_string(cells.size()) + " fields, expected " +
                          std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

// Series files ------------------------------------------------------------

/// Writes t, y, ln_rv (and h_true when given), one row per day.
inline void write_series(const fs::path& path, const ObservedSeries& s,
                         const LatentPath* h_true = nullptr) {
    auto os = open_output(path);
    os << "t,y,ln_rv" << (h_true ? ",h_true" : "") << '\n';
    for (std::size_t t = 0; t < s.size(); ++t) {
        os << t + 1 << ',' << format_double(s.y[t]) << ',' << format_double(s.ln_rv[t]);
        if (h_true) os << ',' << format_double((*h_true)[t]);
        os << '\n';
    }
    close_checked(os, path);
}

/// Reads the y and ln_rv columns of any series file.
[[nodiscard]] inline ObservedSeries read_series(const fs::path& path) {
    const auto t = read_table(path);
    ObservedSeries s;
    s.y = t.numeric("y");
    s.ln_rv = t.numeric("ln_rv");
    return s;
}

[[nodiscard]] inline std::optional<LatentPath> read_h_true(const fs::path& path) {
    const auto t = read_table(path);
    if (!t.find("h_true")) return std::nullopt;
    return t.numeric("h_true");
}

inline void put_params(Metadata& meta, const std::string& prefix, const ModelParams& th) {
    meta.set(prefix + "phi", th.phi);
    meta.set(prefix + "mu", th.mu);
    meta.set(prefix + "xi", th.xi);
    meta.set(prefix + "sigma_eta2", th.sigma_eta2);
    meta.set(prefix + "sigma_u2", th.sigma_u2);
}

inline void write_dataset(const fs::path& path, const SyntheticDataset& ds, bool with_h_true) {
    write_series(path, ds.data, with_h_true ? &ds.h_true : nullptr);
    Metadata meta;
    meta.set("kind", std::string("synthetic"));
    meta.set("n", static_cast<std::int64_t>(ds.data.size()));
    meta.set("seed", ds.seed);
    put_params(meta, "true_", ds.theta_true);
    write_metadata(path, meta);
}

/// Series produced from realized variances: raw RV, c * RV and ln RV.
inline void write_rv_series(const fs::path& path, const RvSeries& s, double c) {
    auto os = open_output(path);
    os << "date,y,rv,c_rv,ln_rv\n";
    for (std::size_t t = 0; t < s.size(); ++t) {
        os << format_date(s.dates[t]) << ',' << format_double(s.y[t]) << ','
           << format_double(s.rv[t]) << ',' << format_double(c * s.rv[t]) << ','
           << format_double(std::log(s.rv[t])) << '\n';
    }
    close_checked(os, path);
}

// Dates and intraday input ------------------------------------------------

[[nodiscard]] inline Date parse_date(std::string_view s) {
    int y = 0;
    unsigned m = 0, d = 0;
    const std::string t = trim(s);
    auto parse_int = [&](std::size_t pos, std::size_t len, auto& out) {
        if (t.size() < pos + len) return false;
        const auto res = std::from_chars(t.data() + pos, t.data() + pos + len, out);
        return res.ec == std::errc() && res.ptr == t.data() + pos + len;
    };
    if (t.size() != 10 || t[4] != '-' || t[7] != '-' || !parse_int(0, 4, y) || !parse_int(5, 2, m) ||
        !parse_int(8, 2, d)) {
        throw IoError("cannot parse date '" + t + "'");
    }
    const Date date{std::chrono::year(y), std::chrono::month(m), std::chrono::day(d)};
    if (!date.ok()) throw IoError("invalid date '" + t + "'");
    return date;
}

struct Timestamp {
    Date date;
    double seconds = 0.0;
};

/// Accepts "YYYY-MM-DDTHH:MM:SS[.fff]" or the same with a space separator.
[[nodiscard]] inline Timestamp parse_timestamp(std::string_view s) {
    const std::string t = trim(s);
    if (t.size() < 19 || (t[10] != 'T' && t[10] != ' ') || t[13] != ':' || t[16] != ':') {
        throw IoError("cannot parse timestamp '" + t + "'");
    }
    Timestamp ts;
    ts.date = parse_date(std::string_view(t).substr(0, 10));
    int hh = 0, mm = 0;
    auto r1 = std::from_chars(t.data() + 11, t.data() + 13, hh);
    auto r2 = std::from_chars(t.data() + 14, t.data() + 16, mm);
    const auto sec = try_parse_double(std::string_view(t).substr(17));
    if (r1.ec != std::errc() || r2.ec != std::errc() || !sec || hh > 23 || mm > 59 || *sec < 0 ||
        *sec >= 61) {
        throw IoError("cannot parse timestamp '" + t + "'");
    }
    ts.seconds = hh * 3600.0 + mm * 60.0 + *sec;
    return ts;
}

/// Tick rows "timestamp,price" grouped by calendar date, in file order.
[[nodiscard]] inline std::vector<IntradayDay> parse_ticks(std::istream& is) {
    std::vector<IntradayDay> days;
    std::map<int, std::size_t> index;  // days since epoch -> position in `days`
    std::string line;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != 2) throw IoError("tick row " + std::to_string(row) + " needs 2 fields");
        if (row == 1 && !try_parse_double(cells[1])) continue;  // header
        const auto ts = parse_timestamp(cells[0]);
        const double price = parse_double(cells[1], "price");
        if (!(price > 0.0)) throw IoError("non-positive price on tick row " + std::to_string(row));
        const int key = std::chrono::sys_days(ts.date).time_since_epoch().count();
        auto [it, inserted] = index.try_emplace(key, days.size());
        if (inserted) days.push_back({ts.date, {}});
        days[it->second].ticks.push_back({ts.seconds, std::log(price)});
    }
    return days;
}

/// Daily rows "date,y,rv".
[[nodiscard]] inline std::vector<DailyRow> parse_daily(std::istream& is) {
    std::vector<DailyRow> rows;
    std::string line;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != 3) throw IoError("daily row " + std::to_string(row) + " needs 3 fields");
        if (row == 1 && !try_parse_double(cells[1])) continue;  // header
        rows.push_back({parse_date(cells[0]), parse_double(cells[1], "y"),
                        parse_double(cells[2], "rv")});
    }
    return rows;
}

// Chain files -------------------------------------------------------------

[[nodiscard]] inline std::vector<std::string> chain_header(std::span<const std::size_t> recorded) {
    std::vector<std::string> h{"iteration", "phi", "mu", "xi", "sigma_eta2", "sigma_u2"};
    for (auto i : recorded) h.push_back("h_" + std::to_string(i + 1));
    h.push_back("delta_h");
    h.push_back("accepted");
    return h;
}

[[nodiscard]] inline std::string format_record(const ChainRecord& r) {
    std::string s = std::to_string(r.iteration);
    for (double v : {r.theta.phi, r.theta.mu, r.theta.xi, r.theta.sigma_eta2, r.theta.sigma_u2}) {
        s += ',' + format_double(v);
    }
    for (double v : r.h_values) s += ',' + format_double(v);
    s += ',' + format_double(r.delta_h);
    s += r.accepted ? ",1" : ",0";
    return s;
}

[[nodiscard]] inline ChainRecord parse_record(const std::vector<std::string>& cells) {
    if (cells.size() < 8) throw IoError("chain row has too few fields");
    ChainRecord r;
    std::int64_t it = 0;
    const auto res = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), it);
    if (res.ec != std::errc()) throw IoError("bad iteration '" + cells[0] + "'");
    r.iteration = it;
    r.theta = {parse_double(cells[1], "phi"), parse_double(cells[2], "mu"),
               parse_double(cells[3], "xi"), parse_double(cells[4], "sigma_eta2"),
               parse_double(cells[5], "sigma_u2")};
    for (std::size_t i = 6; i + 2 < cells.size(); ++i) r.h_values.push_back(parse_double(cells[i], "h"));
    r.delta_h = parse_double(cells[cells.size() - 2], "delta_h");
    const auto& a = cells.back();
    if (a != "0" && a != "1") throw IoError("bad accepted flag '" + a + "'");
    r.accepted = a == "1";
    return r;
}

/// Appends chain rows to a file, writing the header for a fresh file.
class ChainWriter {
public:
    ChainWriter(const fs::path& path, std::span<const std::size_t> recorded, bool append = false)
        : path_(path) {
        os_.open(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
        if (!os_) throw IoError("cannot open '" + path.string() + "' for writing");
        if (!append) {
            const auto h = chain_header(recorded);
            for (std::size_t i = 0; i < h.size(); ++i) os_ << (i ? "," : "") << h[i];
            os_ << '\n';
        }
    }

    void operator()(const ChainRecord& r) {
        os_ << format_record(r) << '\n';
        if (!os_) throw IoError("write to '" + path_.string() + "' failed");
    }

    void close() { close_checked(os_, path_); }

private:
    fs::path path_;
    std::ofstream os_;
};

struct ChainTable {
    std::vector<std::string> header;
    std::vector<ChainRecord> records;
};

[[nodiscard]] inline ChainTable read_chain(const fs::path& path) {
    auto t = read_table(path);
    if (t.header.size() < 8 || t.header.front() != "iteration" || t.header.back() != "accepted") {
        throw IoError("'" + path.string() + "' is not a chain file");
    }
    ChainTable out;
    out.header = t.header;
    out.records.reserve(t.rows.size());
    for (const auto& row : t.rows) out.records.push_back(parse_record(row));
    return out;
}

/// Drops rows with iteration >= `limit`, keeping the header.
inline void truncate_chain(const fs::path& path, std::int64_t limit) {
    std::vector<std::string> keep;
    {
        auto is = open_input(path);
        std::string line;
        if (std::getline(is, line)) keep.push_back(line);
        while (std::getline(is, line)) {
            if (trim(line).empty()) continue;
            const auto comma = line.find(',');
            std::int64_t it = 0;
            std::from_chars(line.data(), line.data() + comma, it);
            if (it < limit) keep.push_back(line);
        }
    }
    auto os = open_output(path);
    for (const auto& l : keep) os << l << '\n';
    close_checked(os, path);
}

/// Chain columns (parameters, recorded latent values, delta_h) by name.
[[nodiscard]] inline std::vector<NamedColumn> chain_columns(const ChainTable& chain) {
    std::vector<NamedColumn> cols;
    for (std::size_t c = 1; c + 1 < chain.header.size(); ++c) cols.push_back({chain.header[c], {}});
    for (const auto& r : chain.records) {
        std::size_t c = 0;
        for (double v : {r.theta.phi, r.theta.mu, r.theta.xi, r.theta.sigma_eta2, r.theta.sigma_u2}) {
            cols[c++].values.push_back(v);
        }
        for (double v : r.h_values) cols[c++].values.push_back(v);
        cols[c].values.push_back(r.delta_h);
    }
    return cols;
}

// Reports -----------------------------------------------------------------

inline std::string sanitize(std::string s) {
    for (char& ch : s) {
        if (ch == ',' || ch == '\n') ch = ';';
    }
    return s;
}

inline void write_summary(const fs::path& path, std::span<const ColumnSummary> rows) {
    auto os = open_output(path);
    os << "parameter,mean,sd,two_tau_int,two_tau_int_error,window,note\n";
    for (const auto& r : rows) {
        os << r.name << ',' << format_double(r.mean) << ',' << format_double(r.sd) << ',';
        if (r.act) {
            os << format_double(r.act->two_tau_int) << ',' << format_double(r.act->error) << ','
               << r.act->window;
        } else {
            os << ",,";
        }
        os << ',' << sanitize(r.note) << '\n';
    }
    close_checked(os, path);
}

inline void write_scan(const fs::path& path, const ScanReport& report) {
    auto os = open_output(path);
    os << "step_size,n_steps,acceptance,rms_dh,efficiency,warning\n";
    for (const auto& r : report.rows) {
        os << format_double(r.step_size) << ',' << r.n_steps << ',' << format_double(r.acceptance)
           << ',' << format_double(r.rms_dh) << ',' << format_double(r.efficiency) << ','
           << sanitize(r.warning) << '\n';
    }
    close_checked(os, path);
}

[[nodiscard]] inline std::vector<ScanRow> read_scan(const fs::path& path) {
    const auto t = read_table(path);
    std::vector<ScanRow> rows;
    const auto step = t.numeric("step_size");
    const auto nst = t.numeric("n_steps");
    const auto acc = t.numeric("acceptance");
    const auto rms = t.numeric("rms_dh");
    const auto eff = t.numeric("efficiency");
    const auto warn = t.column("warning");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        rows.push_back({step[i], static_cast<int>(nst[i]), acc[i], rms[i], eff[i], t.rows[i][warn]});
    }
    return rows;
}

// Checkpoints -------------------------------------------------------------

inline constexpr std::string_view kCheckpointMagic = "rsvhmc-checkpoint-1";

inline void save_checkpoint(const fs::path& path, const ChainState& s) {
    // Written to a sibling file first so an interruption never leaves a torn checkpoint.
    const fs::path tmp = path.string() + ".tmp";
    {
        auto os = open_output(tmp);
        os << kCheckpointMagic << '\n';
        os << "iteration " << s.iteration << '\n';
        os << "counters " << s.kept << ' ' << s.accepted_kept << ' ' << s.accepted_total << ' '
           << s.failures << '\n';
        os << "theta " << format_double(s.theta.phi) << ' ' << format_double(s.theta.mu) << ' '
           << format_double(s.theta.xi) << ' ' << format_double(s.theta.sigma_eta2) << ' '
           << format_double(s.theta.sigma_u2) << '\n';
        os << "rng ";
        s.rng.save(os);
        os << '\n';
        os << "h " << s.h.size();
        for (double v : s.h) os << ' ' << format_double(v);
        os << '\n';
        if (s.pending) {
            os << "pending " << format_record(*s.pending) << '\n';
        } else {
            os << "pending -\n";
        }
        close_checked(os, tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

[[nodiscard]] inline ChainState load_checkpoint(const fs::path& path) {
    auto is = open_input(path);
    std::string line;
    std::getline(is, line);
    if (line != kCheckpointMagic) throw IoError("'" + path.string() + "' is not a checkpoint");
    ChainState s;
    auto expect = [&](std::string_view key) -> std::istringstream {
        if (!std::getline(is, line)) throw IoError("truncated checkpoint");
        std::istringstream ls(line);
        std::string k;
        ls >> k;
        if (k != key) throw IoError("checkpoint: expected '" + std::string(key) + "'");
        return ls;
    };
    auto read_num = [](std::istringstream& ls) {
        std::string tok;
        ls >> tok;
        return parse_double(tok, "checkpoint value");
    };
    {
        auto ls = expect("iteration");
        ls >> s.iteration;
    }
    {
        auto ls = expect("counters");
        ls >> s.kept >> s.accepted_kept >> s.accepted_total >> s.failures;
        if (!ls) throw IoError("checkpoint: bad counters");
    }
    {
        auto ls = expect("theta");
        s.theta = {read_num(ls), read_num(ls), read_num(ls), read_num(ls), read_num(ls)};
    }
    {
        auto ls = expect("rng");
        s.rng.load(ls);
    }
    {
        auto ls = expect("h");
        std::size_t n = 0;
        ls >> n;
        s.h.resize(n);
        for (auto& v : s.h) v = read_num(ls);
    }
    {
        auto ls = expect("pending");
        std::string rest;
        ls >> rest;
        if (rest != "-") s.pending = parse_record(split(rest));
    }
    return s;
}

}  // namespace rsvhmc::io
