#include "bess/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "bess/binio.hpp"
#include "bess/csvio.hpp"

namespace bess {

namespace {

constexpr std::string_view kRegionNames[] = {"NSW1", "QLD1", "SA1", "VIC1", "TAS1"};

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line,
                             const std::string& what) {
    throw ParseError(path.string() + ":" + std::to_string(line) + ": " + what);
}

struct CsvFile {
    std::ifstream in;
    std::string line;
    std::size_t line_no = 0;

    explicit CsvFile(const std::filesystem::path& path) : in(path) {
        if (!in) throw ParseError("cannot open " + path.string());
    }

    bool next() {
        while (std::getline(in, line)) {
            ++line_no;
            if (!trim(line).empty()) return true;
        }
        return false;
    }
};

// Locates the canonical columns by name; extra columns (e.g. frequency
// response or cumulative price feeds) are ignored.
std::vector<std::size_t> header_indices(const std::filesystem::path& path, CsvFile& file,
                                        std::span<const std::string_view> wanted) {
    if (!file.next()) throw ParseError(path.string() + ": empty file");
    const auto cols = split_csv(file.line);
    std::vector<std::size_t> idx;
    for (const auto name : wanted) {
        const auto it = std::find_if(cols.begin(), cols.end(),
                                     [&](std::string_view c) { return trim(c) == name; });
        if (it == cols.end()) {
            throw ParseError(path.string() + ": header missing column '" + std::string(name) +
                             "'");
        }
        idx.push_back(static_cast<std::size_t>(it - cols.begin()));
    }
    return idx;
}

Region row_region(const std::filesystem::path& path, const CsvFile& file, std::string_view field) {
    const auto r = parse_region(trim(field));
    if (!r) parse_fail(path, file.line_no, "unknown region '" + std::string(trim(field)) + "'");
    return *r;
}

Timestamp row_time(const std::filesystem::path& path, const CsvFile& file,
                   std::string_view field, const char* what) {
    const auto t = parse_timestamp(trim(field));
    if (!t) parse_fail(path, file.line_no, std::string("bad ") + what + " '" +
                                               std::string(trim(field)) + "'");
    return *t;
}

double row_price(const std::filesystem::path& path, const CsvFile& file, std::string_view field) {
    double v;
    if (!parse_double(field, v) || !std::isfinite(v)) {
        parse_fail(path, file.line_no, "bad price '" + std::string(trim(field)) + "'");
    }
    return v;
}

}  // namespace

std::optional<Region> parse_region(std::string_view name) {
    for (std::size_t i = 0; i < std::size(kRegionNames); ++i) {
        if (kRegionNames[i] == name) return static_cast<Region>(i);
    }
    return std::nullopt;
}

std::string_view region_name(Region r) { return kRegionNames[static_cast<std::size_t>(r)]; }

std::optional<double> AlignedDataset::actual_price(Timestamp t) const {
    const auto it = std::lower_bound(
        settlements.begin(), settlements.end(), t,
        [](const SettlementRecord& r, Timestamp ts) { return r.settlement_time < ts; });
    if (it == settlements.end() || it->settlement_time != t) return std::nullopt;
    return it->actual_price;
}

std::span<const ForecastRecord> AlignedDataset::forecasts_for(Timestamp target) const {
    const auto lo = std::lower_bound(
        forecasts.begin(), forecasts.end(), target,
        [](const ForecastRecord& r, Timestamp ts) { return r.settlement_time < ts; });
    auto hi = lo;
    while (hi != forecasts.end() && hi->settlement_time == target) ++hi;
    return {lo, hi};
}

std::size_t AlignedDataset::distinct_days() const {
    std::size_t n = 0;
    Date prev{INT32_MIN};
    for (const auto& s : settlements) {
        const Date d = date_of(s.settlement_time);
        if (d != prev) {
            ++n;
            prev = d;
        }
    }
    return n;
}

std::vector<SettlementRecord> parse_dispatch(const std::filesystem::path& path, Region region) {
    CsvFile file(path);
    static constexpr std::string_view wanted[] = {"region", "settlement_time", "price"};
    const auto idx = header_indices(path, file, wanted);

    std::vector<SettlementRecord> out;
    while (file.next()) {
        const auto cols = split_csv(file.line);
        if (cols.size() <= *std::max_element(idx.begin(), idx.end())) {
            parse_fail(path, file.line_no, "too few columns");
        }
        const Region r = row_region(path, file, cols[idx[0]]);
        if (r != region) continue;
        const Timestamp t = row_time(path, file, cols[idx[1]], "settlement_time");
        if (minute_of_hour(t) % 5 != 0) {
            parse_fail(path, file.line_no, "settlement_time not on a 5-minute boundary");
        }
        out.push_back({r, t, row_price(path, file, cols[idx[2]])});
    }
    return out;
}

std::vector<SettlementRecord> resample_to_30min(std::vector<SettlementRecord> records) {
    const bool already_30min = std::all_of(records.begin(), records.end(), [](const auto& r) {
        return minute_of_hour(r.settlement_time) % 30 == 0;
    });
    if (already_30min) return records;

    std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
        return a.settlement_time < b.settlement_time;
    });

    std::vector<SettlementRecord> out;
    std::size_t i = 0;
    while (i < records.size()) {
        const std::int64_t window = records[i].settlement_time.mins / kPeriodMinutes;
        double sum = 0.0;
        std::size_t count = 0;
        std::uint32_t offsets_seen = 0;
        while (i < records.size() && records[i].settlement_time.mins / kPeriodMinutes == window) {
            const auto offset =
                static_cast<std::uint32_t>((records[i].settlement_time.mins % kPeriodMinutes) / 5);
            offsets_seen |= 1u << offset;
            sum += records[i].actual_price;
            ++count;
            ++i;
        }
        if (count != 6 || offsets_seen != 0x3f) {
            throw DataError("incomplete 5-minute window at " +
                            format_timestamp(Timestamp{window * kPeriodMinutes}) + " (" +
                            std::to_string(count) + " rows)");
        }
        out.push_back({records[i - 1].region, Timestamp{window * kPeriodMinutes}, sum / 6.0});
    }
    return out;
}

std::vector<ForecastRecord> parse_predispatch(const std::filesystem::path& path, Region region,
                                              PredispatchStats* stats) {
    CsvFile file(path);
    static constexpr std::string_view wanted[] = {"region", "settlement_time", "made_time",
                                                  "predicted_price"};
    const auto idx = header_indices(path, file, wanted);

    PredispatchStats local;
    std::vector<ForecastRecord> out;
    while (file.next()) {
        const auto cols = split_csv(file.line);
        if (cols.size() <= *std::max_element(idx.begin(), idx.end())) {
            parse_fail(path, file.line_no, "too few columns");
        }
        const Region r = row_region(path, file, cols[idx[0]]);
        if (r != region) continue;
        const Timestamp st = row_time(path, file, cols[idx[1]], "settlement_time");
        const Timestamp mt = row_time(path, file, cols[idx[2]], "made_time");
        const double price = row_price(path, file, cols[idx[3]]);
        if (minute_of_hour(st) % 30 != 0) {
            parse_fail(path, file.line_no, "settlement_time not on a half-hour boundary");
        }
        if (mt > st) {
            ++local.rows_rejected_inverted;
            continue;
        }
        const std::int64_t ahead_mins = st.mins - mt.mins;
        if (ahead_mins % 30 != 0) {
            parse_fail(path, file.line_no, "forecast horizon not a multiple of 30 minutes");
        }
        if (ahead_mins < 30) {
            ++local.rows_discarded_short_horizon;
            continue;
        }
        out.push_back({r, st, mt, static_cast<double>(ahead_mins) / 60.0, price});
        ++local.rows_kept;
    }
    if (stats) *stats = local;
    return out;
}

AlignedDataset align(std::vector<SettlementRecord> settlements,
                     std::vector<ForecastRecord> forecasts, Region region) {
    if (settlements.empty()) throw DataError("align: no settlement records");
    if (forecasts.empty()) throw DataError("align: no forecast records");
    for (const auto& s : settlements) {
        if (s.region != region) throw DataError("align: settlement region mismatch");
        if (minute_of_hour(s.settlement_time) % 30 != 0) {
            throw DataError("align: settlement at " + format_timestamp(s.settlement_time) +
                            " is not on a half-hour boundary");
        }
    }
    for (const auto& f : forecasts) {
        if (f.region != region) throw DataError("align: forecast region mismatch");
    }

    std::sort(settlements.begin(), settlements.end(),
              [](const auto& a, const auto& b) { return a.settlement_time < b.settlement_time; });
    const auto dup = std::adjacent_find(
        settlements.begin(), settlements.end(),
        [](const auto& a, const auto& b) { return a.settlement_time == b.settlement_time; });
    if (dup != settlements.end()) {
        throw DataError("align: duplicate settlement at " +
                        format_timestamp(dup->settlement_time));
    }

    std::sort(forecasts.begin(), forecasts.end(), [](const auto& a, const auto& b) {
        if (a.settlement_time != b.settlement_time) return a.settlement_time < b.settlement_time;
        return a.made_time < b.made_time;
    });

    AlignedDataset ds;
    ds.region = region;
    ds.settlements = std::move(settlements);
    ds.forecasts = std::move(forecasts);
    for (const auto& f : ds.forecasts) {
        if (!ds.has_settlement(f.settlement_time)) ++ds.unmatched_forecasts;
    }
    return ds;
}

// Cache layout: "BESS" magic, u32 version, u8 region, u64 counts, raw records,
// then an FNV-1a checksum over everything after the magic.
namespace {

constexpr char kMagic[4] = {'B', 'E', 'S', 'S'};
constexpr std::uint32_t kCacheVersion = 1;

}  // namespace

void cache_write(const AlignedDataset& dataset, const std::filesystem::path& path) {
    ByteSink sink;
    sink.put(kCacheVersion);
    sink.put(static_cast<std::uint8_t>(dataset.region));
    sink.put(static_cast<std::uint64_t>(dataset.settlements.size()));
    sink.put(static_cast<std::uint64_t>(dataset.forecasts.size()));
    sink.put(static_cast<std::uint64_t>(dataset.unmatched_forecasts));
    for (const auto& s : dataset.settlements) {
        sink.put(s.settlement_time.mins);
        sink.put(s.actual_price);
    }
    for (const auto& f : dataset.forecasts) {
        sink.put(f.settlement_time.mins);
        sink.put(f.made_time.mins);
        sink.put(f.predicted_price);
    }
    write_checksummed(path, kMagic, sink);
}

AlignedDataset cache_read(const std::filesystem::path& path) {
    const auto raw = read_checksummed(path, kMagic);
    ByteSource src{raw.data(), raw.data() + raw.size()};
    const auto version = src.get<std::uint32_t>();
    if (version != kCacheVersion) {
        throw CacheError("unsupported cache version " + std::to_string(version));
    }
    AlignedDataset ds;
    const auto region_raw = src.get<std::uint8_t>();
    if (region_raw >= std::size(kRegionNames)) throw CacheError("bad region byte");
    ds.region = static_cast<Region>(region_raw);
    const auto n_set = src.get<std::uint64_t>();
    const auto n_fc = src.get<std::uint64_t>();
    ds.unmatched_forecasts = src.get<std::uint64_t>();
    ds.settlements.reserve(n_set);
    for (std::uint64_t i = 0; i < n_set; ++i) {
        SettlementRecord s;
        s.region = ds.region;
        s.settlement_time.mins = src.get<std::int64_t>();
        s.actual_price = src.get<double>();
        ds.settlements.push_back(s);
    }
    ds.forecasts.reserve(n_fc);
    for (std::uint64_t i = 0; i < n_fc; ++i) {
        ForecastRecord f;
        f.region = ds.region;
        f.settlement_time.mins = src.get<std::int64_t>();
        f.made_time.mins = src.get<std::int64_t>();
        f.hours_ahead = static_cast<double>(f.settlement_time.mins - f.made_time.mins) / 60.0;
        f.predicted_price = src.get<double>();
        ds.forecasts.push_back(f);
    }
    if (!src.exhausted()) throw CacheError("trailing bytes in " + path.string());
    return ds;
}

}  // namespace bess
