#pragma once

// Cache access-time model (analytic or back-annotated table), cycle quantization
// and the storage-bit area proxy.

#include <knee_dse/cache.hpp>
#include <knee_dse/errors.hpp>
#include <knee_dse/trace.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace knee_dse {

/// access_ns = t0 + a*log2(S/4K) + b*(sqrt(S/4K) - 1) + c*log2(assoc), floored at t0.
/// Defaults are a non-negative least-squares fit to 90nm CACTI-class access
/// times; see docs/timing_calibration.md.
struct AnalyticCoefficients
{
    double t0 = 0.49393303;
    double a = 0.0;
    double b = 0.16056572;
    double c = 0.08977024;

    friend bool operator==(const AnalyticCoefficients&, const AnalyticCoefficients&) = default;
};

struct TimingKey
{
    CacheLabel label = CacheLabel::L1D;
    std::uint64_t size_bytes = 0;
    std::uint64_t line_bytes = 0;
    std::uint64_t assoc = 0;

    static TimingKey of(const CacheGeometry& g) { return {g.label, g.size_bytes, g.line_bytes, g.assoc}; }

    std::string describe() const
    {
        return std::string(to_string(label)) + " size=" + std::to_string(size_bytes) +
               " line=" + std::to_string(line_bytes) + " assoc=" + std::to_string(assoc);
    }

    friend auto operator<=>(const TimingKey&, const TimingKey&) = default;
};

struct TimingEntry
{
    double access_ns = 0.0;
    std::optional<double> area_mm2;

    friend bool operator==(const TimingEntry&, const TimingEntry&) = default;
};

enum class TimingMode : std::uint8_t { Analytic, Table };

class TimingModel
{
public:
    static constexpr double kDefaultCycleNs = 1.0;
    static constexpr unsigned kDefaultTechNodeNm = 90;

    TimingModel() : TimingModel(analytic()) {}

    static TimingModel analytic(const AnalyticCoefficients& k = {}, double cycle_ns = kDefaultCycleNs)
    {
        if (!(k.t0 > 0.0) || k.a < 0.0 || k.b < 0.0 || k.c < 0.0 || !(k.a + k.b > 0.0))
            throw ValidationError("analytic timing needs t0 > 0, a,b,c >= 0 and a,b not both zero");
        TimingModel m(TimingMode::Analytic, cycle_ns);
        m.coeffs_ = k;
        return m;
    }

    static TimingModel table(std::map<TimingKey, TimingEntry> entries, double cycle_ns = kDefaultCycleNs)
    {
        for (const auto& [key, e] : entries)
            if (!(e.access_ns > 0.0))
                throw ValidationError("non-positive access time for " + key.describe());
        TimingModel m(TimingMode::Table, cycle_ns);
        m.table_ = std::move(entries);
        return m;
    }

    TimingMode mode() const { return mode_; }
    double cycle_ns() const { return cycle_ns_; }
    unsigned tech_node_nm() const { return tech_node_nm_; }
    const AnalyticCoefficients& coefficients() const { return coeffs_; }
    const std::map<TimingKey, TimingEntry>& entries() const { return table_; }

    TimingModel with_cycle_ns(double ns) const
    {
        TimingModel m = *this;
        m.cycle_ns_ = checked_cycle(ns);
        return m;
    }

    double access_time_ns(const CacheGeometry& g) const
    {
        g.validate();
        if (mode_ == TimingMode::Table)
            return lookup(g).access_ns;
        const double r = static_cast<double>(g.size_bytes) / 4096.0;
        const double t = coeffs_.t0 + coeffs_.a * std::log2(r) + coeffs_.b * (std::sqrt(r) - 1.0) +
                         coeffs_.c * std::log2(static_cast<double>(g.assoc));
        return std::max(t, coeffs_.t0);
    }

    /// ceil(ns / cycle_ns), at least one cycle.
    unsigned cycles_for(double ns) const
    {
        if (!(ns > 0.0))
            throw ValidationError("cycles_for needs a positive delay");
        const double c = std::ceil(ns / cycle_ns_);
        return c < 1.0 ? 1u : static_cast<unsigned>(c);
    }

    /// Table-mode area for `g`, when the calibration row carries one.
    std::optional<double> area_mm2(const CacheGeometry& g) const
    {
        if (mode_ != TimingMode::Table)
            return std::nullopt;
        const auto it = table_.find(TimingKey::of(g));
        return it == table_.end() ? std::nullopt : it->second.area_mm2;
    }

    const TimingEntry& lookup(const CacheGeometry& g) const
    {
        const auto it = table_.find(TimingKey::of(g));
        if (it == table_.end())
            throw CalibrationError("uncalibrated geometry: " + TimingKey::of(g).describe());
        return it->second;
    }

private:
    TimingModel(TimingMode mode, double cycle_ns) : mode_(mode), cycle_ns_(checked_cycle(cycle_ns)) {}

    static double checked_cycle(double ns)
    {
        if (!(ns > 0.0))
            throw ValidationError("cycle_ns must be > 0");
        return ns;
    }

    TimingMode mode_ = TimingMode::Analytic;
    double cycle_ns_ = kDefaultCycleNs;
    unsigned tech_node_nm_ = kDefaultTechNodeNm;
    AnalyticCoefficients coeffs_;
    std::map<TimingKey, TimingEntry> table_;
};

inline double access_time_ns(const TimingModel& m, const CacheGeometry& g) { return m.access_time_ns(g); }
inline unsigned cycles_for(const TimingModel& m, double ns) { return m.cycles_for(ns); }

/// Parses the calibration CSV (`label,size_bytes,line_bytes,assoc,access_ns,area_mm2`).
/// An empty stream yields an empty table.
inline TimingModel load_timing_table(std::istream& in, double cycle_ns = TimingModel::kDefaultCycleNs)
{
    static constexpr std::string_view kHeader = "label,size_bytes,line_bytes,assoc,access_ns,area_mm2";
    std::map<TimingKey, TimingEntry> table;
    std::string raw;
    std::size_t line_no = 0;
    bool header_seen = false;

    const auto to_u64 = [&](std::string_view s, const char* what) {
        auto v = detail::parse_u64(detail::trim(s), 10);
        if (!v)
            throw ParseError(line_no, std::string("bad ") + what + " '" + std::string(s) + "'");
        return *v;
    };
    const auto to_double = [&](std::string_view s, const char* what) {
        s = detail::trim(s);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
            throw ParseError(line_no, std::string("bad ") + what + " '" + std::string(s) + "'");
        return v;
    };

    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = detail::trim(raw);
        if (line.empty())
            continue;
        if (!header_seen) {
            if (line != kHeader)
                throw ParseError(line_no, "expected header '" + std::string(kHeader) + "'");
            header_seen = true;
            continue;
        }
        std::vector<std::string_view> f;
        std::size_t pos = 0;
        while (true) {
            const auto comma = line.find(',', pos);
            f.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
            if (comma == std::string_view::npos)
                break;
            pos = comma + 1;
        }
        if (f.size() != 6)
            throw ParseError(line_no, "expected 6 fields, got " + std::to_string(f.size()));

        TimingKey key;
        try {
            key.label = parse_cache_label(detail::trim(f[0]));
        } catch (const ValidationError& e) {
            throw ParseError(line_no, e.what());
        }
        key.size_bytes = to_u64(f[1], "size_bytes");
        key.line_bytes = to_u64(f[2], "line_bytes");
        key.assoc = to_u64(f[3], "assoc");
        try {
            CacheGeometry{key.size_bytes, key.line_bytes, key.assoc, key.label}.validate();
        } catch (const ValidationError& e) {
            throw ParseError(line_no, e.what());
        }

        TimingEntry entry;
        entry.access_ns = to_double(f[4], "access_ns");
        if (!(entry.access_ns > 0.0))
            throw ParseError(line_no, "access_ns must be > 0");
        if (!detail::trim(f[5]).empty())
            entry.area_mm2 = to_double(f[5], "area_mm2");

        if (!table.emplace(key, entry).second)
            throw ParseError(line_no, "duplicate key " + key.describe());
    }
    return TimingModel::table(std::move(table), cycle_ns);
}

inline TimingModel load_timing_table(std::string_view text, double cycle_ns = TimingModel::kDefaultCycleNs)
{
    std::istringstream in{std::string(text)};
    return load_timing_table(in, cycle_ns);
}

/// Fills the hierarchy's L1/L2 latencies from the model. Both L1s share one
/// latency, taken from the slower of the two; memory latency is left as is.
inline HierarchyConfig with_model_latencies(HierarchyConfig h, const TimingModel& m)
{
    h.l1_latency_cycles = m.cycles_for(std::max(m.access_time_ns(h.l1i), m.access_time_ns(h.l1d)));
    h.l2_latency_cycles = m.cycles_for(m.access_time_ns(h.l2));
    return h;
}

struct AreaProxy
{
    /// Data + tag/status bits of all caches plus register-file bits.
    std::uint64_t bits = 0;
    /// Sum of table areas when every cache has one.
    std::optional<double> mm2;

    friend bool operator==(const AreaProxy&, const AreaProxy&) = default;
    friend auto operator<=>(const AreaProxy& a, const AreaProxy& b) { return a.bits <=> b.bits; }
};

inline constexpr unsigned kAddressBits = 64;
inline constexpr unsigned kStatusBitsPerLine = 2;  // valid + dirty

inline std::uint64_t cache_storage_bits(const CacheGeometry& g)
{
    const auto index_bits = static_cast<unsigned>(std::countr_zero(g.sets()));
    const auto offset_bits = static_cast<unsigned>(std::countr_zero(g.line_bytes));
    const std::uint64_t per_line_meta = kAddressBits - index_bits - offset_bits + kStatusBitsPerLine;
    return g.size_bytes * 8 + g.lines() * per_line_meta;
}

inline AreaProxy area_proxy(const HierarchyConfig& h, unsigned phys_regs, unsigned reg_width_bits)
{
    AreaProxy a;
    a.bits = cache_storage_bits(h.l1i) + cache_storage_bits(h.l1d) + cache_storage_bits(h.l2) +
             static_cast<std::uint64_t>(phys_regs) * reg_width_bits;
    return a;
}

inline AreaProxy area_proxy(const HierarchyConfig& h, unsigned phys_regs, unsigned reg_width_bits,
                            const TimingModel& model)
{
    AreaProxy a = area_proxy(h, phys_regs, reg_width_bits);
    const auto i = model.area_mm2(h.l1i);
    const auto d = model.area_mm2(h.l1d);
    const auto l2 = model.area_mm2(h.l2);
    if (i && d && l2)
        a.mm2 = *i + *d + *l2;
    return a;
}

} // namespace knee_dse
