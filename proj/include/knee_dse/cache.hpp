#pragma once

// Two-level cache hierarchy: split L1I/L1D over a unified L2, LRU replacement,
// write-back + write-allocate, non-inclusive fill on miss, serial L2 lookup.

#include <knee_dse/errors.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace knee_dse {

enum class CacheLabel : std::uint8_t { L1I, L1D, L2 };

inline std::string_view to_string(CacheLabel l)
{
    switch (l) {
    case CacheLabel::L1I: return "L1I";
    case CacheLabel::L1D: return "L1D";
    case CacheLabel::L2: return "L2";
    }
    return "?";
}

inline CacheLabel parse_cache_label(std::string_view s)
{
    if (s == "L1I")
        return CacheLabel::L1I;
    if (s == "L1D")
        return CacheLabel::L1D;
    if (s == "L2")
        return CacheLabel::L2;
    throw ValidationError("unknown cache label '" + std::string(s) + "'");
}

struct CacheGeometry
{
    std::uint64_t size_bytes = 0;
    std::uint64_t line_bytes = 64;
    std::uint64_t assoc = 1;
    CacheLabel label = CacheLabel::L1D;

    std::uint64_t lines() const { return size_bytes / line_bytes; }
    std::uint64_t sets() const { return size_bytes / (line_bytes * assoc); }

    void validate() const
    {
        const std::string who(to_string(label));
        if (size_bytes == 0 || !std::has_single_bit(size_bytes))
            throw ValidationError(who + " size_bytes must be a power of two, got " + std::to_string(size_bytes));
        if (line_bytes < 8 || !std::has_single_bit(line_bytes))
            throw ValidationError(who + " line_bytes must be a power of two >= 8, got " + std::to_string(line_bytes));
        if (line_bytes > size_bytes)
            throw ValidationError(who + " line_bytes exceeds size_bytes");
        if (assoc == 0 || assoc > size_bytes / line_bytes)
            throw ValidationError(who + " assoc must be in 1..size/line, got " + std::to_string(assoc));
        const auto s = size_bytes / line_bytes;
        if (s % assoc != 0 || !std::has_single_bit(s / assoc))
            throw ValidationError(who + " set count size/(line*assoc) must be a power of two");
    }

    friend bool operator==(const CacheGeometry&, const CacheGeometry&) = default;
};

struct HierarchyConfig
{
    CacheGeometry l1i{32 * 1024, 64, 4, CacheLabel::L1I};
    CacheGeometry l1d{32 * 1024, 64, 4, CacheLabel::L1D};
    CacheGeometry l2{256 * 1024, 64, 8, CacheLabel::L2};
    unsigned l1_latency_cycles = 1;
    unsigned l2_latency_cycles = 4;
    unsigned mem_latency_cycles = 100;
    // Write policy is fixed: write-back, write-allocate.

    void validate() const
    {
        l1i.validate();
        l1d.validate();
        l2.validate();
        if (l1i.label != CacheLabel::L1I || l1d.label != CacheLabel::L1D || l2.label != CacheLabel::L2)
            throw ValidationError("hierarchy geometries must be labelled L1I, L1D, L2");
        if (l2.size_bytes < std::max(l1i.size_bytes, l1d.size_bytes))
            throw ValidationError("L2 size must be >= both L1 sizes");
        if (l1_latency_cycles < 1)
            throw ValidationError("l1_latency_cycles must be >= 1");
        if (!(l1_latency_cycles <= l2_latency_cycles && l2_latency_cycles <= mem_latency_cycles))
            throw ValidationError("latencies must satisfy l1 <= l2 <= mem (got " + std::to_string(l1_latency_cycles) +
                                  ", " + std::to_string(l2_latency_cycles) + ", " +
                                  std::to_string(mem_latency_cycles) + ")");
    }

    friend bool operator==(const HierarchyConfig&, const HierarchyConfig&) = default;
};

enum class AccessKind : std::uint8_t { IFetch, Load, Store };
enum class ServedBy : std::uint8_t { L1, L2, Mem };

struct Eviction
{
    CacheLabel level;
    std::uint64_t line_addr;  ///< byte address of the victim line
    bool dirty;

    friend bool operator==(const Eviction&, const Eviction&) = default;
};

struct AccessOutcome
{
    ServedBy level_served = ServedBy::L1;
    unsigned latency_cycles = 0;
    std::vector<Eviction> evictions;
};

struct LevelStats
{
    std::uint64_t accesses = 0;
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t writebacks = 0;

    friend bool operator==(const LevelStats&, const LevelStats&) = default;
};

struct CacheStats
{
    LevelStats l1i;
    LevelStats l1d;
    LevelStats l2;

    friend bool operator==(const CacheStats&, const CacheStats&) = default;
};

/// One set-associative LRU level. Lines are kept per set in MRU-first order.
class CacheLevel
{
public:
    struct Probe
    {
        bool hit = false;
        bool evicted = false;
        std::uint64_t victim_addr = 0;
        bool victim_dirty = false;
    };

    explicit CacheLevel(const CacheGeometry& g)
        : geom_((g.validate(), g)),
          offset_bits_(static_cast<unsigned>(std::countr_zero(g.line_bytes))),
          set_mask_(g.sets() - 1),
          ways_(g.assoc),
          sets_(g.sets())
    {
        for (auto& s : sets_)
            s.reserve(ways_);
    }

    const CacheGeometry& geometry() const { return geom_; }

    /// Looks up `addr`; on a miss the line is allocated, evicting the LRU way.
    Probe access(std::uint64_t addr, bool write)
    {
        const std::uint64_t line = addr >> offset_bits_;
        auto& set = sets_[line & set_mask_];
        Probe p;
        for (std::size_t i = 0; i < set.size(); ++i) {
            if (set[i].line == line) {
                Way w = set[i];
                w.dirty = w.dirty || write;
                set.erase(set.begin() + static_cast<std::ptrdiff_t>(i));
                set.insert(set.begin(), w);
                p.hit = true;
                return p;
            }
        }
        insert_mru(set, Way{line, write}, p);
        return p;
    }

    /// Accepts a written-back line without touching recency of resident lines:
    /// a resident copy is marked dirty, otherwise the line is installed dirty.
    Probe absorb_writeback(std::uint64_t addr)
    {
        const std::uint64_t line = addr >> offset_bits_;
        auto& set = sets_[line & set_mask_];
        Probe p;
        for (auto& w : set) {
            if (w.line == line) {
                w.dirty = true;
                p.hit = true;
                return p;
            }
        }
        insert_mru(set, Way{line, true}, p);
        return p;
    }

    bool contains(std::uint64_t addr) const
    {
        const std::uint64_t line = addr >> offset_bits_;
        for (const auto& w : sets_[line & set_mask_])
            if (w.line == line)
                return true;
        return false;
    }

private:
    struct Way
    {
        std::uint64_t line;
        bool dirty;
    };

    void insert_mru(std::vector<Way>& set, Way w, Probe& p)
    {
        if (set.size() == ways_) {
            const Way victim = set.back();
            set.pop_back();
            p.evicted = true;
            p.victim_addr = victim.line << offset_bits_;
            p.victim_dirty = victim.dirty;
        }
        set.insert(set.begin(), w);
    }

    CacheGeometry geom_;
    unsigned offset_bits_;
    std::uint64_t set_mask_;
    std::size_t ways_;
    std::vector<std::vector<Way>> sets_;
};

class CacheHierarchy
{
public:
    explicit CacheHierarchy(const HierarchyConfig& cfg) : cfg_((cfg.validate(), cfg)), l1i_(cfg.l1i), l1d_(cfg.l1d), l2_(cfg.l2) {}

    const HierarchyConfig& config() const { return cfg_; }
    const CacheStats& stats() const { return stats_; }

    AccessOutcome access(std::uint64_t addr, AccessKind kind)
    {
        AccessOutcome out;
        const bool is_fetch = kind == AccessKind::IFetch;
        CacheLevel& l1 = is_fetch ? l1i_ : l1d_;
        LevelStats& l1s = is_fetch ? stats_.l1i : stats_.l1d;
        const CacheLabel l1_label = is_fetch ? CacheLabel::L1I : CacheLabel::L1D;

        ++l1s.accesses;
        const auto p1 = l1.access(addr, kind == AccessKind::Store);
        if (p1.hit) {
            ++l1s.hits;
            out.level_served = ServedBy::L1;
            out.latency_cycles = cfg_.l1_latency_cycles;
            return out;
        }
        ++l1s.misses;

        ++stats_.l2.accesses;
        const auto p2 = l2_.access(addr, false);
        if (p2.hit) {
            ++stats_.l2.hits;
            out.level_served = ServedBy::L2;
            out.latency_cycles = cfg_.l1_latency_cycles + cfg_.l2_latency_cycles;
        } else {
            ++stats_.l2.misses;
            out.level_served = ServedBy::Mem;
            out.latency_cycles = cfg_.l1_latency_cycles + cfg_.l2_latency_cycles + cfg_.mem_latency_cycles;
            record_l2_victim(p2, out);
        }

        if (p1.evicted) {
            out.evictions.push_back({l1_label, p1.victim_addr, p1.victim_dirty});
            if (p1.victim_dirty) {
                ++l1s.writebacks;
                record_l2_victim(l2_.absorb_writeback(p1.victim_addr), out);
            }
        }
        return out;
    }

    const CacheLevel& l1i() const { return l1i_; }
    const CacheLevel& l1d() const { return l1d_; }
    const CacheLevel& l2() const { return l2_; }

private:
    void record_l2_victim(const CacheLevel::Probe& p, AccessOutcome& out)
    {
        if (!p.evicted)
            return;
        out.evictions.push_back({CacheLabel::L2, p.victim_addr, p.victim_dirty});
        if (p.victim_dirty)
            ++stats_.l2.writebacks;
    }

    HierarchyConfig cfg_;
    CacheLevel l1i_;
    CacheLevel l1d_;
    CacheLevel l2_;
    CacheStats stats_;
};

} // namespace knee_dse
