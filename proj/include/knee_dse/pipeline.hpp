#pragma once

// Rename-limited, in-order-issue timing model of a fetch/decode/dispatch/issue/
// writeback/commit pipeline with a reorder buffer and blocking data accesses.
//
// Each trace event becomes one uop per destination register (at least one).
// Uop 0 carries the event's fetch and its memory access or ALU operation. A uop
// with a destination holds one physical register from dispatch until it commits;
// commit frees the mapping it replaced.
//
// Stall counters are counterfactual cycle losses, so together with `busy` they
// partition the total exactly:
//   stall_rename = cycles - cycles(unbounded register file)
//   stall_rob    = cycles(unbounded RF) - cycles(unbounded RF and ROB)
//   stall_mem    = that - cycles(every access served at L1 latency)

#include <knee_dse/cache.hpp>
#include <knee_dse/errors.hpp>
#include <knee_dse/timing.hpp>
#include <knee_dse/trace.hpp>

#include <algorithm>
#include <compare>
#include <cstdint>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace knee_dse {

struct PipelineConfig
{
    unsigned issue_width = 1;
    unsigned arch_regs = kDefaultArchRegs;
    unsigned phys_regs = 80;
    unsigned rob_size = 64;
    unsigned alu_latency_cycles = 1;
    unsigned reg_width_bits = 64;

    void validate() const
    {
        if (issue_width < 1)
            throw ValidationError("issue_width must be >= 1");
        if (arch_regs < 1 || arch_regs > 256)
            throw ValidationError("arch_regs must be in 1..256");
        if (phys_regs < arch_regs + 1)
            throw ValidationError("phys_regs must be >= arch_regs + 1 (got phys_regs=" + std::to_string(phys_regs) +
                                  ", arch_regs=" + std::to_string(arch_regs) + ")");
        if (rob_size < 1)
            throw ValidationError("rob_size must be >= 1");
        if (alu_latency_cycles < 1)
            throw ValidationError("alu_latency_cycles must be >= 1");
        if (reg_width_bits < 1)
            throw ValidationError("reg_width_bits must be >= 1");
    }

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Identifies one design point.
struct ConfigKey
{
    std::uint64_t l1i = 0;
    std::uint64_t l1d = 0;
    std::uint64_t l2 = 0;
    unsigned rf = 0;

    friend auto operator<=>(const ConfigKey&, const ConfigKey&) = default;
};

struct ConfigResult
{
    ConfigKey key;
    unsigned l1_latency_cycles = 0;
    unsigned l2_latency_cycles = 0;
    unsigned mem_latency_cycles = 0;
    std::uint64_t cycles = 0;
    std::uint64_t instructions = 0;
    CacheStats cache;
    std::uint64_t stall_rename = 0;
    std::uint64_t stall_rob = 0;
    std::uint64_t stall_mem = 0;
    double penalty = 0.0;
    AreaProxy area;
    double perf_per_area = 0.0;

    friend bool operator==(const ConfigResult&, const ConfigResult&) = default;
};

/// Register accounting after a uop is dispatched:
/// free + live_mappings + pending_frees == phys_regs.
struct RenameSnapshot
{
    std::size_t free = 0;
    std::size_t live_mappings = 0;
    std::size_t pending_frees = 0;
    std::size_t phys_regs = 0;
    std::size_t rob_occupancy = 0;
};

using RenameObserver = std::function<void(const RenameSnapshot&)>;

namespace detail {

/// Per-event latencies from one pass through the cache hierarchy. Access order is
/// program order regardless of timing, so one replay serves every timing variant.
struct ReplayedEvents
{
    std::vector<const TraceEvent*> events;
    std::vector<unsigned> fetch_latency;
    std::vector<unsigned> data_latency;
    CacheStats stats;
};

inline ReplayedEvents replay_caches(const Trace& region, const HierarchyConfig& hier)
{
    CacheHierarchy caches(hier);
    ReplayedEvents r;
    r.events.reserve(region.events.size());
    r.fetch_latency.reserve(region.events.size());
    r.data_latency.reserve(region.events.size());
    for (const auto& e : region.events) {
        if (e.is_marker())
            continue;
        r.events.push_back(&e);
        r.fetch_latency.push_back(caches.access(e.pc, AccessKind::IFetch).latency_cycles);
        unsigned data = 0;
        if (e.is_memory())
            data = caches.access(e.addr, e.kind == EventKind::Load ? AccessKind::Load : AccessKind::Store)
                       .latency_cycles;
        r.data_latency.push_back(data);
    }
    r.stats = caches.stats();
    return r;
}

struct KernelVariant
{
    bool bounded_rf = true;
    bool bounded_rob = true;
    bool perfect_memory = false;
};

/// Fixed-capacity history of the last `n` values, for width-limited stages.
class SlotRing
{
public:
    explicit SlotRing(std::size_t n) : slots_(n, -1) {}
    /// Earliest cycle the next occupant may use: one past the value n entries ago.
    std::int64_t next_free() const { return slots_[pos_] + 1; }
    void push(std::int64_t t)
    {
        slots_[pos_] = t;
        pos_ = (pos_ + 1) % slots_.size();
    }

private:
    std::vector<std::int64_t> slots_;
    std::size_t pos_ = 0;
};

inline std::int64_t run_timing(const ReplayedEvents& r, const PipelineConfig& p, const HierarchyConfig& h,
                               KernelVariant v, const RenameObserver* observer)
{
    struct RobEntry
    {
        std::int64_t commit;
        std::int32_t prev_phys;  // -1 when the uop has no destination
    };

    std::size_t total_uops = 0;
    for (const auto* e : r.events)
        total_uops += std::max<unsigned>(1, e->dst_regs);

    const std::size_t phys =
        v.bounded_rf ? p.phys_regs : p.arch_regs + (v.bounded_rob ? p.rob_size : total_uops + 1);

    std::vector<std::int32_t> map(p.arch_regs);
    std::vector<std::int64_t> ready(phys, 0);
    std::deque<std::int32_t> free_list;
    for (std::size_t i = 0; i < p.arch_regs; ++i)
        map[i] = static_cast<std::int32_t>(i);
    for (std::size_t i = p.arch_regs; i < phys; ++i)
        free_list.push_back(static_cast<std::int32_t>(i));

    std::deque<RobEntry> rob;
    std::size_t pending_frees = 0;
    const auto retire_head = [&] {
        const RobEntry head = rob.front();
        rob.pop_front();
        if (head.prev_phys >= 0) {
            free_list.push_back(head.prev_phys);
            --pending_frees;
        }
        return head.commit;
    };

    SlotRing dispatch_slots(p.issue_width);
    SlotRing issue_slots(p.issue_width);
    DestinationCursor dst_cursor(p.arch_regs);

    std::int64_t last_dispatch = 0;
    std::int64_t last_issue = 0;
    std::int64_t last_commit = 0;
    std::int64_t front_ready = 0;  // earliest fetch of the next event (blocking I-fetch)
    std::int64_t mem_free = 0;     // blocking data port
    const std::int64_t l1 = h.l1_latency_cycles;

    for (std::size_t i = 0; i < r.events.size(); ++i) {
        const TraceEvent& e = *r.events[i];
        const unsigned n_uops = std::max<unsigned>(1, e.dst_regs);
        const std::int64_t fetch_lat = v.perfect_memory ? l1 : r.fetch_latency[i];
        const std::int64_t data_lat = v.perfect_memory ? l1 : r.data_latency[i];

        for (unsigned u = 0; u < n_uops; ++u) {
            std::int64_t base = std::max(last_dispatch, dispatch_slots.next_free());
            if (u == 0)
                base = std::max(base, front_ready);
            std::int64_t clock = base;

            if (v.bounded_rob)
                while (rob.size() >= p.rob_size)
                    clock = std::max(clock, retire_head());

            const bool has_dst = u < e.dst_regs;
            if (has_dst)
                while (free_list.empty()) {
                    if (rob.empty())
                        throw std::logic_error("rename deadlock: no free register and empty ROB");
                    clock = std::max(clock, retire_head());
                }

            const std::int64_t dispatch = clock;
            last_dispatch = dispatch;
            dispatch_slots.push(dispatch);

            std::int64_t issue = std::max({dispatch, last_issue, issue_slots.next_free()});
            if (u == 0) {
                const std::int64_t fetched = base + fetch_lat;
                front_ready = fetched - l1 + 1;
                issue = std::max(issue, fetched);
            }
            for (const auto s : e.sources())
                issue = std::max(issue, ready[static_cast<std::size_t>(map[s])]);
            const bool is_mem = u == 0 && e.is_memory();
            if (is_mem)
                issue = std::max(issue, mem_free);

            const std::int64_t complete = issue + (is_mem ? data_lat : static_cast<std::int64_t>(p.alu_latency_cycles));
            if (is_mem)
                mem_free = complete;
            last_issue = issue;
            issue_slots.push(issue);

            const std::int64_t commit = std::max(complete, last_commit);
            last_commit = commit;

            std::int32_t prev = -1;
            if (has_dst) {
                const unsigned arch = dst_cursor.take();
                const std::int32_t fresh = free_list.front();
                free_list.pop_front();
                prev = map[arch];
                map[arch] = fresh;
                ready[static_cast<std::size_t>(fresh)] = complete;
                ++pending_frees;
            }
            rob.push_back({commit, prev});

            if (observer)
                (*observer)(RenameSnapshot{free_list.size(), p.arch_regs, pending_frees, phys, rob.size()});
        }
    }
    return last_commit;
}

} // namespace detail

/// Replays the measured region of `trace` and returns cycles, cache statistics
/// and the stall decomposition. `hier` latencies must already be set.
inline ConfigResult simulate(const Trace& trace, const PipelineConfig& pcfg, const HierarchyConfig& hier,
                             const TimingModel& model, const RenameObserver& observer = {})
{
    pcfg.validate();
    hier.validate();
    const Trace region = region_filter(trace);
    for (const auto& e : region.events)
        for (const auto s : e.sources())
            if (s >= pcfg.arch_regs)
                throw ValidationError("trace source register " + std::to_string(s) + " >= arch_regs " +
                                      std::to_string(pcfg.arch_regs));

    const auto replayed = detail::replay_caches(region, hier);

    ConfigResult res;
    res.key = {hier.l1i.size_bytes, hier.l1d.size_bytes, hier.l2.size_bytes, pcfg.phys_regs};
    res.l1_latency_cycles = hier.l1_latency_cycles;
    res.l2_latency_cycles = hier.l2_latency_cycles;
    res.mem_latency_cycles = hier.mem_latency_cycles;
    res.instructions = replayed.events.size();
    res.cache = replayed.stats;
    res.area = area_proxy(hier, pcfg.phys_regs, pcfg.reg_width_bits, model);

    const RenameObserver* obs = observer ? &observer : nullptr;
    const auto full = detail::run_timing(replayed, pcfg, hier, {true, true, false}, obs);
    const auto no_rf = detail::run_timing(replayed, pcfg, hier, {false, true, false}, nullptr);
    const auto no_rob = detail::run_timing(replayed, pcfg, hier, {false, false, false}, nullptr);
    const auto ideal = detail::run_timing(replayed, pcfg, hier, {false, false, true}, nullptr);

    if (!(full >= no_rf && no_rf >= no_rob && no_rob >= ideal && ideal >= 0))
        throw std::logic_error("timing model lost monotonicity in its resource bounds");

    res.cycles = static_cast<std::uint64_t>(full);
    res.stall_rename = static_cast<std::uint64_t>(full - no_rf);
    res.stall_rob = static_cast<std::uint64_t>(no_rf - no_rob);
    res.stall_mem = static_cast<std::uint64_t>(no_rob - ideal);
    res.perf_per_area =
        res.cycles == 0 ? 0.0 : 1.0 / (static_cast<double>(res.cycles) * static_cast<double>(res.area.bits));
    return res;
}

enum class StallCause : std::uint8_t { Rename, Rob, Mem, Busy };

inline std::string_view to_string(StallCause c)
{
    switch (c) {
    case StallCause::Rename: return "rename";
    case StallCause::Rob: return "rob";
    case StallCause::Mem: return "mem";
    case StallCause::Busy: return "busy";
    }
    return "?";
}

struct StallShare
{
    StallCause cause;
    std::uint64_t cycles;
    double fraction;
};

/// Rename, ROB, memory and busy shares of the total; empty for a zero-cycle result.
inline std::vector<StallShare> stall_breakdown(const ConfigResult& r)
{
    if (r.cycles == 0)
        return {};
    const std::uint64_t stalled = r.stall_rename + r.stall_rob + r.stall_mem;
    const std::uint64_t busy = r.cycles >= stalled ? r.cycles - stalled : 0;
    const double total = static_cast<double>(r.cycles);
    return {
        {StallCause::Rename, r.stall_rename, static_cast<double>(r.stall_rename) / total},
        {StallCause::Rob, r.stall_rob, static_cast<double>(r.stall_rob) / total},
        {StallCause::Mem, r.stall_mem, static_cast<double>(r.stall_mem) / total},
        {StallCause::Busy, busy, static_cast<double>(busy) / total},
    };
}

} // namespace knee_dse
