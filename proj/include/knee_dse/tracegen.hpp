#pragma once

// Synthetic workloads with three locality archetypes: a dependent pointer chase
// over a random cycle (graph-style, data-cache bound), a sequential load/store
// sweep (payload-style streaming) and Zipf-distributed hash-bucket lookups
// (flow-table style). Every generator is a pure function of its arguments.

#include <knee_dse/errors.hpp>
#include <knee_dse/trace.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace knee_dse {

struct GenOptions
{
    /// Non-memory instructions emitted after every memory event.
    unsigned instr_per_mem = 2;
    unsigned arch_regs = kDefaultArchRegs;
    std::uint64_t code_base = 0x401000;
    std::uint64_t data_base = 0x10000000;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Uniform integer in [0, n) using the multiply-shift reduction; portable across
/// standard library implementations, unlike std::uniform_int_distribution.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n)
{
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

inline double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline void check_options(const GenOptions& opt)
{
    if (opt.arch_regs < 4 || opt.arch_regs > 255)
        throw ValidationError("generator arch_regs must be in 4..255");
    if (opt.instr_per_mem > opt.arch_regs / 2)
        throw ValidationError("instr_per_mem must be at most arch_regs / 2");
}

/// Emits instruction events with pcs cycling over a small loop body and
/// destinations assigned through the shared DestinationCursor.
class TraceBuilder
{
public:
    TraceBuilder(const GenOptions& opt, std::size_t body_len)
        : opt_(opt), cursor_(opt.arch_regs), body_len_(std::max<std::size_t>(1, body_len))
    {
    }

    unsigned load(std::uint64_t addr, unsigned size, std::initializer_list<unsigned> srcs)
    {
        const unsigned dst = cursor_.take();
        trace_.events.push_back(TraceEvent::load(next_pc(), addr, size, 1, srcs));
        return dst;
    }

    void store(std::uint64_t addr, unsigned size, std::initializer_list<unsigned> srcs)
    {
        trace_.events.push_back(TraceEvent::store(next_pc(), addr, size, srcs));
    }

    unsigned alu(std::initializer_list<unsigned> srcs)
    {
        const unsigned dst = cursor_.take();
        trace_.events.push_back(TraceEvent::instr(next_pc(), 1, srcs));
        return dst;
    }

    void marker(EventKind k) { trace_.events.push_back(TraceEvent::marker(k)); }

    Trace finish(std::string name, std::uint64_t seed)
    {
        trace_.meta.name = std::move(name);
        trace_.meta.seed = seed;
        trace_.meta.source = trace_.meta.name;
        return std::move(trace_);
    }

    unsigned arch_regs() const { return opt_.arch_regs; }

private:
    std::uint64_t next_pc()
    {
        const std::uint64_t pc = opt_.code_base + 4 * (slot_ % body_len_);
        ++slot_;
        return pc;
    }

    GenOptions opt_;
    DestinationCursor cursor_;
    std::size_t body_len_;
    std::size_t slot_ = 0;
    Trace trace_;
};

} // namespace detail

/// Dependent loads around a random Hamiltonian cycle of working_set/node_bytes
/// nodes (Sattolo's algorithm). Each load sources the previous load's destination;
/// the first trailing instruction consumes the loaded value.
inline Trace gen_pointer_chase(std::uint64_t working_set_bytes, std::uint64_t node_bytes, std::uint64_t n_events,
                               std::uint64_t seed, const GenOptions& opt = {})
{
    detail::check_options(opt);
    if (node_bytes < 8)
        throw ValidationError("node_bytes must be >= 8");
    if (working_set_bytes < node_bytes || working_set_bytes % node_bytes != 0)
        throw ValidationError("working_set_bytes must be a non-zero multiple of node_bytes");
    if (n_events == 0)
        throw ValidationError("n_events must be >= 1");

    const std::uint64_t n_nodes = working_set_bytes / node_bytes;
    std::vector<std::uint64_t> next(n_nodes);
    std::iota(next.begin(), next.end(), std::uint64_t{0});
    std::mt19937_64 rng(seed);
    for (std::uint64_t i = n_nodes - 1; i > 0; --i)
        std::swap(next[i], next[detail::uniform_below(rng, i)]);

    detail::TraceBuilder b(opt, 1 + opt.instr_per_mem);
    b.marker(EventKind::RegionBegin);
    unsigned ptr = opt.arch_regs - 1;
    unsigned acc = opt.arch_regs - 2;
    std::uint64_t node = 0;
    for (std::uint64_t i = 0; i < n_events; ++i) {
        ptr = b.load(opt.data_base + node * node_bytes, 8, {ptr});
        for (unsigned k = 0; k < opt.instr_per_mem; ++k)
            acc = b.alu({k == 0 ? ptr : acc});
        node = next[node];
    }
    b.marker(EventKind::RegionEnd);
    return b.finish("chase-ws" + std::to_string(working_set_bytes) + "-node" + std::to_string(node_bytes) + "-n" +
                        std::to_string(n_events),
                    seed);
}

/// Alternating loads and stores at base + (k * stride mod footprint). The trailing
/// instructions transform the value and advance the index register.
inline Trace gen_streaming(std::uint64_t footprint_bytes, std::uint64_t stride_bytes, std::uint64_t n_events,
                           std::uint64_t seed, const GenOptions& opt = {})
{
    detail::check_options(opt);
    if (stride_bytes == 0)
        throw ValidationError("stride_bytes must be >= 1");
    if (footprint_bytes < stride_bytes)
        throw ValidationError("footprint_bytes must be >= stride_bytes");
    if (n_events == 0)
        throw ValidationError("n_events must be >= 1");

    const unsigned size = static_cast<unsigned>(std::min<std::uint64_t>(8, std::bit_floor(stride_bytes)));
    detail::TraceBuilder b(opt, 2 * (1 + opt.instr_per_mem));
    b.marker(EventKind::RegionBegin);
    unsigned idx = opt.arch_regs - 1;
    unsigned val = opt.arch_regs - 2;
    std::uint64_t offset = 0;
    for (std::uint64_t k = 0; k < n_events; ++k) {
        const std::uint64_t addr = opt.data_base + offset;
        if (k % 2 == 0)
            val = b.load(addr, size, {idx});
        else
            b.store(addr, size, {val, idx});
        for (unsigned j = 0; j < opt.instr_per_mem; ++j) {
            if (j == 0)
                val = b.alu({val});
            else
                idx = b.alu({idx});
        }
        offset = (offset + stride_bytes) % footprint_bytes;
    }
    b.marker(EventKind::RegionEnd);
    return b.finish("stream-fp" + std::to_string(footprint_bytes) + "-stride" + std::to_string(stride_bytes) + "-n" +
                        std::to_string(n_events),
                    seed);
}

/// Flow-table lookups: each event draws a flow from Zipf(1.0) over n_flows, loads
/// the flow's bucket line, then the chained node line the bucket points to.
/// Buckets occupy the lower half of the table's lines, nodes the upper half.
inline Trace gen_hash_lookup(std::uint64_t table_bytes, std::uint64_t n_flows, std::uint64_t n_events,
                             std::uint64_t seed, const GenOptions& opt = {})
{
    detail::check_options(opt);
    if (n_flows == 0)
        throw ValidationError("n_flows must be >= 1");
    if (table_bytes / 64 < n_flows)
        throw ValidationError("table_bytes must be >= 64 * n_flows");
    if (n_events == 0)
        throw ValidationError("n_events must be >= 1");

    constexpr std::uint64_t kLine = 64;
    const std::uint64_t n_lines = table_bytes / kLine;
    const std::uint64_t bucket_lines = std::max<std::uint64_t>(1, n_lines / 2);
    const std::uint64_t node_lines = n_lines - bucket_lines;

    std::mt19937_64 rng(seed);

    // Zipf(1.0) CDF over ranks; rank r has weight 1/(r+1).
    std::vector<double> cdf(n_flows);
    double total = 0.0;
    for (std::uint64_t r = 0; r < n_flows; ++r) {
        total += 1.0 / static_cast<double>(r + 1);
        cdf[r] = total;
    }
    for (auto& c : cdf)
        c /= total;

    // Hot ranks land on scattered flow ids.
    std::vector<std::uint64_t> flow_of_rank(n_flows);
    std::iota(flow_of_rank.begin(), flow_of_rank.end(), std::uint64_t{0});
    for (std::uint64_t i = n_flows - 1; i > 0; --i)
        std::swap(flow_of_rank[i], flow_of_rank[detail::uniform_below(rng, i + 1)]);

    const auto bucket_addr = [&](std::uint64_t flow) {
        return opt.data_base + (detail::splitmix64(flow ^ seed) % bucket_lines) * kLine;
    };
    const auto node_addr = [&](std::uint64_t flow) {
        if (node_lines == 0)
            return bucket_addr(flow);
        return opt.data_base + (bucket_lines + detail::splitmix64(~flow ^ seed) % node_lines) * kLine;
    };

    detail::TraceBuilder b(opt, 2 * (1 + opt.instr_per_mem));
    b.marker(EventKind::RegionBegin);
    unsigned hash = opt.arch_regs - 1;
    unsigned val = opt.arch_regs - 2;
    for (std::uint64_t i = 0; i < n_events; ++i) {
        const double u = detail::uniform01(rng);
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const std::uint64_t rank = std::min<std::uint64_t>(static_cast<std::uint64_t>(it - cdf.begin()), n_flows - 1);
        const std::uint64_t flow = flow_of_rank[rank];

        unsigned bucket = b.load(bucket_addr(flow), 8, {hash});
        for (unsigned j = 0; j < opt.instr_per_mem; ++j)
            bucket = b.alu({bucket});
        val = b.load(node_addr(flow), 8, {bucket});
        for (unsigned j = 0; j < opt.instr_per_mem; ++j) {
            if (j == 0)
                val = b.alu({val});
            else
                hash = b.alu({hash});
        }
    }
    b.marker(EventKind::RegionEnd);
    return b.finish("hash-table" + std::to_string(table_bytes) + "-flows" + std::to_string(n_flows) + "-n" +
                        std::to_string(n_events),
                    seed);
}

} // namespace knee_dse
