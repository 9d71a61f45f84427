#include <knee_dse/cache.hpp>
#include <knee_dse/lru_oracle.hpp>
#include <knee_dse/trace.hpp>
#include <knee_dse/tracegen.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

using namespace knee_dse;

namespace {

std::vector<std::uint64_t> memory_addrs(const Trace& t)
{
    std::vector<std::uint64_t> a;
    for (const auto& e : t.events)
        if (e.is_memory())
            a.push_back(e.addr);
    return a;
}

std::size_t count_kind(const Trace& t, EventKind k)
{
    return static_cast<std::size_t>(
        std::count_if(t.events.begin(), t.events.end(), [&](const TraceEvent& e) { return e.kind == k; }));
}

std::uint64_t l1d_misses(const Trace& t, std::uint64_t l1d_bytes)
{
    HierarchyConfig h;
    h.l1d.size_bytes = l1d_bytes;
    h.l2.size_bytes = 1 << 20;
    CacheHierarchy c(h);
    for (const auto& e : region_filter(t).events)
        if (e.is_memory())
            c.access(e.addr, e.kind == EventKind::Load ? AccessKind::Load : AccessKind::Store);
    return c.stats().l1d.misses;
}

} // namespace

TEST(PointerChase, SmallCycleIsAPermutationOfNodes)
{
    const Trace t = gen_pointer_chase(64, 8, 8, 1);
    const auto a = memory_addrs(t);
    ASSERT_EQ(a.size(), 8u);
    std::vector<std::uint64_t> sorted = a;
    std::sort(sorted.begin(), sorted.end());
    const GenOptions opt;
    for (std::uint64_t i = 0; i < 8; ++i)
        EXPECT_EQ(sorted[i], opt.data_base + 8 * i);
}

TEST(PointerChase, Deterministic)
{
    EXPECT_EQ(to_text(gen_pointer_chase(4096, 64, 500, 11)), to_text(gen_pointer_chase(4096, 64, 500, 11)));
    EXPECT_NE(to_text(gen_pointer_chase(4096, 64, 500, 11)), to_text(gen_pointer_chase(4096, 64, 500, 12)));
}

TEST(PointerChase, TouchesEveryNodeOnceLongEnough)
{
    const Trace t = gen_pointer_chase(32768, 64, 2000, 3);
    const auto a = memory_addrs(t);
    EXPECT_EQ(std::set<std::uint64_t>(a.begin(), a.end()).size(), 512u);
    // One Hamiltonian cycle: the first 512 loads are all distinct.
    EXPECT_EQ(std::set<std::uint64_t>(a.begin(), a.begin() + 512).size(), 512u);
}

TEST(PointerChase, LoadsDependOnThePreviousLoad)
{
    const Trace t = gen_pointer_chase(1024, 64, 50, 2);
    DestinationCursor cursor;
    std::optional<unsigned> last_load_dst;
    for (const auto& e : region_filter(t).events) {
        if (e.kind == EventKind::Load) {
            if (last_load_dst) {
                ASSERT_EQ(e.sources().size(), 1u);
                EXPECT_EQ(e.sources()[0], *last_load_dst);
            }
        }
        for (unsigned d = 0; d < e.dst_regs; ++d) {
            const unsigned r = cursor.take();
            if (e.kind == EventKind::Load)
                last_load_dst = r;
        }
    }
}

TEST(PointerChase, WorkingSetFitsOnlyTheLargerL1)
{
    const Trace t = gen_pointer_chase(32768, 64, 100000, 7);
    EXPECT_LT(l1d_misses(t, 64 * 1024), l1d_misses(t, 16 * 1024));
}

TEST(PointerChase, RejectsBadSizes)
{
    EXPECT_THROW(gen_pointer_chase(100, 64, 10, 1), ValidationError);
    EXPECT_THROW(gen_pointer_chase(0, 64, 10, 1), ValidationError);
    EXPECT_THROW(gen_pointer_chase(64, 4, 10, 1), ValidationError);
    EXPECT_THROW(gen_pointer_chase(64, 8, 0, 1), ValidationError);
}

TEST(Streaming, ArithmeticOffsets)
{
    const Trace t = gen_streaming(64, 16, 4, 0);
    const auto a = memory_addrs(t);
    const GenOptions opt;
    ASSERT_EQ(a.size(), 4u);
    for (std::uint64_t i = 0; i < 4; ++i)
        EXPECT_EQ(a[i], opt.data_base + 16 * i);
    EXPECT_EQ(t.events[1].kind, EventKind::Load);
}

TEST(Streaming, AlternatesLoadsAndStoresAndWraps)
{
    const Trace t = gen_streaming(64, 16, 10, 0);
    std::vector<EventKind> kinds;
    for (const auto& e : t.events)
        if (e.is_memory())
            kinds.push_back(e.kind);
    for (std::size_t i = 0; i < kinds.size(); ++i)
        EXPECT_EQ(kinds[i], i % 2 == 0 ? EventKind::Load : EventKind::Store);
    EXPECT_EQ(memory_addrs(t)[4], GenOptions{}.data_base);
}

TEST(Streaming, EmitsExactlyNMemoryEvents)
{
    for (const std::uint64_t n : {1, 7, 1000})
        EXPECT_EQ(memory_addrs(gen_streaming(4096, 24, n, 0)).size(), n);
}

TEST(Streaming, LargeFootprintAlwaysMissesSmallL1)
{
    const Trace t = gen_streaming(1 << 20, 64, 100000, 0);
    const auto a = memory_addrs(t);
    const CacheGeometry g{8192, 64, 4, CacheLabel::L1D};
    EXPECT_EQ(lru_oracle(a, g), a.size());
    EXPECT_EQ(l1d_misses(t, 8192), a.size());
}

TEST(Streaming, RejectsBadSizes)
{
    EXPECT_THROW(gen_streaming(64, 0, 4, 0), ValidationError);
    EXPECT_THROW(gen_streaming(8, 16, 4, 0), ValidationError);
}

TEST(HashLookup, SingleFlowTouchesTwoLines)
{
    const Trace t = gen_hash_lookup(4096, 1, 10, 3);
    std::set<std::uint64_t> lines;
    for (const auto a : memory_addrs(t))
        lines.insert(a / 64);
    EXPECT_EQ(lines.size(), 2u);
    EXPECT_EQ(memory_addrs(t).size(), 20u);
}

TEST(HashLookup, Deterministic)
{
    EXPECT_EQ(to_text(gen_hash_lookup(1 << 16, 100, 1000, 9)), to_text(gen_hash_lookup(1 << 16, 100, 1000, 9)));
}

TEST(HashLookup, ZipfHeadIsHeavy)
{
    const Trace t = gen_hash_lookup(1 << 20, 4096, 100000, 9);
    std::map<std::uint64_t, std::uint64_t> bucket_hits;
    const auto a = memory_addrs(t);
    for (std::size_t i = 0; i < a.size(); i += 2)
        ++bucket_hits[a[i]];
    std::uint64_t top = 0;
    for (const auto& [addr, n] : bucket_hits)
        top = std::max(top, n);
    EXPECT_GT(static_cast<double>(top) / 100000.0, 0.05);
}

TEST(HashLookup, RejectsBadSizes)
{
    EXPECT_THROW(gen_hash_lookup(4096, 0, 10, 1), ValidationError);
    EXPECT_THROW(gen_hash_lookup(64 * 9, 10, 10, 1), ValidationError);
}

TEST(Generators, RoundTripThroughText)
{
    for (const Trace& t : {gen_pointer_chase(4096, 64, 300, 1), gen_streaming(4096, 8, 300, 1),
                           gen_hash_lookup(1 << 14, 64, 300, 1)}) {
        EXPECT_EQ(parse_trace(to_text(t)), t);
        EXPECT_EQ(count_kind(t, EventKind::RegionBegin), 1u);
        EXPECT_EQ(count_kind(t, EventKind::RegionEnd), 1u);
    }
}

TEST(Generators, InstructionMixFollowsOption)
{
    GenOptions opt;
    opt.instr_per_mem = 5;
    const Trace t = gen_streaming(4096, 64, 100, 0, opt);
    EXPECT_EQ(count_kind(t, EventKind::Instr), 500u);
    opt.instr_per_mem = 0;
    EXPECT_EQ(count_kind(gen_streaming(4096, 64, 100, 0, opt), EventKind::Instr), 0u);
}

TEST(Generators, SourcesStayBelowArchRegs)
{
    GenOptions opt;
    opt.arch_regs = 8;
    opt.instr_per_mem = 3;
    for (const Trace& t : {gen_pointer_chase(4096, 64, 300, 1, opt), gen_streaming(4096, 8, 300, 1, opt),
                           gen_hash_lookup(1 << 14, 64, 300, 1, opt)})
        for (const auto& e : t.events)
            for (const auto s : e.sources())
                EXPECT_LT(s, 8u);
}
