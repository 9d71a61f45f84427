#include <knee_dse/cache.hpp>
#include <knee_dse/lru_oracle.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace knee_dse;

namespace {

HierarchyConfig small_config()
{
    HierarchyConfig h;
    h.l1i = {1024, 64, 2, CacheLabel::L1I};
    h.l1d = {1024, 64, 2, CacheLabel::L1D};
    h.l2 = {4096, 64, 4, CacheLabel::L2};
    h.l1_latency_cycles = 1;
    h.l2_latency_cycles = 4;
    h.mem_latency_cycles = 20;
    return h;
}

std::uint64_t level_misses(const CacheGeometry& g, const std::vector<std::uint64_t>& addrs)
{
    CacheLevel c(g);
    std::uint64_t m = 0;
    for (const auto a : addrs)
        m += c.access(a, false).hit ? 0 : 1;
    return m;
}

} // namespace

TEST(Hierarchy, ColdStateHasZeroStats)
{
    CacheHierarchy c(HierarchyConfig{});
    EXPECT_EQ(c.stats(), CacheStats{});
}

TEST(Hierarchy, RejectsInvalidConfigs)
{
    HierarchyConfig h;
    h.l1d.size_bytes = 1000;
    EXPECT_THROW(CacheHierarchy{h}, ValidationError);

    h = {};
    h.l2.size_bytes = 16 * 1024;
    EXPECT_THROW(CacheHierarchy{h}, ValidationError);

    h = {};
    h.l2_latency_cycles = 200;
    EXPECT_THROW(CacheHierarchy{h}, ValidationError);

    h = {};
    h.l1_latency_cycles = 0;
    EXPECT_THROW(h.validate(), ValidationError);
}

TEST(Geometry, Invariants)
{
    EXPECT_NO_THROW((CacheGeometry{1024, 64, 16, CacheLabel::L2}.validate()));
    EXPECT_THROW((CacheGeometry{1024, 64, 32, CacheLabel::L2}.validate()), ValidationError);
    EXPECT_THROW((CacheGeometry{1024, 64, 3, CacheLabel::L2}.validate()), ValidationError);
    EXPECT_THROW((CacheGeometry{1024, 4, 1, CacheLabel::L2}.validate()), ValidationError);
    EXPECT_THROW((CacheGeometry{1024, 48, 1, CacheLabel::L2}.validate()), ValidationError);
    EXPECT_THROW((CacheGeometry{0, 64, 1, CacheLabel::L2}.validate()), ValidationError);
    EXPECT_EQ((CacheGeometry{32768, 64, 4, CacheLabel::L1D}.sets()), 128u);
}

TEST(Hierarchy, CompulsoryMissThenHit)
{
    const auto h = small_config();
    CacheHierarchy c(h);
    const auto first = c.access(0x0, AccessKind::Load);
    EXPECT_EQ(first.level_served, ServedBy::Mem);
    EXPECT_EQ(first.latency_cycles, 1u + 4u + 20u);
    const auto again = c.access(0x0, AccessKind::Load);
    EXPECT_EQ(again.level_served, ServedBy::L1);
    EXPECT_EQ(again.latency_cycles, 1u);
}

TEST(Hierarchy, L2HitAfterL1Eviction)
{
    auto h = small_config();
    h.l1d = {128, 64, 1, CacheLabel::L1D};  // 2 sets, direct mapped
    CacheHierarchy c(h);
    c.access(0x000, AccessKind::Load);
    c.access(0x080, AccessKind::Load);  // same L1 set, evicts 0x000
    const auto o = c.access(0x000, AccessKind::Load);
    EXPECT_EQ(o.level_served, ServedBy::L2);
    EXPECT_EQ(o.latency_cycles, 5u);
}

TEST(CacheLevel, TwoSetDirectMappedConflict)
{
    // 2 sets x 1 way x 16B lines: 0x00 and 0x20 both map to set 0.
    CacheLevel c({32, 16, 1, CacheLabel::L1D});
    EXPECT_FALSE(c.access(0x00, false).hit);
    const auto p = c.access(0x20, false);
    EXPECT_FALSE(p.hit);
    EXPECT_TRUE(p.evicted);
    EXPECT_EQ(p.victim_addr, 0x00u);
    EXPECT_FALSE(c.access(0x00, false).hit);
}

TEST(Hierarchy, IfetchUsesL1I)
{
    CacheHierarchy c(small_config());
    c.access(0x400000, AccessKind::IFetch);
    c.access(0x400000, AccessKind::Load);
    EXPECT_EQ(c.stats().l1i.accesses, 1u);
    EXPECT_EQ(c.stats().l1i.misses, 1u);
    EXPECT_EQ(c.stats().l1d.misses, 1u);
    // The line is already in the unified L2 after the fetch.
    EXPECT_EQ(c.stats().l2.hits, 1u);
}

TEST(Hierarchy, DirtyVictimIsWrittenBack)
{
    auto h = small_config();
    h.l1d = {128, 64, 1, CacheLabel::L1D};
    CacheHierarchy c(h);
    c.access(0x000, AccessKind::Store);
    const auto o = c.access(0x080, AccessKind::Load);
    ASSERT_FALSE(o.evictions.empty());
    EXPECT_EQ(o.evictions.front().level, CacheLabel::L1D);
    EXPECT_EQ(o.evictions.front().line_addr, 0x000u);
    EXPECT_TRUE(o.evictions.front().dirty);
    EXPECT_EQ(c.stats().l1d.writebacks, 1u);
    // Writebacks cost nothing and are not L2 demand accesses.
    EXPECT_EQ(o.latency_cycles, 25u);
    EXPECT_EQ(c.stats().l2.accesses, 2u);
    // A clean victim produces no writeback.
    c.access(0x000, AccessKind::Load);
    EXPECT_EQ(c.stats().l1d.writebacks, 1u);
}

TEST(Hierarchy, StatsConservation)
{
    CacheHierarchy c(small_config());
    std::mt19937_64 rng(1);
    for (int i = 0; i < 20000; ++i) {
        const auto kind = static_cast<AccessKind>(rng() % 3);
        c.access((rng() % 512) * 16, kind);
        const auto& s = c.stats();
        for (const auto* l : {&s.l1i, &s.l1d, &s.l2})
            ASSERT_EQ(l->hits + l->misses, l->accesses);
    }
}

TEST(Hierarchy, LatencyCompositionOnRandomRun)
{
    const auto h = small_config();
    CacheHierarchy c(h);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50000; ++i) {
        const auto o = c.access((rng() % 4096) * 8, static_cast<AccessKind>(rng() % 3));
        switch (o.level_served) {
        case ServedBy::L1: ASSERT_EQ(o.latency_cycles, 1u); break;
        case ServedBy::L2: ASSERT_EQ(o.latency_cycles, 5u); break;
        case ServedBy::Mem: ASSERT_EQ(o.latency_cycles, 25u); break;
        }
    }
}

TEST(Hierarchy, Deterministic)
{
    std::mt19937_64 rng(3);
    std::vector<std::uint64_t> addrs(5000);
    for (auto& a : addrs)
        a = rng() % (1 << 16);
    CacheHierarchy a(small_config()), b(small_config());
    for (const auto x : addrs) {
        const auto oa = a.access(x, AccessKind::Store);
        const auto ob = b.access(x, AccessKind::Store);
        ASSERT_EQ(oa.latency_cycles, ob.latency_cycles);
        ASSERT_EQ(oa.evictions, ob.evictions);
    }
    EXPECT_EQ(a.stats(), b.stats());
}

TEST(LruOracle, FullyAssociativeCompulsoryOnly)
{
    const CacheGeometry g{512, 64, 8, CacheLabel::L1D};
    std::vector<std::uint64_t> addrs;
    for (int rep = 0; rep < 10; ++rep)
        for (std::uint64_t l = 0; l < 6; ++l)
            addrs.push_back(l * 64 + static_cast<std::uint64_t>(rep));
    EXPECT_EQ(lru_oracle(addrs, g), 6u);
}

TEST(LruOracle, CyclicThrash)
{
    const CacheGeometry g{1024, 64, 4, CacheLabel::L1D};  // 4 sets
    std::vector<std::uint64_t> addrs;
    for (int rep = 0; rep < 5; ++rep)
        for (std::uint64_t k = 0; k < 5; ++k)
            addrs.push_back(k * 4 * 64);  // all in set 0
    EXPECT_EQ(lru_oracle(addrs, g), addrs.size());
}

TEST(LruOracle, MatchesSimulatorOnRandomSequences)
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 40; ++trial) {
        const std::uint64_t assoc = 1ull << (rng() % 4);
        const std::uint64_t size = 1ull << (10 + rng() % 7);
        const CacheGeometry g{size, 64, assoc, CacheLabel::L1D};
        std::vector<std::uint64_t> addrs(4000);
        const std::uint64_t span = size * (1 + rng() % 4);
        for (auto& a : addrs)
            a = rng() % span;
        ASSERT_EQ(level_misses(g, addrs), lru_oracle(addrs, g)) << "size " << size << " assoc " << assoc;
    }
}

TEST(LruInclusion, CapacityAndWays)
{
    std::mt19937_64 rng(6);
    std::vector<std::uint64_t> addrs(6000);
    for (auto& a : addrs)
        a = rng() % (64 * 1024);
    std::uint64_t prev = ~0ull;
    for (std::uint64_t lines = 4; lines <= 1024; lines *= 2) {
        const auto m = level_misses({lines * 64, 64, lines, CacheLabel::L2}, addrs);
        EXPECT_LE(m, prev);
        prev = m;
    }
    prev = ~0ull;
    for (std::uint64_t ways = 1; ways <= 16; ways *= 2) {
        const auto m = level_misses({16 * 64 * ways, 64, ways, CacheLabel::L2}, addrs);
        EXPECT_LE(m, prev);
        prev = m;
    }
}
