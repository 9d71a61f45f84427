#include <knee_dse/config.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace knee_dse;
using nlohmann::json;

TEST(Config, EmptyObjectGivesDefaults)
{
    const auto cfg = parse_config(json::object());
    EXPECT_EQ(cfg.pipeline, PipelineConfig{});
    EXPECT_EQ(cfg.hierarchy, HierarchyConfig{});
    EXPECT_EQ(cfg.timing.mode(), TimingMode::Analytic);
    EXPECT_EQ(cfg.sweep.rf_sizes.size(), 10u);
    EXPECT_DOUBLE_EQ(cfg.sweep.epsilon, 0.03);
    EXPECT_FALSE(cfg.trace_path.has_value());
}

TEST(Config, ShippedDemoConfigLoads)
{
    const auto cfg = load_config(std::filesystem::path(KNEE_DSE_SOURCE_DIR) / "demo" / "demo_config.json");
    EXPECT_EQ(cfg.sweep.l1_sizes.size(), 7u);
    EXPECT_EQ(cfg.sweep.l2_sizes.size(), 6u);
    EXPECT_EQ(cfg.sweep.protocol, Protocol::TwoPhase);
    EXPECT_EQ(cfg.sweep.pipeline.rob_size, 64u);
}

TEST(Config, FieldsAreApplied)
{
    const auto cfg = parse_config(json::parse(R"({
        "trace": "t.trace",
        "pipeline": {"phys_regs": 40, "rob_size": 32, "arch_regs": 8},
        "hierarchy": {"l1d": {"size_bytes": 16384, "assoc": 2}, "mem_latency_cycles": 150},
        "timing": {"cycle_ns": 0.5, "coefficients": {"t0": 0.4}},
        "sweep": {"l1_sizes": [4096, 8192], "epsilon": 0.05, "protocol": "joint", "jobs": 3}
    })"),
                                  "/base");
    EXPECT_EQ(*cfg.trace_path, std::filesystem::path("/base/t.trace"));
    EXPECT_EQ(cfg.pipeline.phys_regs, 40u);
    EXPECT_EQ(cfg.pipeline.arch_regs, 8u);
    EXPECT_EQ(cfg.hierarchy.l1d.size_bytes, 16384u);
    EXPECT_EQ(cfg.hierarchy.l1d.assoc, 2u);
    EXPECT_EQ(cfg.hierarchy.mem_latency_cycles, 150u);
    EXPECT_DOUBLE_EQ(cfg.timing.cycle_ns(), 0.5);
    EXPECT_DOUBLE_EQ(cfg.timing.coefficients().t0, 0.4);
    EXPECT_EQ(cfg.sweep.l1_sizes.size(), 2u);
    EXPECT_EQ(cfg.sweep.protocol, Protocol::Joint);
    EXPECT_EQ(cfg.sweep.jobs, 3u);
    EXPECT_EQ(cfg.sweep.pipeline.rob_size, 32u);
    EXPECT_EQ(cfg.sweep.mem_latency_cycles, 150u);
}

TEST(Config, UnknownKeysAndBadValuesAreRejected)
{
    EXPECT_THROW(parse_config(json::parse(R"({"pipelin": {}})")), ValidationError);
    EXPECT_THROW(parse_config(json::parse(R"({"pipeline": {"phys": 3}})")), ValidationError);
    EXPECT_THROW(parse_config(json::parse(R"({"pipeline": {"phys_regs": "many"}})")), ValidationError);
    EXPECT_THROW(parse_config(json::parse(R"({"timing": {"mode": "cacti"}})")), ValidationError);
    EXPECT_THROW(parse_config(json::parse(R"({"timing": {"mode": "table"}})")), ValidationError);
    EXPECT_THROW(parse_config(json::parse(R"({"sweep": {"protocol": "greedy"}})")), ValidationError);
    EXPECT_THROW(parse_config(json::parse("[]")), ValidationError);
}

TEST(Config, TableTimingLoadsRelativeToConfig)
{
    const auto dir = std::filesystem::temp_directory_path() / "knee_dse_config_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "t.csv") << "label,size_bytes,line_bytes,assoc,access_ns,area_mm2\nL1D,4096,64,1,0.7,\n";
        std::ofstream(dir / "c.json") << R"({"timing": {"mode": "table", "table": "t.csv"}})";
    }
    const auto cfg = load_config(dir / "c.json");
    EXPECT_EQ(cfg.timing.mode(), TimingMode::Table);
    EXPECT_EQ(cfg.timing.entries().size(), 1u);

    std::ofstream(dir / "missing.json") << R"({"timing": {"mode": "table", "table": "nope.csv"}})";
    EXPECT_THROW(load_config(dir / "missing.json"), IoError);
    std::filesystem::remove_all(dir);
}

TEST(Config, MissingOrMalformedFile)
{
    EXPECT_THROW(load_config("/nonexistent/knee.json"), IoError);
    const auto p = std::filesystem::temp_directory_path() / "knee_dse_bad.json";
    std::ofstream(p) << "{ not json";
    EXPECT_THROW(load_config(p), ValidationError);
    std::filesystem::remove(p);
}
