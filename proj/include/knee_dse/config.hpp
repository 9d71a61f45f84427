#pragma once

// JSON run configuration shared by `sim` and `sweep`. Schema: docs/config_schema.md.
// Unknown keys are rejected so typos fail loudly.

#include <knee_dse/cache.hpp>
#include <knee_dse/errors.hpp>
#include <knee_dse/pipeline.hpp>
#include <knee_dse/sweep.hpp>
#include <knee_dse/timing.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>

namespace knee_dse {

struct RunConfig
{
    std::optional<std::filesystem::path> trace_path;
    PipelineConfig pipeline;
    HierarchyConfig hierarchy;
    TimingModel timing;
    /// Trace is left unset; the caller attaches it.
    SweepSpec sweep;
};

namespace detail {

using json = nlohmann::json;

inline void only_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed)
{
    if (!j.is_object())
        throw ValidationError(where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw ValidationError("unknown key '" + where + "." + k + "'");
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& where)
{
    if (!j.contains(key))
        return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError("bad value for '" + where + "." + key + "'");
    }
}

inline void read_geometry(const json& j, const char* key, CacheGeometry& g)
{
    if (!j.contains(key))
        return;
    const std::string where = std::string("hierarchy.") + key;
    only_keys(j.at(key), where, {"size_bytes", "line_bytes", "assoc"});
    read_field(j.at(key), "size_bytes", g.size_bytes, where);
    read_field(j.at(key), "line_bytes", g.line_bytes, where);
    read_field(j.at(key), "assoc", g.assoc, where);
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

} // namespace detail

inline TimingModel load_timing_table_file(const std::filesystem::path& path, double cycle_ns)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open timing table '" + path.string() + "'");
    return load_timing_table(in, cycle_ns);
}

/// Parses a configuration document. Relative paths resolve against `base_dir`.
inline RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {})
{
    using detail::read_field;
    RunConfig cfg;
    detail::only_keys(j, "config", {"trace", "pipeline", "hierarchy", "timing", "sweep"});

    if (j.contains("trace")) {
        std::string p;
        read_field(j, "trace", p, "config");
        cfg.trace_path = detail::resolve(base_dir, p);
    }

    if (j.contains("pipeline")) {
        const auto& p = j.at("pipeline");
        detail::only_keys(p, "pipeline",
                          {"issue_width", "arch_regs", "phys_regs", "rob_size", "alu_latency_cycles", "reg_width_bits"});
        read_field(p, "issue_width", cfg.pipeline.issue_width, "pipeline");
        read_field(p, "arch_regs", cfg.pipeline.arch_regs, "pipeline");
        read_field(p, "phys_regs", cfg.pipeline.phys_regs, "pipeline");
        read_field(p, "rob_size", cfg.pipeline.rob_size, "pipeline");
        read_field(p, "alu_latency_cycles", cfg.pipeline.alu_latency_cycles, "pipeline");
        read_field(p, "reg_width_bits", cfg.pipeline.reg_width_bits, "pipeline");
    }

    if (j.contains("hierarchy")) {
        const auto& h = j.at("hierarchy");
        detail::only_keys(h, "hierarchy", {"l1i", "l1d", "l2", "mem_latency_cycles"});
        detail::read_geometry(h, "l1i", cfg.hierarchy.l1i);
        detail::read_geometry(h, "l1d", cfg.hierarchy.l1d);
        detail::read_geometry(h, "l2", cfg.hierarchy.l2);
        read_field(h, "mem_latency_cycles", cfg.hierarchy.mem_latency_cycles, "hierarchy");
    }

    if (j.contains("timing")) {
        const auto& t = j.at("timing");
        detail::only_keys(t, "timing", {"mode", "cycle_ns", "coefficients", "table"});
        std::string mode = "analytic";
        double cycle_ns = TimingModel::kDefaultCycleNs;
        read_field(t, "mode", mode, "timing");
        read_field(t, "cycle_ns", cycle_ns, "timing");
        if (mode == "analytic") {
            AnalyticCoefficients k;
            if (t.contains("coefficients")) {
                const auto& c = t.at("coefficients");
                detail::only_keys(c, "timing.coefficients", {"t0", "a", "b", "c"});
                read_field(c, "t0", k.t0, "timing.coefficients");
                read_field(c, "a", k.a, "timing.coefficients");
                read_field(c, "b", k.b, "timing.coefficients");
                read_field(c, "c", k.c, "timing.coefficients");
            }
            if (t.contains("table"))
                throw ValidationError("timing.table requires timing.mode \"table\"");
            cfg.timing = TimingModel::analytic(k, cycle_ns);
        } else if (mode == "table") {
            if (!t.contains("table"))
                throw ValidationError("timing.mode \"table\" requires timing.table");
            std::string p;
            read_field(t, "table", p, "timing");
            cfg.timing = load_timing_table_file(detail::resolve(base_dir, p), cycle_ns);
        } else {
            throw ValidationError("timing.mode must be \"analytic\" or \"table\"");
        }
    }

    SweepSpec& s = cfg.sweep;
    if (j.contains("sweep")) {
        const auto& w = j.at("sweep");
        detail::only_keys(w, "sweep",
                          {"l1_sizes", "l2_sizes", "rf_sizes", "split_l1", "l1i_sizes", "l1d_sizes", "l1_line_bytes",
                           "l1_assoc", "l2_line_bytes", "l2_assoc", "epsilon", "protocol", "jobs"});
        read_field(w, "l1_sizes", s.l1_sizes, "sweep");
        read_field(w, "l2_sizes", s.l2_sizes, "sweep");
        read_field(w, "rf_sizes", s.rf_sizes, "sweep");
        read_field(w, "split_l1", s.split_l1, "sweep");
        read_field(w, "l1i_sizes", s.l1i_sizes, "sweep");
        read_field(w, "l1d_sizes", s.l1d_sizes, "sweep");
        read_field(w, "l1_line_bytes", s.l1_line_bytes, "sweep");
        read_field(w, "l1_assoc", s.l1_assoc, "sweep");
        read_field(w, "l2_line_bytes", s.l2_line_bytes, "sweep");
        read_field(w, "l2_assoc", s.l2_assoc, "sweep");
        read_field(w, "epsilon", s.epsilon, "sweep");
        read_field(w, "jobs", s.jobs, "sweep");
        if (w.contains("protocol")) {
            std::string p;
            read_field(w, "protocol", p, "sweep");
            s.protocol = parse_protocol(p);
        }
    }
    s.pipeline = cfg.pipeline;
    s.mem_latency_cycles = cfg.hierarchy.mem_latency_cycles;
    s.timing = cfg.timing;
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("config '" + path.string() + "': " + e.what());
    }
    return parse_config(j, path.parent_path());
}

} // namespace knee_dse
