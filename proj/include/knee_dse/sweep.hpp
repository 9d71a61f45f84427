#pragma once

// Design-space sweeps over (L1, L2, register file), penalty computation and
// best / optimum selection, joint or two-phase (caches first, then RF at the
// best cache point).

#include <knee_dse/cache.hpp>
#include <knee_dse/errors.hpp>
#include <knee_dse/pipeline.hpp>
#include <knee_dse/timing.hpp>
#include <knee_dse/trace.hpp>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace knee_dse {

inline constexpr std::uint64_t KiB = 1024;

enum class Protocol : std::uint8_t { Joint, TwoPhase };

inline std::string_view to_string(Protocol p) { return p == Protocol::Joint ? "joint" : "two_phase"; }

inline Protocol parse_protocol(std::string_view s)
{
    if (s == "joint")
        return Protocol::Joint;
    if (s == "two_phase")
        return Protocol::TwoPhase;
    throw ValidationError("unknown protocol '" + std::string(s) + "' (expected joint or two_phase)");
}

struct SweepSpec
{
    std::vector<std::uint64_t> l1_sizes{4 * KiB, 8 * KiB, 16 * KiB, 32 * KiB, 64 * KiB, 128 * KiB, 256 * KiB};
    std::vector<std::uint64_t> l2_sizes{32 * KiB, 64 * KiB, 128 * KiB, 256 * KiB, 512 * KiB, 1024 * KiB};
    std::vector<unsigned> rf_sizes{24, 32, 40, 48, 56, 64, 72, 80, 96, 128};

    /// Independent L1I / L1D lists; used only when split_l1 is set.
    bool split_l1 = false;
    std::vector<std::uint64_t> l1i_sizes;
    std::vector<std::uint64_t> l1d_sizes;

    std::uint64_t l1_line_bytes = 64;
    std::uint64_t l1_assoc = 4;
    std::uint64_t l2_line_bytes = 64;
    std::uint64_t l2_assoc = 8;
    unsigned mem_latency_cycles = 100;

    /// Fields other than phys_regs apply to every point.
    PipelineConfig pipeline;
    double epsilon = 0.03;
    Protocol protocol = Protocol::TwoPhase;
    unsigned jobs = 1;

    TimingModel timing;
    std::shared_ptr<const Trace> trace;

    const std::vector<std::uint64_t>& l1i_list() const { return split_l1 ? l1i_sizes : l1_sizes; }
    const std::vector<std::uint64_t>& l1d_list() const { return split_l1 ? l1d_sizes : l1_sizes; }

    void validate() const
    {
        const auto check_caches = [](const std::vector<std::uint64_t>& v, const char* name) {
            if (v.empty())
                throw ValidationError(std::string(name) + " must not be empty");
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!std::has_single_bit(v[i]))
                    throw ValidationError(std::string(name) + " entries must be powers of two");
                if (i && v[i] <= v[i - 1])
                    throw ValidationError(std::string(name) + " must be strictly increasing");
            }
        };
        check_caches(l1i_list(), split_l1 ? "l1i_sizes" : "l1_sizes");
        check_caches(l1d_list(), split_l1 ? "l1d_sizes" : "l1_sizes");
        check_caches(l2_sizes, "l2_sizes");
        if (rf_sizes.empty())
            throw ValidationError("rf_sizes must not be empty");
        for (std::size_t i = 1; i < rf_sizes.size(); ++i)
            if (rf_sizes[i] <= rf_sizes[i - 1])
                throw ValidationError("rf_sizes must be strictly increasing");
        if (!(epsilon >= 0.0 && epsilon < 1.0))
            throw ValidationError("epsilon must be in [0, 1)");
        if (!trace)
            throw ValidationError("sweep has no trace");

        for (const auto s : l1i_list())
            CacheGeometry{s, l1_line_bytes, l1_assoc, CacheLabel::L1I}.validate();
        for (const auto s : l1d_list())
            CacheGeometry{s, l1_line_bytes, l1_assoc, CacheLabel::L1D}.validate();
        for (const auto s : l2_sizes)
            CacheGeometry{s, l2_line_bytes, l2_assoc, CacheLabel::L2}.validate();
        for (const auto rf : rf_sizes) {
            PipelineConfig p = pipeline;
            p.phys_regs = rf;
            p.validate();
        }
    }

    HierarchyConfig hierarchy_for(const ConfigKey& k) const
    {
        HierarchyConfig h;
        h.l1i = {k.l1i, l1_line_bytes, l1_assoc, CacheLabel::L1I};
        h.l1d = {k.l1d, l1_line_bytes, l1_assoc, CacheLabel::L1D};
        h.l2 = {k.l2, l2_line_bytes, l2_assoc, CacheLabel::L2};
        h.mem_latency_cycles = mem_latency_cycles;
        return with_model_latencies(h, timing);
    }

    PipelineConfig pipeline_for(const ConfigKey& k) const
    {
        PipelineConfig p = pipeline;
        p.phys_regs = k.rf;
        return p;
    }
};

/// Row-major grid over (l1i, l1d, l2, rf) in list order. Points whose L2 is
/// smaller than either L1 are skipped.
inline std::vector<ConfigKey> grid_points(const std::vector<std::uint64_t>& l1i, const std::vector<std::uint64_t>& l1d,
                                          const std::vector<std::uint64_t>& l2, const std::vector<unsigned>& rf,
                                          bool split)
{
    std::vector<ConfigKey> keys;
    for (std::size_t a = 0; a < l1i.size(); ++a)
        for (std::size_t b = 0; b < l1d.size(); ++b) {
            if (!split && a != b)
                continue;
            for (const auto s2 : l2) {
                if (s2 < std::max(l1i[a], l1d[b]))
                    continue;
                for (const auto r : rf)
                    keys.push_back({l1i[a], l1d[b], s2, r});
            }
        }
    return keys;
}

/// Simulates every key; results come back in key order whatever `jobs` is.
/// The first failing point in key order is rethrown.
inline std::vector<ConfigResult> simulate_points(const SweepSpec& spec, const std::vector<ConfigKey>& keys)
{
    std::vector<ConfigResult> results(keys.size());
    std::vector<std::exception_ptr> errors(keys.size());
    std::atomic<std::size_t> next{0};

    const auto worker = [&] {
        for (std::size_t i = next++; i < keys.size(); i = next++) {
            try {
                results[i] = simulate(*spec.trace, spec.pipeline_for(keys[i]), spec.hierarchy_for(keys[i]), spec.timing);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    unsigned jobs = spec.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : spec.jobs;
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(1, keys.size())));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(jobs);
        for (unsigned t = 0; t < jobs; ++t)
            pool.emplace_back(worker);
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return results;
}

inline std::vector<ConfigResult> run_sweep(const SweepSpec& spec)
{
    spec.validate();
    return simulate_points(spec, grid_points(spec.l1i_list(), spec.l1d_list(), spec.l2_sizes, spec.rf_sizes,
                                             spec.split_l1));
}

namespace detail {

/// Strict "better best" order: fewer cycles, then smaller area, then smaller key.
inline bool better_best(const ConfigResult& a, const ConfigResult& b)
{
    if (a.cycles != b.cycles)
        return a.cycles < b.cycles;
    if (a.area.bits != b.area.bits)
        return a.area.bits < b.area.bits;
    return a.key < b.key;
}

inline std::size_t best_index(const std::vector<ConfigResult>& results)
{
    if (results.empty())
        throw ValidationError("penalties need at least one result");
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i)
        if (better_best(results[i], results[best]))
            best = i;
    return best;
}

} // namespace detail

/// Fills penalty_i = (cycles_i - cycles_best) / cycles_best and returns the best index.
inline std::size_t penalties(std::vector<ConfigResult>& results)
{
    const std::size_t best = detail::best_index(results);
    const double base = static_cast<double>(results[best].cycles);
    for (auto& r : results)
        r.penalty = base == 0.0 ? 0.0 : (static_cast<double>(r.cycles) - base) / base;
    return best;
}

/// Smallest-area result with penalty <= epsilon (ties: fewer cycles, then smaller key).
inline std::size_t find_optimum(const std::vector<ConfigResult>& results, double epsilon)
{
    if (results.empty())
        throw ValidationError("find_optimum needs at least one result");
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        if (!(r.penalty <= epsilon))
            continue;
        if (!pick) {
            pick = i;
            continue;
        }
        const auto& p = results[*pick];
        if (std::tie(r.area.bits, r.cycles, r.key) < std::tie(p.area.bits, p.cycles, p.key))
            pick = i;
    }
    if (!pick)
        throw ValidationError("no result within epsilon; penalties not filled?");
    return *pick;
}

enum class Dimension : std::uint8_t { L1, L2, RF };

inline std::string_view to_string(Dimension d)
{
    switch (d) {
    case Dimension::L1: return "l1";
    case Dimension::L2: return "l2";
    case Dimension::RF: return "rf";
    }
    return "?";
}

inline Dimension parse_dimension(std::string_view s)
{
    if (s == "l1")
        return Dimension::L1;
    if (s == "l2")
        return Dimension::L2;
    if (s == "rf")
        return Dimension::RF;
    throw ValidationError("unknown dimension '" + std::string(s) + "'");
}

struct CurvePoint
{
    std::uint64_t size = 0;
    std::uint64_t cycles = 0;
    double penalty = 0.0;
    std::uint64_t area = 0;
    double perf_per_area = 0.0;

    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Penalty curve along one dimension; each point is the best configuration at that size.
struct CurveSeries
{
    Dimension dimension = Dimension::L1;
    std::vector<CurvePoint> points;  // ascending size
    std::size_t best_index = 0;
    std::size_t optimum_index = 0;
    std::size_t half_index = 0;

    friend bool operator==(const CurveSeries&, const CurveSeries&) = default;
};

struct PhaseSelection
{
    std::string name;
    ConfigKey best;
    ConfigKey optimum;

    friend bool operator==(const PhaseSelection&, const PhaseSelection&) = default;
};

struct SelectionReport
{
    Protocol protocol = Protocol::TwoPhase;
    double epsilon = 0.03;
    std::vector<ConfigResult> results;  // grid order; penalties relative to `best`
    ConfigKey best;
    ConfigKey optimum;
    std::vector<PhaseSelection> phases;
    std::vector<CurveSeries> curves;

    const ConfigResult& result(const ConfigKey& k) const
    {
        const auto it = std::find_if(results.begin(), results.end(), [&](const ConfigResult& r) { return r.key == k; });
        if (it == results.end())
            throw ValidationError("report has no result for the requested key");
        return *it;
    }

    const CurveSeries* curve(Dimension d) const
    {
        const auto it =
            std::find_if(curves.begin(), curves.end(), [&](const CurveSeries& c) { return c.dimension == d; });
        return it == curves.end() ? nullptr : &*it;
    }

    friend bool operator==(const SelectionReport&, const SelectionReport&) = default;
};

namespace detail {

inline std::uint64_t coordinate(const ConfigKey& k, Dimension d)
{
    switch (d) {
    case Dimension::L1: return k.l1d;
    case Dimension::L2: return k.l2;
    case Dimension::RF: return k.rf;
    }
    return 0;
}

/// Index of the point nearest half of the best size (log distance; ties go smaller).
inline std::size_t half_of_best_index(const std::vector<CurvePoint>& pts, std::size_t best)
{
    const double target = std::log2(static_cast<double>(pts[best].size)) - 1.0;
    std::size_t pick = 0;
    double pick_dist = INFINITY;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = std::fabs(std::log2(static_cast<double>(pts[i].size)) - target);
        if (d < pick_dist - 1e-12) {
            pick = i;
            pick_dist = d;
        }
    }
    return pick;
}

} // namespace detail

/// Envelope curve along `dim`: for each size, the best result over the other
/// dimensions present in `results` (penalties filled). `best` marks the zero point.
inline CurveSeries make_curve(const std::vector<ConfigResult>& results, Dimension dim, const ConfigKey& best,
                              double epsilon)
{
    std::vector<const ConfigResult*> env;
    for (const auto& r : results) {
        const auto x = detail::coordinate(r.key, dim);
        auto it = std::find_if(env.begin(), env.end(),
                               [&](const ConfigResult* e) { return detail::coordinate(e->key, dim) == x; });
        if (it == env.end())
            env.push_back(&r);
        else if (detail::better_best(r, **it))
            *it = &r;
    }
    std::sort(env.begin(), env.end(), [&](const ConfigResult* a, const ConfigResult* b) {
        return detail::coordinate(a->key, dim) < detail::coordinate(b->key, dim);
    });

    CurveSeries c;
    c.dimension = dim;
    std::vector<ConfigResult> local;
    for (const auto* r : env) {
        c.points.push_back({detail::coordinate(r->key, dim), r->cycles, r->penalty, r->area.bits, r->perf_per_area});
        local.push_back(*r);
        if (detail::coordinate(r->key, dim) == detail::coordinate(best, dim))
            c.best_index = c.points.size() - 1;
    }
    if (c.points.empty())
        return c;
    c.optimum_index = find_optimum(local, std::max(epsilon, c.points[c.best_index].penalty));
    c.half_index = detail::half_of_best_index(c.points, c.best_index);
    return c;
}

inline SelectionReport joint_explore(const SweepSpec& spec)
{
    SelectionReport rep;
    rep.protocol = Protocol::Joint;
    rep.epsilon = spec.epsilon;
    rep.results = run_sweep(spec);
    const std::size_t best = penalties(rep.results);
    rep.best = rep.results[best].key;
    rep.optimum = rep.results[find_optimum(rep.results, spec.epsilon)].key;
    rep.phases.push_back({"joint", rep.best, rep.optimum});
    for (const auto d : {Dimension::L1, Dimension::L2, Dimension::RF})
        rep.curves.push_back(make_curve(rep.results, d, rep.best, spec.epsilon));
    return rep;
}

/// Phase 1 sweeps the caches at the largest listed register file; phase 2 sweeps
/// the register file at phase 1's best caches.
inline SelectionReport two_phase_explore(const SweepSpec& spec)
{
    spec.validate();
    SelectionReport rep;
    rep.protocol = Protocol::TwoPhase;
    rep.epsilon = spec.epsilon;

    const unsigned rf_max = spec.rf_sizes.back();
    auto phase1 = simulate_points(
        spec, grid_points(spec.l1i_list(), spec.l1d_list(), spec.l2_sizes, {rf_max}, spec.split_l1));
    const ConfigKey cache_best = phase1[penalties(phase1)].key;
    const ConfigKey cache_opt = phase1[find_optimum(phase1, spec.epsilon)].key;

    // With a single listed RF size phase 2 has nothing to add beyond phase 1's best.
    const bool phase2_ran = spec.rf_sizes.size() > 1;
    std::vector<ConfigKey> keys2;
    if (phase2_ran)
        for (const auto rf : spec.rf_sizes)
            keys2.push_back({cache_best.l1i, cache_best.l1d, cache_best.l2, rf});
    auto phase2 = phase2_ran ? simulate_points(spec, keys2)
                             : std::vector<ConfigResult>{*std::find_if(phase1.begin(), phase1.end(), [&](const ConfigResult& r) {
                                   return r.key == cache_best;
                               })};
    const ConfigKey rf_best = phase2[penalties(phase2)].key;
    const ConfigKey rf_opt = phase2[find_optimum(phase2, spec.epsilon)].key;

    rep.results = phase1;
    for (const auto& r : phase2)
        if (r.key != cache_best)
            rep.results.push_back(r);
    const std::size_t best = penalties(rep.results);
    rep.best = rep.results[best].key;
    rep.optimum = rep.results[find_optimum(rep.results, spec.epsilon)].key;

    rep.phases.push_back({"cache", cache_best, cache_opt});
    rep.phases.push_back({"register_file", rf_best, rf_opt});

    // Cache curves come from phase 1, the RF curve from phase 2; penalties stay
    // relative to the combined best.
    std::vector<ConfigResult> cache_pts, rf_pts;
    for (const auto& r : rep.results) {
        if (r.key.rf == rf_max)
            cache_pts.push_back(r);
        if (r.key.l1i == cache_best.l1i && r.key.l1d == cache_best.l1d && r.key.l2 == cache_best.l2)
            rf_pts.push_back(r);
    }
    rep.curves.push_back(make_curve(cache_pts, Dimension::L1, rep.best, spec.epsilon));
    rep.curves.push_back(make_curve(cache_pts, Dimension::L2, rep.best, spec.epsilon));
    if (phase2_ran)
        rep.curves.push_back(make_curve(rf_pts, Dimension::RF, rep.best, spec.epsilon));
    return rep;
}

inline SelectionReport explore(const SweepSpec& spec)
{
    return spec.protocol == Protocol::Joint ? joint_explore(spec) : two_phase_explore(spec);
}

} // namespace knee_dse
