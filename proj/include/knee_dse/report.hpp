#pragma once

// Emitters for a SelectionReport: results CSV, curves + raw results JSON (with a
// loader), and a plain-text selection summary. All emitters are pure functions
// of the report.

#include <knee_dse/errors.hpp>
#include <knee_dse/pipeline.hpp>
#include <knee_dse/sweep.hpp>

#include <json.hpp>

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace knee_dse {

inline constexpr std::string_view kCsvHeader =
    "l1,l2,rf,cycles,instructions,l1i_miss,l1d_miss,l2_miss,stall_rename,stall_rob,stall_mem,penalty,area,perf_per_area";
inline constexpr std::string_view kReportFormat = "knee_dse.report/1";

namespace detail {

inline std::string printf_string(const char* fmt, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

inline void write_checked(std::ostream& os, const std::string& text)
{
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    os.flush();
    if (!os)
        throw IoError("failed writing report output");
}

/// "32KB" for whole kibibytes, plain bytes otherwise.
inline std::string size_label(std::uint64_t bytes)
{
    if (bytes % 1024 == 0)
        return std::to_string(bytes / 1024) + "KB";
    return std::to_string(bytes) + "B";
}

inline std::string l1_column(const ConfigKey& k)
{
    if (k.l1i == k.l1d)
        return std::to_string(k.l1d);
    return std::to_string(k.l1i) + ":" + std::to_string(k.l1d);
}

inline std::string describe_key(const ConfigKey& k)
{
    const std::string l1 =
        k.l1i == k.l1d ? size_label(k.l1d) : "I " + size_label(k.l1i) + " / D " + size_label(k.l1d);
    return "L1 " + l1 + ", L2 " + size_label(k.l2) + ", RF " + std::to_string(k.rf);
}

inline std::string percent(double fraction) { return printf_string("%.1f%%", fraction * 100.0); }

} // namespace detail

inline std::string csv_text(const SelectionReport& rep)
{
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& r : rep.results) {
        out += detail::l1_column(r.key);
        out += ',' + std::to_string(r.key.l2);
        out += ',' + std::to_string(r.key.rf);
        out += ',' + std::to_string(r.cycles);
        out += ',' + std::to_string(r.instructions);
        out += ',' + std::to_string(r.cache.l1i.misses);
        out += ',' + std::to_string(r.cache.l1d.misses);
        out += ',' + std::to_string(r.cache.l2.misses);
        out += ',' + std::to_string(r.stall_rename);
        out += ',' + std::to_string(r.stall_rob);
        out += ',' + std::to_string(r.stall_mem);
        out += ',' + detail::printf_string("%.6f", r.penalty);
        out += ',' + std::to_string(r.area.bits);
        out += ',' + detail::printf_string("%.9e", r.perf_per_area);
        out += '\n';
    }
    return out;
}

/// Writes the results CSV in grid order; returns the number of bytes written.
inline std::size_t emit_csv(const SelectionReport& rep, std::ostream& os)
{
    const std::string text = csv_text(rep);
    detail::write_checked(os, text);
    return text.size();
}

inline std::string summary_text(const SelectionReport& rep)
{
    std::ostringstream os;
    const auto& best = rep.result(rep.best);
    const auto& opt = rep.result(rep.optimum);
    const double saving = best.area.bits == 0 ? 0.0
                                              : (static_cast<double>(best.area.bits) - static_cast<double>(opt.area.bits)) /
                                                    static_cast<double>(best.area.bits);

    os << "protocol " << to_string(rep.protocol) << ", epsilon " << detail::percent(rep.epsilon) << ", "
       << rep.results.size() << " points\n";
    os << "best:    " << detail::describe_key(rep.best) << ", " << best.cycles << " cycles, area " << best.area.bits
       << " bits\n";
    os << "optimum: " << detail::describe_key(rep.optimum) << ", " << opt.cycles << " cycles, penalty "
       << detail::percent(opt.penalty) << ", area " << opt.area.bits << " bits, area saving " << detail::percent(saving)
       << '\n';
    for (const auto& ph : rep.phases)
        os << "phase " << ph.name << ": best " << detail::describe_key(ph.best) << "; optimum "
           << detail::describe_key(ph.optimum) << '\n';
    os << "half of best size:\n";
    for (const auto& c : rep.curves) {
        if (c.points.empty())
            continue;
        const auto& b = c.points[c.best_index];
        const auto& h = c.points[c.half_index];
        const auto label = [&](std::uint64_t v) {
            return c.dimension == Dimension::RF ? std::to_string(v) : detail::size_label(v);
        };
        os << "  " << to_string(c.dimension) << ": best " << label(b.size) << ", " << label(h.size) << " -> penalty "
           << detail::percent(h.penalty) << '\n';
    }
    return os.str();
}

inline void emit_summary(const SelectionReport& rep, std::ostream& os) { detail::write_checked(os, summary_text(rep)); }

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson key_json(const ConfigKey& k) { return ojson{{"l1i", k.l1i}, {"l1d", k.l1d}, {"l2", k.l2}, {"rf", k.rf}}; }

inline ojson level_json(const LevelStats& s)
{
    return ojson{{"accesses", s.accesses}, {"hits", s.hits}, {"misses", s.misses}, {"writebacks", s.writebacks}};
}

inline ConfigKey key_from(const ojson& j)
{
    return {j.at("l1i").get<std::uint64_t>(), j.at("l1d").get<std::uint64_t>(), j.at("l2").get<std::uint64_t>(),
            j.at("rf").get<unsigned>()};
}

inline LevelStats level_from(const ojson& j)
{
    return {j.at("accesses").get<std::uint64_t>(), j.at("hits").get<std::uint64_t>(),
            j.at("misses").get<std::uint64_t>(), j.at("writebacks").get<std::uint64_t>()};
}

} // namespace detail

inline nlohmann::ordered_json result_json(const ConfigResult& r)
{
    using detail::ojson;
    ojson area{{"bits", r.area.bits}, {"mm2", nullptr}};
    if (r.area.mm2)
        area["mm2"] = *r.area.mm2;
    return ojson{
        {"key", detail::key_json(r.key)},
        {"latency_cycles", {{"l1", r.l1_latency_cycles}, {"l2", r.l2_latency_cycles}, {"mem", r.mem_latency_cycles}}},
        {"cycles", r.cycles},
        {"instructions", r.instructions},
        {"cache",
         {{"l1i", detail::level_json(r.cache.l1i)},
          {"l1d", detail::level_json(r.cache.l1d)},
          {"l2", detail::level_json(r.cache.l2)}}},
        {"stall_rename", r.stall_rename},
        {"stall_rob", r.stall_rob},
        {"stall_mem", r.stall_mem},
        {"penalty", r.penalty},
        {"area", area},
        {"perf_per_area", r.perf_per_area},
    };
}

inline ConfigResult result_from_json(const nlohmann::ordered_json& j)
{
    ConfigResult r;
    r.key = detail::key_from(j.at("key"));
    const auto& lat = j.at("latency_cycles");
    r.l1_latency_cycles = lat.at("l1").get<unsigned>();
    r.l2_latency_cycles = lat.at("l2").get<unsigned>();
    r.mem_latency_cycles = lat.at("mem").get<unsigned>();
    r.cycles = j.at("cycles").get<std::uint64_t>();
    r.instructions = j.at("instructions").get<std::uint64_t>();
    const auto& c = j.at("cache");
    r.cache = {detail::level_from(c.at("l1i")), detail::level_from(c.at("l1d")), detail::level_from(c.at("l2"))};
    r.stall_rename = j.at("stall_rename").get<std::uint64_t>();
    r.stall_rob = j.at("stall_rob").get<std::uint64_t>();
    r.stall_mem = j.at("stall_mem").get<std::uint64_t>();
    r.penalty = j.at("penalty").get<double>();
    r.area.bits = j.at("area").at("bits").get<std::uint64_t>();
    if (!j.at("area").at("mm2").is_null())
        r.area.mm2 = j.at("area").at("mm2").get<double>();
    r.perf_per_area = j.at("perf_per_area").get<double>();
    return r;
}

/// Key order is fixed: format, protocol, epsilon, best, optimum, phases, curves, results.
inline nlohmann::ordered_json report_json(const SelectionReport& rep)
{
    using detail::ojson;
    ojson phases = ojson::array();
    for (const auto& p : rep.phases)
        phases.push_back({{"name", p.name}, {"best", detail::key_json(p.best)}, {"optimum", detail::key_json(p.optimum)}});

    ojson curves = ojson::array();
    for (const auto& c : rep.curves) {
        ojson pts = ojson::array();
        for (const auto& p : c.points)
            pts.push_back({{"size", p.size},
                           {"cycles", p.cycles},
                           {"penalty", p.penalty},
                           {"area", p.area},
                           {"perf_per_area", p.perf_per_area}});
        curves.push_back({{"dimension", to_string(c.dimension)},
                          {"best_index", c.best_index},
                          {"optimum_index", c.optimum_index},
                          {"half_index", c.half_index},
                          {"points", pts}});
    }

    ojson results = ojson::array();
    for (const auto& r : rep.results)
        results.push_back(result_json(r));

    return ojson{{"format", kReportFormat},
                 {"protocol", to_string(rep.protocol)},
                 {"epsilon", rep.epsilon},
                 {"best", detail::key_json(rep.best)},
                 {"optimum", detail::key_json(rep.optimum)},
                 {"phases", phases},
                 {"curves", curves},
                 {"results", results}};
}

inline void emit_curves_json(const SelectionReport& rep, std::ostream& os)
{
    detail::write_checked(os, report_json(rep).dump(2) + "\n");
}

inline SelectionReport load_report_json(std::istream& in)
{
    try {
        const auto j = nlohmann::ordered_json::parse(in);
        if (j.at("format").get<std::string>() != kReportFormat)
            throw ValidationError("unsupported report format '" + j.at("format").get<std::string>() + "'");
        SelectionReport rep;
        rep.protocol = parse_protocol(j.at("protocol").get<std::string>());
        rep.epsilon = j.at("epsilon").get<double>();
        rep.best = detail::key_from(j.at("best"));
        rep.optimum = detail::key_from(j.at("optimum"));
        for (const auto& p : j.at("phases"))
            rep.phases.push_back(
                {p.at("name").get<std::string>(), detail::key_from(p.at("best")), detail::key_from(p.at("optimum"))});
        for (const auto& c : j.at("curves")) {
            CurveSeries s;
            s.dimension = parse_dimension(c.at("dimension").get<std::string>());
            s.best_index = c.at("best_index").get<std::size_t>();
            s.optimum_index = c.at("optimum_index").get<std::size_t>();
            s.half_index = c.at("half_index").get<std::size_t>();
            for (const auto& p : c.at("points"))
                s.points.push_back({p.at("size").get<std::uint64_t>(), p.at("cycles").get<std::uint64_t>(),
                                    p.at("penalty").get<double>(), p.at("area").get<std::uint64_t>(),
                                    p.at("perf_per_area").get<double>()});
            if (!s.points.empty() && (s.best_index >= s.points.size() || s.optimum_index >= s.points.size() ||
                                      s.half_index >= s.points.size()))
                throw ValidationError("curve annotation index out of range");
            rep.curves.push_back(std::move(s));
        }
        for (const auto& r : j.at("results"))
            rep.results.push_back(result_from_json(r));
        return rep;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed report JSON: ") + e.what());
    }
}

inline SelectionReport load_report_json(std::string_view text)
{
    std::istringstream in{std::string(text)};
    return load_report_json(in);
}

} // namespace knee_dse
