// knee_dse command-line front end: gen, sim, sweep, report.
//
// Exit codes: 0 success, 1 validation, 2 I/O, 3 calibration.

#include <knee_dse/knee_dse.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace knee_dse;

namespace {

enum Exit : int { kOk = 0, kValidation = 1, kIo = 2, kCalibration = 3 };

struct GenArgs
{
    std::string kind;
    std::uint64_t ws = 32768;
    std::uint64_t node = 64;
    std::uint64_t footprint = 65536;
    std::uint64_t stride = 64;
    std::uint64_t table = 1 << 20;
    std::uint64_t flows = 4096;
    std::uint64_t n = 100000;
    std::uint64_t seed = 1;
    unsigned instr_per_mem = 2;
    unsigned arch_regs = kDefaultArchRegs;
    std::string out;
};

struct SweepOverrides
{
    std::vector<std::uint64_t> l1_sizes, l2_sizes, l1i_sizes, l1d_sizes;
    std::vector<unsigned> rf_sizes;
    bool split_l1 = false;
    bool two_phase = false;
    bool joint = false;
    std::optional<double> epsilon;
    std::optional<unsigned> jobs;
};

struct RunArgs
{
    std::string config;
    std::string trace;
    std::string out_dir;
    std::string in;
    bool csv = false;
    SweepOverrides sweep;
};

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw IoError("cannot create '" + p.string() + "'");
    out << text;
    out.flush();
    if (!out)
        throw IoError("failed writing '" + p.string() + "'");
}

int cmd_gen(const GenArgs& a)
{
    GenOptions opt;
    opt.instr_per_mem = a.instr_per_mem;
    opt.arch_regs = a.arch_regs;
    Trace t;
    if (a.kind == "chase")
        t = gen_pointer_chase(a.ws, a.node, a.n, a.seed, opt);
    else if (a.kind == "stream")
        t = gen_streaming(a.footprint, a.stride, a.n, a.seed, opt);
    else
        t = gen_hash_lookup(a.table, a.flows, a.n, a.seed, opt);

    if (a.out.empty() || a.out == "-")
        write_trace(std::cout, t);
    else
        write_trace_file(a.out, t);
    return kOk;
}

RunConfig load_run(const RunArgs& a, std::shared_ptr<const Trace>& trace)
{
    if (!fs::exists(a.config))
        throw IoError("config file '" + a.config + "' does not exist");
    RunConfig cfg = load_config(a.config);
    fs::path trace_path;
    if (!a.trace.empty())
        trace_path = a.trace;
    else if (cfg.trace_path)
        trace_path = *cfg.trace_path;
    else
        throw ValidationError("no trace given (use --trace or the config's \"trace\" key)");
    trace = std::make_shared<const Trace>(read_trace_file(trace_path, cfg.pipeline.arch_regs));
    return cfg;
}

int cmd_sim(const RunArgs& a)
{
    std::shared_ptr<const Trace> trace;
    const RunConfig cfg = load_run(a, trace);
    const HierarchyConfig h = with_model_latencies(cfg.hierarchy, cfg.timing);
    const ConfigResult r = simulate(*trace, cfg.pipeline, h, cfg.timing);
    std::cout << result_json(r).dump(2) << '\n';
    return kOk;
}

int cmd_sweep(const RunArgs& a)
{
    std::shared_ptr<const Trace> trace;
    RunConfig cfg = load_run(a, trace);
    SweepSpec& s = cfg.sweep;
    const SweepOverrides& o = a.sweep;
    if (!o.l1_sizes.empty())
        s.l1_sizes = o.l1_sizes;
    if (!o.l2_sizes.empty())
        s.l2_sizes = o.l2_sizes;
    if (!o.rf_sizes.empty())
        s.rf_sizes = o.rf_sizes;
    if (o.split_l1)
        s.split_l1 = true;
    if (!o.l1i_sizes.empty())
        s.l1i_sizes = o.l1i_sizes;
    if (!o.l1d_sizes.empty())
        s.l1d_sizes = o.l1d_sizes;
    if (o.two_phase)
        s.protocol = Protocol::TwoPhase;
    if (o.joint)
        s.protocol = Protocol::Joint;
    if (o.epsilon)
        s.epsilon = *o.epsilon;
    if (o.jobs)
        s.jobs = *o.jobs;
    s.trace = trace;

    const SelectionReport rep = explore(s);

    const fs::path dir(a.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    write_file(dir / "results.csv", csv_text(rep));
    write_file(dir / "curves.json", report_json(rep).dump(2) + "\n");
    const std::string summary = summary_text(rep);
    write_file(dir / "summary.txt", summary);
    std::cout << summary;
    return kOk;
}

int cmd_report(const RunArgs& a)
{
    std::ifstream in(a.in);
    if (!in)
        throw IoError("cannot open '" + a.in + "'");
    const SelectionReport rep = load_report_json(in);
    if (a.csv)
        emit_csv(rep, std::cout);
    else
        emit_summary(rep, std::cout);
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Cache and register-file design-space exploration"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a synthetic trace");
    g->add_option("kind", gen.kind, "chase, stream or hash")->required()->check(CLI::IsMember({"chase", "stream", "hash"}));
    g->add_option("--ws", gen.ws, "Pointer-chase working set (bytes)");
    g->add_option("--node", gen.node, "Pointer-chase node size (bytes)");
    g->add_option("--footprint", gen.footprint, "Streaming footprint (bytes)");
    g->add_option("--stride", gen.stride, "Streaming stride (bytes)");
    g->add_option("--table", gen.table, "Hash table size (bytes)");
    g->add_option("--flows", gen.flows, "Number of distinct flows");
    g->add_option("--n", gen.n, "Memory events to emit");
    g->add_option("--seed", gen.seed, "RNG seed");
    g->add_option("--instr-per-mem", gen.instr_per_mem, "Non-memory instructions per memory event");
    g->add_option("--arch-regs", gen.arch_regs, "Architectural registers");
    g->add_option("-o,--out", gen.out, "Output trace path (stdout if omitted)");

    RunArgs run;
    auto* sim = app.add_subcommand("sim", "Simulate one configuration and print the result as JSON");
    sim->add_option("--config", run.config, "JSON config file")->required();
    sim->add_option("--trace", run.trace, "Trace file (overrides the config)");

    auto* sw = app.add_subcommand("sweep", "Sweep the design space and write results.csv, curves.json, summary.txt");
    sw->add_option("--config", run.config, "JSON config file")->required();
    sw->add_option("--trace", run.trace, "Trace file (overrides the config)");
    auto* two = sw->add_flag("--two-phase", run.sweep.two_phase, "Caches first, then RF at the best caches");
    auto* joint = sw->add_flag("--joint", run.sweep.joint, "Full cartesian sweep");
    two->excludes(joint);
    sw->add_option("--epsilon", run.sweep.epsilon, "Penalty tolerance for the optimum");
    sw->add_option("--jobs", run.sweep.jobs, "Worker threads (0 = all cores)")->envname("KNEE_DSE_JOBS");
    sw->add_option("--l1-sizes", run.sweep.l1_sizes, "L1 sizes in bytes")->delimiter(',');
    sw->add_option("--l2-sizes", run.sweep.l2_sizes, "L2 sizes in bytes")->delimiter(',');
    sw->add_option("--rf-sizes", run.sweep.rf_sizes, "Physical register counts")->delimiter(',');
    sw->add_flag("--split-l1", run.sweep.split_l1, "Sweep L1I and L1D independently");
    sw->add_option("--l1i-sizes", run.sweep.l1i_sizes, "L1I sizes in bytes (with --split-l1)")->delimiter(',');
    sw->add_option("--l1d-sizes", run.sweep.l1d_sizes, "L1D sizes in bytes (with --split-l1)")->delimiter(',');
    sw->add_option("-o,--out-dir", run.out_dir, "Output directory")->required();

    auto* rep = app.add_subcommand("report", "Print the summary (or CSV) of a saved curves.json");
    rep->add_option("--in", run.in, "curves.json from a sweep")->required();
    rep->add_flag("--csv", run.csv, "Print the results CSV instead of the summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (*g)
            return cmd_gen(gen);
        if (*sim)
            return cmd_sim(run);
        if (*sw)
            return cmd_sweep(run);
        return cmd_report(run);
    } catch (const CalibrationError& e) {
        std::cerr << "calibration error: " << e.what() << '\n';
        return kCalibration;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    }
}
