#pragma once

// Trace event model and the line-oriented text format:
//
//   T name=<string> seed=<u64>                       optional header
//   I <pc> <dst_regs> <srcs>                         non-memory instruction
//   L <pc> <addr> <size> <dst_regs> <srcs>           load
//   S <pc> <addr> <size> 0 <srcs>                    store
//   B / E                                            region begin / end
//
// pc and addr are 0x-prefixed hex, size is decimal, <srcs> is a comma list of
// register ids or `;` when empty. `#` starts a comment.

#include <knee_dse/errors.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace knee_dse {

inline constexpr unsigned kDefaultArchRegs = 16;
inline constexpr unsigned kMaxDstRegs = 2;
inline constexpr unsigned kMaxSrcRegs = 3;
inline constexpr unsigned kMaxAccessBytes = 64;

enum class EventKind : std::uint8_t { Instr, Load, Store, RegionBegin, RegionEnd };

struct TraceEvent
{
    EventKind kind = EventKind::Instr;
    std::uint64_t pc = 0;
    std::uint64_t addr = 0;
    std::uint8_t size = 0;
    std::uint8_t dst_regs = 0;
    std::uint8_t n_src = 0;
    std::array<std::uint8_t, kMaxSrcRegs> src{};

    bool is_memory() const noexcept { return kind == EventKind::Load || kind == EventKind::Store; }
    bool is_marker() const noexcept { return kind == EventKind::RegionBegin || kind == EventKind::RegionEnd; }
    std::span<const std::uint8_t> sources() const noexcept { return {src.data(), n_src}; }

    static TraceEvent instr(std::uint64_t pc, unsigned dst, std::initializer_list<unsigned> srcs = {})
    {
        TraceEvent e;
        e.kind = EventKind::Instr;
        e.pc = pc;
        e.dst_regs = static_cast<std::uint8_t>(dst);
        e.set_sources(srcs);
        return e;
    }

    static TraceEvent load(std::uint64_t pc, std::uint64_t addr, unsigned size, unsigned dst,
                           std::initializer_list<unsigned> srcs = {})
    {
        TraceEvent e;
        e.kind = EventKind::Load;
        e.pc = pc;
        e.addr = addr;
        e.size = static_cast<std::uint8_t>(size);
        e.dst_regs = static_cast<std::uint8_t>(dst);
        e.set_sources(srcs);
        return e;
    }

    static TraceEvent store(std::uint64_t pc, std::uint64_t addr, unsigned size,
                            std::initializer_list<unsigned> srcs = {})
    {
        TraceEvent e;
        e.kind = EventKind::Store;
        e.pc = pc;
        e.addr = addr;
        e.size = static_cast<std::uint8_t>(size);
        e.set_sources(srcs);
        return e;
    }

    static TraceEvent marker(EventKind k)
    {
        TraceEvent e;
        e.kind = k;
        return e;
    }

    void set_sources(std::span<const unsigned> ids)
    {
        if (ids.size() > kMaxSrcRegs)
            throw ValidationError("at most 3 source registers per event");
        n_src = static_cast<std::uint8_t>(ids.size());
        src = {};
        std::transform(ids.begin(), ids.end(), src.begin(), [](unsigned v) { return static_cast<std::uint8_t>(v); });
    }
    void set_sources(std::initializer_list<unsigned> ids) { set_sources(std::span<const unsigned>(ids.begin(), ids.size())); }

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct TraceMeta
{
    std::string name;
    std::optional<std::uint64_t> seed;
    /// Generator parameters or source filename; informational, not serialized.
    std::string source;
};

struct Trace
{
    std::vector<TraceEvent> events;
    TraceMeta meta;

    /// Events that are not region markers.
    std::size_t instruction_count() const
    {
        return static_cast<std::size_t>(
            std::count_if(events.begin(), events.end(), [](const TraceEvent& e) { return !e.is_marker(); }));
    }
};

/// Traces compare equal when events, name and seed match.
inline bool operator==(const Trace& a, const Trace& b)
{
    return a.events == b.events && a.meta.name == b.meta.name && a.meta.seed == b.meta.seed;
}

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t'))
            ++i;
        const std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t')
            ++i;
        if (i > start)
            out.push_back(s.substr(start, i - start));
    }
    return out;
}

inline bool has_hex_prefix(std::string_view tok)
{
    return tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X');
}

inline std::optional<std::uint64_t> parse_u64(std::string_view tok, int base)
{
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v, base);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        return std::nullopt;
    return v;
}

/// Hex address token: must carry the 0x prefix.
inline std::uint64_t parse_address(std::string_view tok, std::size_t line, const char* what)
{
    if (!has_hex_prefix(tok))
        throw ParseError(line, std::string("non-hex ") + what + " '" + std::string(tok) + "'");
    auto v = parse_u64(tok.substr(2), 16);
    if (!v)
        throw ParseError(line, std::string("non-hex ") + what + " '" + std::string(tok) + "'");
    return *v;
}

/// Small integer: 0x-hex or decimal.
inline std::uint64_t parse_int(std::string_view tok, std::size_t line, const char* what)
{
    auto v = has_hex_prefix(tok) ? parse_u64(tok.substr(2), 16) : parse_u64(tok, 10);
    if (!v)
        throw ParseError(line, std::string("bad ") + what + " '" + std::string(tok) + "'");
    return *v;
}

inline void parse_sources(TraceEvent& e, std::string_view tok, std::size_t line, unsigned arch_regs)
{
    e.n_src = 0;
    if (tok == ";")
        return;
    std::size_t pos = 0;
    while (pos <= tok.size()) {
        const auto comma = tok.find(',', pos);
        const auto piece = tok.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        if (e.n_src == kMaxSrcRegs)
            throw ParseError(line, "more than 3 source registers");
        const auto id = parse_int(piece, line, "source register");
        if (id >= arch_regs)
            throw ParseError(line, "source register " + std::to_string(id) + " >= architectural register count " +
                                       std::to_string(arch_regs));
        e.src[e.n_src++] = static_cast<std::uint8_t>(id);
        if (comma == std::string_view::npos)
            break;
        pos = comma + 1;
    }
}

inline unsigned parse_size(std::string_view tok, std::size_t line)
{
    const auto v = parse_u64(tok, 10);
    if (!v || *v == 0 || *v > kMaxAccessBytes || !std::has_single_bit(*v))
        throw ParseError(line, "access size must be a power of two in 1..64, got '" + std::string(tok) + "'");
    return static_cast<unsigned>(*v);
}

inline unsigned parse_dst(std::string_view tok, std::size_t line)
{
    const auto v = parse_int(tok, line, "destination count");
    if (v > kMaxDstRegs)
        throw ParseError(line, "destination count must be 0..2");
    return static_cast<unsigned>(v);
}

} // namespace detail

/// Parses the text trace format. Source register ids are checked against `arch_regs`.
inline Trace parse_trace(std::istream& in, unsigned arch_regs = kDefaultArchRegs)
{
    Trace trace;
    std::string raw;
    std::size_t line_no = 0;
    std::size_t open_line = 0;
    bool in_region = false;
    bool seen_event = false;

    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty())
            continue;

        const auto tok = detail::split_ws(line);
        const auto expect = [&](std::size_t n) {
            if (tok.size() != n)
                throw ParseError(line_no, "malformed '" + std::string(tok[0]) + "' record: expected " +
                                              std::to_string(n - 1) + " fields, got " + std::to_string(tok.size() - 1));
        };

        if (tok[0].size() != 1)
            throw ParseError(line_no, "unknown record kind '" + std::string(tok[0]) + "'");

        TraceEvent e;
        switch (tok[0][0]) {
        case 'T': {
            if (seen_event)
                throw ParseError(line_no, "header must precede all events");
            for (std::size_t i = 1; i < tok.size(); ++i) {
                const auto eq = tok[i].find('=');
                if (eq == std::string_view::npos)
                    throw ParseError(line_no, "malformed header field '" + std::string(tok[i]) + "'");
                const auto key = tok[i].substr(0, eq);
                const auto val = tok[i].substr(eq + 1);
                if (key == "name")
                    trace.meta.name = std::string(val);
                else if (key == "seed")
                    trace.meta.seed = detail::parse_int(val, line_no, "seed");
                else
                    throw ParseError(line_no, "unknown header field '" + std::string(key) + "'");
            }
            continue;
        }
        case 'B':
            expect(1);
            if (in_region)
                throw ParseError(line_no, "nested region markers");
            in_region = true;
            open_line = line_no;
            e.kind = EventKind::RegionBegin;
            break;
        case 'E':
            expect(1);
            if (!in_region)
                throw ParseError(line_no, "unbalanced region markers");
            in_region = false;
            e.kind = EventKind::RegionEnd;
            break;
        case 'I':
            expect(4);
            e.kind = EventKind::Instr;
            e.pc = detail::parse_address(tok[1], line_no, "pc");
            e.dst_regs = static_cast<std::uint8_t>(detail::parse_dst(tok[2], line_no));
            detail::parse_sources(e, tok[3], line_no, arch_regs);
            break;
        case 'L':
        case 'S':
            expect(6);
            e.kind = tok[0][0] == 'L' ? EventKind::Load : EventKind::Store;
            e.pc = detail::parse_address(tok[1], line_no, "pc");
            e.addr = detail::parse_address(tok[2], line_no, "address");
            e.size = static_cast<std::uint8_t>(detail::parse_size(tok[3], line_no));
            e.dst_regs = static_cast<std::uint8_t>(detail::parse_dst(tok[4], line_no));
            if (e.kind == EventKind::Store && e.dst_regs != 0)
                throw ParseError(line_no, "store must have 0 destinations");
            detail::parse_sources(e, tok[5], line_no, arch_regs);
            break;
        default:
            throw ParseError(line_no, "unknown record kind '" + std::string(tok[0]) + "'");
        }
        seen_event = true;
        trace.events.push_back(e);
    }
    if (in_region)
        throw ParseError(open_line, "unbalanced region markers: region opened here is never closed");
    return trace;
}

inline Trace parse_trace(std::string_view text, unsigned arch_regs = kDefaultArchRegs)
{
    std::istringstream in{std::string(text)};
    return parse_trace(in, arch_regs);
}

namespace detail {

inline void write_hex(std::ostream& os, std::uint64_t v)
{
    char buf[24];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, 16);
    os << "0x";
    os.write(buf, end - buf);
}

inline void write_sources(std::ostream& os, const TraceEvent& e)
{
    if (e.n_src == 0) {
        os << ';';
        return;
    }
    for (unsigned i = 0; i < e.n_src; ++i) {
        if (i)
            os << ',';
        os << static_cast<unsigned>(e.src[i]);
    }
}

} // namespace detail

/// Writes `trace` in the text format; the header is emitted when the trace has a name.
inline void write_trace(std::ostream& os, const Trace& trace)
{
    if (!trace.meta.name.empty()) {
        os << "T name=" << trace.meta.name << " seed=";
        detail::write_hex(os, trace.meta.seed.value_or(0));
        os << '\n';
    }
    for (const auto& e : trace.events) {
        switch (e.kind) {
        case EventKind::RegionBegin:
            os << "B\n";
            break;
        case EventKind::RegionEnd:
            os << "E\n";
            break;
        case EventKind::Instr:
            os << "I ";
            detail::write_hex(os, e.pc);
            os << ' ' << static_cast<unsigned>(e.dst_regs) << ' ';
            detail::write_sources(os, e);
            os << '\n';
            break;
        case EventKind::Load:
        case EventKind::Store:
            os << (e.kind == EventKind::Load ? "L " : "S ");
            detail::write_hex(os, e.pc);
            os << ' ';
            detail::write_hex(os, e.addr);
            os << ' ' << static_cast<unsigned>(e.size) << ' ' << static_cast<unsigned>(e.dst_regs) << ' ';
            detail::write_sources(os, e);
            os << '\n';
            break;
        }
    }
}

inline std::string to_text(const Trace& trace)
{
    std::ostringstream os;
    write_trace(os, trace);
    return os.str();
}

inline Trace read_trace_file(const std::filesystem::path& path, unsigned arch_regs = kDefaultArchRegs)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open trace '" + path.string() + "'");
    Trace t = parse_trace(in, arch_regs);
    if (t.meta.source.empty())
        t.meta.source = path.string();
    return t;
}

inline void write_trace_file(const std::filesystem::path& path, const Trace& trace)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot create trace '" + path.string() + "'");
    write_trace(out, trace);
    out.flush();
    if (!out)
        throw IoError("failed writing trace '" + path.string() + "'");
}

/// Destination registers are implicit in the trace format: the k-th destination
/// written since the start of replay targets architectural register k mod arch_regs.
/// Generators and the pipeline share this cursor so dependencies line up.
class DestinationCursor
{
public:
    explicit DestinationCursor(unsigned arch_regs = kDefaultArchRegs) : arch_regs_(arch_regs) {}

    unsigned take() noexcept
    {
        const unsigned r = next_;
        next_ = (next_ + 1) % arch_regs_;
        return r;
    }

    unsigned arch_regs() const noexcept { return arch_regs_; }

private:
    unsigned arch_regs_;
    unsigned next_ = 0;
};

/// Keeps only the events strictly inside region markers. A trace without markers
/// is returned unchanged; the result never contains markers.
inline Trace region_filter(const Trace& trace)
{
    const bool has_markers =
        std::any_of(trace.events.begin(), trace.events.end(), [](const TraceEvent& e) { return e.is_marker(); });
    if (!has_markers)
        return trace;

    Trace out;
    out.meta = trace.meta;
    bool inside = false;
    for (const auto& e : trace.events) {
        if (e.kind == EventKind::RegionBegin)
            inside = true;
        else if (e.kind == EventKind::RegionEnd)
            inside = false;
        else if (inside)
            out.events.push_back(e);
    }
    return out;
}

} // namespace knee_dse
