#pragma once

// Reference miss counter for a single LRU level, computed from per-set reuse
// distances rather than by maintaining cache state. Used to cross-check
// CacheLevel / CacheHierarchy.

#include <knee_dse/cache.hpp>

#include <cstdint>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace knee_dse {

/// Miss count for `addrs` replayed through one LRU level of geometry `g`.
/// An access hits iff fewer than `assoc` distinct lines of its set were touched
/// since the previous access to the same line.
inline std::uint64_t lru_oracle(std::span<const std::uint64_t> addrs, const CacheGeometry& g)
{
    g.validate();
    const std::uint64_t line_bytes = g.line_bytes;
    const std::uint64_t n_sets = g.sets();

    // Per-set history of line numbers, and each line's last position in it.
    std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> history;
    std::unordered_map<std::uint64_t, std::size_t> last_pos;
    std::unordered_set<std::uint64_t> distinct;

    std::uint64_t misses = 0;
    for (const std::uint64_t a : addrs) {
        const std::uint64_t line = a / line_bytes;
        auto& h = history[line % n_sets];
        const auto it = last_pos.find(line);
        if (it == last_pos.end()) {
            ++misses;
        } else {
            distinct.clear();
            for (std::size_t i = it->second + 1; i < h.size() && distinct.size() < g.assoc; ++i)
                distinct.insert(h[i]);
            if (distinct.size() >= g.assoc)
                ++misses;
        }
        last_pos[line] = h.size();
        h.push_back(line);
    }
    return misses;
}

} // namespace knee_dse
