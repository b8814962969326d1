#include "hyperkg/chunker.hpp"

#include <algorithm>
#include <optional>

#include "hyperkg/error.hpp"

namespace hkg {

namespace {

bool is_continuation(std::string_view doc, std::size_t pos) {
    return pos < doc.size() && (static_cast<unsigned char>(doc[pos]) & 0xC0) == 0x80;
}

// Cut position just past the last marker occurrence that ends in [lo, hi] and starts at or
// after `floor`, trying markers in order.
std::optional<std::size_t> find_boundary(std::string_view doc, std::size_t floor, std::size_t lo,
                                         std::size_t hi, const std::vector<std::string>& markers) {
    for (const auto& marker : markers) {
        const std::size_t m = marker.size();
        if (m > hi || m > doc.size()) continue;
        const std::size_t first = std::max(floor, lo >= m ? lo - m : 0);
        const std::size_t last = std::min(hi - m, doc.size() - m);
        if (last < first) continue;
        std::size_t pos = doc.rfind(marker, last);
        if (pos != std::string_view::npos && pos >= first) return pos + m;
    }
    return std::nullopt;
}

}  // namespace

void ChunkingConfig::validate() const {
    if (target_size == 0) throw InvalidInput("chunk.target_size must be positive");
    if (overlap >= target_size)
        throw InvalidInput("chunk.overlap must be smaller than chunk.target_size");
    for (const auto& m : boundary_markers)
        if (m.empty()) throw InvalidInput("chunk.boundary_markers must not contain empty markers");
}

std::vector<Chunk> chunk_document(std::string_view document, const ChunkingConfig& config) {
    config.validate();
    if (document.empty()) throw InvalidInput("cannot chunk an empty document");

    const std::size_t n = document.size();
    const std::size_t target = config.target_size;
    const std::size_t overlap = config.overlap;
    // Cuts land in [start + window_lo, start + target]. Raising the floor above `overlap` keeps
    // the next start ahead of this one.
    const std::size_t window_lo = std::max(target - overlap, overlap + 1);

    std::vector<Chunk> chunks;
    std::size_t start = 0;
    while (true) {
        std::size_t end;
        if (n - start <= target) {
            end = n;
        } else if (auto b = find_boundary(document, start, start + window_lo, start + target,
                                          config.boundary_markers)) {
            end = *b;
        } else {
            end = start + target;
            while (end > start + 1 && is_continuation(document, end)) --end;
        }
        chunks.push_back({"c" + std::to_string(chunks.size()),
                          std::string(document.substr(start, end - start)), start, end});
        if (end >= n) break;

        std::size_t next = end > overlap ? end - overlap : 0;
        while (next > 0 && is_continuation(document, next)) --next;
        if (next <= start) {
            next = start + 1;
            while (next < end && is_continuation(document, next)) ++next;
        }
        start = next;
    }
    return chunks;
}

}  // namespace hkg
