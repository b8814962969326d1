#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace hkg {

struct ChunkingConfig {
    std::size_t target_size = 1200;
    std::size_t overlap = 200;
    // Tried in order; the first marker that ends inside the cut window wins.
    std::vector<std::string> boundary_markers = {"\n\n", ". ", "! ", "? ", ".\n", "!\n", "?\n"};

    // Throws InvalidInput unless 0 <= overlap < target_size and every marker is non-empty.
    void validate() const;
};

struct Chunk {
    std::string id;
    std::string text;
    // [start, end) byte offsets into the source document.
    std::size_t start = 0;
    std::size_t end = 0;

    friend bool operator==(const Chunk&, const Chunk&) = default;
};

// Splits at natural boundaries with `overlap` bytes of shared context between neighbours.
// Offsets are byte offsets; hard cuts never split a UTF-8 sequence.
std::vector<Chunk> chunk_document(std::string_view document, const ChunkingConfig& config);

}  // namespace hkg
