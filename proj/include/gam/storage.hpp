#pragma once

#include <filesystem>

#include "gam/memorizer.hpp"
#include "gam/pagestore.hpp"

namespace gam {

// On-disk layout: manifest.json (version, counts, checksums), pages.jsonl,
// memos.jsonl. Indexes are rebuilt deterministically on load.
struct StoreManifest {
    int version = 1;
    std::size_t page_count = 0;
    std::size_t memo_count = 0;
    std::size_t page_size = 2048;
    std::string checksum_pages;
    std::string checksum_memos;
};

void persist(const PageStore& store, const MemoryState& memory,
             const std::filesystem::path& dir, std::size_t page_size);

struct LoadedState {
    PageStore store;
    MemoryState memory;
    StoreManifest manifest;
};

LoadedState load(const std::filesystem::path& dir,
                 std::shared_ptr<const EmbeddingProvider> provider = nullptr,
                 bool index_headers = true);

bool store_exists(const std::filesystem::path& dir);

}  // namespace gam
