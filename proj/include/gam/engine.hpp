#pragma once

#include <memory>
#include <mutex>

#include "gam/config.hpp"
#include "gam/memorizer.hpp"
#include "gam/pagestore.hpp"
#include "gam/researcher.hpp"
#include "gam/storage.hpp"

namespace gam {

// Owns the store, the memory and the backend. Writers stage a new store and
// publish it atomically, so readers always work on a consistent snapshot and
// research never blocks behind an ingest.
class Engine {
public:
    // Loads the store at config.store_path when one exists, else starts empty.
    explicit Engine(EngineConfig config);
    Engine(EngineConfig config, std::unique_ptr<ModelBackend> backend);

    struct IngestSummary {
        std::int64_t session_id = 0;
        std::vector<PageId> page_ids;
        std::size_t memos_added = 0;
    };

    // Single-writer: a second concurrent ingest fails with ConcurrentWrite
    // instead of queuing.
    IngestSummary ingest_session(const Session& session);

    ResearchResult research(const Request& request) const;
    ResearchResult research(const Request& request, const ResearcherConfig& overrides) const;

    // Writes manifest, pages and memos to config.store_path.
    void persist_store() const;

    std::shared_ptr<const PageStore> store_snapshot() const;
    std::shared_ptr<const MemoryState> memory_snapshot() const;
    const EngineConfig& config() const { return config_; }
    ModelBackend& backend() { return *backend_; }

private:
    void publish(std::shared_ptr<const PageStore> store,
                 std::shared_ptr<const MemoryState> memory);

    EngineConfig config_;
    std::unique_ptr<ModelBackend> backend_;
    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const PageStore> store_;
    std::shared_ptr<const MemoryState> memory_;
    std::mutex write_mutex_;
};

}  // namespace gam
