#include "gam/engine.hpp"

namespace gam {

Engine::Engine(EngineConfig config) : Engine(std::move(config), nullptr) {}

Engine::Engine(EngineConfig config, std::unique_ptr<ModelBackend> backend)
    : config_(std::move(config)), backend_(std::move(backend)) {
    if (!backend_) {
        backend_ = make_backend(config_);
    }
    if (store_exists(config_.store_path)) {
        auto loaded = load(config_.store_path);
        store_ = std::make_shared<const PageStore>(std::move(loaded.store));
        memory_ = std::make_shared<const MemoryState>(std::move(loaded.memory));
        config_.page_size = loaded.manifest.page_size;
    } else {
        store_ = std::make_shared<const PageStore>();
        memory_ = std::make_shared<const MemoryState>();
    }
}

void Engine::publish(std::shared_ptr<const PageStore> store,
                     std::shared_ptr<const MemoryState> memory) {
    std::lock_guard lock(snapshot_mutex_);
    store_ = std::move(store);
    memory_ = std::move(memory);
}

std::shared_ptr<const PageStore> Engine::store_snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return store_;
}

std::shared_ptr<const MemoryState> Engine::memory_snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return memory_;
}

Engine::IngestSummary Engine::ingest_session(const Session& session) {
    std::unique_lock write_lock(write_mutex_, std::try_to_lock);
    if (!write_lock.owns_lock()) {
        throw ConcurrentWrite("another ingest is already in flight");
    }

    // Readers keep the published snapshot while the new store is staged.
    PageStore working = *store_snapshot();
    const auto memory = memory_snapshot();
    auto result = ingest(session, *memory, working, *backend_, memorizer_config(config_));

    IngestSummary summary;
    summary.session_id = session.id;
    summary.page_ids = result.page_ids;
    summary.memos_added = result.memory.size() - memory->size();

    publish(std::make_shared<const PageStore>(std::move(working)),
            std::make_shared<const MemoryState>(std::move(result.memory)));
    return summary;
}

ResearchResult Engine::research(const Request& request) const {
    return research(request, researcher_config(config_));
}

ResearchResult Engine::research(const Request& request, const ResearcherConfig& overrides) const {
    const auto store = store_snapshot();
    const auto memory = memory_snapshot();
    return gam::research(request, *memory, *store, *backend_, overrides);
}

void Engine::persist_store() const {
    const auto store = store_snapshot();
    const auto memory = memory_snapshot();
    persist(*store, *memory, config_.store_path, config_.page_size);
}

}  // namespace gam
