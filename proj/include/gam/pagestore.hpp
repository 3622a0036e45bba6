#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gam/errors.hpp"

namespace gam {

using PageId = std::int64_t;

// A lossless store record: a contextual header decorating one session chunk.
struct Page {
    PageId id = 0;
    std::int64_t session_id = 0;
    std::string header;
    std::string content;
};

enum class RetrievalTool { bm25, embedding, page_id };

std::string to_string(RetrievalTool tool);
RetrievalTool retrieval_tool_from_string(const std::string& name);

struct RetrievalResult {
    PageId page_id = 0;
    double score = 0.0;
    RetrievalTool tool = RetrievalTool::bm25;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<float> embed(const std::string& text) const = 0;
};

// Deterministic offline embedder: signed feature hashing of bag-of-words
// counts into a fixed number of dimensions, L2-normalized. A dense-model
// provider plugs in behind the same interface.
class HashingEmbedder final : public EmbeddingProvider {
public:
    explicit HashingEmbedder(std::size_t dim = 256);
    std::size_t dimension() const override { return dim_; }
    std::vector<float> embed(const std::string& text) const override;

private:
    std::size_t dim_;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

// Append-only page storage with three retrieval tools: Okapi BM25 keyword
// search, direct id lookup, and embedding search over per-page vectors.
// Copying a store yields an independent snapshot; read counters stay shared
// so tests can observe store traffic across snapshots.
class PageStore {
public:
    explicit PageStore(std::shared_ptr<const EmbeddingProvider> provider = nullptr,
                       bool index_headers = true);

    PageId append(Page page);

    std::size_t size() const { return pages_.size(); }
    bool empty() const { return pages_.empty(); }
    const Page& page(PageId id) const;
    const std::vector<Page>& pages() const { return pages_; }
    bool contains(PageId id) const;

    struct Lookup {
        std::vector<Page> pages;     // found pages in requested order
        std::vector<PageId> missing; // ids with no page, in requested order
    };
    Lookup get_by_ids(std::span<const PageId> ids) const;

    std::vector<RetrievalResult> search_bm25(const std::string& query, std::size_t k) const;
    std::vector<RetrievalResult> search_embedding(const std::string& query, std::size_t k,
                                                  const EmbeddingProvider& provider) const;
    std::vector<RetrievalResult> search_embedding(const std::string& query, std::size_t k) const;

    double avg_doc_length() const;
    std::size_t doc_length(PageId id) const { return doc_lengths_.at(static_cast<std::size_t>(id)); }
    const Bm25Params& bm25_params() const { return params_; }
    bool index_headers() const { return index_headers_; }
    const EmbeddingProvider& provider() const { return *provider_; }
    std::shared_ptr<const EmbeddingProvider> provider_ptr() const { return provider_; }

    struct Posting {
        PageId page_id;
        std::uint32_t term_frequency;
    };
    // Posting list for one term, sorted by page id ascending; empty when the
    // term is unindexed. Exposed for index-consistency checks.
    std::span<const Posting> postings(const std::string& term) const;

    // The text a page is indexed and embedded under.
    std::string searchable_text(const Page& page) const;

    std::uint64_t read_count() const { return read_ops_->load(); }

private:
    std::vector<Page> pages_;
    std::map<std::string, std::vector<Posting>> index_;
    std::vector<std::size_t> doc_lengths_;
    std::size_t total_length_ = 0;
    std::vector<std::vector<float>> embeddings_;
    std::shared_ptr<const EmbeddingProvider> provider_;
    bool index_headers_ = true;
    Bm25Params params_;
    std::shared_ptr<std::atomic<std::uint64_t>> read_ops_;
};

}  // namespace gam
