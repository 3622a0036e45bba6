#include "gam/pagestore.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "gam/text.hpp"

namespace gam {

std::string to_string(RetrievalTool tool) {
    switch (tool) {
        case RetrievalTool::bm25: return "bm25";
        case RetrievalTool::embedding: return "embedding";
        case RetrievalTool::page_id: return "page_id";
    }
    return "?";
}

RetrievalTool retrieval_tool_from_string(const std::string& name) {
    if (name == "bm25") return RetrievalTool::bm25;
    if (name == "embedding") return RetrievalTool::embedding;
    if (name == "page_id") return RetrievalTool::page_id;
    throw Error("unknown retrieval tool: " + name);
}

// --- HashingEmbedder ---

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) {
        throw Error("HashingEmbedder dimension must be positive");
    }
}

std::vector<float> HashingEmbedder::embed(const std::string& text) const {
    std::vector<float> vec(dim_, 0.0f);
    for (const auto& token : tokenize(text).tokens) {
        const std::uint64_t h = fnv1a64(token);
        const std::size_t slot = static_cast<std::size_t>(h % dim_);
        const float sign = ((h >> 32) & 1u) ? 1.0f : -1.0f;
        vec[slot] += sign;
    }
    double norm = 0.0;
    for (float v : vec) norm += static_cast<double>(v) * v;
    if (norm > 0.0) {
        const float inv = static_cast<float>(1.0 / std::sqrt(norm));
        for (float& v : vec) v *= inv;
    }
    return vec;
}

// --- PageStore ---

PageStore::PageStore(std::shared_ptr<const EmbeddingProvider> provider, bool index_headers)
    : provider_(provider ? std::move(provider) : std::make_shared<HashingEmbedder>()),
      index_headers_(index_headers),
      read_ops_(std::make_shared<std::atomic<std::uint64_t>>(0)) {}

std::string PageStore::searchable_text(const Page& page) const {
    if (!index_headers_ || page.header.empty()) {
        return page.content;
    }
    return page.header + " " + page.content;
}

PageId PageStore::append(Page page) {
    if (page.id != static_cast<PageId>(pages_.size())) {
        throw IdMismatch("page id " + std::to_string(page.id) + " does not match store count " +
                         std::to_string(pages_.size()));
    }
    const std::string text = searchable_text(page);
    const auto tokens = tokenize(text).tokens;

    std::unordered_map<std::string, std::uint32_t> freqs;
    for (const auto& token : tokens) {
        ++freqs[token];
    }
    for (const auto& [term, tf] : freqs) {
        index_[term].push_back({page.id, tf});
    }
    doc_lengths_.push_back(tokens.size());
    total_length_ += tokens.size();
    embeddings_.push_back(provider_->embed(text));
    pages_.push_back(std::move(page));
    return pages_.back().id;
}

const Page& PageStore::page(PageId id) const {
    read_ops_->fetch_add(1);
    if (id < 0 || static_cast<std::size_t>(id) >= pages_.size()) {
        throw Error("page id out of range: " + std::to_string(id));
    }
    return pages_[static_cast<std::size_t>(id)];
}

bool PageStore::contains(PageId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < pages_.size();
}

PageStore::Lookup PageStore::get_by_ids(std::span<const PageId> ids) const {
    read_ops_->fetch_add(1);
    Lookup lookup;
    for (PageId id : ids) {
        if (contains(id)) {
            lookup.pages.push_back(pages_[static_cast<std::size_t>(id)]);
        } else {
            lookup.missing.push_back(id);
        }
    }
    return lookup;
}

double PageStore::avg_doc_length() const {
    if (pages_.empty()) {
        return 0.0;
    }
    return static_cast<double>(total_length_) / static_cast<double>(pages_.size());
}

std::span<const PageStore::Posting> PageStore::postings(const std::string& term) const {
    const auto it = index_.find(term);
    if (it == index_.end()) {
        return {};
    }
    return it->second;
}

namespace {

std::vector<RetrievalResult> rank_top_k(std::vector<RetrievalResult> hits, std::size_t k) {
    std::sort(hits.begin(), hits.end(), [](const RetrievalResult& a, const RetrievalResult& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.page_id < b.page_id;
    });
    if (hits.size() > k) {
        hits.resize(k);
    }
    return hits;
}

}  // namespace

std::vector<RetrievalResult> PageStore::search_bm25(const std::string& query, std::size_t k) const {
    read_ops_->fetch_add(1);
    if (k == 0 || pages_.empty()) {
        return {};
    }
    const auto query_tokens = tokenize(query).tokens;
    if (query_tokens.empty()) {
        return {};
    }
    const double n_docs = static_cast<double>(pages_.size());
    const double avg_len = avg_doc_length();

    std::unordered_map<PageId, double> scores;
    for (const auto& term : query_tokens) {
        const auto it = index_.find(term);
        if (it == index_.end()) {
            continue;
        }
        const double df = static_cast<double>(it->second.size());
        const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
        for (const auto& posting : it->second) {
            const double tf = static_cast<double>(posting.term_frequency);
            const double len = static_cast<double>(doc_lengths_[static_cast<std::size_t>(posting.page_id)]);
            const double sat = (tf * (params_.k1 + 1.0)) /
                               (tf + params_.k1 * (1.0 - params_.b + params_.b * len / avg_len));
            scores[posting.page_id] += idf * sat;
        }
    }

    std::vector<RetrievalResult> hits;
    hits.reserve(scores.size());
    for (const auto& [id, score] : scores) {
        if (score > 0.0) {
            hits.push_back({id, score, RetrievalTool::bm25});
        }
    }
    return rank_top_k(std::move(hits), k);
}

std::vector<RetrievalResult> PageStore::search_embedding(const std::string& query, std::size_t k,
                                                         const EmbeddingProvider& provider) const {
    read_ops_->fetch_add(1);
    if (k == 0 || pages_.empty()) {
        return {};
    }
    if (provider.dimension() != provider_->dimension()) {
        throw DimensionMismatch("query provider dimension " + std::to_string(provider.dimension()) +
                                " does not match index dimension " +
                                std::to_string(provider_->dimension()));
    }
    const auto query_vec = provider.embed(query);
    double query_norm = 0.0;
    for (float v : query_vec) query_norm += static_cast<double>(v) * v;

    std::vector<RetrievalResult> hits;
    hits.reserve(pages_.size());
    for (std::size_t i = 0; i < pages_.size(); ++i) {
        const auto& page_vec = embeddings_[i];
        double dot = 0.0;
        double page_norm = 0.0;
        for (std::size_t d = 0; d < page_vec.size(); ++d) {
            dot += static_cast<double>(query_vec[d]) * page_vec[d];
            page_norm += static_cast<double>(page_vec[d]) * page_vec[d];
        }
        double score = 0.0;
        if (query_norm > 0.0 && page_norm > 0.0) {
            score = dot / (std::sqrt(query_norm) * std::sqrt(page_norm));
        }
        hits.push_back({pages_[i].id, score, RetrievalTool::embedding});
    }
    return rank_top_k(std::move(hits), k);
}

std::vector<RetrievalResult> PageStore::search_embedding(const std::string& query,
                                                         std::size_t k) const {
    return search_embedding(query, k, *provider_);
}

}  // namespace gam
