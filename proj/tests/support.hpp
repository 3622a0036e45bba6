#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gam/backend.hpp"
#include "gam/pagestore.hpp"
#include "gam/text.hpp"

namespace gamtest {

inline gam::Page make_page(gam::PageId id, std::int64_t session_id, std::string header,
                           std::string content) {
    gam::Page page;
    page.id = id;
    page.session_id = session_id;
    page.header = std::move(header);
    page.content = std::move(content);
    return page;
}

inline gam::ScriptRule rule(std::string pattern, std::string response,
                            gam::ScriptRule::Match match = gam::ScriptRule::Match::substring) {
    gam::ScriptRule out;
    out.pattern = std::move(pattern);
    out.match = match;
    out.response = std::move(response);
    return out;
}

inline gam::ScriptRule rule_once(std::string pattern, std::string response) {
    gam::ScriptRule out = rule(std::move(pattern), std::move(response));
    out.max_uses = 1;
    return out;
}

// Wraps another backend and keeps every exchange, so tests can inspect the
// prompts an operation actually sent.
class RecordingBackend final : public gam::ModelBackend {
public:
    explicit RecordingBackend(gam::ModelBackend& inner) : inner_(inner) {}

    std::string complete(const gam::ChatExchange& exchange) override {
        {
            std::lock_guard lock(mutex_);
            exchanges_.push_back(exchange);
        }
        return inner_.complete(exchange);
    }

    std::vector<gam::ChatExchange> exchanges() const {
        std::lock_guard lock(mutex_);
        return exchanges_;
    }

    const gam::ChatExchange& last() const {
        std::lock_guard lock(mutex_);
        if (exchanges_.empty()) throw std::runtime_error("no exchanges recorded");
        return exchanges_.back();
    }

private:
    mutable std::mutex mutex_;
    gam::ModelBackend& inner_;
    std::vector<gam::ChatExchange> exchanges_;
};

// Hands an owning interface to a backend that lives on the test's stack.
class BorrowedBackend final : public gam::ModelBackend {
public:
    explicit BorrowedBackend(gam::ModelBackend& inner) : inner_(inner) {}

    std::string complete(const gam::ChatExchange& exchange) override {
        return inner_.complete(exchange);
    }

private:
    gam::ModelBackend& inner_;
};

// Blocks completions matching a trigger substring until release() is called;
// used to hold an ingest mid-flight while reads are probed.
class GatedBackend final : public gam::ModelBackend {
public:
    GatedBackend(gam::ModelBackend& inner, std::string trigger)
        : inner_(inner), trigger_(std::move(trigger)) {}

    std::string complete(const gam::ChatExchange& exchange) override {
        if (exchange.last_user_message().find(trigger_) != std::string::npos) {
            std::unique_lock lock(mutex_);
            ++waiting_;
            cv_.notify_all();
            cv_.wait(lock, [this] { return released_; });
        }
        return inner_.complete(exchange);
    }

    // Waits until a completion is parked on the gate.
    void await_blocked() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [this] { return waiting_ > 0; });
    }

    void release() {
        std::lock_guard lock(mutex_);
        released_ = true;
        cv_.notify_all();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    gam::ModelBackend& inner_;
    std::string trigger_;
    int waiting_ = 0;
    bool released_ = false;
};

// From-scratch Okapi BM25 over raw pages, mirroring the store's scoring
// contract: searchable text is header + " " + content (content alone when the
// header is empty), contributions accumulate per query token in order, ranking
// is score descending with ties broken by ascending page id.
inline std::vector<gam::RetrievalResult> bm25_oracle(const std::vector<gam::Page>& pages,
                                                     const std::string& query, std::size_t k,
                                                     double k1 = 1.2, double b = 0.75) {
    if (k == 0 || pages.empty()) return {};
    const auto query_tokens = gam::tokenize(query).tokens;
    if (query_tokens.empty()) return {};

    std::vector<std::vector<std::string>> docs;
    docs.reserve(pages.size());
    std::size_t total_length = 0;
    for (const auto& page : pages) {
        const std::string text =
            page.header.empty() ? page.content : page.header + " " + page.content;
        docs.push_back(gam::tokenize(text).tokens);
        total_length += docs.back().size();
    }
    const double n_docs = static_cast<double>(pages.size());
    const double avg_len = static_cast<double>(total_length) / static_cast<double>(pages.size());

    std::map<gam::PageId, double> scores;
    for (const auto& term : query_tokens) {
        std::vector<std::pair<gam::PageId, double>> postings;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            double tf = 0.0;
            for (const auto& token : docs[i]) {
                if (token == term) tf += 1.0;
            }
            if (tf > 0.0) postings.emplace_back(pages[i].id, tf);
        }
        if (postings.empty()) continue;
        const double df = static_cast<double>(postings.size());
        const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
        for (const auto& [page_id, tf] : postings) {
            const double len = static_cast<double>(docs[static_cast<std::size_t>(page_id)].size());
            const double sat =
                (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * len / avg_len));
            scores[page_id] += idf * sat;
        }
    }

    std::vector<gam::RetrievalResult> hits;
    for (const auto& [id, score] : scores) {
        if (score > 0.0) hits.push_back({id, score, gam::RetrievalTool::bm25});
    }
    std::sort(hits.begin(), hits.end(),
              [](const gam::RetrievalResult& a, const gam::RetrievalResult& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.page_id < b.page_id;
              });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

// Deterministic word soup for randomized corpora.
class TextGen {
public:
    explicit TextGen(std::uint32_t seed) : rng_(seed) {
        static const char* const stems[] = {
            "amber", "basin",  "cedar",  "delta",  "ember",  "fjord", "garnet", "harbor",
            "inlet", "juniper", "kestrel", "lagoon", "marble", "nectar", "onyx",  "prairie",
            "quartz", "ridge",  "summit", "tundra", "umber",  "violet", "willow", "xenon",
            "yonder", "zephyr", "anchor", "breeze", "copper", "drift"};
        for (const char* stem : stems) {
            vocab_.emplace_back(stem);
            vocab_.push_back(std::string(stem) + "s");
            vocab_.push_back(std::string(stem) + "ine");
            vocab_.push_back(std::string(stem) + "42");
        }
    }

    const std::string& word() { return vocab_[rng_() % vocab_.size()]; }

    std::string words(std::size_t min_count, std::size_t max_count) {
        const std::size_t count = min_count + rng_() % (max_count - min_count + 1);
        std::string out;
        for (std::size_t i = 0; i < count; ++i) {
            if (!out.empty()) out += ' ';
            out += word();
        }
        return out;
    }

    std::mt19937& rng() { return rng_; }

private:
    std::mt19937 rng_;
    std::vector<std::string> vocab_;
};

// A scratch directory removed when the guard leaves scope.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("gam-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }

    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

}  // namespace gamtest
