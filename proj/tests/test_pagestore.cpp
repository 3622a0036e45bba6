#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "gam/pagestore.hpp"
#include "gam/text.hpp"
#include "support.hpp"

using namespace gam;

namespace {

PageStore fruit_store() {
    PageStore store;
    store.append(gamtest::make_page(0, 1, "", "apple banana"));
    store.append(gamtest::make_page(1, 1, "", "apple apple"));
    store.append(gamtest::make_page(2, 1, "", "cherry"));
    return store;
}

}  // namespace

TEST_CASE("append enforces dense sequential ids") {
    PageStore store;
    CHECK(store.append(gamtest::make_page(0, 1, "", "first")) == 0);
    CHECK(store.append(gamtest::make_page(1, 1, "", "second")) == 1);
    CHECK_THROWS_AS(store.append(gamtest::make_page(5, 1, "", "gap")), IdMismatch);
    CHECK_THROWS_AS(store.append(gamtest::make_page(1, 1, "", "repeat")), IdMismatch);
    CHECK(store.size() == 2);
}

TEST_CASE("page lookup returns the stored record or throws") {
    auto store = fruit_store();
    CHECK(store.page(1).content == "apple apple");
    CHECK(store.contains(2));
    CHECK(!store.contains(3));
    CHECK(!store.contains(-1));
    CHECK_THROWS_AS(store.page(3), Error);
    CHECK_THROWS_AS(store.page(-1), Error);
}

TEST_CASE("get_by_ids preserves request order and reports misses") {
    auto store = fruit_store();
    const std::vector<PageId> ids = {2, 99, 0, -4};
    const auto lookup = store.get_by_ids(ids);
    REQUIRE(lookup.pages.size() == 2);
    CHECK(lookup.pages[0].id == 2);
    CHECK(lookup.pages[1].id == 0);
    CHECK(lookup.missing == std::vector<PageId>{99, -4});
}

TEST_CASE("average document length counts searchable tokens") {
    auto store = fruit_store();
    CHECK(store.avg_doc_length() == 5.0 / 3.0);
    CHECK(store.doc_length(0) == 2);
    CHECK(store.doc_length(2) == 1);
    CHECK(PageStore().avg_doc_length() == 0.0);
}

TEST_CASE("bm25 ranks the fruit corpus as expected") {
    auto store = fruit_store();
    const auto hits = store.search_bm25("apple", 5);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].page_id == 1);
    CHECK(hits[1].page_id == 0);
    CHECK(hits[0].tool == RetrievalTool::bm25);

    const double avg_len = 5.0 / 3.0;
    const double idf = std::log(1.0 + (3.0 - 2.0 + 0.5) / (2.0 + 0.5));
    const double sat_d1 =
        (2.0 * 2.2) / (2.0 + 1.2 * (1.0 - 0.75 + 0.75 * 2.0 / avg_len));
    const double sat_d0 =
        (1.0 * 2.2) / (1.0 + 1.2 * (1.0 - 0.75 + 0.75 * 2.0 / avg_len));
    CHECK(hits[0].score == doctest::Approx(idf * sat_d1).epsilon(1e-12));
    CHECK(hits[1].score == doctest::Approx(idf * sat_d0).epsilon(1e-12));
}

TEST_CASE("bm25 excludes documents without query terms") {
    auto store = fruit_store();
    for (const auto& hit : store.search_bm25("apple banana", 5)) {
        CHECK(hit.page_id != 2);
    }
}

TEST_CASE("bm25 breaks score ties by ascending page id") {
    PageStore store;
    store.append(gamtest::make_page(0, 1, "", "twin words here"));
    store.append(gamtest::make_page(1, 1, "", "twin words here"));
    const auto hits = store.search_bm25("twin", 5);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].page_id == 0);
    CHECK(hits[1].page_id == 1);
    CHECK(hits[0].score == hits[1].score);
}

TEST_CASE("repeated query tokens accumulate rather than dedupe") {
    auto store = fruit_store();
    const auto once = store.search_bm25("apple", 5);
    const auto twice = store.search_bm25("apple apple", 5);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
        CHECK(twice[i].page_id == once[i].page_id);
        CHECK(twice[i].score == doctest::Approx(2.0 * once[i].score).epsilon(1e-12));
    }
}

TEST_CASE("bm25 degenerate inputs yield no hits") {
    auto store = fruit_store();
    CHECK(store.search_bm25("zzz", 5).empty());
    CHECK(store.search_bm25("", 5).empty());
    CHECK(store.search_bm25("...", 5).empty());
    CHECK(store.search_bm25("apple", 0).empty());
    CHECK(PageStore().search_bm25("apple", 5).empty());
}

TEST_CASE("bm25 truncates to k") {
    auto store = fruit_store();
    const auto hits = store.search_bm25("apple", 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].page_id == 1);
}

TEST_CASE("headers join the indexed text with a space") {
    PageStore store;
    store.append(gamtest::make_page(0, 1, "lighthouse notes", "the keeper slept"));
    CHECK(store.searchable_text(store.page(0)) == "lighthouse notes the keeper slept");
    CHECK(!store.search_bm25("lighthouse", 5).empty());

    PageStore bare(nullptr, false);
    bare.append(gamtest::make_page(0, 1, "lighthouse notes", "the keeper slept"));
    CHECK(bare.searchable_text(bare.page(0)) == "the keeper slept");
    CHECK(bare.search_bm25("lighthouse", 5).empty());
    CHECK(!bare.search_bm25("keeper", 5).empty());
}

TEST_CASE("empty headers add no separator") {
    PageStore store;
    store.append(gamtest::make_page(0, 1, "", "plain text"));
    CHECK(store.searchable_text(store.page(0)) == "plain text");
}

TEST_CASE("postings are per-term, id-ascending, with term frequencies") {
    auto store = fruit_store();
    const auto apple = store.postings("apple");
    REQUIRE(apple.size() == 2);
    CHECK(apple[0].page_id == 0);
    CHECK(apple[0].term_frequency == 1);
    CHECK(apple[1].page_id == 1);
    CHECK(apple[1].term_frequency == 2);
    CHECK(store.postings("durian").empty());
}

TEST_CASE("the inverted index agrees with the stored pages") {
    gamtest::TextGen gen(31);
    PageStore store;
    for (PageId id = 0; id < 25; ++id) {
        store.append(gamtest::make_page(id, 1, gen.words(0, 3), gen.words(3, 30)));
    }
    std::size_t counted = 0;
    for (const auto& page : store.pages()) {
        std::size_t length = 0;
        for (const auto& token : tokenize(store.searchable_text(page)).tokens) {
            ++length;
            const auto postings = store.postings(token);
            const auto hit = std::find_if(postings.begin(), postings.end(),
                                          [&](const auto& p) { return p.page_id == page.id; });
            CHECK(hit != postings.end());
        }
        CHECK(store.doc_length(page.id) == length);
        counted += length;
    }
    CHECK(store.avg_doc_length() ==
          static_cast<double>(counted) / static_cast<double>(store.size()));
}

TEST_CASE("bm25 matches an independent oracle on random corpora") {
    gamtest::TextGen gen(32);
    PageStore store;
    std::vector<Page> pages;
    for (PageId id = 0; id < 40; ++id) {
        auto page = gamtest::make_page(id, 1, gen.words(0, 2), gen.words(2, 25));
        pages.push_back(page);
        store.append(page);
    }
    for (int round = 0; round < 25; ++round) {
        const std::string query = gen.words(1, 4);
        const std::size_t k = 1 + gen.rng()() % 10;
        const auto got = store.search_bm25(query, k);
        const auto want = gamtest::bm25_oracle(pages, query, k);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].page_id == want[i].page_id);
            CHECK(got[i].score == want[i].score);
        }
    }
}

TEST_CASE("hashing embedder is unit-norm and deterministic") {
    HashingEmbedder embedder(64);
    const auto vec = embedder.embed("the quick brown fox");
    REQUIRE(vec.size() == 64);
    double norm = 0.0;
    for (float v : vec) norm += static_cast<double>(v) * v;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(embedder.embed("the quick brown fox") == vec);

    const auto empty = embedder.embed("");
    for (float v : empty) CHECK(v == 0.0f);

    CHECK_THROWS_AS(HashingEmbedder(0), Error);
}

TEST_CASE("embedding search puts the exact page text first") {
    gamtest::TextGen gen(33);
    PageStore store;
    std::vector<std::string> texts;
    for (PageId id = 0; id < 12; ++id) {
        texts.push_back(gen.words(4, 12));
        store.append(gamtest::make_page(id, 1, "", texts.back()));
    }
    const auto hits = store.search_embedding(texts[7], 3);
    REQUIRE(!hits.empty());
    CHECK(hits[0].page_id == 7);
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(hits[0].tool == RetrievalTool::embedding);
}

TEST_CASE("embedding search keeps zero-score pages") {
    auto store = fruit_store();
    const auto hits = store.search_embedding("...", 5);
    REQUIRE(hits.size() == 3);
    for (std::size_t i = 0; i < hits.size(); ++i) {
        CHECK(hits[i].page_id == static_cast<PageId>(i));
        CHECK(hits[i].score == 0.0);
    }
}

TEST_CASE("embedding search rejects mismatched providers") {
    auto store = fruit_store();
    HashingEmbedder other(16);
    CHECK_THROWS_AS(store.search_embedding("apple", 5, other), DimensionMismatch);
}

TEST_CASE("embedding search truncates to k") {
    auto store = fruit_store();
    CHECK(store.search_embedding("apple", 2).size() == 2);
    CHECK(store.search_embedding("apple", 0).empty());
    CHECK(PageStore().search_embedding("apple", 3).empty());
}

TEST_CASE("reads bump the shared counter") {
    auto store = fruit_store();
    const auto base = store.read_count();
    store.page(0);
    CHECK(store.read_count() == base + 1);
    const std::vector<PageId> ids = {0, 1};
    store.get_by_ids(ids);
    CHECK(store.read_count() == base + 2);
    store.search_bm25("apple", 3);
    CHECK(store.read_count() == base + 3);
    store.search_embedding("apple", 3);
    CHECK(store.read_count() == base + 4);

    PageStore copy = store;
    copy.page(1);
    CHECK(store.read_count() == base + 5);
}

TEST_CASE("copies are independent snapshots") {
    auto store = fruit_store();
    PageStore copy = store;
    copy.append(gamtest::make_page(3, 2, "", "durian"));
    CHECK(copy.size() == 4);
    CHECK(store.size() == 3);
    CHECK(store.postings("durian").empty());
    CHECK(!copy.postings("durian").empty());
}

TEST_CASE("retrieval tool names round-trip") {
    for (auto tool : {RetrievalTool::bm25, RetrievalTool::embedding, RetrievalTool::page_id}) {
        CHECK(retrieval_tool_from_string(to_string(tool)) == tool);
    }
    CHECK_THROWS_AS(retrieval_tool_from_string("grep"), Error);
}
