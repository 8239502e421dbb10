#include "doctest.h"
#include "mvpbt/baseline.hpp"
#include "support/history.hpp"

using namespace mvpbt;
using testing::fixed_key;

namespace {

struct Setup {
    testing::TempDir dir{"baseline"};
    TransactionManager tm;
    Metrics metrics;
    IoTrace trace;
    VersionHeap heap{tm, metrics};
    BaselineTree tree{dir.file("baseline.idx"), metrics, &trace, BaselineConfig{1024, 8}};
};

}  // namespace

TEST_CASE("every version gets its own entry and costs one heap fetch") {
    Setup s;
    auto u0 = s.tm.begin();
    auto r0 = s.heap.insert(u0, "7", "z");
    s.tree.insert("7", r0);
    s.tm.commit(u0);
    auto reader = s.tm.begin();
    auto u1 = s.tm.begin();
    auto r1 = s.heap.append_successor(u1, r0, "7", "z1", false);
    s.tree.insert("7", r1);
    s.tm.commit(u1);
    auto u2 = s.tm.begin();
    auto r2 = s.heap.append_successor(u2, r1, "1", "z2", false);
    s.tree.insert("1", r2);
    s.tm.commit(u2);
    auto u3 = s.tm.begin();
    auto r3 = s.heap.append_successor(u3, r2, "1", "", true);
    s.tree.insert("1", r3);
    s.tm.commit(u3);

    auto all = s.tree.range(KeyBounds::all());
    REQUIRE(all.size() == 4);
    CHECK(all[0].key == "1");
    CHECK(all[1].key == "1");
    CHECK(all[2].key == "7");
    CHECK(all[3].key == "7");

    auto before = s.metrics.heap_fetches.load();
    auto hits = s.tree.scan_visible(reader.snapshot, KeyBounds::range("", "9"), s.heap);
    CHECK(hits == std::vector<SearchHit>{{"7", r0}});
    CHECK(s.metrics.heap_fetches.load() - before == 4);

    before = s.metrics.heap_fetches.load();
    CHECK(s.tree.scan_visible(reader.snapshot, KeyBounds::range("2", "6"), s.heap).empty());
    CHECK(s.metrics.heap_fetches.load() == before);
    s.tm.commit(reader);
}

TEST_CASE("erase, contains and duplicates") {
    Setup s;
    s.tree.insert("a", RecordID{1, 0});
    s.tree.insert("a", RecordID{1, 1});
    try {
        s.tree.insert("a", RecordID{1, 0});
        FAIL("expected DuplicateEntry");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DuplicateEntry);
    }
    CHECK(s.tree.erase("a", RecordID{1, 0}));
    CHECK_FALSE(s.tree.erase("a", RecordID{1, 0}));
    CHECK_FALSE(s.tree.contains("a", RecordID{1, 0}));
    CHECK(s.tree.contains("a", RecordID{1, 1}));
    CHECK(s.tree.entry_count() == 1);
}

TEST_CASE("large trees stay ordered and write pages in place") {
    Setup s;
    s.trace.enable(true);
    for (std::uint32_t i = 0; i < 5000; ++i) s.tree.insert(fixed_key((i * 7919) % 5000), RecordID{i, 0});
    s.tree.flush();
    CHECK(s.tree.height() >= 3);
    auto all = s.tree.range(KeyBounds::all());
    REQUIRE(all.size() == 5000);
    for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i - 1].key < all[i].key);
    auto mid = s.tree.range(KeyBounds::range(fixed_key(100), fixed_key(199)));
    CHECK(mid.size() == 100);

    std::size_t backward = 0;
    auto events = s.trace.events();
    for (std::size_t i = 1; i < events.size(); ++i) backward += events[i].offset < events[i - 1].offset ? 1 : 0;
    CHECK(backward > 0);
    for (const auto& e : events) CHECK(e.extent == "page");
}
