#include "doctest.h"
#include "mvpbt/heap.hpp"
#include "support/history.hpp"

using namespace mvpbt;

namespace {

struct Chain {
    TransactionManager tm;
    Metrics metrics;
    VersionHeap heap{tm, metrics};
    RecordID r0, r1, r2, r3;
    Snapshot after_u0, after_u3, before_all;

    // t.v0 (key 7) -> v1 (key 7) -> v2 (key 1) -> tombstone, one writer each.
    Chain() {
        auto early = tm.begin();
        before_all = early.snapshot;
        tm.commit(early);
        auto u0 = tm.begin();
        r0 = heap.insert(u0, "7", "z");
        tm.commit(u0);
        auto reader = tm.begin();
        after_u0 = reader.snapshot;
        auto u1 = tm.begin();
        r1 = heap.append_successor(u1, r0, "7", "z1", false);
        tm.commit(u1);
        auto u2 = tm.begin();
        r2 = heap.append_successor(u2, r1, "1", "z2", false);
        tm.commit(u2);
        auto u3 = tm.begin();
        r3 = heap.append_successor(u3, r2, "1", "", true);
        tm.commit(u3);
        after_u3 = tm.begin().snapshot;
        tm.commit(reader);
    }
};

}  // namespace

TEST_CASE("insert and successors") {
    Chain c;
    auto v0 = c.heap.peek(c.r0);
    CHECK(v0.key == "7");
    CHECK_FALSE(v0.predecessor.has_value());
    CHECK(c.r1 > c.r0);
    CHECK(c.heap.peek(c.r1).predecessor == c.r0);
    auto tomb = c.heap.peek(c.r3);
    CHECK(tomb.tombstone);
    CHECK(tomb.predecessor == c.r2);
    CHECK(c.heap.successors(c.r0) == std::vector<RecordID>{c.r1});
    CHECK(c.heap.chain_heads() == std::vector<RecordID>{c.r3});
}

TEST_CASE("fetch counts, peek does not") {
    Chain c;
    auto before = c.metrics.heap_fetches.load();
    auto v = c.heap.fetch(c.r0);
    CHECK(v.t_creation == Timestamp{2});
    CHECK(c.metrics.heap_fetches.load() == before + 1);
    c.heap.peek(c.r1);
    CHECK(c.metrics.heap_fetches.load() == before + 1);
    try {
        c.heap.fetch(RecordID{77, 3});
        FAIL("expected UnknownRecordID");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::UnknownRecordID);
    }
}

TEST_CASE("resolve_visible walks the chain") {
    Chain c;
    CHECK(c.heap.resolve_visible(c.r3, c.after_u0) == c.r0);
    CHECK_FALSE(c.heap.resolve_visible(c.r3, c.after_u3).has_value());
    CHECK_FALSE(c.heap.resolve_visible(c.r3, c.before_all).has_value());
    CHECK(c.heap.version_visible(c.r0, c.after_u0));
    CHECK_FALSE(c.heap.version_visible(c.r1, c.after_u0));
    CHECK_FALSE(c.heap.version_visible(c.r2, c.after_u3));
}

TEST_CASE("re-insert after a tombstone starts a new segment") {
    Chain c;
    auto tx = c.tm.begin();
    auto r4 = c.heap.append_successor(tx, c.r3, "1", "again", false);
    c.tm.commit(tx);
    auto snap = c.tm.begin().snapshot;
    CHECK(c.heap.resolve_visible(r4, snap) == r4);
    CHECK_FALSE(c.heap.resolve_visible(r4, c.after_u3).has_value());
}

TEST_CASE("full page spills to a fresh page at slot 0") {
    TransactionManager tm;
    Metrics metrics;
    VersionHeap heap(tm, metrics, HeapConfig{256, 0});
    auto tx = tm.begin();
    std::vector<RecordID> rids;
    for (int i = 0; i < 8; ++i) rids.push_back(heap.insert(tx, "k" + std::to_string(i), std::string(60, 'p')));
    tm.commit(tx);
    CHECK(rids.back().page_no > rids.front().page_no);
    bool saw_new_page = false;
    for (std::size_t i = 1; i < rids.size(); ++i) {
        CHECK(rids[i] > rids[i - 1]);
        if (rids[i].page_no != rids[i - 1].page_no) {
            CHECK(rids[i].slot == 0);
            saw_new_page = true;
        }
    }
    CHECK(saw_new_page);
}

TEST_CASE("page limit raises StorageFull") {
    TransactionManager tm;
    Metrics metrics;
    VersionHeap heap(tm, metrics, HeapConfig{256, 1});
    auto tx = tm.begin();
    try {
        for (int i = 0; i < 10; ++i) heap.insert(tx, "k", std::string(60, 'p'));
        FAIL("expected StorageFull");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::StorageFull);
    }
}

TEST_CASE("heap file reloads") {
    testing::TempDir dir("heap");
    TransactionManager tm;
    Metrics metrics;
    RecordID a, b;
    {
        VersionHeap heap(tm, metrics, HeapConfig{512, 0}, dir.file("heap.dat"));
        auto tx = tm.begin();
        a = heap.insert(tx, "a", "one");
        for (int i = 0; i < 20; ++i) heap.insert(tx, "f" + std::to_string(i), std::string(40, 'x'));
        b = heap.append_successor(tx, a, "a", "two", false);
        tm.commit(tx);
        heap.flush();
    }
    VersionHeap back(tm, metrics, HeapConfig{512, 0}, dir.file("heap.dat"));
    CHECK(back.record_count() == 22);
    CHECK(back.peek(a).payload == "one");
    CHECK(back.peek(b).predecessor == a);
    CHECK(back.successors(a) == std::vector<RecordID>{b});
}
