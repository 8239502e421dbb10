#include <atomic>
#include <random>
#include <thread>

#include "doctest.h"
#include "mvpbt/mvpbt.hpp"
#include "mvpbt/table.hpp"
#include "support/history.hpp"

using namespace mvpbt;
using testing::fixed_key;

namespace {

const RecordID R0{1, 0}, R1{1, 1}, R2{1, 2}, R3{1, 3};

struct Fixture {
    testing::TempDir dir{"mvpbt"};
    TransactionManager tm;
    Metrics metrics;
    PageCache cache{256, metrics};
    std::unique_ptr<MvPbt> tree;

    explicit Fixture(MvPbtConfig cfg = small()) { open(cfg); }

    static MvPbtConfig small() {
        MvPbtConfig cfg;
        cfg.page_size = 1024;
        cfg.write_buffer_bytes = 8192;
        return cfg;
    }
    void open(MvPbtConfig cfg = small()) {
        tree.reset();
        tree = std::make_unique<MvPbt>("t", dir.file("index.mvpbt"), tm, metrics, cache, nullptr, cfg);
    }
    template <typename Fn>
    void txn(Fn&& fn) {
        auto tx = tm.begin();
        fn(tx);
        tm.commit(tx);
    }
    Snapshot snap() {
        auto tx = tm.begin();
        tm.commit(tx);
        return tx.snapshot;
    }
};

std::vector<IndexRecord> mem_records(const MvPbt& t) {
    std::vector<IndexRecord> out;
    for (auto& r : t.dump())
        if (r.partition_no == t.mem_partition_no()) out.push_back(r);
    return out;
}

}  // namespace

TEST_CASE("insert creates a regular record in the mutable partition") {
    Fixture f;
    f.txn([&](auto& tx) { f.tree->insert(tx, "7", R0); });
    auto recs = mem_records(*f.tree);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].kind == RecordKind::Regular);
    CHECK(recs[0].rid_matter == R0);
    CHECK(f.tree->search(f.snap(), "7") == SearchHit{"7", R0});
}

TEST_CASE("unique and non-unique duplicates") {
    auto cfg = Fixture::small();
    cfg.unique = true;
    Fixture u(cfg);
    u.txn([&](auto& tx) { u.tree->insert(tx, "k", R0); });
    auto tx = u.tm.begin();
    try {
        u.tree->insert(tx, "k", R1);
        FAIL("expected UniqueViolation");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::UniqueViolation);
    }
    u.tm.abort(tx);

    Fixture n;
    n.txn([&](auto& t) { n.tree->insert(t, "k", R0); });
    n.txn([&](auto& t) { n.tree->insert(t, "k", R1); });
    auto hits = n.tree->scan(n.snap(), KeyBounds::point("k"));
    CHECK(hits.size() == 2);
}

TEST_CASE("payload updates chain replacements through anti links") {
    Fixture f;
    f.txn([&](auto& tx) { f.tree->insert(tx, "7", R0); });
    f.txn([&](auto& tx) { f.tree->update_nonkey(tx, "7", R0, R1); });
    f.txn([&](auto& tx) { f.tree->update_nonkey(tx, "7", R1, R2); });
    auto recs = mem_records(*f.tree);
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].kind == RecordKind::Replacement);
    CHECK(recs[0].rid_matter == R2);
    CHECK(recs[0].rid_anti == R1);
    CHECK(recs[1].rid_matter == R1);
    CHECK(recs[1].rid_anti == R0);
    CHECK(f.tree->search(f.snap(), "7")->rid == R2);
}

TEST_CASE("a writer reads its own update") {
    Fixture f;
    f.txn([&](auto& tx) { f.tree->insert(tx, "7", R0); });
    auto other = f.tm.begin();
    auto tx = f.tm.begin();
    f.tree->update_nonkey(tx, "7", R0, R1);
    CHECK(f.tree->search(tx.snapshot, "7")->rid == R1);
    CHECK(f.tree->search(other.snapshot, "7")->rid == R0);
    f.tm.commit(tx);
    f.tm.commit(other);
}

TEST_CASE("key change, delete and readers on both sides") {
    Fixture f;
    f.txn([&](auto& tx) { f.tree->insert(tx, "7", R0); });
    f.txn([&](auto& tx) { f.tree->update_nonkey(tx, "7", R0, R1); });
    auto before_u2 = f.tm.begin();
    f.txn([&](auto& tx) { f.tree->update_key(tx, "7", "1", R1, R2); });

    auto recs = mem_records(*f.tree);
    bool saw_anti = false, saw_rep = false;
    for (const auto& r : recs) {
        if (r.kind == RecordKind::Anti && r.key == "7" && r.rid_anti == R1) saw_anti = true;
        if (r.kind == RecordKind::Replacement && r.key == "1" && r.rid_matter == R2 && r.rid_anti == R1) saw_rep = true;
    }
    CHECK(saw_anti);
    CHECK(saw_rep);
    CHECK_FALSE(f.tree->search(f.snap(), "7").has_value());
    CHECK(f.tree->search(before_u2.snapshot, "7")->rid == R1);

    auto concurrent = f.tm.begin();
    f.txn([&](auto& tx) { f.tree->remove(tx, "1", R2); });
    auto tomb = mem_records(*f.tree).front();
    CHECK(tomb.kind == RecordKind::Tombstone);
    CHECK(tomb.rid_anti == R2);
    CHECK_FALSE(f.tree->search(f.snap(), "1").has_value());
    CHECK(f.tree->search(concurrent.snapshot, "1")->rid == R2);
    f.tm.commit(before_u2);
    f.tm.commit(concurrent);
}

TEST_CASE("range scan filters invisible versions across partitions") {
    auto cfg = Fixture::small();
    cfg.gc = false;
    Fixture f(cfg);
    f.txn([&](auto& tx) { f.tree->insert(tx, "7", R0); });
    auto reader = f.tm.begin();
    f.tree->evict();
    f.txn([&](auto& tx) { f.tree->update_nonkey(tx, "7", R0, R1); });
    f.tree->evict();
    f.txn([&](auto& tx) { f.tree->update_key(tx, "7", "1", R1, R2); });
    f.tree->evict();
    f.txn([&](auto& tx) { f.tree->remove(tx, "1", R2); });
    f.tree->evict();

    KeyBounds le10 = KeyBounds::range("", "9");
    CHECK(f.tree->scan(reader.snapshot, le10) == std::vector<SearchHit>{{"7", R0}});
    CHECK(f.tree->scan(f.snap(), le10).empty());
    f.tm.commit(reader);
    CHECK(f.tree->scan(f.snap(), KeyBounds::all()).empty());
    Fixture empty;
    CHECK(empty.tree->scan(empty.snap(), KeyBounds::all()).empty());
}

TEST_CASE("point lookups skip partitions by filter") {
    Fixture f;
    for (int p = 0; p < 4; ++p) {
        f.txn([&](auto& tx) {
            for (std::uint32_t i = 0; i < 200; ++i)
                f.tree->insert(tx, "p" + std::to_string(p) + "-" + fixed_key(i * 7919 % 1000), RecordID{i, static_cast<std::uint16_t>(p)});
        });
        f.tree->evict();
    }
    REQUIRE(f.tree->persisted_count() == 4);
    auto snap = f.snap();
    auto before = f.metrics.sample();
    auto hit = f.tree->search(snap, "p0-" + fixed_key(7919 % 1000));
    auto d = f.metrics.sample() - before;
    CHECK(hit.has_value());
    CHECK(d.partitions_searched == 2);  // mutable partition plus the one holding the key
    CHECK(d.partitions_skipped == 3);
    CHECK_FALSE(f.tree->search(snap, "never").has_value());
}

TEST_CASE("filters off gives the same answers with more descents") {
    auto run = [](bool filters) {
        auto cfg = Fixture::small();
        cfg.use_filters = filters;
        Fixture f(cfg);
        for (int p = 0; p < 5; ++p) {
            f.txn([&](auto& tx) {
                for (std::uint32_t i = 0; i < 100; ++i) f.tree->insert(tx, fixed_key(p * 1000 + i), RecordID{i, 0});
            });
            f.tree->evict();
        }
        auto snap = f.snap();
        std::vector<bool> found;
        auto before = f.metrics.sample();
        for (int k = 0; k < 5000; k += 7) found.push_back(f.tree->search(snap, fixed_key(k)).has_value());
        return std::pair{found, (f.metrics.sample() - before).partitions_searched};
    };
    auto [with, searched_with] = run(true);
    auto [without, searched_without] = run(false);
    CHECK(with == without);
    CHECK(searched_with < searched_without);
}

TEST_CASE("eviction renumbers and opens the next partition") {
    Fixture f;
    CHECK(f.tree->evict() == nullptr);
    for (std::uint32_t i = 0; i < 4; ++i) {
        f.txn([&](auto& tx) { f.tree->insert(tx, "seed" + std::to_string(i), RecordID{50000 + i, 0}); });
        f.tree->evict();
    }
    CHECK(f.tree->mem_partition_no() == PartitionNo{5});
    f.txn([&](auto& tx) {
        for (std::uint32_t i = 0; i < 10000; ++i) f.tree->insert(tx, fixed_key(i), RecordID{i, 0});
    });
    auto part = f.tree->evict();
    CHECK(part->partition_no() == PartitionNo{4});
    CHECK(part->record_count() == 10000);
    CHECK(f.tree->mem_partition_no() == PartitionNo{6});
    CHECK(f.tree->mem_record_count() == 0);
}

TEST_CASE("readers running during eviction keep their results") {
    Fixture f;
    f.txn([&](auto& tx) {
        for (std::uint32_t i = 0; i < 3000; ++i) f.tree->insert(tx, fixed_key(i), RecordID{i, 0});
    });
    auto snap = f.snap();
    auto expected = f.tree->scan(snap, KeyBounds::all());
    REQUIRE(expected.size() == 3000);
    std::atomic<bool> stop{false};
    std::atomic<int> bad{0}, runs{0};
    std::thread reader([&] {
        while (!stop.load() || runs.load() < 3) {
            if (f.tree->scan(snap, KeyBounds::all()) != expected) ++bad;
            ++runs;
        }
    });
    for (int round = 0; round < 3; ++round) {
        f.tree->evict();
        f.txn([&](auto& tx) { f.tree->insert(tx, "late" + std::to_string(round), RecordID{9000, 0}); });
    }
    stop = true;
    reader.join();
    CHECK(bad.load() == 0);
}

TEST_CASE("reopen restores persisted partitions") {
    Fixture f;
    std::mt19937_64 rng(8);
    for (int round = 0; round < 4; ++round) {
        f.txn([&](auto& tx) {
            for (std::uint32_t i = 0; i < 500; ++i) {
                std::uint32_t k = static_cast<std::uint32_t>(rng() % 100000);
                f.tree->insert(tx, fixed_key(k), RecordID{k, static_cast<std::uint16_t>(round)});
            }
        });
        f.tree->evict();
    }
    auto snap = f.snap();
    auto before = f.tree->scan(snap, KeyBounds::all());
    auto parts_before = f.tree->persisted();
    f.open();
    CHECK(f.tree->scan(snap, KeyBounds::all()) == before);
    auto parts_after = f.tree->persisted();
    REQUIRE(parts_after.size() == parts_before.size());
    for (std::size_t i = 0; i < parts_after.size(); ++i) {
        CHECK(parts_after[i]->filters() == parts_before[i]->filters());
        CHECK(parts_after[i]->footer() == parts_before[i]->footer());
    }
    CHECK(f.tree->mem_partition_no() == PartitionNo{5});
}

TEST_CASE("buffer victim: largest, unless another tree has gone stale") {
    Fixture a, b;
    a.txn([&](auto& tx) {
        for (std::uint32_t i = 0; i < 2000; ++i) a.tree->insert(tx, fixed_key(i), RecordID{i, 0});
    });
    b.txn([&](auto& tx) {
        for (std::uint32_t i = 0; i < 200; ++i) b.tree->insert(tx, fixed_key(i), RecordID{i, 0});
    });
    REQUIRE(a.tree->resident_bytes() > b.tree->resident_bytes());
    MvPbtBuffer buf(1 << 20, 90, 4);
    buf.register_tree(*a.tree);
    buf.register_tree(*b.tree);
    for (int i = 0; i < 4; ++i) CHECK(&buf.select_victim() == a.tree.get());
    CHECK(&buf.select_victim() == b.tree.get());
    CHECK(&buf.select_victim() == a.tree.get());

    MvPbtBuffer solo(1 << 20);
    solo.register_tree(*b.tree);
    CHECK(&solo.select_victim() == b.tree.get());

    Fixture empty;
    MvPbtBuffer none(1 << 20);
    none.register_tree(*empty.tree);
    try {
        none.select_victim();
        FAIL("expected EmptyBuffer");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::EmptyBuffer);
    }
}

TEST_CASE("buffer maintenance keeps residency under the threshold") {
    Fixture f;
    MvPbtBuffer buf(64 * 1024, 90, 4);
    buf.register_tree(*f.tree);
    for (std::uint32_t i = 0; i < 5000; ++i) {
        f.txn([&](auto& tx) { f.tree->insert(tx, fixed_key(i), RecordID{i, 0}); });
        buf.maintain();
        CHECK_FALSE(buf.over_threshold());
    }
    CHECK(f.tree->persisted_count() > 0);
    CHECK(f.tree->scan(f.snap(), KeyBounds::all()).size() == 5000);
}

TEST_CASE("index-only reads never touch the heap") {
    testing::TempDir dir("table");
    Metrics metrics;
    TableConfig cfg;
    cfg.dir = dir.path();
    Table t(cfg, metrics);
    auto tx = t.begin();
    TupleId id = t.insert(tx, "hot", "v0");
    t.commit(tx);
    for (int i = 1; i < 50; ++i) {
        tx = t.begin();
        t.update(tx, id, "v" + std::to_string(i));
        t.commit(tx);
    }
    auto snap = t.begin().snapshot;
    auto before = metrics.heap_fetches.load();
    auto hit = t.get(snap, "hot");
    REQUIRE(hit.has_value());
    CHECK(hit->rid == *t.head(id));
    CHECK(metrics.heap_fetches.load() == before);
}

TEST_CASE("table write conflicts and aborts") {
    testing::TempDir dir("table");
    Metrics metrics;
    TableConfig cfg;
    cfg.dir = dir.path();
    cfg.with_baseline = true;
    Table t(cfg, metrics);
    auto tx = t.begin();
    TupleId id = t.insert(tx, "k", "a");
    t.commit(tx);

    auto w1 = t.begin();
    auto w2 = t.begin();
    t.update(w1, id, "b");
    try {
        t.update(w2, id, "c");
        FAIL("expected WriteConflict");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::WriteConflict);
    }
    t.abort(w2);
    t.abort(w1);
    auto snap = t.begin().snapshot;
    CHECK(t.scan(snap, KeyBounds::all()) == t.oracle_scan(snap, KeyBounds::all()));
    CHECK(t.baseline_scan(snap, KeyBounds::all()) == t.oracle_scan(snap, KeyBounds::all()));

    auto d = t.begin();
    t.erase(d, id);
    t.commit(d);
    auto again = t.begin();
    try {
        t.update(again, id, "x");
        FAIL("expected TupleDeleted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::TupleDeleted);
    }
    t.abort(again);
    CHECK_FALSE(t.get(t.begin().snapshot, "k").has_value());
}

TEST_CASE("aborted insert stays invisible") {
    testing::TempDir dir("table");
    Metrics metrics;
    TableConfig cfg;
    cfg.dir = dir.path();
    Table t(cfg, metrics);
    auto tx = t.begin();
    t.insert(tx, "ghost", "x");
    t.abort(tx);
    auto snap = t.begin().snapshot;
    CHECK_FALSE(t.get(snap, "ghost").has_value());
    CHECK(t.oracle_scan(snap, KeyBounds::all()).empty());
}
