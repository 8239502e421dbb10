#include "doctest.h"
#include "mvpbt/txn.hpp"
#include "support/history.hpp"

using namespace mvpbt;

TEST_CASE("begin hands out increasing timestamps and active sets") {
    TransactionManager tm;
    auto t1 = tm.begin();
    CHECK(t1.ts == Timestamp{1});
    CHECK(t1.snapshot.active_set.empty());

    auto t2 = tm.begin();
    CHECK(t2.snapshot.in_active_set(t1.ts));
    tm.commit(t1);
    tm.commit(t2);
    auto t3 = tm.begin();
    CHECK(t3.snapshot.active_set.empty());
    tm.commit(t3);
}

TEST_CASE("commit and abort are terminal") {
    TransactionManager tm;
    auto t1 = tm.begin();
    auto t2 = tm.begin();
    tm.commit(t1);
    CHECK(tm.state(t1.ts) == TxState::Committed);
    CHECK(tm.oldest_active() == t2.ts);
    CHECK_THROWS_AS(tm.commit(t1), Error);
    try {
        tm.commit(t1);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DoubleFinish);
    }
    tm.abort(t2);
    CHECK(tm.state(t2.ts) == TxState::Aborted);
    try {
        tm.commit(t2);
        FAIL("expected DoubleFinish");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DoubleFinish);
    }
    CHECK_THROWS_AS(tm.state(Timestamp{99}), Error);
}

TEST_CASE("precedes follows the snapshot, not the present") {
    TransactionManager tm;
    auto before = tm.begin();
    tm.commit(before);
    auto running = tm.begin();
    auto reader = tm.begin();
    CHECK(tm.precedes(before.ts, reader.snapshot));
    CHECK_FALSE(tm.precedes(reader.ts, reader.snapshot));
    CHECK_FALSE(tm.precedes(running.ts, reader.snapshot));
    tm.commit(running);
    CHECK_FALSE(tm.precedes(running.ts, reader.snapshot));
    tm.commit(reader);
}

TEST_CASE("is_concurrent") {
    TransactionManager tm;
    auto done = tm.begin();
    tm.commit(done);
    auto t1 = tm.begin();
    auto t2 = tm.begin();
    CHECK(tm.is_concurrent(t2.ts, t1.snapshot));
    CHECK(tm.is_concurrent(t1.ts, t2.snapshot));
    CHECK_FALSE(tm.is_concurrent(done.ts, t1.snapshot));
    CHECK_FALSE(tm.is_concurrent(t1.ts, t1.snapshot));
    tm.commit(t1);
    tm.commit(t2);
}

TEST_CASE("cutoff timestamp") {
    TransactionManager tm;
    CHECK(tm.cutoff_timestamp() == tm.next_timestamp());

    std::vector<TransactionHandle> txs;
    for (int i = 0; i < 9; ++i) txs.push_back(tm.begin());
    for (int i = 0; i < 9; ++i) {
        if (i != 4 && i != 8) tm.commit(txs[i]);
    }
    CHECK(tm.oldest_active() == Timestamp{5});

    TransactionManager tm2;
    for (int i = 0; i < 4; ++i) tm2.commit(tm2.begin());
    auto reader = tm2.begin();
    CHECK(reader.ts == Timestamp{5});
    for (int i = 6; i <= 100; ++i) {
        auto w = tm2.begin();
        tm2.commit(w);
        CHECK(tm2.cutoff_timestamp() == Timestamp{5});
    }
    tm2.commit(reader);
    CHECK(tm2.cutoff_timestamp() == tm2.next_timestamp());
}

TEST_CASE("checkpoint round trip records in-flight transactions as aborted") {
    testing::TempDir dir("txn");
    std::string path = dir.file("txn.ckpt");
    TransactionManager tm;
    auto a = tm.begin();
    auto b = tm.begin();
    auto c = tm.begin();
    tm.commit(a);
    tm.abort(b);
    tm.save(path);

    TransactionManager back;
    back.load(path);
    CHECK(back.state(a.ts) == TxState::Committed);
    CHECK(back.state(b.ts) == TxState::Aborted);
    CHECK(back.state(c.ts) == TxState::Aborted);
    CHECK(back.next_timestamp() == tm.next_timestamp());
    CHECK(back.active_count() == 0);
}
