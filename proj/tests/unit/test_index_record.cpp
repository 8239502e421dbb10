#include <algorithm>
#include <random>

#include "doctest.h"
#include "mvpbt/index_record.hpp"

using namespace mvpbt;

namespace {

const RecordID R0{1, 0}, R1{1, 1}, R2{1, 2};

IndexRecord regular(std::uint16_t p, Key k, std::uint64_t ts, RecordID m) {
    return make_record(RecordKind::Regular, PartitionNo{p}, std::move(k), Timestamp{ts}, m, std::nullopt);
}

}  // namespace

TEST_CASE("flags follow the kind") {
    auto reg = regular(0, "7", 1, R0);
    CHECK(reg.flags == flag::kMatter);
    auto rep = make_record(RecordKind::Replacement, PartitionNo{1}, "7", Timestamp{2}, R1, R0);
    CHECK(rep.flags == (flag::kMatter | flag::kAntiMatter));
    auto tomb = make_record(RecordKind::Tombstone, PartitionNo{3}, "1", Timestamp{4}, std::nullopt, R2);
    CHECK(tomb.has_anti_matter());
    CHECK_FALSE(tomb.has_matter());
    auto anti = make_record(RecordKind::Anti, PartitionNo{2}, "7", Timestamp{3}, std::nullopt, R1);
    CHECK(anti.flags == flag::kAntiMatter);

    try {
        make_record(RecordKind::Tombstone, PartitionNo{0}, "1", Timestamp{4}, R0, R2);
        FAIL("expected MalformedRecord");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MalformedRecord);
    }
    CHECK_THROWS_AS(make_record(RecordKind::Replacement, PartitionNo{0}, "1", Timestamp{4}, R0, std::nullopt),
                    Error);
}

TEST_CASE("GC flag does not affect equality") {
    auto a = regular(0, "7", 1, R0);
    auto b = a;
    CHECK(b.mark_gc());
    CHECK_FALSE(b.mark_gc());
    CHECK(b.gc_flagged());
    CHECK(a == b);
}

TEST_CASE("ordering: partition, key, newest first, kind rank") {
    auto newer = regular(1, "7", 40, R1);
    auto older = regular(1, "7", 30, R0);
    CHECK(compare(newer, older) < 0);

    auto k1 = regular(1, "1", 5, R0);
    auto k7 = regular(1, "7", 50, R1);
    CHECK(compare(k1, k7) < 0);

    CHECK(compare(regular(0, "9", 1, R0), regular(1, "1", 1, R0)) < 0);
    CHECK(compare(newer, newer) == 0);

    auto tomb = make_record(RecordKind::Tombstone, PartitionNo{1}, "1", Timestamp{40}, std::nullopt, R2);
    auto rep = make_record(RecordKind::Replacement, PartitionNo{1}, "1", Timestamp{30}, R2, R1);
    std::vector<IndexRecord> v{rep, k7, tomb};
    std::sort(v.begin(), v.end(), IndexRecordLess{});
    CHECK(v[0] == tomb);
    CHECK(v[1] == rep);
    CHECK(v[2] == k7);

    auto same_ts_tomb = make_record(RecordKind::Tombstone, PartitionNo{1}, "7", Timestamp{40}, std::nullopt, R1);
    CHECK(compare(same_ts_tomb, newer) < 0);
}

TEST_CASE("encoding round trips every kind") {
    std::vector<IndexRecord> all{
        regular(0, "7", 1, R0),
        make_record(RecordKind::Replacement, PartitionNo{1}, "7", Timestamp{2}, R1, R0),
        make_record(RecordKind::Anti, PartitionNo{2}, "7", Timestamp{3}, std::nullopt, R1),
        make_record(RecordKind::Tombstone, PartitionNo{3}, std::string("\0\xff", 2), Timestamp{1ull << 40},
                    std::nullopt, RecordID{70000, 65535}),
    };
    for (const auto& r : all) {
        std::string bytes = encode(r);
        CHECK(bytes.size() == encoded_size(r));
        CHECK(decode(bytes) == r);
    }
}

TEST_CASE("encoded sizes") {
    // kind|flags 1 + partition 2 + key length 2 + key 8 + ts 8 + rid 6.
    CHECK(encoded_size(regular(0, "abcdefgh", 1, R0)) == 27);
    auto rep = make_record(RecordKind::Replacement, PartitionNo{1}, "abcdefgh", Timestamp{2}, R1, R0);
    CHECK(encoded_size(rep) == 33);
}

TEST_CASE("truncated or inconsistent bytes are rejected") {
    std::string bytes = encode(regular(0, "7", 1, R0));
    for (std::size_t n = 0; n < bytes.size(); ++n) {
        try {
            decode(bytes.substr(0, n));
            FAIL("expected CorruptRecord");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::CorruptRecord);
        }
    }
    std::string bad = bytes;
    bad[0] = static_cast<char>(flag::kAntiMatter);  // regular kind without matter
    CHECK_THROWS_AS(decode(bad), Error);
}

TEST_CASE("random records sort consistently with encode/decode") {
    std::mt19937_64 rng(3);
    std::vector<IndexRecord> v;
    for (int i = 0; i < 500; ++i) {
        Key k(1 + rng() % 4, 'a');
        for (auto& c : k) c = static_cast<char>('a' + rng() % 3);
        v.push_back(regular(static_cast<std::uint16_t>(rng() % 3), k, rng() % 20,
                            RecordID{static_cast<std::uint32_t>(rng() % 50), 0}));
    }
    std::sort(v.begin(), v.end(), IndexRecordLess{});
    for (std::size_t i = 1; i < v.size(); ++i) {
        CHECK(compare(v[i - 1], v[i]) <= 0);
        CHECK(compare(decode(encode(v[i])), v[i]) == 0);
    }
}
