#pragma once

#include <atomic>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

#include "mvpbt/common.hpp"

namespace mvpbt {

enum class RecordKind : std::uint8_t {
    Regular = 0,      // insert: matter only
    Replacement = 1,  // non-key or key update: new matter plus anti-matter for the predecessor
    Anti = 2,         // key update, old key side: anti-matter only
    Tombstone = 3,    // delete: anti-matter for the chain's newest version
};

const char* kind_name(RecordKind kind) noexcept;

namespace flag {
inline constexpr std::uint8_t kMatter = 0x04;
inline constexpr std::uint8_t kAntiMatter = 0x08;
inline constexpr std::uint8_t kGc = 0x10;
inline constexpr std::uint8_t kKindMask = 0x03;
}  // namespace flag

/// One MV-PBT index entry. Immutable except for the GC flag, which may be
/// set concurrently under a shared latch (see mark_gc).
struct IndexRecord {
    PartitionNo partition_no;
    Key key;
    RecordKind kind = RecordKind::Regular;
    Timestamp ts;
    std::optional<RecordID> rid_matter;
    std::optional<RecordID> rid_anti;
    std::uint8_t flags = 0;

    bool has_matter() const { return (flags & flag::kMatter) != 0; }
    bool has_anti_matter() const { return (flags & flag::kAntiMatter) != 0; }

    bool gc_flagged() const {
        return (std::atomic_ref<std::uint8_t>(const_cast<std::uint8_t&>(flags)).load(
                    std::memory_order_acquire) & flag::kGc) != 0;
    }
    /// Sets the GC flag; returns true if this call set it.
    bool mark_gc() const {
        auto prev = std::atomic_ref<std::uint8_t>(const_cast<std::uint8_t&>(flags))
                        .fetch_or(flag::kGc, std::memory_order_acq_rel);
        return (prev & flag::kGc) == 0;
    }

    bool operator==(const IndexRecord& o) const {
        return partition_no == o.partition_no && key == o.key && kind == o.kind && ts == o.ts &&
               rid_matter == o.rid_matter && rid_anti == o.rid_anti &&
               (flags & ~flag::kGc) == (o.flags & ~flag::kGc);
    }
};

std::uint8_t flags_for(RecordKind kind) noexcept;

/// Builds a well-formed record; throws MalformedRecord when the rid
/// presence does not match the kind.
IndexRecord make_record(RecordKind kind, PartitionNo partition_no, Key key, Timestamp ts,
                        std::optional<RecordID> rid_matter, std::optional<RecordID> rid_anti);

/// Total order: partition asc, key asc, ts desc, then kind rank
/// (tombstone, anti, replacement, regular), then rid_matter desc. Records
/// differing only in rid_anti compare equal.
std::strong_ordering compare(const IndexRecord& a, const IndexRecord& b);

struct IndexRecordLess {
    bool operator()(const IndexRecord& a, const IndexRecord& b) const { return compare(a, b) < 0; }
};

/// Little-endian layout: kind|flags u8, partition_no u16, key length u16,
/// key bytes, ts u64, then rid_matter and rid_anti (6 bytes each) when present.
std::string encode(const IndexRecord& r);
void encode_into(std::string& out, const IndexRecord& r);
std::size_t encoded_size(const IndexRecord& r) noexcept;

IndexRecord decode(std::string_view bytes);
IndexRecord decode_from(le::Reader& rd);

/// Checks rid presence and flag bits against the kind.
void validate(const IndexRecord& r);

}  // namespace mvpbt
