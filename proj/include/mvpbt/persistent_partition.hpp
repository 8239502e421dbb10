#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mvpbt/common.hpp"
#include "mvpbt/filters.hpp"
#include "mvpbt/index_record.hpp"
#include "mvpbt/io.hpp"

namespace mvpbt {

/// Run of adjacent same-key records of one kind folded into one leaf item.
/// Only regular and replacement runs are folded; everything else stays a
/// single-entry item.
struct CondensedRecord {
    struct Entry {
        Timestamp ts;
        std::optional<RecordID> rid_matter;
        std::optional<RecordID> rid_anti;
        bool operator==(const Entry&) const = default;
    };

    PartitionNo partition_no;
    Key key;
    RecordKind kind = RecordKind::Regular;
    std::uint8_t flags = 0;
    std::vector<Entry> entries;

    bool operator==(const CondensedRecord&) const = default;
};

/// Folds an ordered record stream. A folded item never exceeds `max_item_bytes`.
std::vector<CondensedRecord> reconcile(std::span<const IndexRecord> records,
                                       std::size_t max_item_bytes);
std::vector<IndexRecord> expand(const CondensedRecord& item);

/// Single-entry items use the plain record layout. Folded items:
/// {head u8 = kind|flags|0x80, partition_no u16, key length u16, key,
/// count u16, then per entry ts u64 and the present rids}.
std::size_t encoded_size(const CondensedRecord& item) noexcept;
void encode_into(std::string& out, const CondensedRecord& item);
CondensedRecord decode_condensed(le::Reader& rd);

/// Describes one persisted extent; serialized into its last page.
struct PartitionFooter {
    static constexpr std::uint64_t kNone = UINT64_MAX;

    PartitionNo partition_no;
    std::uint32_t leaf_count = 0;
    std::uint32_t internal_count = 0;
    std::uint16_t height = 0;
    std::uint32_t root_page = 0;  // page index within the extent
    std::uint64_t filter_offset = 0;
    std::uint64_t filter_length = 0;
    std::uint64_t extent_offset = 0;
    std::uint64_t prev_extent_offset = kNone;
    std::uint64_t record_count = 0;
    Timestamp min_ts{UINT64_MAX};
    Timestamp max_ts{0};
    Key min_key;
    Key max_key;

    bool operator==(const PartitionFooter&) const = default;
};

std::string encode_footer(const PartitionFooter& f, std::size_t page_size);
PartitionFooter decode_footer(std::string_view page);

/// Immutable partition stored as one extent of the tree's index file:
/// [leaf pages][internal pages][filter block][footer page].
///
/// Leaf and internal pages start with {type u8, pad u8, count u16,
/// used_bytes u32, crc32 u32}; the CRC covers bytes [12, used_bytes).
/// Internal entries are {key length u16, key, child page index u32}, keyed
/// by the child's first key.
class PersistentPartition {
public:
    static constexpr std::size_t kPageHeaderSize = 12;
    static constexpr std::uint8_t kLeafPage = 1;
    static constexpr std::uint8_t kInternalPage = 2;

    using Visitor = std::function<bool(const IndexRecord&)>;

    PersistentPartition(IndexFile& file, PageCache& cache, PartitionFooter footer, FilterSet filters);

    PartitionNo partition_no() const { return footer_.partition_no; }
    const PartitionFooter& footer() const { return footer_; }
    const FilterSet& filters() const { return filters_; }
    std::uint64_t record_count() const { return footer_.record_count; }
    std::uint64_t extent_end() const;

    /// Descends from the root to the first leaf that may hold `bounds.low`,
    /// then walks leaves in order. Every page goes through the page cache
    /// and counts as a persisted page fetch.
    void scan(const KeyBounds& bounds, const Visitor& visit) const;
    std::vector<IndexRecord> collect(const KeyBounds& bounds = {}) const;

    /// used_bytes / page_size per leaf, read without touching the cache.
    std::vector<double> leaf_fills() const;

private:
    std::uint64_t page_offset(std::uint32_t index) const;
    PageCache::Page fetch(std::uint32_t index) const;
    std::uint32_t first_leaf_for(const Key& low) const;

    IndexFile& file_;
    PageCache& cache_;
    PartitionFooter footer_;
    FilterSet filters_;
};

using PartitionPtr = std::shared_ptr<const PersistentPartition>;

/// Writes `records` (ordered, all of one partition) as a new extent at the
/// end of `file`, renumbered to `target_no`. Rolls the file back on error.
PartitionPtr persist_partition(std::span<const IndexRecord> records, PartitionNo target_no,
                               IndexFile& file, PageCache& cache, const FilterConfig& filter_config,
                               std::uint64_t prev_extent_offset);

/// Follows the footer chain from the end of the file. Newest first.
std::vector<PartitionPtr> open_partitions(IndexFile& file, PageCache& cache);

}  // namespace mvpbt
