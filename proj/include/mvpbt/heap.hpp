#pragma once

#include <deque>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "mvpbt/common.hpp"
#include "mvpbt/io.hpp"
#include "mvpbt/metrics.hpp"
#include "mvpbt/txn.hpp"

namespace mvpbt {

/// A physically materialized tuple version. Only the creation timestamp is
/// stored; a version is invalidated by the existence of a successor.
struct VersionRecord {
    Key key;
    std::string payload;
    Timestamp t_creation;
    std::optional<RecordID> predecessor;
    bool tombstone = false;

    bool operator==(const VersionRecord&) const = default;
};

struct HeapConfig {
    std::size_t page_size = kDefaultPageSize;
    // 0 means unlimited.
    std::uint32_t max_pages = 0;
};

/// Append-only base table with new-to-old version chains.
///
/// On disk: a sequence of fixed-size pages. Page header is
/// {page_no u32, record_count u16, free_offset u16}; records grow from the
/// header end and the slot directory ({offset u16, length u16} per slot)
/// grows from the page end. All integers little-endian. Full pages are
/// written once; the tail page is rewritten on flush().
class VersionHeap {
public:
    static constexpr std::size_t kPageHeaderSize = 8;
    static constexpr std::size_t kSlotSize = 4;

    /// `path` empty keeps the heap purely in memory. An existing file is
    /// loaded.
    VersionHeap(TransactionManager& txns, Metrics& metrics, HeapConfig config = {},
                std::string path = {});

    RecordID insert(const TransactionHandle& tx, Key key, std::string payload);
    RecordID append_successor(const TransactionHandle& tx, RecordID predecessor, Key key,
                              std::string payload, bool tombstone);

    /// Counted read: one heap fetch.
    VersionRecord fetch(RecordID rid) const;
    /// Uncounted read for oracles and bookkeeping.
    VersionRecord peek(RecordID rid) const;
    bool contains(RecordID rid) const;

    /// Walks from the chain entry point towards older versions and returns
    /// the first version whose creator is visible to `snap` (own writes
    /// included). A visible tombstone ends the chain.
    std::optional<RecordID> resolve_visible(RecordID entry, const Snapshot& snap) const;

    /// True when `rid` is the version `snap` sees for its chain: created
    /// visibly, not a tombstone, and no direct successor created visibly.
    bool version_visible(RecordID rid, const Snapshot& snap) const;

    std::vector<RecordID> successors(RecordID rid) const;

    /// Every version without a successor, in rid order.
    std::vector<RecordID> chain_heads() const;

    /// Versions superseded by a successor created below `cutoff`. Heap
    /// reclamation itself is not performed.
    std::size_t count_reclaimable(Timestamp cutoff) const;

    void flush();

    std::size_t page_count() const;
    std::size_t record_count() const;
    const HeapConfig& config() const { return config_; }

private:
    struct Page {
        std::uint32_t page_no = 0;
        std::vector<VersionRecord> records;
        std::size_t used = kPageHeaderSize;
    };

    static std::size_t encoded_size(const VersionRecord& r);
    std::string encode_page(const Page& page) const;
    Page decode_page(std::string_view bytes, std::uint32_t expected_no) const;

    RecordID append(const TransactionHandle& tx, VersionRecord rec);
    const VersionRecord& at(RecordID rid) const;
    bool creator_visible(Timestamp ts, const Snapshot& snap) const;
    void write_page(const Page& page);

    TransactionManager& txns_;
    Metrics& metrics_;
    HeapConfig config_;
    std::optional<File> file_;

    mutable std::shared_mutex mu_;
    std::deque<Page> pages_;
    std::unordered_map<RecordID, std::vector<RecordID>, RecordIDHash> successors_;
    std::size_t record_count_ = 0;
};

}  // namespace mvpbt
