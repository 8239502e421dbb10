#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <shared_mutex>
#include <vector>

#include "mvpbt/common.hpp"
#include "mvpbt/index_record.hpp"
#include "mvpbt/metrics.hpp"

namespace mvpbt {

/// Page-shaped leaf of the in-memory partition.
struct MemLeaf {
    std::vector<IndexRecord> records;
    std::size_t used_bytes = 0;
    // Set under a shared latch when any record on the leaf is GC-flagged.
    mutable std::atomic<bool> has_garbage{false};

    /// Recomputes used_bytes and has_garbage from the records.
    void recount();
};

/// The mutable partition P_N of one tree: an ordered container whose leaves
/// are page-sized. A single writer holds the latch exclusively; readers and
/// GC marking share it.
class MemPartition {
public:
    static constexpr std::size_t kLeafHeaderSize = 16;
    static constexpr std::size_t kSlotSize = 2;

    using Visitor = std::function<bool(const IndexRecord&, const MemLeaf&)>;
    // Runs on the target leaf before an insert when it has garbage; returns
    // the number of records removed.
    using Reclaimer = std::function<std::size_t(MemLeaf&)>;

    MemPartition(PartitionNo no, std::size_t page_size, Metrics& metrics);

    PartitionNo partition_no() const { return no_; }
    std::size_t page_size() const { return page_size_; }

    void insert(IndexRecord r, const Reclaimer& reclaim = {});

    void seal() { sealed_.store(true); }
    bool sealed() const { return sealed_.load(); }

    /// Visits records within `bounds` in index order until the visitor
    /// returns false. Each leaf touched counts as one mem page fetch.
    void scan(const KeyBounds& bounds, const Visitor& visit) const;

    /// Ordered copy of all records within `bounds`.
    std::vector<IndexRecord> collect(const KeyBounds& bounds = {}) const;

    /// Flags a record seen through scan(); the leaf is marked as holding
    /// garbage. Safe under the shared latch.
    static bool flag_for_gc(const IndexRecord& r, const MemLeaf& leaf);

    /// Runs `fn` on every leaf holding garbage under the exclusive latch.
    std::size_t reclaim_all(const Reclaimer& fn);

    std::size_t record_count() const;
    std::size_t leaf_count() const;
    std::size_t resident_bytes() const { return leaf_count() * page_size_; }
    bool empty() const { return record_count() == 0; }

    /// Mean of used_bytes / page_size over all leaves.
    double mean_fill() const;

    bool leaf_garbage_consistent() const;

private:
    std::size_t capacity() const { return page_size_; }
    static std::size_t footprint(const IndexRecord& r) { return encoded_size(r) + kSlotSize; }
    std::size_t find_leaf(const IndexRecord& r) const;
    void split(std::size_t leaf_index);

    PartitionNo no_;
    std::size_t page_size_;
    Metrics& metrics_;
    std::atomic<bool> sealed_{false};

    mutable std::shared_mutex latch_;
    std::vector<std::unique_ptr<MemLeaf>> leaves_;
    std::size_t record_count_ = 0;
};

}  // namespace mvpbt
