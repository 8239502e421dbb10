#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "mvpbt/filters.hpp"
#include "mvpbt/io.hpp"
#include "mvpbt/mem_partition.hpp"
#include "mvpbt/metrics.hpp"
#include "mvpbt/persistent_partition.hpp"
#include "mvpbt/txn.hpp"
#include "mvpbt/visibility.hpp"

namespace mvpbt {

struct SearchHit {
    Key key;
    RecordID rid;

    auto operator<=>(const SearchHit&) const = default;
};

struct MvPbtConfig {
    std::size_t page_size = kDefaultPageSize;
    std::size_t write_buffer_bytes = 64 * 1024;
    // 0 means unlimited.
    std::uint64_t max_index_bytes = 0;
    FilterConfig filters;
    bool use_filters = true;
    bool unique = false;
    // Off: partitioned B-tree without version information. Every matter
    // record is a candidate and `heap_visible` decides.
    bool index_only_visibility = true;
    bool gc = true;
    std::function<bool(RecordID, const Snapshot&)> heap_visible;
};

/// One multi-version partitioned B-tree: a mutable in-memory partition plus
/// immutable persisted partitions in a single append-only index file.
class MvPbt {
public:
    MvPbt(std::string name, std::string index_path, TransactionManager& txns, Metrics& metrics,
          PageCache& cache, IoTrace* trace, MvPbtConfig config = {});

    const std::string& name() const { return name_; }
    const MvPbtConfig& config() const { return config_; }

    void insert(const TransactionHandle& tx, const Key& key, RecordID rid);
    void update_nonkey(const TransactionHandle& tx, const Key& key, RecordID rid_old, RecordID rid_new);
    void update_key(const TransactionHandle& tx, const Key& key_old, const Key& key_new,
                    RecordID rid_old, RecordID rid_new);
    void remove(const TransactionHandle& tx, const Key& key, RecordID rid_latest);

    /// First visible entry for `key`, partitions newest first.
    std::optional<SearchHit> search(const Snapshot& snap, const Key& key) const;
    /// All visible entries within `bounds`, ordered by key then rid.
    std::vector<SearchHit> scan(const Snapshot& snap, const KeyBounds& bounds) const;

    /// Seals the mutable partition, cleans it, writes it as a new extent and
    /// swaps it in. Returns null when there was nothing to evict.
    PartitionPtr evict();

    /// Phase 2 over every leaf of the mutable partition that holds garbage.
    std::size_t reclaim_garbage();

    std::size_t resident_bytes() const;
    std::size_t mem_record_count() const;
    PartitionNo mem_partition_no() const;
    double mem_fill() const;
    bool mem_garbage_consistent() const;
    std::vector<PartitionPtr> persisted() const;
    std::size_t persisted_count() const;

    /// Raw records of all partitions, newest partition first (for tests).
    std::vector<IndexRecord> dump() const;

private:
    struct View {
        std::shared_ptr<MemPartition> mem;
        std::shared_ptr<MemPartition> sealed;
        std::vector<PartitionPtr> persisted;
    };
    View view() const;
    void put(IndexRecord r);
    IndexRecord stamp(RecordKind kind, const TransactionHandle& tx, const Key& key,
                      std::optional<RecordID> matter, std::optional<RecordID> anti) const;
    void check_unique(const TransactionHandle& tx, const Key& key) const;

    // Feeds one partition's records through the check. Returns false to stop.
    template <typename Fn>
    void visit_partitions(const View& v, const Snapshot& snap, const KeyBounds& bounds,
                          bool point, Fn&& on_visible) const;

    std::string name_;
    TransactionManager& txns_;
    Metrics& metrics_;
    PageCache& cache_;
    MvPbtConfig config_;
    std::unique_ptr<IndexFile> file_;

    mutable std::shared_mutex parts_mu_;
    std::shared_ptr<MemPartition> mem_;
    std::shared_ptr<MemPartition> sealed_;
    std::vector<PartitionPtr> persisted_;  // newest first

    std::mutex evict_mu_;
};

/// Shared partition buffer over several trees. Evicts when the resident
/// bytes of all mutable partitions reach the threshold.
class MvPbtBuffer {
public:
    MvPbtBuffer(std::size_t capacity_bytes, unsigned threshold_pct = 90, unsigned staleness = 4);

    void register_tree(MvPbt& tree);
    std::size_t capacity_bytes() const { return capacity_; }
    std::size_t resident_bytes() const;
    bool over_threshold() const;

    /// Largest mutable partition, unless a non-empty one has not been
    /// evicted for `staleness` consecutive evictions.
    MvPbt& select_victim();

    /// Evicts until under the threshold. Returns the number of evictions.
    std::size_t maintain();

private:
    std::size_t capacity_;
    unsigned threshold_pct_;
    unsigned staleness_;
    mutable std::mutex mu_;
    std::vector<MvPbt*> trees_;
    std::vector<unsigned> idle_;
};

}  // namespace mvpbt
