#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mvpbt/baseline.hpp"
#include "mvpbt/config.hpp"
#include "mvpbt/heap.hpp"
#include "mvpbt/mvpbt.hpp"
#include "mvpbt/txn.hpp"

namespace mvpbt {

struct TableConfig {
    // Directory holding heap.dat, index.mvpbt, baseline.idx and txn.ckpt.
    std::string dir;
    EngineConfig engine;
    bool with_mvpbt = true;
    bool with_baseline = false;
    bool index_only_visibility = true;
    bool gc = true;
    bool use_filters = true;
    bool unique = false;
    // 0: size the page cache like the partition buffer.
    std::size_t cache_pages = 0;
};

using TupleId = std::uint64_t;

/// A keyed table: version heap, tuple directory and the configured indexes,
/// kept in step by every write. Writers follow first-updater-wins.
class Table {
public:
    Table(TableConfig config, Metrics& metrics, IoTrace* trace = nullptr);
    ~Table();

    TransactionHandle begin();
    void commit(const TransactionHandle& tx);
    /// Undoes the directory and baseline changes of `tx`.
    void abort(const TransactionHandle& tx);

    TupleId insert(const TransactionHandle& tx, const Key& key, std::string payload);
    void update(const TransactionHandle& tx, TupleId id, std::string payload);
    void update_key(const TransactionHandle& tx, TupleId id, const Key& new_key, std::string payload);
    void erase(const TransactionHandle& tx, TupleId id);

    std::optional<SearchHit> get(const Snapshot& snap, const Key& key) const;
    std::vector<SearchHit> scan(const Snapshot& snap, const KeyBounds& bounds) const;
    std::vector<SearchHit> baseline_scan(const Snapshot& snap, const KeyBounds& bounds) const;
    /// Chain walk from every tuple's newest version.
    std::vector<SearchHit> oracle_scan(const Snapshot& snap, const KeyBounds& bounds) const;

    std::size_t tuple_count() const;
    std::optional<RecordID> head(TupleId id) const;

    /// Evicts every mutable partition, writes back baseline pages, flushes
    /// the heap and checkpoints the commit table.
    void close();

    TransactionManager& txns() { return txns_; }
    VersionHeap& heap() { return *heap_; }
    const VersionHeap& heap() const { return *heap_; }
    MvPbt* index() { return index_.get(); }
    const MvPbt* index() const { return index_.get(); }
    BaselineTree* baseline() { return baseline_.get(); }
    MvPbtBuffer& buffer() { return *buffer_; }
    PageCache& cache() { return *cache_; }
    const TableConfig& config() const { return config_; }

private:
    struct Undo {
        TupleId id;
        std::optional<RecordID> prev_head;
        std::optional<std::pair<Key, RecordID>> baseline_entry;
    };

    RecordID writable_head(const TransactionHandle& tx, TupleId id) const;
    void after_write();
    void rebuild_from_heap();

    TableConfig config_;
    Metrics& metrics_;
    TransactionManager txns_;
    std::unique_ptr<VersionHeap> heap_;
    std::unique_ptr<PageCache> cache_;
    std::unique_ptr<MvPbt> index_;
    std::unique_ptr<BaselineTree> baseline_;
    std::unique_ptr<MvPbtBuffer> buffer_;

    mutable std::mutex mu_;
    std::vector<std::optional<RecordID>> heads_;
    std::map<std::uint64_t, std::vector<Undo>> undo_;
    bool closed_ = false;
};

}  // namespace mvpbt
