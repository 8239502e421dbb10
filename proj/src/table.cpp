#include "mvpbt/table.hpp"

#include <algorithm>
#include <filesystem>

namespace mvpbt {

namespace fs = std::filesystem;

Table::Table(TableConfig config, Metrics& metrics, IoTrace* trace)
    : config_(std::move(config)), metrics_(metrics) {
    if (config_.dir.empty()) throw Error(Errc::InvalidArgument, "table directory required");
    fs::create_directories(config_.dir);
    const fs::path dir(config_.dir);
    const EngineConfig& e = config_.engine;

    if (fs::exists(dir / "txn.ckpt")) txns_.load((dir / "txn.ckpt").string());
    heap_ = std::make_unique<VersionHeap>(txns_, metrics_, HeapConfig{e.page_size, 0},
                                          (dir / "heap.dat").string());

    std::size_t buffer_pages = std::max<std::size_t>(e.buffer_capacity_bytes / e.page_size, 1);
    cache_ = std::make_unique<PageCache>(config_.cache_pages ? config_.cache_pages : buffer_pages, metrics_);
    buffer_ = std::make_unique<MvPbtBuffer>(e.buffer_capacity_bytes, e.evict_threshold_pct, e.staleness_evictions);

    if (config_.with_mvpbt) {
        MvPbtConfig mc;
        mc.page_size = e.page_size;
        mc.write_buffer_bytes = e.write_buffer_bytes;
        mc.filters = FilterConfig{e.bloom_fpr, e.pbf_fpr, e.pbf_prefix_len};
        mc.use_filters = config_.use_filters;
        mc.unique = config_.unique;
        mc.gc = config_.gc;
        mc.index_only_visibility = config_.index_only_visibility;
        VersionHeap* heap = heap_.get();
        mc.heap_visible = [heap](RecordID rid, const Snapshot& snap) {
            heap->fetch(rid);
            return heap->version_visible(rid, snap);
        };
        index_ = std::make_unique<MvPbt>("primary", (dir / "index.mvpbt").string(), txns_, metrics_,
                                         *cache_, trace, mc);
        buffer_->register_tree(*index_);
    }
    if (config_.with_baseline) {
        baseline_ = std::make_unique<BaselineTree>((dir / "baseline.idx").string(), metrics_, trace,
                                                   BaselineConfig{e.page_size, buffer_pages});
    }
    rebuild_from_heap();
}

Table::~Table() = default;

void Table::rebuild_from_heap() {
    for (RecordID head : heap_->chain_heads()) {
        heads_.push_back(head);
        if (!baseline_) continue;
        std::optional<RecordID> cur = head;
        while (cur) {
            VersionRecord rec = heap_->peek(*cur);
            if (txns_.state(rec.t_creation) != TxState::Aborted) baseline_->insert(rec.key, *cur);
            cur = rec.predecessor;
        }
    }
}

TransactionHandle Table::begin() { return txns_.begin(); }

void Table::commit(const TransactionHandle& tx) {
    std::lock_guard lock(mu_);
    txns_.commit(tx);
    undo_.erase(tx.ts.value);
}

void Table::abort(const TransactionHandle& tx) {
    std::lock_guard lock(mu_);
    txns_.abort(tx);
    auto it = undo_.find(tx.ts.value);
    if (it == undo_.end()) return;
    for (auto u = it->second.rbegin(); u != it->second.rend(); ++u) {
        heads_[u->id] = u->prev_head;
        if (baseline_ && u->baseline_entry) baseline_->erase(u->baseline_entry->first, u->baseline_entry->second);
    }
    undo_.erase(it);
}

RecordID Table::writable_head(const TransactionHandle& tx, TupleId id) const {
    if (id >= heads_.size()) throw Error(Errc::InvalidArgument, "unknown tuple id");
    if (!heads_[id]) throw Error(Errc::TupleDeleted, "tuple was never committed");
    RecordID h = *heads_[id];
    Timestamp creator = heap_->peek(h).t_creation;
    if (creator != tx.ts && !txns_.precedes(creator, tx.snapshot)) {
        throw Error(Errc::WriteConflict, "newest version not visible to the writer");
    }
    if (heap_->peek(h).tombstone) throw Error(Errc::TupleDeleted, "tuple deleted");
    return h;
}

void Table::after_write() {
    if (index_) buffer_->maintain();
}

TupleId Table::insert(const TransactionHandle& tx, const Key& key, std::string payload) {
    TupleId id;
    {
        std::lock_guard lock(mu_);
        if (index_ && config_.unique && index_->search(tx.snapshot, key)) {
            throw Error(Errc::UniqueViolation, "key already present");
        }
        RecordID rid = heap_->insert(tx, key, std::move(payload));
        if (index_) index_->insert(tx, key, rid);
        if (baseline_) baseline_->insert(key, rid);
        id = heads_.size();
        heads_.push_back(rid);
        undo_[tx.ts.value].push_back({id, std::nullopt, std::make_pair(key, rid)});
    }
    after_write();
    return id;
}

void Table::update(const TransactionHandle& tx, TupleId id, std::string payload) {
    {
        std::lock_guard lock(mu_);
        RecordID old = writable_head(tx, id);
        Key key = heap_->peek(old).key;
        RecordID rid = heap_->append_successor(tx, old, key, std::move(payload), false);
        if (index_) index_->update_nonkey(tx, key, old, rid);
        if (baseline_) baseline_->insert(key, rid);
        heads_[id] = rid;
        undo_[tx.ts.value].push_back({id, old, std::make_pair(key, rid)});
    }
    after_write();
}

void Table::update_key(const TransactionHandle& tx, TupleId id, const Key& new_key, std::string payload) {
    {
        std::lock_guard lock(mu_);
        RecordID old = writable_head(tx, id);
        Key key = heap_->peek(old).key;
        if (key == new_key) {
            // Same key: a plain update.
            RecordID rid = heap_->append_successor(tx, old, key, std::move(payload), false);
            if (index_) index_->update_nonkey(tx, key, old, rid);
            if (baseline_) baseline_->insert(key, rid);
            heads_[id] = rid;
            undo_[tx.ts.value].push_back({id, old, std::make_pair(key, rid)});
        } else {
            if (index_ && config_.unique && index_->search(tx.snapshot, new_key)) {
                throw Error(Errc::UniqueViolation, "key already present");
            }
            RecordID rid = heap_->append_successor(tx, old, new_key, std::move(payload), false);
            if (index_) index_->update_key(tx, key, new_key, old, rid);
            if (baseline_) baseline_->insert(new_key, rid);
            heads_[id] = rid;
            undo_[tx.ts.value].push_back({id, old, std::make_pair(new_key, rid)});
        }
    }
    after_write();
}

void Table::erase(const TransactionHandle& tx, TupleId id) {
    {
        std::lock_guard lock(mu_);
        RecordID old = writable_head(tx, id);
        Key key = heap_->peek(old).key;
        RecordID rid = heap_->append_successor(tx, old, key, {}, true);
        if (index_) index_->remove(tx, key, old);
        if (baseline_) baseline_->insert(key, rid);
        heads_[id] = rid;
        undo_[tx.ts.value].push_back({id, old, std::make_pair(key, rid)});
    }
    after_write();
}

std::optional<SearchHit> Table::get(const Snapshot& snap, const Key& key) const {
    if (!index_) throw Error(Errc::InvalidArgument, "table has no multi-version index");
    return index_->search(snap, key);
}

std::vector<SearchHit> Table::scan(const Snapshot& snap, const KeyBounds& bounds) const {
    if (!index_) throw Error(Errc::InvalidArgument, "table has no multi-version index");
    return index_->scan(snap, bounds);
}

std::vector<SearchHit> Table::baseline_scan(const Snapshot& snap, const KeyBounds& bounds) const {
    if (!baseline_) throw Error(Errc::InvalidArgument, "table has no baseline index");
    std::lock_guard lock(mu_);
    return baseline_->scan_visible(snap, bounds, *heap_);
}

std::vector<SearchHit> Table::oracle_scan(const Snapshot& snap, const KeyBounds& bounds) const {
    std::vector<SearchHit> out;
    std::lock_guard lock(mu_);
    for (const auto& h : heads_) {
        if (!h) continue;
        auto rid = heap_->resolve_visible(*h, snap);
        if (!rid) continue;
        Key key = heap_->peek(*rid).key;
        if (bounds.contains(key)) out.push_back({std::move(key), *rid});
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t Table::tuple_count() const {
    std::lock_guard lock(mu_);
    return heads_.size();
}

std::optional<RecordID> Table::head(TupleId id) const {
    std::lock_guard lock(mu_);
    if (id >= heads_.size()) return std::nullopt;
    return heads_[id];
}

void Table::close() {
    if (closed_) return;
    if (index_) {
        while (index_->evict()) {
        }
    }
    if (baseline_) baseline_->flush();
    heap_->flush();
    txns_.save((fs::path(config_.dir) / "txn.ckpt").string());
    closed_ = true;
}

}  // namespace mvpbt
