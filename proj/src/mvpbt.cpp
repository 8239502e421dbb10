#include "mvpbt/mvpbt.hpp"

#include <algorithm>

#include "mvpbt/gc.hpp"

namespace mvpbt {

MvPbt::MvPbt(std::string name, std::string index_path, TransactionManager& txns, Metrics& metrics,
             PageCache& cache, IoTrace* trace, MvPbtConfig config)
    : name_(std::move(name)), txns_(txns), metrics_(metrics), cache_(cache), config_(std::move(config)) {
    if (!config_.index_only_visibility && !config_.heap_visible) {
        throw Error(Errc::InvalidArgument, "heap check required when index-only visibility is off");
    }
    IndexFileConfig fc;
    fc.page_size = config_.page_size;
    fc.write_buffer_bytes = config_.write_buffer_bytes;
    fc.max_bytes = config_.max_index_bytes;
    file_ = std::make_unique<IndexFile>(index_path, fc, metrics_, trace);
    persisted_ = open_partitions(*file_, cache_);
    std::uint32_t next = 1;
    if (!persisted_.empty()) next = std::uint32_t{persisted_.front()->partition_no().value} + 2;
    if (next > UINT16_MAX) throw Error(Errc::InvalidArgument, "partition numbers exhausted");
    mem_ = std::make_shared<MemPartition>(PartitionNo{static_cast<std::uint16_t>(next)},
                                          config_.page_size, metrics_);
}

MvPbt::View MvPbt::view() const {
    std::shared_lock lock(parts_mu_);
    return View{mem_, sealed_, persisted_};
}

IndexRecord MvPbt::stamp(RecordKind kind, const TransactionHandle& tx, const Key& key,
                         std::optional<RecordID> matter, std::optional<RecordID> anti) const {
    return make_record(kind, PartitionNo{}, key, tx.ts, matter, anti);
}

void MvPbt::put(IndexRecord r) {
    MemPartition::Reclaimer reclaim;
    if (config_.gc) {
        reclaim = [this](MemLeaf& leaf) {
            std::size_t n = gc_reclaim_leaf(leaf, txns_.cutoff_timestamp(), txns_);
            metrics_.gc_reclaimed += n;
            return n;
        };
    }
    // Holding the shared side keeps the mutable partition from being swapped
    // out while the insert is in flight.
    std::shared_lock lock(parts_mu_);
    r.partition_no = mem_->partition_no();
    mem_->insert(std::move(r), reclaim);
}

void MvPbt::check_unique(const TransactionHandle& tx, const Key& key) const {
    if (config_.unique && search(tx.snapshot, key)) {
        throw Error(Errc::UniqueViolation, "key already present in " + name_);
    }
}

void MvPbt::insert(const TransactionHandle& tx, const Key& key, RecordID rid) {
    check_unique(tx, key);
    put(stamp(RecordKind::Regular, tx, key, rid, std::nullopt));
}

void MvPbt::update_nonkey(const TransactionHandle& tx, const Key& key, RecordID rid_old, RecordID rid_new) {
    put(stamp(RecordKind::Replacement, tx, key, rid_new, rid_old));
}

void MvPbt::update_key(const TransactionHandle& tx, const Key& key_old, const Key& key_new,
                       RecordID rid_old, RecordID rid_new) {
    if (key_old == key_new) throw Error(Errc::InvalidArgument, "key update with equal keys");
    check_unique(tx, key_new);
    auto anti = stamp(RecordKind::Anti, tx, key_old, std::nullopt, rid_old);
    auto repl = stamp(RecordKind::Replacement, tx, key_new, rid_new, rid_old);
    put(std::move(anti));
    put(std::move(repl));
}

void MvPbt::remove(const TransactionHandle& tx, const Key& key, RecordID rid_latest) {
    put(stamp(RecordKind::Tombstone, tx, key, std::nullopt, rid_latest));
}

template <typename Fn>
void MvPbt::visit_partitions(const View& v, const Snapshot& snap, const KeyBounds& bounds, bool point,
                             Fn&& on_visible) const {
    AntiMap anti_map;
    const Timestamp cutoff = config_.gc ? txns_.cutoff_timestamp() : Timestamp{0};
    bool stop = false;

    auto check = [&](const IndexRecord& r) -> bool {
        metrics_.records_examined++;
        if (!config_.index_only_visibility) {
            if (matter_candidate(r) && config_.heap_visible(*r.rid_matter, snap)) return true;
            return false;
        }
        return visibility_check(r, snap, anti_map, txns_).visible();
    };

    auto scan_mem = [&](const MemPartition& p, bool mark) {
        metrics_.partitions_searched++;
        p.scan(bounds, [&](const IndexRecord& r, const MemLeaf& leaf) {
            bool visible;
            if (config_.index_only_visibility) {
                metrics_.records_examined++;
                auto res = visibility_check(r, snap, anti_map, txns_);
                visible = res.visible();
                if (mark && config_.gc && phase1_should_flag(r, res, cutoff, txns_)) {
                    if (MemPartition::flag_for_gc(r, leaf)) metrics_.gc_flagged++;
                }
            } else {
                visible = check(r);
            }
            if (visible && !on_visible(r)) stop = true;
            return !stop;
        });
    };

    scan_mem(*v.mem, true);
    if (!stop && v.sealed) scan_mem(*v.sealed, false);
    for (const auto& p : v.persisted) {
        if (stop) break;
        if (config_.use_filters) {
            const FilterSet& fs = p->filters();
            bool skip = point ? (!may_contain_point(fs, *bounds.low) || fs.min_ts > snap.own_ts)
                              : !may_contain_range(fs, bounds);
            if (skip) {
                metrics_.partitions_skipped++;
                continue;
            }
        }
        metrics_.partitions_searched++;
        p->scan(bounds, [&](const IndexRecord& r) {
            if (check(r) && !on_visible(r)) stop = true;
            return !stop;
        });
    }
}

std::optional<SearchHit> MvPbt::search(const Snapshot& snap, const Key& key) const {
    std::optional<SearchHit> hit;
    visit_partitions(view(), snap, KeyBounds::point(key), true, [&](const IndexRecord& r) {
        hit = SearchHit{r.key, *r.rid_matter};
        return false;
    });
    return hit;
}

std::vector<SearchHit> MvPbt::scan(const Snapshot& snap, const KeyBounds& bounds) const {
    std::vector<SearchHit> out;
    visit_partitions(view(), snap, bounds, bounds.is_point(), [&](const IndexRecord& r) {
        out.push_back(SearchHit{r.key, *r.rid_matter});
        return true;
    });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

PartitionPtr MvPbt::evict() {
    std::lock_guard guard(evict_mu_);
    std::shared_ptr<MemPartition> sealed;
    std::uint64_t prev_extent = PartitionFooter::kNone;
    {
        std::unique_lock lock(parts_mu_);
        if (!sealed_) {
            if (mem_->empty()) return nullptr;
            std::uint32_t next = std::uint32_t{mem_->partition_no().value} + 1;
            if (next > UINT16_MAX) throw Error(Errc::InvalidArgument, "partition numbers exhausted");
            sealed_ = mem_;
            sealed_->seal();
            mem_ = std::make_shared<MemPartition>(PartitionNo{static_cast<std::uint16_t>(next)},
                                                  config_.page_size, metrics_);
        }
        sealed = sealed_;
        if (!persisted_.empty()) prev_extent = persisted_.front()->footer().extent_offset;
    }

    std::vector<IndexRecord> records = sealed->collect();
    if (config_.gc) {
        Phase3Result res = gc_phase3(std::move(records), txns_.cutoff_timestamp(), txns_);
        metrics_.gc_reclaimed += res.removed;
        records = std::move(res.survivors);
    }
    PartitionNo target{static_cast<std::uint16_t>(sealed->partition_no().value - 1)};
    // On failure the sealed partition stays readable and the next call retries.
    PartitionPtr part = persist_partition(records, target, *file_, cache_, config_.filters, prev_extent);

    {
        std::unique_lock lock(parts_mu_);
        persisted_.insert(persisted_.begin(), part);
        sealed_.reset();
    }
    metrics_.evictions++;
    return part;
}

std::size_t MvPbt::reclaim_garbage() {
    std::shared_lock lock(parts_mu_);
    std::size_t n = mem_->reclaim_all([this](MemLeaf& leaf) {
        return gc_reclaim_leaf(leaf, txns_.cutoff_timestamp(), txns_);
    });
    metrics_.gc_reclaimed += n;
    return n;
}

std::size_t MvPbt::resident_bytes() const {
    auto v = view();
    return v.mem->resident_bytes() + (v.sealed ? v.sealed->resident_bytes() : 0);
}

std::size_t MvPbt::mem_record_count() const { return view().mem->record_count(); }
PartitionNo MvPbt::mem_partition_no() const { return view().mem->partition_no(); }
double MvPbt::mem_fill() const { return view().mem->mean_fill(); }
bool MvPbt::mem_garbage_consistent() const { return view().mem->leaf_garbage_consistent(); }
std::vector<PartitionPtr> MvPbt::persisted() const { return view().persisted; }
std::size_t MvPbt::persisted_count() const { return view().persisted.size(); }

std::vector<IndexRecord> MvPbt::dump() const {
    auto v = view();
    std::vector<IndexRecord> out = v.mem->collect();
    if (v.sealed) {
        auto s = v.sealed->collect();
        out.insert(out.end(), s.begin(), s.end());
    }
    for (const auto& p : v.persisted) {
        auto s = p->collect();
        out.insert(out.end(), s.begin(), s.end());
    }
    return out;
}

MvPbtBuffer::MvPbtBuffer(std::size_t capacity_bytes, unsigned threshold_pct, unsigned staleness)
    : capacity_(capacity_bytes), threshold_pct_(threshold_pct), staleness_(staleness) {
    if (threshold_pct == 0 || threshold_pct > 100) throw Error(Errc::InvalidArgument, "threshold pct out of range");
}

void MvPbtBuffer::register_tree(MvPbt& tree) {
    std::lock_guard lock(mu_);
    trees_.push_back(&tree);
    idle_.push_back(0);
}

std::size_t MvPbtBuffer::resident_bytes() const {
    std::lock_guard lock(mu_);
    std::size_t sum = 0;
    for (auto* t : trees_) sum += t->resident_bytes();
    return sum;
}

bool MvPbtBuffer::over_threshold() const {
    return resident_bytes() * 100 >= capacity_ * threshold_pct_;
}

MvPbt& MvPbtBuffer::select_victim() {
    std::lock_guard lock(mu_);
    std::size_t best = trees_.size();
    for (std::size_t i = 0; i < trees_.size(); ++i) {
        if (staleness_ > 0 && idle_[i] >= staleness_ && trees_[i]->mem_record_count() > 0 &&
            (best == trees_.size() || idle_[i] > idle_[best])) {
            best = i;
        }
    }
    if (best == trees_.size()) {
        std::size_t largest = 0;
        for (std::size_t i = 0; i < trees_.size(); ++i) {
            std::size_t bytes = trees_[i]->resident_bytes();
            if (trees_[i]->mem_record_count() > 0 && bytes > largest) {
                largest = bytes;
                best = i;
            }
        }
    }
    if (best == trees_.size()) throw Error(Errc::EmptyBuffer, "no tree has a non-empty partition");
    for (std::size_t i = 0; i < trees_.size(); ++i) idle_[i] = (i == best) ? 0 : idle_[i] + 1;
    return *trees_[best];
}

std::size_t MvPbtBuffer::maintain() {
    std::size_t n = 0;
    while (over_threshold() && resident_bytes() > 0) {
        select_victim().evict();
        ++n;
    }
    return n;
}

}  // namespace mvpbt
