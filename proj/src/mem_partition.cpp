#include "mvpbt/mem_partition.hpp"

#include <algorithm>
#include <mutex>

namespace mvpbt {

void MemLeaf::recount() {
    used_bytes = MemPartition::kLeafHeaderSize;
    bool garbage = false;
    for (const auto& rec : records) {
        used_bytes += encoded_size(rec) + MemPartition::kSlotSize;
        garbage = garbage || rec.gc_flagged();
    }
    has_garbage.store(garbage);
}

MemPartition::MemPartition(PartitionNo no, std::size_t page_size, Metrics& metrics)
    : no_(no), page_size_(page_size), metrics_(metrics) {
    if (page_size < 512) throw Error(Errc::InvalidArgument, "page size too small");
}

std::size_t MemPartition::find_leaf(const IndexRecord& r) const {
    if (leaves_.size() <= 1) return 0;
    // First leaf whose last record is >= r, so a new version lands next to
    // the existing records of its key.
    auto it = std::partition_point(leaves_.begin(), leaves_.end(), [&](const std::unique_ptr<MemLeaf>& leaf) {
        return compare(leaf->records.back(), r) < 0;
    });
    if (it == leaves_.end()) return leaves_.size() - 1;
    return static_cast<std::size_t>(std::distance(leaves_.begin(), it));
}

void MemPartition::insert(IndexRecord r, const Reclaimer& reclaim) {
    if (sealed()) throw Error(Errc::ImmutablePartition, "insert into sealed partition");
    if (r.partition_no != no_) throw Error(Errc::InvalidArgument, "record stamped for another partition");
    validate(r);
    if (kLeafHeaderSize + footprint(r) > capacity()) {
        throw Error(Errc::KeyTooLarge, "record does not fit a leaf page");
    }

    std::unique_lock lock(latch_);
    if (leaves_.empty()) {
        auto leaf = std::make_unique<MemLeaf>();
        leaf->used_bytes = kLeafHeaderSize;
        leaves_.push_back(std::move(leaf));
    }
    std::size_t idx = find_leaf(r);
    MemLeaf* leaf = leaves_[idx].get();
    metrics_.mem_page_fetches++;
    if (reclaim && leaf->has_garbage.load()) {
        record_count_ -= reclaim(*leaf);
        if (leaf->records.empty() && leaves_.size() > 1) {
            leaves_.erase(leaves_.begin() + static_cast<std::ptrdiff_t>(idx));
            idx = find_leaf(r);
            leaf = leaves_[idx].get();
        }
    }
    auto pos = std::upper_bound(leaf->records.begin(), leaf->records.end(), r, IndexRecordLess{});
    leaf->used_bytes += footprint(r);
    leaf->records.insert(pos, std::move(r));
    ++record_count_;
    if (leaf->used_bytes > capacity()) split(idx);
}

void MemPartition::split(std::size_t leaf_index) {
    MemLeaf& left = *leaves_[leaf_index];
    // Halve by bytes; random inserts then settle around 2/3 fill.
    std::size_t half = (left.used_bytes - kLeafHeaderSize) / 2;
    std::size_t acc = 0;
    std::size_t cut = 0;
    while (cut < left.records.size() && acc + footprint(left.records[cut]) <= half) {
        acc += footprint(left.records[cut]);
        ++cut;
    }
    cut = std::clamp<std::size_t>(cut, 1, left.records.size() - 1);

    auto right = std::make_unique<MemLeaf>();
    right->records.assign(std::make_move_iterator(left.records.begin() + static_cast<std::ptrdiff_t>(cut)),
                          std::make_move_iterator(left.records.end()));
    left.records.resize(cut);
    left.recount();
    right->recount();
    leaves_.insert(leaves_.begin() + static_cast<std::ptrdiff_t>(leaf_index) + 1, std::move(right));
}

void MemPartition::scan(const KeyBounds& bounds, const Visitor& visit) const {
    std::shared_lock lock(latch_);
    if (bounds.low && bounds.high && *bounds.low > *bounds.high) return;
    std::size_t li = 0;
    if (bounds.low) {
        // First leaf whose last key is >= low.
        auto it = std::partition_point(leaves_.begin(), leaves_.end(),
                                       [&](const std::unique_ptr<MemLeaf>& leaf) {
                                           return leaf->records.back().key < *bounds.low;
                                       });
        li = static_cast<std::size_t>(std::distance(leaves_.begin(), it));
    }
    for (; li < leaves_.size(); ++li) {
        const MemLeaf& leaf = *leaves_[li];
        metrics_.mem_page_fetches++;
        auto it = leaf.records.begin();
        if (bounds.low) {
            it = std::partition_point(leaf.records.begin(), leaf.records.end(),
                                      [&](const IndexRecord& rec) { return rec.key < *bounds.low; });
        }
        for (; it != leaf.records.end(); ++it) {
            if (bounds.high && it->key > *bounds.high) return;
            if (!visit(*it, leaf)) return;
        }
    }
}

std::vector<IndexRecord> MemPartition::collect(const KeyBounds& bounds) const {
    std::vector<IndexRecord> out;
    scan(bounds, [&](const IndexRecord& r, const MemLeaf&) {
        // Field-wise copy: the flags byte may be updated concurrently.
        IndexRecord copy{r.partition_no, r.key, r.kind, r.ts, r.rid_matter, r.rid_anti,
                         flags_for(r.kind)};
        if (r.gc_flagged()) copy.flags |= flag::kGc;
        out.push_back(std::move(copy));
        return true;
    });
    return out;
}

bool MemPartition::flag_for_gc(const IndexRecord& r, const MemLeaf& leaf) {
    bool newly = r.mark_gc();
    leaf.has_garbage.store(true);
    return newly;
}

std::size_t MemPartition::reclaim_all(const Reclaimer& fn) {
    std::unique_lock lock(latch_);
    std::size_t removed = 0;
    for (std::size_t i = 0; i < leaves_.size();) {
        MemLeaf& leaf = *leaves_[i];
        if (leaf.has_garbage.load()) {
            std::size_t n = fn(leaf);
            removed += n;
            record_count_ -= n;
        }
        if (leaf.records.empty() && leaves_.size() > 1) {
            leaves_.erase(leaves_.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
            ++i;
        }
    }
    if (leaves_.size() == 1 && leaves_.front()->records.empty()) leaves_.clear();
    return removed;
}

std::size_t MemPartition::record_count() const {
    std::shared_lock lock(latch_);
    return record_count_;
}

std::size_t MemPartition::leaf_count() const {
    std::shared_lock lock(latch_);
    return leaves_.size();
}

double MemPartition::mean_fill() const {
    std::shared_lock lock(latch_);
    if (leaves_.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& leaf : leaves_) sum += static_cast<double>(leaf->used_bytes) / static_cast<double>(page_size_);
    return sum / static_cast<double>(leaves_.size());
}

bool MemPartition::leaf_garbage_consistent() const {
    std::shared_lock lock(latch_);
    for (const auto& leaf : leaves_) {
        bool any = std::any_of(leaf->records.begin(), leaf->records.end(),
                               [](const IndexRecord& r) { return r.gc_flagged(); });
        if (any != leaf->has_garbage.load()) return false;
    }
    return true;
}

}  // namespace mvpbt
