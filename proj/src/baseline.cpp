#include "mvpbt/baseline.hpp"

#include <algorithm>

namespace mvpbt {

namespace {

constexpr std::size_t kNodeHeaderSize = 16;

bool entry_less(const std::pair<Key, RecordID>& a, const std::pair<Key, RecordID>& b) {
    if (int c = a.first.compare(b.first); c != 0) return c < 0;
    return a.second < b.second;
}

}  // namespace

BaselineTree::BaselineTree(const std::string& path, Metrics& metrics, IoTrace* trace, BaselineConfig config)
    : metrics_(metrics), trace_(trace), config_(config), file_(path, true) {
    if (config_.page_size < 512) throw Error(Errc::InvalidArgument, "page size too small");
    file_.truncate(0);
    root_ = new_node(true);
}

std::uint32_t BaselineTree::new_node(bool leaf) {
    auto n = std::make_unique<Node>();
    n->leaf = leaf;
    n->bytes = kNodeHeaderSize;
    nodes_.push_back(std::move(n));
    auto page = static_cast<std::uint32_t>(nodes_.size() - 1);
    touch(page, true);
    return page;
}

std::string BaselineTree::encode_node(const Node& n) const {
    std::string out;
    out.reserve(config_.page_size);
    out.push_back(n.leaf ? 1 : 2);
    out.push_back('\0');
    le::put_u16(out, static_cast<std::uint16_t>(n.entries.size()));
    le::put_u32(out, n.next);
    le::put_u64(out, 0);
    for (std::size_t i = 0; i < n.entries.size(); ++i) {
        le::put_u16(out, static_cast<std::uint16_t>(n.entries[i].first.size()));
        out += n.entries[i].first;
        le::put_rid(out, n.entries[i].second);
        if (!n.leaf) le::put_u32(out, n.children[i + 1]);
    }
    if (!n.leaf) le::put_u32(out, n.children.front());
    out.resize(config_.page_size, '\0');
    return out;
}

void BaselineTree::write_page(std::uint32_t page) const {
    std::uint64_t off = std::uint64_t{page} * config_.page_size;
    const_cast<File&>(file_).pwrite(off, encode_node(*nodes_[page]));
    metrics_.index_bytes_written += config_.page_size;
    if (trace_ != nullptr) trace_->record(off, config_.page_size, "page");
}

void BaselineTree::touch(std::uint32_t page, bool dirty) const {
    metrics_.persisted_page_fetches++;
    if (auto it = resident_.find(page); it != resident_.end()) {
        metrics_.cache_hits++;
        lru_.splice(lru_.begin(), lru_, it->second.first);
        it->second.second = it->second.second || dirty;
        return;
    }
    metrics_.cache_misses++;
    lru_.push_front(page);
    resident_[page] = {lru_.begin(), dirty};
    while (lru_.size() > std::max<std::size_t>(config_.buffer_pages, 1)) {
        std::uint32_t victim = lru_.back();
        lru_.pop_back();
        if (resident_[victim].second) write_page(victim);
        resident_.erase(victim);
    }
}

std::optional<std::pair<BaselineTree::Entry, std::uint32_t>> BaselineTree::insert_rec(std::uint32_t page,
                                                                                      const Entry& e) {
    touch(page, false);
    Node* n = nodes_[page].get();
    if (!n->leaf) {
        auto it = std::upper_bound(n->entries.begin(), n->entries.end(), e, entry_less);
        std::size_t child = static_cast<std::size_t>(it - n->entries.begin());
        auto split = insert_rec(n->children[child], e);
        if (!split) return std::nullopt;
        n = nodes_[page].get();
        n->entries.insert(n->entries.begin() + static_cast<std::ptrdiff_t>(child), split->first);
        n->children.insert(n->children.begin() + static_cast<std::ptrdiff_t>(child) + 1, split->second);
        n->bytes += entry_bytes(split->first) + 4;
    } else {
        auto it = std::lower_bound(n->entries.begin(), n->entries.end(), e, entry_less);
        if (it != n->entries.end() && *it == e) throw Error(Errc::DuplicateEntry, "entry already indexed");
        n->entries.insert(it, e);
        n->bytes += entry_bytes(e);
    }
    touch(page, true);
    if (n->bytes <= config_.page_size) return std::nullopt;

    // Split in half by count.
    bool leaf = n->leaf;
    std::uint32_t right_page = new_node(leaf);
    n = nodes_[page].get();
    Node* right = nodes_[right_page].get();
    std::size_t mid = n->entries.size() / 2;
    Entry separator = n->entries[mid];
    if (leaf) {
        right->entries.assign(n->entries.begin() + static_cast<std::ptrdiff_t>(mid), n->entries.end());
        n->entries.resize(mid);
        right->next = n->next;
        n->next = right_page;
    } else {
        right->entries.assign(n->entries.begin() + static_cast<std::ptrdiff_t>(mid) + 1, n->entries.end());
        right->children.assign(n->children.begin() + static_cast<std::ptrdiff_t>(mid) + 1, n->children.end());
        n->entries.resize(mid);
        n->children.resize(mid + 1);
    }
    auto recount = [&](Node& x) {
        x.bytes = kNodeHeaderSize + (x.leaf ? 0 : 4 * x.children.size());
        for (const auto& en : x.entries) x.bytes += entry_bytes(en);
    };
    recount(*n);
    recount(*right);
    return std::make_pair(separator, right_page);
}

void BaselineTree::insert(const Key& key, RecordID rid) {
    if (key.size() > kMaxKeySize) throw Error(Errc::KeyTooLarge, "index key exceeds limit");
    auto split = insert_rec(root_, {key, rid});
    if (split) {
        std::uint32_t new_root = new_node(false);
        Node* r = nodes_[new_root].get();
        r->entries.push_back(split->first);
        r->children = {root_, split->second};
        r->bytes += entry_bytes(split->first) + 8;
        root_ = new_root;
        ++height_;
    }
    ++entries_;
}

std::uint32_t BaselineTree::find_leaf(const Entry& e) const {
    std::uint32_t page = root_;
    for (;;) {
        touch(page, false);
        const Node& n = *nodes_[page];
        if (n.leaf) return page;
        auto it = std::upper_bound(n.entries.begin(), n.entries.end(), e, entry_less);
        page = n.children[static_cast<std::size_t>(it - n.entries.begin())];
    }
}

bool BaselineTree::erase(const Key& key, RecordID rid) {
    Entry e{key, rid};
    std::uint32_t page = find_leaf(e);
    Node& n = *nodes_[page];
    auto it = std::lower_bound(n.entries.begin(), n.entries.end(), e, entry_less);
    if (it == n.entries.end() || *it != e) return false;
    n.bytes -= entry_bytes(*it);
    n.entries.erase(it);
    touch(page, true);
    --entries_;
    return true;
}

bool BaselineTree::contains(const Key& key, RecordID rid) const {
    Entry e{key, rid};
    const Node& n = *nodes_[find_leaf(e)];
    return std::binary_search(n.entries.begin(), n.entries.end(), e, entry_less);
}

std::vector<SearchHit> BaselineTree::range(const KeyBounds& bounds) const {
    std::vector<SearchHit> out;
    if (bounds.low && bounds.high && *bounds.low > *bounds.high) return out;
    std::uint32_t page = find_leaf({bounds.low.value_or(Key{}), RecordID{}});
    while (page != UINT32_MAX) {
        const Node& n = *nodes_[page];
        for (const auto& [k, rid] : n.entries) {
            if (bounds.low && k < *bounds.low) continue;
            if (bounds.high && k > *bounds.high) return out;
            out.push_back({k, rid});
        }
        page = n.next;
        if (page != UINT32_MAX) touch(page, false);
    }
    return out;
}

std::vector<SearchHit> BaselineTree::scan_visible(const Snapshot& snap, const KeyBounds& bounds,
                                                  const VersionHeap& heap) const {
    std::vector<SearchHit> out;
    for (auto& hit : range(bounds)) {
        metrics_.records_examined++;
        heap.fetch(hit.rid);
        if (heap.version_visible(hit.rid, snap)) out.push_back(std::move(hit));
    }
    return out;
}

void BaselineTree::flush() {
    for (auto& [page, state] : resident_) {
        if (state.second) {
            write_page(page);
            state.second = false;
        }
    }
}

}  // namespace mvpbt
