#pragma once

#include <list>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mvpbt/common.hpp"
#include "mvpbt/heap.hpp"
#include "mvpbt/io.hpp"
#include "mvpbt/metrics.hpp"
#include "mvpbt/mvpbt.hpp"

namespace mvpbt {

struct BaselineConfig {
    std::size_t page_size = kDefaultPageSize;
    // Buffer pool size in pages; dirty pages are written in place on eviction.
    std::size_t buffer_pages = 1024;
};

/// Version-oblivious B+-tree over (key, rid) pairs: one entry per tuple
/// version, visibility decided by fetching every candidate from the heap.
///
/// Nodes live in memory; a simulated LRU buffer pool decides when a node's
/// page image is written back in place to the index file.
class BaselineTree {
public:
    BaselineTree(const std::string& path, Metrics& metrics, IoTrace* trace, BaselineConfig config = {});

    void insert(const Key& key, RecordID rid);
    /// Returns false when the entry is absent.
    bool erase(const Key& key, RecordID rid);
    bool contains(const Key& key, RecordID rid) const;

    /// All (key, rid) entries within `bounds`.
    std::vector<SearchHit> range(const KeyBounds& bounds) const;

    /// Fetches every entry in range from the heap and keeps the versions
    /// visible to `snap`.
    std::vector<SearchHit> scan_visible(const Snapshot& snap, const KeyBounds& bounds,
                                        const VersionHeap& heap) const;

    /// Writes back every dirty page.
    void flush();

    std::size_t entry_count() const { return entries_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t height() const { return height_; }

private:
    using Entry = std::pair<Key, RecordID>;
    struct Node {
        bool leaf = true;
        std::vector<Entry> entries;  // leaf: data; internal: separators (first entry of child i+1)
        std::vector<std::uint32_t> children;
        std::size_t bytes = 0;
        std::uint32_t next = UINT32_MAX;  // right sibling for leaves
    };

    static std::size_t entry_bytes(const Entry& e) { return 2 + e.first.size() + 6 + 2; }
    std::uint32_t new_node(bool leaf);
    void touch(std::uint32_t page, bool dirty) const;
    void write_page(std::uint32_t page) const;
    std::string encode_node(const Node& n) const;
    std::optional<std::pair<Entry, std::uint32_t>> insert_rec(std::uint32_t page, const Entry& e);
    std::uint32_t find_leaf(const Entry& e) const;

    Metrics& metrics_;
    IoTrace* trace_;
    BaselineConfig config_;
    File file_;

    std::vector<std::unique_ptr<Node>> nodes_;
    std::uint32_t root_ = 0;
    std::size_t height_ = 1;
    std::size_t entries_ = 0;

    // Simulated buffer pool.
    mutable std::list<std::uint32_t> lru_;
    mutable std::unordered_map<std::uint32_t, std::pair<std::list<std::uint32_t>::iterator, bool>> resident_;
};

}  // namespace mvpbt
