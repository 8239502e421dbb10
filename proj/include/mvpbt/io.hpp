#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "mvpbt/metrics.hpp"

namespace mvpbt {

/// RAII wrapper over a POSIX file descriptor with positional I/O.
class File {
public:
    File() = default;
    File(const std::string& path, bool create);
    ~File();
    File(File&& other) noexcept;
    File& operator=(File&& other) noexcept;
    File(const File&) = delete;
    File& operator=(const File&) = delete;

    bool is_open() const { return fd_ >= 0; }
    const std::string& path() const { return path_; }

    void pwrite(std::uint64_t offset, std::string_view bytes);
    std::string pread(std::uint64_t offset, std::size_t length) const;
    std::uint64_t size() const;
    void truncate(std::uint64_t length);
    void sync();

private:
    int fd_ = -1;
    std::string path_;
};

struct IndexFileConfig {
    std::size_t page_size = 8192;
    // Page writes are coalesced into physical writes of at least this size.
    std::size_t write_buffer_bytes = 64 * 1024;
    // 0 means unlimited.
    std::uint64_t max_bytes = 0;
    bool sync_extents = false;
};

/// Append-only index file. Writes go through a coalescing buffer; every
/// physical write is counted and optionally traced.
class IndexFile {
public:
    IndexFile(const std::string& path, IndexFileConfig config, Metrics& metrics, IoTrace* trace);

    std::uint32_t id() const { return id_; }
    const IndexFileConfig& config() const { return config_; }

    /// Logical end of file, including buffered bytes.
    std::uint64_t end() const { return end_; }

    void begin_extent(std::string tag);
    std::uint64_t append(std::string_view bytes);
    void end_extent();

    /// Drop everything from `offset` on; used to roll back a failed extent.
    void rollback_to(std::uint64_t offset);

    std::string read(std::uint64_t offset, std::size_t length) const;

private:
    void flush_buffer();

    File file_;
    IndexFileConfig config_;
    Metrics& metrics_;
    IoTrace* trace_;
    std::uint32_t id_;
    std::uint64_t end_ = 0;
    std::uint64_t buffer_start_ = 0;
    std::string buffer_;
    std::string extent_tag_ = "append";
};

/// Shared LRU cache of persisted index pages (the DB buffer). Every request
/// counts as one persisted page fetch; misses call the loader.
class PageCache {
public:
    using Page = std::shared_ptr<const std::string>;

    PageCache(std::size_t capacity_pages, Metrics& metrics)
        : capacity_(capacity_pages == 0 ? 1 : capacity_pages), metrics_(metrics) {}

    Page get(std::uint32_t file_id, std::uint64_t offset,
             const std::function<std::string()>& loader);

    void invalidate_file(std::uint32_t file_id);
    std::size_t size() const;

private:
    struct KeyHash {
        std::size_t operator()(const std::pair<std::uint32_t, std::uint64_t>& k) const noexcept {
            return std::hash<std::uint64_t>{}(k.second * 31 + k.first);
        }
    };
    using CacheKey = std::pair<std::uint32_t, std::uint64_t>;

    std::size_t capacity_;
    Metrics& metrics_;
    mutable std::mutex mu_;
    std::list<std::pair<CacheKey, Page>> lru_;
    std::unordered_map<CacheKey, std::list<std::pair<CacheKey, Page>>::iterator, KeyHash> map_;
};

}  // namespace mvpbt
