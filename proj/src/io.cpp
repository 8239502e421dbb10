#include "mvpbt/io.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>

#include "mvpbt/common.hpp"

namespace mvpbt {

namespace {

std::atomic<std::uint32_t> next_file_id{1};

[[noreturn]] void io_fail(const std::string& what, const std::string& path) {
    throw Error(Errc::IoError, what + " " + path + ": " + std::strerror(errno));
}

}  // namespace

File::File(const std::string& path, bool create) : path_(path) {
    int flags = O_RDWR | O_CLOEXEC;
    if (create) flags |= O_CREAT;
    fd_ = ::open(path.c_str(), flags, 0644);
    if (fd_ < 0) io_fail("open", path);
}

File::~File() {
    if (fd_ >= 0) ::close(fd_);
}

File::File(File&& other) noexcept : fd_(other.fd_), path_(std::move(other.path_)) {
    other.fd_ = -1;
}

File& File::operator=(File&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        fd_ = other.fd_;
        path_ = std::move(other.path_);
        other.fd_ = -1;
    }
    return *this;
}

void File::pwrite(std::uint64_t offset, std::string_view bytes) {
    std::size_t done = 0;
    while (done < bytes.size()) {
        auto n = ::pwrite(fd_, bytes.data() + done, bytes.size() - done,
                          static_cast<off_t>(offset + done));
        if (n < 0) {
            if (errno == EINTR) continue;
            io_fail("pwrite", path_);
        }
        done += static_cast<std::size_t>(n);
    }
}

std::string File::pread(std::uint64_t offset, std::size_t length) const {
    std::string out(length, '\0');
    std::size_t done = 0;
    while (done < length) {
        auto n = ::pread(fd_, out.data() + done, length - done, static_cast<off_t>(offset + done));
        if (n < 0) {
            if (errno == EINTR) continue;
            io_fail("pread", path_);
        }
        if (n == 0) throw Error(Errc::CorruptPage, "short read in " + path_);
        done += static_cast<std::size_t>(n);
    }
    return out;
}

std::uint64_t File::size() const {
    struct stat st {};
    if (::fstat(fd_, &st) != 0) io_fail("fstat", path_);
    return static_cast<std::uint64_t>(st.st_size);
}

void File::truncate(std::uint64_t length) {
    if (::ftruncate(fd_, static_cast<off_t>(length)) != 0) io_fail("ftruncate", path_);
}

void File::sync() {
    if (::fdatasync(fd_) != 0) io_fail("fdatasync", path_);
}

IndexFile::IndexFile(const std::string& path, IndexFileConfig config, Metrics& metrics,
                     IoTrace* trace)
    : file_(path, true), config_(config), metrics_(metrics), trace_(trace),
      id_(next_file_id.fetch_add(1)) {
    end_ = file_.size();
    buffer_start_ = end_;
}

void IndexFile::begin_extent(std::string tag) {
    flush_buffer();
    extent_tag_ = std::move(tag);
}

std::uint64_t IndexFile::append(std::string_view bytes) {
    if (config_.max_bytes != 0 && end_ + bytes.size() > config_.max_bytes) {
        throw Error(Errc::StorageFull, "index file limit reached");
    }
    std::uint64_t offset = end_;
    buffer_.append(bytes);
    end_ += bytes.size();
    if (buffer_.size() >= config_.write_buffer_bytes) flush_buffer();
    return offset;
}

void IndexFile::flush_buffer() {
    if (buffer_.empty()) return;
    file_.pwrite(buffer_start_, buffer_);
    metrics_.index_bytes_written += buffer_.size();
    if (trace_ != nullptr) trace_->record(buffer_start_, buffer_.size(), extent_tag_);
    buffer_start_ += buffer_.size();
    buffer_.clear();
}

void IndexFile::end_extent() {
    flush_buffer();
    if (config_.sync_extents) file_.sync();
}

void IndexFile::rollback_to(std::uint64_t offset) {
    buffer_.clear();
    file_.truncate(offset);
    end_ = offset;
    buffer_start_ = offset;
}

std::string IndexFile::read(std::uint64_t offset, std::size_t length) const {
    if (offset + length > buffer_start_) {
        throw Error(Errc::CorruptPage, "read beyond flushed end of index file");
    }
    return file_.pread(offset, length);
}

PageCache::Page PageCache::get(std::uint32_t file_id, std::uint64_t offset,
                               const std::function<std::string()>& loader) {
    metrics_.persisted_page_fetches++;
    CacheKey key{file_id, offset};
    {
        std::lock_guard lock(mu_);
        if (auto it = map_.find(key); it != map_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            metrics_.cache_hits++;
            return it->second->second;
        }
    }
    metrics_.cache_misses++;
    auto page = std::make_shared<const std::string>(loader());
    std::lock_guard lock(mu_);
    if (auto it = map_.find(key); it != map_.end()) return it->second->second;
    lru_.emplace_front(key, page);
    map_[key] = lru_.begin();
    while (lru_.size() > capacity_) {
        map_.erase(lru_.back().first);
        lru_.pop_back();
    }
    return page;
}

void PageCache::invalidate_file(std::uint32_t file_id) {
    std::lock_guard lock(mu_);
    for (auto it = lru_.begin(); it != lru_.end();) {
        if (it->first.first == file_id) {
            map_.erase(it->first);
            it = lru_.erase(it);
        } else {
            ++it;
        }
    }
}

std::size_t PageCache::size() const {
    std::lock_guard lock(mu_);
    return lru_.size();
}

}  // namespace mvpbt
