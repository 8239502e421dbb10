#include "mvpbt/heap.hpp"

#include <mutex>

namespace mvpbt {

namespace {
constexpr std::uint8_t kTombstoneBit = 0x1;
constexpr std::uint8_t kHasPredBit = 0x2;
}  // namespace

VersionHeap::VersionHeap(TransactionManager& txns, Metrics& metrics, HeapConfig config,
                         std::string path)
    : txns_(txns), metrics_(metrics), config_(config) {
    if (config_.page_size < 256 || config_.page_size > 65535) {
        throw Error(Errc::InvalidArgument, "heap page size must be in [256, 65535]");
    }
    if (path.empty()) return;
    file_.emplace(path, true);
    std::uint64_t size = file_->size();
    std::uint32_t count = static_cast<std::uint32_t>(size / config_.page_size);
    for (std::uint32_t no = 0; no < count; ++no) {
        pages_.push_back(decode_page(file_->pread(std::uint64_t{no} * config_.page_size,
                                                  config_.page_size),
                                     no));
        const Page& page = pages_.back();
        for (std::uint16_t slot = 0; slot < page.records.size(); ++slot) {
            if (page.records[slot].predecessor) {
                successors_[*page.records[slot].predecessor].push_back(RecordID{no, slot});
            }
        }
        record_count_ += page.records.size();
    }
}

std::size_t VersionHeap::encoded_size(const VersionRecord& r) {
    return 8 + 1 + 6 + 2 + r.key.size() + 4 + r.payload.size();
}

std::string VersionHeap::encode_page(const Page& page) const {
    std::string out(config_.page_size, '\0');
    std::string header;
    le::put_u32(header, page.page_no);
    le::put_u16(header, static_cast<std::uint16_t>(page.records.size()));
    std::size_t offset = kPageHeaderSize;
    std::string body;
    std::string slots;
    for (const auto& r : page.records) {
        std::string rec;
        le::put_u64(rec, r.t_creation.value);
        std::uint8_t flags = (r.tombstone ? kTombstoneBit : 0) | (r.predecessor ? kHasPredBit : 0);
        rec.push_back(static_cast<char>(flags));
        le::put_rid(rec, r.predecessor.value_or(RecordID{}));
        le::put_u16(rec, static_cast<std::uint16_t>(r.key.size()));
        rec += r.key;
        le::put_u32(rec, static_cast<std::uint32_t>(r.payload.size()));
        rec += r.payload;
        le::put_u16(slots, static_cast<std::uint16_t>(offset + body.size()));
        le::put_u16(slots, static_cast<std::uint16_t>(rec.size()));
        body += rec;
    }
    le::put_u16(header, static_cast<std::uint16_t>(offset + body.size()));
    std::memcpy(out.data(), header.data(), header.size());
    std::memcpy(out.data() + offset, body.data(), body.size());
    // Slot i lives at page_end - (i + 1) * kSlotSize.
    for (std::size_t i = 0; i < page.records.size(); ++i) {
        std::memcpy(out.data() + config_.page_size - (i + 1) * kSlotSize,
                    slots.data() + i * kSlotSize, kSlotSize);
    }
    return out;
}

VersionHeap::Page VersionHeap::decode_page(std::string_view bytes, std::uint32_t expected_no) const {
    Page page;
    page.page_no = le::get_u32(bytes.data());
    if (page.page_no != expected_no) throw Error(Errc::CorruptPage, "heap page number mismatch");
    std::uint16_t count = le::get_u16(bytes.data() + 4);
    if (kPageHeaderSize + std::size_t{count} * kSlotSize > bytes.size()) {
        throw Error(Errc::CorruptPage, "heap slot directory overflows page");
    }
    for (std::uint16_t i = 0; i < count; ++i) {
        const char* slot = bytes.data() + bytes.size() - (std::size_t{i} + 1) * kSlotSize;
        std::uint16_t off = le::get_u16(slot);
        std::uint16_t len = le::get_u16(slot + 2);
        if (std::size_t{off} + len > bytes.size()) throw Error(Errc::CorruptPage, "heap slot out of page");
        le::Reader rd(bytes.substr(off, len), Errc::CorruptPage);
        VersionRecord r;
        r.t_creation = Timestamp{rd.u64()};
        std::uint8_t flags = rd.u8();
        RecordID pred = rd.rid();
        if (flags & kHasPredBit) r.predecessor = pred;
        r.tombstone = (flags & kTombstoneBit) != 0;
        r.key = std::string(rd.bytes(rd.u16()));
        r.payload = std::string(rd.bytes(rd.u32()));
        page.used += len + kSlotSize;
        page.records.push_back(std::move(r));
    }
    return page;
}

void VersionHeap::write_page(const Page& page) {
    if (!file_) return;
    file_->pwrite(std::uint64_t{page.page_no} * config_.page_size, encode_page(page));
    metrics_.heap_bytes_written += config_.page_size;
}

RecordID VersionHeap::append(const TransactionHandle& tx, VersionRecord rec) {
    if (txns_.state(tx.ts) != TxState::Active) {
        throw Error(Errc::InvalidArgument, "heap write by a finished transaction");
    }
    if (rec.key.size() > kMaxKeySize) throw Error(Errc::KeyTooLarge, "key exceeds limit");
    std::size_t need = encoded_size(rec) + kSlotSize;
    if (kPageHeaderSize + need > config_.page_size) {
        throw Error(Errc::InvalidArgument, "version record larger than a heap page");
    }
    std::unique_lock lock(mu_);
    if (rec.predecessor) {
        const auto& p = *rec.predecessor;
        if (p.page_no >= pages_.size() || p.slot >= pages_[p.page_no].records.size()) {
            throw Error(Errc::UnknownRecordID, "predecessor does not exist");
        }
    }
    if (pages_.empty() || pages_.back().used + need > config_.page_size) {
        if (config_.max_pages != 0 && pages_.size() >= config_.max_pages) {
            throw Error(Errc::StorageFull, "heap page limit reached");
        }
        if (!pages_.empty()) write_page(pages_.back());  // sealed, never touched again
        Page fresh;
        fresh.page_no = static_cast<std::uint32_t>(pages_.size());
        pages_.push_back(std::move(fresh));
    }
    Page& tail = pages_.back();
    RecordID rid{tail.page_no, static_cast<std::uint16_t>(tail.records.size())};
    if (rec.predecessor) successors_[*rec.predecessor].push_back(rid);
    tail.used += need;
    tail.records.push_back(std::move(rec));
    ++record_count_;
    return rid;
}

RecordID VersionHeap::insert(const TransactionHandle& tx, Key key, std::string payload) {
    return append(tx, VersionRecord{std::move(key), std::move(payload), tx.ts, std::nullopt, false});
}

RecordID VersionHeap::append_successor(const TransactionHandle& tx, RecordID predecessor, Key key,
                                       std::string payload, bool tombstone) {
    if (tombstone) payload.clear();
    return append(tx, VersionRecord{std::move(key), std::move(payload), tx.ts, predecessor, tombstone});
}

const VersionRecord& VersionHeap::at(RecordID rid) const {
    if (rid.page_no >= pages_.size() || rid.slot >= pages_[rid.page_no].records.size()) {
        throw Error(Errc::UnknownRecordID,
                    "(" + std::to_string(rid.page_no) + "," + std::to_string(rid.slot) + ")");
    }
    return pages_[rid.page_no].records[rid.slot];
}

VersionRecord VersionHeap::fetch(RecordID rid) const {
    std::shared_lock lock(mu_);
    const auto& rec = at(rid);
    metrics_.heap_fetches++;
    return rec;
}

VersionRecord VersionHeap::peek(RecordID rid) const {
    std::shared_lock lock(mu_);
    return at(rid);
}

bool VersionHeap::contains(RecordID rid) const {
    std::shared_lock lock(mu_);
    return rid.page_no < pages_.size() && rid.slot < pages_[rid.page_no].records.size();
}

bool VersionHeap::creator_visible(Timestamp ts, const Snapshot& snap) const {
    return ts == snap.own_ts || txns_.precedes(ts, snap);
}

std::optional<RecordID> VersionHeap::resolve_visible(RecordID entry, const Snapshot& snap) const {
    std::shared_lock lock(mu_);
    std::optional<RecordID> cur = entry;
    while (cur) {
        const auto& rec = at(*cur);
        if (creator_visible(rec.t_creation, snap)) {
            if (rec.tombstone) return std::nullopt;
            return cur;
        }
        cur = rec.predecessor;
    }
    return std::nullopt;
}

bool VersionHeap::version_visible(RecordID rid, const Snapshot& snap) const {
    std::shared_lock lock(mu_);
    const auto& rec = at(rid);
    if (rec.tombstone || !creator_visible(rec.t_creation, snap)) return false;
    if (auto it = successors_.find(rid); it != successors_.end()) {
        for (RecordID succ : it->second) {
            if (creator_visible(at(succ).t_creation, snap)) return false;
        }
    }
    return true;
}

std::vector<RecordID> VersionHeap::successors(RecordID rid) const {
    std::shared_lock lock(mu_);
    at(rid);
    if (auto it = successors_.find(rid); it != successors_.end()) return it->second;
    return {};
}

std::vector<RecordID> VersionHeap::chain_heads() const {
    std::shared_lock lock(mu_);
    std::vector<RecordID> out;
    for (const auto& page : pages_) {
        for (std::size_t slot = 0; slot < page.records.size(); ++slot) {
            RecordID rid{page.page_no, static_cast<std::uint16_t>(slot)};
            if (!successors_.contains(rid)) out.push_back(rid);
        }
    }
    return out;
}

std::size_t VersionHeap::count_reclaimable(Timestamp cutoff) const {
    std::shared_lock lock(mu_);
    std::size_t n = 0;
    for (const auto& [pred, succs] : successors_) {
        for (RecordID s : succs) {
            const auto& rec = at(s);
            if (rec.t_creation < cutoff && txns_.state(rec.t_creation) == TxState::Committed) {
                ++n;
                break;
            }
        }
    }
    return n;
}

void VersionHeap::flush() {
    std::unique_lock lock(mu_);
    if (!pages_.empty()) write_page(pages_.back());
}

std::size_t VersionHeap::page_count() const {
    std::shared_lock lock(mu_);
    return pages_.size();
}

std::size_t VersionHeap::record_count() const {
    std::shared_lock lock(mu_);
    return record_count_;
}

}  // namespace mvpbt
