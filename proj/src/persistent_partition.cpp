#include "mvpbt/persistent_partition.hpp"

#include <algorithm>

namespace mvpbt {

namespace {

constexpr std::uint8_t kFoldedBit = 0x80;
constexpr char kMagic[4] = {'M', 'V', 'P', 'B'};
constexpr std::uint32_t kFooterVersion = 1;

bool foldable(RecordKind k) { return k == RecordKind::Regular || k == RecordKind::Replacement; }

std::size_t entry_size(const CondensedRecord& c) {
    return 8 + (c.kind == RecordKind::Regular ? 6 : 12);
}

IndexRecord single(const CondensedRecord& c) {
    const auto& e = c.entries.front();
    return IndexRecord{c.partition_no, c.key, c.kind, e.ts, e.rid_matter, e.rid_anti, c.flags};
}

}  // namespace

std::vector<CondensedRecord> reconcile(std::span<const IndexRecord> records,
                                       std::size_t max_item_bytes) {
    std::vector<CondensedRecord> out;
    for (const auto& r : records) {
        std::uint8_t flags = r.gc_flagged() ? static_cast<std::uint8_t>(r.flags | flag::kGc) : r.flags;
        if (!out.empty()) {
            auto& last = out.back();
            if (foldable(r.kind) && last.kind == r.kind && last.flags == flags &&
                last.partition_no == r.partition_no && last.key == r.key &&
                encoded_size(last) + entry_size(last) + (last.entries.size() == 1 ? 2 : 0) <=
                    max_item_bytes &&
                last.entries.size() < UINT16_MAX) {
                last.entries.push_back({r.ts, r.rid_matter, r.rid_anti});
                continue;
            }
        }
        out.push_back(CondensedRecord{r.partition_no, r.key, r.kind, flags, {{r.ts, r.rid_matter, r.rid_anti}}});
    }
    return out;
}

std::vector<IndexRecord> expand(const CondensedRecord& item) {
    std::vector<IndexRecord> out;
    out.reserve(item.entries.size());
    for (const auto& e : item.entries) {
        out.push_back(IndexRecord{item.partition_no, item.key, item.kind, e.ts, e.rid_matter,
                                  e.rid_anti, item.flags});
    }
    return out;
}

std::size_t encoded_size(const CondensedRecord& item) noexcept {
    if (item.entries.size() == 1) return encoded_size(single(item));
    return 1 + 2 + 2 + item.key.size() + 2 + item.entries.size() * entry_size(item);
}

void encode_into(std::string& out, const CondensedRecord& item) {
    if (item.entries.size() == 1) {
        encode_into(out, single(item));
        return;
    }
    out.push_back(static_cast<char>(static_cast<std::uint8_t>(item.kind) | item.flags | kFoldedBit));
    le::put_u16(out, item.partition_no.value);
    le::put_u16(out, static_cast<std::uint16_t>(item.key.size()));
    out += item.key;
    le::put_u16(out, static_cast<std::uint16_t>(item.entries.size()));
    for (const auto& e : item.entries) {
        le::put_u64(out, e.ts.value);
        le::put_rid(out, *e.rid_matter);
        if (item.kind == RecordKind::Replacement) le::put_rid(out, *e.rid_anti);
    }
}

CondensedRecord decode_condensed(le::Reader& rd) {
    CondensedRecord c;
    le::Reader peek = rd;
    std::uint8_t head = peek.u8();
    if ((head & kFoldedBit) == 0) {
        IndexRecord r = decode_from(rd);
        c = CondensedRecord{r.partition_no, r.key, r.kind, r.flags, {{r.ts, r.rid_matter, r.rid_anti}}};
        return c;
    }
    rd.u8();
    c.kind = static_cast<RecordKind>(head & flag::kKindMask);
    c.flags = head & static_cast<std::uint8_t>(flag::kMatter | flag::kAntiMatter | flag::kGc);
    if (!foldable(c.kind) || (c.flags & ~flag::kGc) != flags_for(c.kind) ||
        (head & ~(kFoldedBit | flag::kKindMask | flag::kMatter | flag::kAntiMatter | flag::kGc)) != 0) {
        throw Error(Errc::CorruptRecord, "bad folded record head");
    }
    c.partition_no = PartitionNo{rd.u16()};
    std::uint16_t klen = rd.u16();
    if (klen > kMaxKeySize) throw Error(Errc::CorruptRecord, "key length out of range");
    c.key = Key(rd.bytes(klen));
    std::uint16_t count = rd.u16();
    if (count < 2) throw Error(Errc::CorruptRecord, "folded record with fewer than two entries");
    c.entries.reserve(count);
    for (std::uint16_t i = 0; i < count; ++i) {
        CondensedRecord::Entry e;
        e.ts = Timestamp{rd.u64()};
        e.rid_matter = rd.rid();
        if (c.kind == RecordKind::Replacement) e.rid_anti = rd.rid();
        c.entries.push_back(e);
    }
    return c;
}

std::string encode_footer(const PartitionFooter& f, std::size_t page_size) {
    std::string body;
    le::put_u32(body, kFooterVersion);
    le::put_u16(body, f.partition_no.value);
    le::put_u32(body, f.leaf_count);
    le::put_u32(body, f.internal_count);
    le::put_u16(body, f.height);
    le::put_u32(body, f.root_page);
    le::put_u64(body, f.filter_offset);
    le::put_u64(body, f.filter_length);
    le::put_u64(body, f.extent_offset);
    le::put_u64(body, f.prev_extent_offset);
    le::put_u64(body, f.record_count);
    le::put_u64(body, f.min_ts.value);
    le::put_u64(body, f.max_ts.value);
    le::put_u16(body, static_cast<std::uint16_t>(f.min_key.size()));
    body += f.min_key;
    le::put_u16(body, static_cast<std::uint16_t>(f.max_key.size()));
    body += f.max_key;

    std::string page(kMagic, 4);
    le::put_u32(page, static_cast<std::uint32_t>(body.size()));
    page += body;
    le::put_u32(page, crc32(body));
    if (page.size() > page_size) throw Error(Errc::InvalidArgument, "footer exceeds page size");
    page.resize(page_size, '\0');
    return page;
}

PartitionFooter decode_footer(std::string_view page) {
    le::Reader rd(page, Errc::CorruptPage);
    if (rd.bytes(4) != std::string_view(kMagic, 4)) throw Error(Errc::CorruptPage, "bad footer magic");
    std::uint32_t len = rd.u32();
    std::string_view body = rd.bytes(len);
    if (crc32(body) != rd.u32()) throw Error(Errc::CorruptPage, "footer checksum mismatch");

    le::Reader b(body, Errc::CorruptPage);
    if (b.u32() != kFooterVersion) throw Error(Errc::CorruptPage, "unknown footer version");
    PartitionFooter f;
    f.partition_no = PartitionNo{b.u16()};
    f.leaf_count = b.u32();
    f.internal_count = b.u32();
    f.height = b.u16();
    f.root_page = b.u32();
    f.filter_offset = b.u64();
    f.filter_length = b.u64();
    f.extent_offset = b.u64();
    f.prev_extent_offset = b.u64();
    f.record_count = b.u64();
    f.min_ts = Timestamp{b.u64()};
    f.max_ts = Timestamp{b.u64()};
    f.min_key = Key(b.bytes(b.u16()));
    f.max_key = Key(b.bytes(b.u16()));
    return f;
}

namespace {

struct PageHeader {
    std::uint8_t type;
    std::uint16_t count;
    std::uint32_t used;
};

std::string finish_page(std::uint8_t type, std::uint16_t count, std::string body,
                        std::size_t page_size) {
    std::string page;
    page.reserve(page_size);
    page.push_back(static_cast<char>(type));
    page.push_back('\0');
    le::put_u16(page, count);
    le::put_u32(page, static_cast<std::uint32_t>(PersistentPartition::kPageHeaderSize + body.size()));
    le::put_u32(page, crc32(body));
    page += body;
    page.resize(page_size, '\0');
    return page;
}

PageHeader check_page(std::string_view page, std::uint8_t expect_type) {
    if (page.size() < PersistentPartition::kPageHeaderSize) throw Error(Errc::CorruptPage, "short page");
    PageHeader h{static_cast<std::uint8_t>(page[0]), le::get_u16(page.data() + 2),
                 le::get_u32(page.data() + 4)};
    if (h.type != expect_type) throw Error(Errc::CorruptPage, "unexpected page type");
    if (h.used < PersistentPartition::kPageHeaderSize || h.used > page.size()) {
        throw Error(Errc::CorruptPage, "page used bytes out of range");
    }
    auto body = page.substr(PersistentPartition::kPageHeaderSize, h.used - PersistentPartition::kPageHeaderSize);
    if (crc32(body) != le::get_u32(page.data() + 8)) throw Error(Errc::CorruptPage, "page checksum mismatch");
    return h;
}

struct InternalEntry {
    Key first_key;
    std::uint32_t child;
};

std::vector<InternalEntry> parse_internal(std::string_view page) {
    PageHeader h = check_page(page, PersistentPartition::kInternalPage);
    le::Reader rd(page.substr(PersistentPartition::kPageHeaderSize, h.used - PersistentPartition::kPageHeaderSize),
                  Errc::CorruptPage);
    std::vector<InternalEntry> out;
    out.reserve(h.count);
    for (std::uint16_t i = 0; i < h.count; ++i) {
        Key k(rd.bytes(rd.u16()));
        out.push_back({std::move(k), rd.u32()});
    }
    return out;
}

}  // namespace

PersistentPartition::PersistentPartition(IndexFile& file, PageCache& cache, PartitionFooter footer,
                                         FilterSet filters)
    : file_(file), cache_(cache), footer_(std::move(footer)), filters_(std::move(filters)) {}

std::uint64_t PersistentPartition::extent_end() const {
    return page_offset(footer_.leaf_count + footer_.internal_count) +
           (footer_.filter_length + file_.config().page_size - 1) / file_.config().page_size *
               file_.config().page_size +
           file_.config().page_size;
}

std::uint64_t PersistentPartition::page_offset(std::uint32_t index) const {
    return footer_.extent_offset + std::uint64_t{index} * file_.config().page_size;
}

PageCache::Page PersistentPartition::fetch(std::uint32_t index) const {
    std::uint64_t off = page_offset(index);
    return cache_.get(file_.id(), off, [&] { return file_.read(off, file_.config().page_size); });
}

std::uint32_t PersistentPartition::first_leaf_for(const Key& low) const {
    std::uint32_t page = footer_.root_page;
    for (std::uint16_t level = footer_.height; level > 1; --level) {
        auto entries = parse_internal(*fetch(page));
        if (entries.empty()) throw Error(Errc::CorruptPage, "empty internal page");
        // Last child whose first key is < low; equal keys may continue from
        // the previous child.
        auto it = std::lower_bound(entries.begin(), entries.end(), low,
                                   [](const InternalEntry& e, const Key& k) { return e.first_key < k; });
        std::size_t idx = it == entries.begin() ? 0 : static_cast<std::size_t>(it - entries.begin()) - 1;
        page = entries[idx].child;
    }
    if (page >= footer_.leaf_count) throw Error(Errc::CorruptPage, "descent ended outside leaf range");
    return page;
}

void PersistentPartition::scan(const KeyBounds& bounds, const Visitor& visit) const {
    if (footer_.record_count == 0) return;
    if (bounds.low && bounds.high && *bounds.low > *bounds.high) return;
    std::uint32_t leaf = bounds.low ? first_leaf_for(*bounds.low) : 0;
    for (; leaf < footer_.leaf_count; ++leaf) {
        auto page = fetch(leaf);
        PageHeader h = check_page(*page, kLeafPage);
        le::Reader rd(std::string_view(*page).substr(kPageHeaderSize, h.used - kPageHeaderSize),
                      Errc::CorruptPage);
        for (std::uint16_t i = 0; i < h.count; ++i) {
            CondensedRecord item = decode_condensed(rd);
            if (bounds.low && item.key < *bounds.low) continue;
            if (bounds.high && item.key > *bounds.high) return;
            for (auto& r : expand(item)) {
                if (!visit(r)) return;
            }
        }
    }
}

std::vector<IndexRecord> PersistentPartition::collect(const KeyBounds& bounds) const {
    std::vector<IndexRecord> out;
    scan(bounds, [&](const IndexRecord& r) {
        out.push_back(r);
        return true;
    });
    return out;
}

std::vector<double> PersistentPartition::leaf_fills() const {
    std::vector<double> out;
    const auto ps = file_.config().page_size;
    for (std::uint32_t i = 0; i < footer_.leaf_count; ++i) {
        std::string page = file_.read(page_offset(i), ps);
        PageHeader h = check_page(page, kLeafPage);
        out.push_back(static_cast<double>(h.used) / static_cast<double>(ps));
    }
    return out;
}

PartitionPtr persist_partition(std::span<const IndexRecord> records, PartitionNo target_no,
                               IndexFile& file, PageCache& cache, const FilterConfig& filter_config,
                               std::uint64_t prev_extent_offset) {
    const std::size_t ps = file.config().page_size;
    const std::size_t body_cap = ps - PersistentPartition::kPageHeaderSize;

    std::vector<IndexRecord> renumbered;
    renumbered.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i > 0 && compare(records[i - 1], records[i]) > 0) {
            throw Error(Errc::InternalOrderViolation, "persist input not sorted");
        }
        IndexRecord r{target_no, records[i].key, records[i].kind, records[i].ts,
                      records[i].rid_matter, records[i].rid_anti, flags_for(records[i].kind)};
        if (records[i].gc_flagged()) r.flags |= flag::kGc;
        renumbered.push_back(std::move(r));
    }
    FilterSet filters = build_filters(renumbered, filter_config);
    // Folded items are capped well below a page so they never leave large
    // holes at the end of a leaf.
    auto items = reconcile(renumbered, std::max<std::size_t>(body_cap / 8, 64));

    const std::uint64_t start = file.end();
    if (start % ps != 0) throw Error(Errc::CorruptPage, "index file end not page aligned");
    PartitionFooter f;
    f.partition_no = target_no;
    f.extent_offset = start;
    f.prev_extent_offset = prev_extent_offset;
    f.record_count = renumbered.size();
    if (!filters.empty()) {
        f.min_key = *filters.min_key;
        f.max_key = *filters.max_key;
    }
    f.min_ts = filters.min_ts;
    f.max_ts = filters.max_ts;

    try {
        file.begin_extent("evict:" + std::to_string(file.id()) + ":" + std::to_string(target_no.value));

        // Leaves, densely packed.
        std::vector<InternalEntry> level;
        std::string body;
        std::uint16_t count = 0;
        Key first_key;
        auto flush_leaf = [&] {
            file.append(finish_page(PersistentPartition::kLeafPage, count, std::move(body), ps));
            level.push_back({first_key, f.leaf_count++});
            body.clear();
            count = 0;
        };
        for (const auto& item : items) {
            std::size_t sz = encoded_size(item);
            if (sz > body_cap) throw Error(Errc::KeyTooLarge, "leaf item exceeds page");
            if (body.size() + sz > body_cap || count == UINT16_MAX) flush_leaf();
            if (count == 0) first_key = item.key;
            encode_into(body, item);
            ++count;
        }
        if (count > 0 || f.leaf_count == 0) flush_leaf();

        // Internal levels, bottom-up.
        f.height = 1;
        std::uint32_t next_page = f.leaf_count;
        while (level.size() > 1) {
            std::vector<InternalEntry> parent;
            body.clear();
            count = 0;
            auto flush_internal = [&] {
                file.append(finish_page(PersistentPartition::kInternalPage, count, std::move(body), ps));
                parent.push_back({first_key, next_page++});
                ++f.internal_count;
                body.clear();
                count = 0;
            };
            for (const auto& e : level) {
                std::size_t sz = 2 + e.first_key.size() + 4;
                if (body.size() + sz > body_cap || count == UINT16_MAX) flush_internal();
                if (count == 0) first_key = e.first_key;
                le::put_u16(body, static_cast<std::uint16_t>(e.first_key.size()));
                body += e.first_key;
                le::put_u32(body, e.child);
                ++count;
            }
            flush_internal();
            level = std::move(parent);
            ++f.height;
        }
        f.root_page = level.front().child;

        std::string block = filter_serialize(filters);
        f.filter_offset = file.end();
        f.filter_length = block.size();
        block.resize((block.size() + ps - 1) / ps * ps, '\0');
        file.append(block);

        file.append(encode_footer(f, ps));
        file.end_extent();
    } catch (...) {
        file.rollback_to(start);
        throw;
    }
    return std::make_shared<PersistentPartition>(file, cache, std::move(f), std::move(filters));
}

std::vector<PartitionPtr> open_partitions(IndexFile& file, PageCache& cache) {
    std::vector<PartitionPtr> out;
    const std::size_t ps = file.config().page_size;
    std::uint64_t end = file.end();
    if (end % ps != 0) throw Error(Errc::CorruptPage, "index file size not page aligned");
    while (end > 0) {
        PartitionFooter f = decode_footer(file.read(end - ps, ps));
        if (f.extent_offset >= end) throw Error(Errc::CorruptPage, "footer extent offset out of range");
        FilterSet filters = filter_deserialize(file.read(f.filter_offset, f.filter_length));
        std::uint64_t prev = f.prev_extent_offset;
        std::uint64_t extent = f.extent_offset;
        out.push_back(std::make_shared<PersistentPartition>(file, cache, std::move(f), std::move(filters)));
        if (prev == PartitionFooter::kNone) {
            if (extent != 0) throw Error(Errc::CorruptPage, "footer chain ends before file start");
            break;
        }
        if (prev >= extent) throw Error(Errc::CorruptPage, "footer chain not decreasing");
        end = extent;
    }
    return out;
}

}  // namespace mvpbt
