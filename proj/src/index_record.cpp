#include "mvpbt/index_record.hpp"

namespace mvpbt {

const char* kind_name(RecordKind kind) noexcept {
    switch (kind) {
        case RecordKind::Regular: return "regular";
        case RecordKind::Replacement: return "replacement";
        case RecordKind::Anti: return "anti";
        case RecordKind::Tombstone: return "tombstone";
    }
    return "?";
}

std::uint8_t flags_for(RecordKind kind) noexcept {
    switch (kind) {
        case RecordKind::Regular: return flag::kMatter;
        case RecordKind::Replacement: return flag::kMatter | flag::kAntiMatter;
        case RecordKind::Anti:
        case RecordKind::Tombstone: return flag::kAntiMatter;
    }
    return 0;
}

namespace {

bool needs_matter(RecordKind k) { return k == RecordKind::Regular || k == RecordKind::Replacement; }
bool needs_anti(RecordKind k) { return k != RecordKind::Regular; }

int kind_rank(RecordKind k) {
    switch (k) {
        case RecordKind::Tombstone: return 0;
        case RecordKind::Anti: return 1;
        case RecordKind::Replacement: return 2;
        case RecordKind::Regular: return 3;
    }
    return 4;
}

}  // namespace

void validate(const IndexRecord& r) {
    if (r.rid_matter.has_value() != needs_matter(r.kind) ||
        r.rid_anti.has_value() != needs_anti(r.kind)) {
        throw Error(Errc::MalformedRecord,
                    std::string("rid presence does not match kind ") + kind_name(r.kind));
    }
    if (r.key.size() > kMaxKeySize) throw Error(Errc::KeyTooLarge, "index key exceeds limit");
}

IndexRecord make_record(RecordKind kind, PartitionNo partition_no, Key key, Timestamp ts,
                        std::optional<RecordID> rid_matter, std::optional<RecordID> rid_anti) {
    IndexRecord r{partition_no, std::move(key), kind, ts, rid_matter, rid_anti, flags_for(kind)};
    validate(r);
    return r;
}

std::strong_ordering compare(const IndexRecord& a, const IndexRecord& b) {
    if (auto c = a.partition_no <=> b.partition_no; c != 0) return c;
    if (auto c = a.key.compare(b.key); c != 0) return c < 0 ? std::strong_ordering::less
                                                            : std::strong_ordering::greater;
    if (auto c = b.ts <=> a.ts; c != 0) return c;
    if (auto c = kind_rank(a.kind) <=> kind_rank(b.kind); c != 0) return c;
    // Within one transaction the later heap version has the larger rid and
    // must come first. rid_anti is not part of the order: GC rewrites it.
    return b.rid_matter <=> a.rid_matter;
}

std::size_t encoded_size(const IndexRecord& r) noexcept {
    return 1 + 2 + 2 + r.key.size() + 8 + (r.rid_matter ? 6 : 0) + (r.rid_anti ? 6 : 0);
}

void encode_into(std::string& out, const IndexRecord& r) {
    out.push_back(static_cast<char>(static_cast<std::uint8_t>(r.kind) |
                                    (r.flags & ~flag::kKindMask)));
    le::put_u16(out, r.partition_no.value);
    le::put_u16(out, static_cast<std::uint16_t>(r.key.size()));
    out += r.key;
    le::put_u64(out, r.ts.value);
    if (r.rid_matter) le::put_rid(out, *r.rid_matter);
    if (r.rid_anti) le::put_rid(out, *r.rid_anti);
}

std::string encode(const IndexRecord& r) {
    std::string out;
    out.reserve(encoded_size(r));
    encode_into(out, r);
    return out;
}

IndexRecord decode_from(le::Reader& rd) {
    IndexRecord r;
    std::uint8_t head = rd.u8();
    r.kind = static_cast<RecordKind>(head & flag::kKindMask);
    r.flags = head & static_cast<std::uint8_t>(flag::kMatter | flag::kAntiMatter | flag::kGc);
    if ((head & ~(flag::kKindMask | flag::kMatter | flag::kAntiMatter | flag::kGc)) != 0 ||
        (r.flags & ~flag::kGc) != flags_for(r.kind)) {
        throw Error(Errc::CorruptRecord, "bad kind/flags byte");
    }
    r.partition_no = PartitionNo{rd.u16()};
    std::uint16_t klen = rd.u16();
    if (klen > kMaxKeySize) throw Error(Errc::CorruptRecord, "key length out of range");
    r.key = std::string(rd.bytes(klen));
    r.ts = Timestamp{rd.u64()};
    if (needs_matter(r.kind)) r.rid_matter = rd.rid();
    if (needs_anti(r.kind)) r.rid_anti = rd.rid();
    return r;
}

IndexRecord decode(std::string_view bytes) {
    le::Reader rd(bytes, Errc::CorruptRecord);
    IndexRecord r = decode_from(rd);
    if (rd.remaining() != 0) throw Error(Errc::CorruptRecord, "trailing bytes after record");
    return r;
}

}  // namespace mvpbt
