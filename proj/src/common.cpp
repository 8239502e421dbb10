#include "mvpbt/common.hpp"

#include <zlib.h>

namespace mvpbt {

const char* errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::DoubleFinish: return "DoubleFinish";
        case Errc::UnknownTimestamp: return "UnknownTimestamp";
        case Errc::StorageFull: return "StorageFull";
        case Errc::UnknownRecordID: return "UnknownRecordID";
        case Errc::MalformedRecord: return "MalformedRecord";
        case Errc::CorruptRecord: return "CorruptRecord";
        case Errc::ImmutablePartition: return "ImmutablePartition";
        case Errc::InternalOrderViolation: return "InternalOrderViolation";
        case Errc::CorruptPage: return "CorruptPage";
        case Errc::CorruptFilter: return "CorruptFilter";
        case Errc::UniqueViolation: return "UniqueViolation";
        case Errc::EmptyBuffer: return "EmptyBuffer";
        case Errc::DuplicateEntry: return "DuplicateEntry";
        case Errc::InvalidSpec: return "InvalidSpec";
        case Errc::WriteConflict: return "WriteConflict";
        case Errc::TupleDeleted: return "TupleDeleted";
        case Errc::KeyTooLarge: return "KeyTooLarge";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

std::uint32_t crc32(std::string_view bytes) noexcept {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

}  // namespace mvpbt
