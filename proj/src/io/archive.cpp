#include "lcm/archive.hpp"

#include <cstring>

#include <zlib.h>

#include "lcm/errors.hpp"

namespace lcm::zip {
namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::vector<std::uint8_t> deflate_raw(std::span<const std::uint8_t> input) {
  z_stream zs{};
  if (deflateInit2(&zs, 6, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    fail(ErrorCode::IoFailure, "deflateInit2 failed");
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(input.size())));
  zs.next_in = const_cast<Bytef*>(input.data());
  zs.avail_in = static_cast<uInt>(input.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) fail(ErrorCode::IoFailure, "deflate failed");
  out.resize(zs.total_out);
  return out;
}

std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> input, std::size_t expected) {
  // One spare byte lets inflate reach the stream end for empty entries and
  // exposes streams longer than the header claims.
  std::vector<std::uint8_t> out(expected + 1);
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) fail(ErrorCode::MalformedArchive, "inflateInit2 failed");
  zs.next_in = const_cast<Bytef*>(input.data());
  zs.avail_in = static_cast<uInt>(input.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const auto produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) fail(ErrorCode::MalformedArchive, "corrupt deflate stream");
  out.resize(expected);
  return out;
}

std::uint32_t crc_of(std::span<const std::uint8_t> data) {
  return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), data.data(), static_cast<uInt>(data.size())));
}

class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void seek(std::size_t pos) {
    if (pos > bytes_.size()) fail(ErrorCode::MalformedArchive, "offset beyond end of archive");
    pos_ = pos;
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = bytes_[pos_] | (bytes_[pos_ + 1] << 8);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail(ErrorCode::MalformedArchive, "truncated archive");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> write(const std::vector<Entry>& entries) {
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> central;
  for (const auto& e : entries) {
    auto packed = deflate_raw(e.data);
    const bool stored = packed.size() >= e.data.size();
    if (stored) packed.assign(e.data.begin(), e.data.end());
    const std::uint16_t method = stored ? 0 : 8;
    const auto crc = crc_of(e.data);
    const auto offset = static_cast<std::uint32_t>(out.size());

    put32(out, kLocalSig);
    put16(out, 20);  // version needed
    put16(out, 0);   // flags
    put16(out, method);
    put16(out, 0);
    put16(out, kDosDate);
    put32(out, crc);
    put32(out, static_cast<std::uint32_t>(packed.size()));
    put32(out, static_cast<std::uint32_t>(e.data.size()));
    put16(out, static_cast<std::uint16_t>(e.name.size()));
    put16(out, 0);
    out.insert(out.end(), e.name.begin(), e.name.end());
    out.insert(out.end(), packed.begin(), packed.end());

    put32(central, kCentralSig);
    put16(central, 20);  // version made by
    put16(central, 20);
    put16(central, 0);
    put16(central, method);
    put16(central, 0);
    put16(central, kDosDate);
    put32(central, crc);
    put32(central, static_cast<std::uint32_t>(packed.size()));
    put32(central, static_cast<std::uint32_t>(e.data.size()));
    put16(central, static_cast<std::uint16_t>(e.name.size()));
    put16(central, 0);  // extra
    put16(central, 0);  // comment
    put16(central, 0);  // disk
    put16(central, 0);  // internal attrs
    put32(central, 0);  // external attrs
    put32(central, offset);
    central.insert(central.end(), e.name.begin(), e.name.end());
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out.insert(out.end(), central.begin(), central.end());
  put32(out, kEndSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

std::vector<Entry> read(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 22) fail(ErrorCode::MalformedArchive, "too small to be a zip archive");
  // The end record sits within the last 22 + 65535 bytes (comment length).
  std::size_t end_pos = std::string::npos;
  const std::size_t lowest = bytes.size() > 22 + 0xFFFF ? bytes.size() - 22 - 0xFFFF : 0;
  for (std::size_t p = bytes.size() - 22 + 1; p-- > lowest;) {
    if (bytes[p] == 0x50 && bytes[p + 1] == 0x4b && bytes[p + 2] == 0x05 && bytes[p + 3] == 0x06) {
      end_pos = p;
      break;
    }
  }
  if (end_pos == std::string::npos) fail(ErrorCode::MalformedArchive, "no end-of-central-directory record");

  Cursor cur(bytes);
  cur.seek(end_pos + 10);
  const std::uint16_t count = cur.u16();
  cur.u32();  // central directory size
  const std::uint32_t cd_offset = cur.u32();

  std::vector<Entry> entries;
  entries.reserve(count);
  cur.seek(cd_offset);
  for (std::uint16_t i = 0; i < count; ++i) {
    if (cur.u32() != kCentralSig) fail(ErrorCode::MalformedArchive, "bad central directory signature");
    cur.u16();
    cur.u16();
    const std::uint16_t flags = cur.u16();
    const std::uint16_t method = cur.u16();
    cur.u16();
    cur.u16();
    const std::uint32_t crc = cur.u32();
    const std::uint32_t packed_size = cur.u32();
    const std::uint32_t size = cur.u32();
    const std::uint16_t name_len = cur.u16();
    const std::uint16_t extra_len = cur.u16();
    const std::uint16_t comment_len = cur.u16();
    cur.u16();
    cur.u16();
    cur.u32();
    const std::uint32_t local_offset = cur.u32();
    const auto name_bytes = cur.take(name_len);
    cur.take(extra_len);
    cur.take(comment_len);
    if (flags & 0x1) fail(ErrorCode::MalformedArchive, "encrypted entries are not supported");

    Cursor local(bytes);
    local.seek(local_offset);
    if (local.u32() != kLocalSig) fail(ErrorCode::MalformedArchive, "bad local header signature");
    local.seek(local_offset + 26);
    const std::uint16_t lname = local.u16();
    const std::uint16_t lextra = local.u16();
    local.take(lname);
    local.take(lextra);
    const auto payload = local.take(packed_size);

    Entry e;
    e.name.assign(name_bytes.begin(), name_bytes.end());
    if (method == 0) {
      if (packed_size != size) fail(ErrorCode::MalformedArchive, "stored entry size mismatch");
      e.data.assign(payload.begin(), payload.end());
    } else if (method == 8) {
      e.data = inflate_raw(payload, size);
    } else {
      fail(ErrorCode::MalformedArchive, "unsupported compression method " + std::to_string(method));
    }
    if (crc_of(e.data) != crc) fail(ErrorCode::MalformedArchive, "crc mismatch in " + e.name);
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace lcm::zip
