#pragma once
//
// Block-major binary container for BlockedMatrix.
//
// Layout: a fixed little-endian header, then blocks in the matrix's
// block-major sequence order. Per block, bit-packed and byte-aligned:
//   block_row, block_col   (32-b bits each)
//   exponent base           (11 bits, bias 1023)
//   entry count             (2b+1 bits, 1..4^b)
//   entries                 ((1+e+f+2b) bits each: ii, jj, sign, offset,
//                            fraction; offsets are e-bit two's complement)
// Bit order: stream bit k lands in byte k/8 at in-byte position k%8
// (little-endian within bytes); multi-bit fields are emitted MSB-first.
//

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "refloat/blocked.hpp"

namespace refloat {

inline constexpr char kContainerMagic[4] = {'R', 'F', 'L', 'B'};
inline constexpr std::uint32_t kContainerVersion = 1;

struct ContainerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

class BitWriter {
 public:
  void put(std::uint64_t value, int bits) {
    for (int i = bits - 1; i >= 0; --i) {
      const std::size_t byte = pos_ / 8;
      if (byte >= buf_.size()) buf_.push_back(0);
      buf_[byte] |= static_cast<std::uint8_t>(((value >> i) & 1u) << (pos_ % 8));
      ++pos_;
    }
  }
  void align() { pos_ = (pos_ + 7) / 8 * 8; }
  std::size_t bit_count() const { return pos_; }
  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

class BitReader {
 public:
  BitReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  std::uint64_t get(int bits) {
    std::uint64_t value = 0;
    for (int i = 0; i < bits; ++i) {
      const std::size_t byte = pos_ / 8;
      if (byte >= size_) throw ContainerError("container truncated");
      value = (value << 1) | ((data_[byte] >> (pos_ % 8)) & 1u);
      ++pos_;
    }
    return value;
  }
  void align() { pos_ = (pos_ + 7) / 8 * 8; }
  std::size_t byte_pos() const { return (pos_ + 7) / 8; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

inline void put_u32(std::ostream& out, std::uint32_t v) {
  std::uint8_t b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  std::uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t get_u32(std::istream& in) {
  std::uint8_t b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw ContainerError("container truncated in header");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::uint64_t get_u64(std::istream& in) {
  std::uint8_t b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8))
    throw ContainerError("container truncated in header");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline int sign_extend(std::uint64_t value, int bits) {
  const std::uint64_t sign = 1ull << (bits - 1);
  return static_cast<int>((value ^ sign) - sign);
}

}  // namespace detail

// Format bits of one block, excluding the entry-count field and alignment
// padding (the footprint accounting reported by memory_footprint_bits).
inline std::uint64_t block_format_bits(const ReFloatBlock& block,
                                       const ReFloatConfig& c) {
  return block.entries.size() *
             (1ull + c.mat_exp + c.mat_frac + 2ull * c.block_bits) +
         2ull * (32 - c.block_bits) + 11ull;
}

inline std::uint64_t block_payload_bits(const ReFloatBlock& block,
                                        const ReFloatConfig& c) {
  return block_format_bits(block, c) + (2ull * c.block_bits + 1);
}

inline std::uint64_t serialize(const BlockedMatrix& m, std::ostream& out) {
  m.config.validate();
  const int b = m.config.block_bits;
  const int coord_bits = 32 - b;
  const int count_bits = 2 * b + 1;
  const int e = m.config.mat_exp;
  const int f = m.config.mat_frac;

  out.write(kContainerMagic, 4);
  detail::put_u32(out, kContainerVersion);
  detail::put_u64(out, m.n_rows);
  detail::put_u64(out, m.n_cols);
  detail::put_u32(out, static_cast<std::uint32_t>(b));
  detail::put_u32(out, static_cast<std::uint32_t>(e));
  detail::put_u32(out, static_cast<std::uint32_t>(f));
  detail::put_u32(out, static_cast<std::uint32_t>(m.config.vec_exp));
  detail::put_u32(out, static_cast<std::uint32_t>(m.config.vec_frac));
  detail::put_u32(out, m.parallel_width);
  detail::put_u64(out, m.blocks.size());
  std::uint64_t written = 4 + 4 + 8 + 8 + 6 * 4 + 8;

  detail::BitWriter bits;
  for (const auto& block : m.blocks) {
    bits.put(block.block_row, coord_bits);
    bits.put(block.block_col, coord_bits);
    bits.put(static_cast<std::uint64_t>(block.exponent_base + 1023), 11);
    bits.put(block.entries.size(), count_bits);
    for (const auto& entry : block.entries) {
      bits.put(entry.row, b);
      bits.put(entry.col, b);
      bits.put(entry.value.negative ? 1 : 0, 1);
      bits.put(static_cast<std::uint64_t>(entry.value.offset) & ((1ull << e) - 1), e);
      if (f > 0) bits.put(entry.value.fraction, f);
    }
    bits.align();
  }
  out.write(reinterpret_cast<const char*>(bits.bytes().data()),
            static_cast<std::streamsize>(bits.bytes().size()));
  if (!out) throw ContainerError("container write failure");
  return written + bits.bytes().size();
}

inline BlockedMatrix deserialize(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kContainerMagic, 4) != 0)
    throw ContainerError("bad container magic");
  const std::uint32_t version = detail::get_u32(in);
  if (version != kContainerVersion)
    throw ContainerError("unsupported container version " + std::to_string(version));

  BlockedMatrix m;
  const std::uint64_t n_rows = detail::get_u64(in);
  const std::uint64_t n_cols = detail::get_u64(in);
  m.config.block_bits = static_cast<int>(detail::get_u32(in));
  m.config.mat_exp = static_cast<int>(detail::get_u32(in));
  m.config.mat_frac = static_cast<int>(detail::get_u32(in));
  m.config.vec_exp = static_cast<int>(detail::get_u32(in));
  m.config.vec_frac = static_cast<int>(detail::get_u32(in));
  m.parallel_width = detail::get_u32(in);
  const std::uint64_t n_blocks = detail::get_u64(in);
  try {
    m.config.validate();
  } catch (const std::invalid_argument& err) {
    throw ContainerError(std::string("invalid header: ") + err.what());
  }
  if (n_rows > 0xffffffffULL || n_cols > 0xffffffffULL || m.parallel_width < 1)
    throw ContainerError("invalid header dimensions");
  m.n_rows = static_cast<std::uint32_t>(n_rows);
  m.n_cols = static_cast<std::uint32_t>(n_cols);

  std::vector<std::uint8_t> body((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (n_blocks > body.size())  // every block occupies at least one byte
    throw ContainerError("container truncated: block count exceeds payload");
  detail::BitReader bits(body.data(), body.size());

  const int b = m.config.block_bits;
  const int coord_bits = 32 - b;
  const int count_bits = 2 * b + 1;
  const int e = m.config.mat_exp;
  const int f = m.config.mat_frac;
  const std::uint64_t max_entries = 1ull << (2 * b);
  const int window = offset_window(e);
  const std::uint32_t block_row_end =
      m.n_rows == 0 ? 0 : ((m.n_rows - 1) >> b) + 1;
  const std::uint32_t block_col_end =
      m.n_cols == 0 ? 0 : ((m.n_cols - 1) >> b) + 1;

  m.blocks.reserve(n_blocks);
  for (std::uint64_t ordinal = 0; ordinal < n_blocks; ++ordinal) {
    try {
      ReFloatBlock block;
      block.block_row = static_cast<std::uint32_t>(bits.get(coord_bits));
      block.block_col = static_cast<std::uint32_t>(bits.get(coord_bits));
      if (block.block_row >= block_row_end || block.block_col >= block_col_end)
        throw ContainerError("block coordinate outside the matrix");
      block.exponent_base = static_cast<int>(bits.get(11)) - 1023;
      const std::uint64_t count = bits.get(count_bits);
      if (count < 1 || count > max_entries)
        throw ContainerError("entry count out of range");
      const std::uint64_t row_limit =
          m.n_rows - (static_cast<std::uint64_t>(block.block_row) << b);
      const std::uint64_t col_limit =
          m.n_cols - (static_cast<std::uint64_t>(block.block_col) << b);
      block.entries.reserve(count);
      for (std::uint64_t i = 0; i < count; ++i) {
        BlockEntry entry;
        entry.row = static_cast<std::uint16_t>(bits.get(b));
        entry.col = static_cast<std::uint16_t>(bits.get(b));
        if (entry.row >= row_limit || entry.col >= col_limit)
          throw ContainerError("local index outside the matrix edge");
        entry.value.negative = bits.get(1) != 0;
        entry.value.is_zero = false;
        entry.value.offset = detail::sign_extend(bits.get(e), e);
        entry.value.fraction = f > 0 ? bits.get(f) : 0;
        if (entry.value.offset < -window || entry.value.offset > window)
          throw ContainerError("offset outside the saturation window");
        block.entries.push_back(entry);
      }
      for (std::size_t i = 1; i < block.entries.size(); ++i) {
        const auto& prev = block.entries[i - 1];
        const auto& cur = block.entries[i];
        if (prev.row > cur.row || (prev.row == cur.row && prev.col >= cur.col))
          throw ContainerError("duplicate or unsorted local index");
      }
      bits.align();
      m.blocks.push_back(std::move(block));
    } catch (const ContainerError& err) {
      throw ContainerError(std::string(err.what()) + " in block " +
                           std::to_string(ordinal) + " of " +
                           std::to_string(n_blocks));
    }
  }
  return m;
}

struct SequentialAccessReport {
  std::uint64_t runs = 0;
  std::uint64_t max_live_input_segments = 0;
  std::uint64_t max_live_segments = 0;  // inputs + the band's output segment
  bool within_bound = true;             // max_live_segments <= P + 1
};

// Simulates a reader consuming blocks in file order with P parallel engines
// and reports the buffer high-water mark. A band keeps one output segment
// live; a run keeps at most P input segments live.
inline SequentialAccessReport sequential_access_check(const BlockedMatrix& m) {
  SequentialAccessReport report;
  const std::uint32_t p = m.parallel_width;
  std::size_t i = 0;
  while (i < m.blocks.size()) {
    const std::uint32_t band = m.blocks[i].block_row;
    std::uint64_t in_run = 0;
    ++report.runs;
    while (i < m.blocks.size() && m.blocks[i].block_row == band) {
      if (in_run == p) {  // next run of the same band
        ++report.runs;
        in_run = 0;
      }
      ++in_run;
      report.max_live_input_segments =
          std::max(report.max_live_input_segments, in_run);
      report.max_live_segments =
          std::max(report.max_live_segments, in_run + 1);
      ++i;
    }
  }
  report.within_bound = report.max_live_segments <= static_cast<std::uint64_t>(p) + 1;
  return report;
}

}  // namespace refloat
