#pragma once

// Block-structured AMR array geometry (the 5-D unk(var, i, j, k, block)
// container, column-major), traversal patterns over it, byte-address trace
// generation and a real-memory sum kernel.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cerrno>
#include <cstring>
#include <iterator>
#include <stdexcept>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <sys/mman.h>
#include <unistd.h>

#include <fmt/format.h>
#include <json.hpp>

#include "pagescope/error.hpp"

namespace pagescope {

struct UnkLayout {
  std::int64_t nvar = 5;
  std::int64_t i_lo = 0, i_hi = 15;
  std::int64_t j_lo = 0, j_hi = 15;
  std::int64_t k_lo = 0, k_hi = 15;
  std::int64_t maxblocks = 1;
  std::int64_t elem_bytes = 8;

  // Guard-free nzones^3 blocks indexed from 0.
  static UnkLayout cube(std::int64_t nvar, std::int64_t nzones, std::int64_t blocks) {
    return UnkLayout{nvar, 0, nzones - 1, 0, nzones - 1, 0, nzones - 1, blocks, 8};
  }

  // Interior nxb^3 zones plus nguard guard cells per side, indexed from 1.
  static UnkLayout with_guard(std::int64_t nvar, std::int64_t nxb, std::int64_t nguard, std::int64_t blocks) {
    auto hi = nxb + 2 * nguard;
    return UnkLayout{nvar, 1, hi, 1, hi, 1, hi, blocks, 8};
  }

  // A square n x n array of doubles.
  static UnkLayout square(std::int64_t n) { return UnkLayout{1, 0, n - 1, 0, n - 1, 0, 0, 1, 8}; }

  [[nodiscard]] std::int64_t ni() const noexcept { return i_hi - i_lo + 1; }
  [[nodiscard]] std::int64_t nj() const noexcept { return j_hi - j_lo + 1; }
  [[nodiscard]] std::int64_t nk() const noexcept { return k_hi - k_lo + 1; }
  [[nodiscard]] std::uint64_t elements() const noexcept {
    return static_cast<std::uint64_t>(nvar * ni() * nj() * nk() * maxblocks);
  }
  [[nodiscard]] std::uint64_t total_bytes() const noexcept {
    return elements() * static_cast<std::uint64_t>(elem_bytes);
  }
  // Distance between the same (v,i,j,k) in consecutive blocks.
  [[nodiscard]] std::uint64_t block_stride_bytes() const noexcept {
    return static_cast<std::uint64_t>(nvar * ni() * nj() * nk() * elem_bytes);
  }

  void validate() const {
    if (nvar < 1 || ni() < 1 || nj() < 1 || nk() < 1 || maxblocks < 1 || elem_bytes < 1) {
      throw Error(Errc::EmptyLayout, fmt::format("layout has an empty extent (nvar {}, {}x{}x{}, blocks {})", nvar,
                                                 ni(), nj(), nk(), maxblocks));
    }
  }

  friend bool operator==(const UnkLayout&, const UnkLayout&) = default;
};

inline std::uint64_t address_of(const UnkLayout& layout, std::int64_t v, std::int64_t i, std::int64_t j,
                                std::int64_t k, std::int64_t b) {
  if (v < 0 || v >= layout.nvar || i < layout.i_lo || i > layout.i_hi || j < layout.j_lo || j > layout.j_hi ||
      k < layout.k_lo || k > layout.k_hi || b < 0 || b >= layout.maxblocks) {
    throw Error(Errc::IndexOutOfBounds, fmt::format("({}, {}, {}, {}, {}) outside layout", v, i, j, k, b));
  }
  auto ip = i - layout.i_lo;
  auto jp = j - layout.j_lo;
  auto kp = k - layout.k_lo;
  auto linear = v + layout.nvar * (ip + layout.ni() * (jp + layout.nj() * (kp + layout.nk() * b)));
  return static_cast<std::uint64_t>(linear * layout.elem_bytes);
}

enum class TraversalPattern : std::uint8_t {
  ZoneSweep,      // every element in storage order (var fastest, block slowest)
  BlockSweep,     // first var of the first zone, across all blocks
  VarSweep,       // all vars of the first zone of the first block
  RepeatedSum2D,  // layout viewed as a 2-D array (rows = nvar*ni, cols = nj*nk*blocks)
};

enum class Sum2DOrder : std::uint8_t {
  ColumnMajor,  // contiguous walk
  RowMajor,     // stride of one column per access
};

struct Traversal {
  TraversalPattern pattern = TraversalPattern::ZoneSweep;
  Sum2DOrder order = Sum2DOrder::ColumnMajor;

  friend bool operator==(const Traversal&, const Traversal&) = default;
};

inline std::string traversal_name(const Traversal& t) {
  switch (t.pattern) {
    case TraversalPattern::ZoneSweep: return "zone";
    case TraversalPattern::BlockSweep: return "block";
    case TraversalPattern::VarSweep: return "var";
    case TraversalPattern::RepeatedSum2D: return t.order == Sum2DOrder::RowMajor ? "sum2d-rows" : "sum2d";
  }
  return "";
}

inline Traversal traversal_from_name(std::string_view name) {
  if (name == "zone" || name == "zone-sweep") return {TraversalPattern::ZoneSweep};
  if (name == "block" || name == "block-sweep") return {TraversalPattern::BlockSweep};
  if (name == "var" || name == "var-sweep") return {TraversalPattern::VarSweep};
  if (name == "sum2d") return {TraversalPattern::RepeatedSum2D, Sum2DOrder::ColumnMajor};
  if (name == "sum2d-rows") return {TraversalPattern::RepeatedSum2D, Sum2DOrder::RowMajor};
  throw Error(Errc::InvalidConfig, "unknown traversal pattern '" + std::string(name) + "'");
}

// Accesses in one pass.
inline std::uint64_t pattern_length(const UnkLayout& layout, const Traversal& t) {
  switch (t.pattern) {
    case TraversalPattern::ZoneSweep:
    case TraversalPattern::RepeatedSum2D: return layout.elements();
    case TraversalPattern::BlockSweep: return static_cast<std::uint64_t>(layout.maxblocks);
    case TraversalPattern::VarSweep: return static_cast<std::uint64_t>(layout.nvar);
  }
  return 0;
}

// Byte offset of the idx-th access of a pass.
inline std::uint64_t offset_at(const UnkLayout& layout, const Traversal& t, std::uint64_t idx) {
  const auto eb = static_cast<std::uint64_t>(layout.elem_bytes);
  switch (t.pattern) {
    case TraversalPattern::ZoneSweep: return idx * eb;
    case TraversalPattern::BlockSweep: return idx * layout.block_stride_bytes();
    case TraversalPattern::VarSweep: return idx * eb;
    case TraversalPattern::RepeatedSum2D: {
      if (t.order == Sum2DOrder::ColumnMajor) return idx * eb;
      const auto rows = static_cast<std::uint64_t>(layout.nvar * layout.ni());
      const auto cols = layout.elements() / rows;
      const auto r = idx / cols;
      const auto c = idx % cols;
      return (r + rows * c) * eb;
    }
  }
  return 0;
}

// Calls fn(offset) for every access of `passes` passes, in order.
template <typename Fn>
void for_each_offset(const UnkLayout& layout, const Traversal& t, std::uint64_t passes, Fn&& fn) {
  layout.validate();
  const auto n = pattern_length(layout, t);
  const auto eb = static_cast<std::uint64_t>(layout.elem_bytes);
  for (std::uint64_t p = 0; p < passes; ++p) {
    if (t.pattern == TraversalPattern::RepeatedSum2D && t.order == Sum2DOrder::RowMajor) {
      const auto rows = static_cast<std::uint64_t>(layout.nvar * layout.ni());
      const auto cols = layout.elements() / rows;
      for (std::uint64_t r = 0; r < rows; ++r) {
        for (std::uint64_t c = 0; c < cols; ++c) fn((r + rows * c) * eb);
      }
    } else if (t.pattern == TraversalPattern::BlockSweep) {
      const auto stride = layout.block_stride_bytes();
      for (std::uint64_t b = 0; b < n; ++b) fn(b * stride);
    } else {
      for (std::uint64_t idx = 0; idx < n; ++idx) fn(idx * eb);
    }
  }
}

struct AddressTrace {
  std::uint64_t base = 0;
  std::vector<std::uint64_t> accesses;
  std::uint64_t elem_bytes = 8;
};

inline AddressTrace gen_trace(const UnkLayout& layout, const Traversal& t, std::uint64_t passes) {
  layout.validate();
  if (passes < 1) throw Error(Errc::InvalidConfig, "passes must be at least 1");
  AddressTrace trace;
  trace.elem_bytes = static_cast<std::uint64_t>(layout.elem_bytes);
  trace.accesses.reserve(pattern_length(layout, t) * passes);
  for_each_offset(layout, t, passes, [&](std::uint64_t off) { trace.accesses.push_back(off); });
  return trace;
}

// --- real-memory kernel -------------------------------------------------------

enum class AllocStrategy : std::uint8_t { Eager, OnDemand };

enum class PageAdvice : std::uint8_t { Default, HugePage, NoHugePage };

struct KernelOptions {
  AllocStrategy alloc = AllocStrategy::OnDemand;
  PageAdvice advice = PageAdvice::Default;
  // Virtual size of the mapping; 0 means exactly the layout size. Only the
  // layout's bytes are filled and summed.
  std::uint64_t reserve_bytes = 0;
  unsigned workers = 1;
  // Called once the array is filled and traversed, before it is unmapped.
  std::function<void()> while_resident;
};

class MappedRegion {
 public:
  MappedRegion(std::size_t bytes, bool populate) : size_(bytes) {
    int flags = MAP_PRIVATE | MAP_ANONYMOUS | MAP_NORESERVE;
    if (populate) flags |= MAP_POPULATE;
    void* p = ::mmap(nullptr, bytes, PROT_READ | PROT_WRITE, flags, -1, 0);
    if (p == MAP_FAILED) {
      throw Error(Errc::AllocationFailure, fmt::format("mmap of {} bytes failed: {}", bytes, std::strerror(errno)));
    }
    data_ = p;
  }
  MappedRegion(const MappedRegion&) = delete;
  MappedRegion& operator=(const MappedRegion&) = delete;
  ~MappedRegion() {
    if (data_ != nullptr) ::munmap(data_, size_);
  }

  // madvise result; false when the kernel rejected the hint.
  bool advise(PageAdvice advice) {
    if (advice == PageAdvice::Default) return true;
#if defined(MADV_HUGEPAGE)
    int hint = advice == PageAdvice::HugePage ? MADV_HUGEPAGE : MADV_NOHUGEPAGE;
    return ::madvise(data_, size_, hint) == 0;
#else
    return false;
#endif
  }

  [[nodiscard]] void* data() const noexcept { return data_; }
  [[nodiscard]] std::size_t size() const noexcept { return size_; }

 private:
  void* data_ = nullptr;
  std::size_t size_ = 0;
};

inline double run_kernel(const UnkLayout& layout, const Traversal& t, std::uint64_t passes, double fill,
                         const KernelOptions& options = {}) {
  layout.validate();
  if (layout.elem_bytes != static_cast<std::int64_t>(sizeof(double))) {
    throw Error(Errc::InvalidConfig, "run_kernel needs 8-byte elements");
  }
  if (passes < 1) throw Error(Errc::InvalidConfig, "passes must be at least 1");
  const auto bytes = std::max<std::uint64_t>(layout.total_bytes(), options.reserve_bytes);

  // Advice must land before the first fault, so eager mappings are touched
  // by hand rather than with MAP_POPULATE.
  MappedRegion region(bytes, false);
  region.advise(options.advice);
  if (options.alloc == AllocStrategy::Eager) {
    auto* bytes_ptr = static_cast<volatile unsigned char*>(region.data());
    const auto page = static_cast<std::uint64_t>(::sysconf(_SC_PAGESIZE));
    for (std::uint64_t off = 0; off < bytes; off += page) bytes_ptr[off] = 0;
  }

  auto* data = static_cast<double*>(region.data());
  std::fill(data, data + layout.elements(), fill);

  double checksum = 0.0;
  const unsigned workers = std::max(1u, options.workers);
  if (workers == 1) {
    for_each_offset(layout, t, passes, [&](std::uint64_t off) { checksum += data[off / sizeof(double)]; });
  } else {
    const auto n = pattern_length(layout, t);
    std::vector<double> partial(workers, 0.0);
    {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          const auto lo = n * w / workers;
          const auto hi = n * (w + 1) / workers;
          double s = 0.0;
          for (std::uint64_t p = 0; p < passes; ++p) {
            for (auto idx = lo; idx < hi; ++idx) s += data[offset_at(layout, t, idx) / sizeof(double)];
          }
          partial[w] = s;
        });
      }
    }
    for (double s : partial) checksum += s;
  }
  if (options.while_resident) options.while_resident();
  return checksum;
}

// --- trace files --------------------------------------------------------------

inline nlohmann::json layout_to_json(const UnkLayout& l) {
  return {{"nvar", l.nvar}, {"i_lo", l.i_lo}, {"i_hi", l.i_hi}, {"j_lo", l.j_lo},           {"j_hi", l.j_hi},
          {"k_lo", l.k_lo}, {"k_hi", l.k_hi}, {"maxblocks", l.maxblocks}, {"elem_bytes", l.elem_bytes}};
}

inline UnkLayout layout_from_json(const nlohmann::json& j) {
  UnkLayout l;
  l.nvar = j.at("nvar").get<std::int64_t>();
  l.i_lo = j.at("i_lo").get<std::int64_t>();
  l.i_hi = j.at("i_hi").get<std::int64_t>();
  l.j_lo = j.at("j_lo").get<std::int64_t>();
  l.j_hi = j.at("j_hi").get<std::int64_t>();
  l.k_lo = j.at("k_lo").get<std::int64_t>();
  l.k_hi = j.at("k_hi").get<std::int64_t>();
  l.maxblocks = j.at("maxblocks").get<std::int64_t>();
  l.elem_bytes = j.value("elem_bytes", std::int64_t{8});
  return l;
}

// "nvar,ni,nj,nk,blocks", guard-free and indexed from 0.
inline UnkLayout parse_layout_spec(std::string_view spec) {
  std::vector<std::int64_t> parts;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    auto comma = spec.find(',', pos);
    if (comma == std::string_view::npos) comma = spec.size();
    auto token = std::string(spec.substr(pos, comma - pos));
    try {
      std::size_t used = 0;
      parts.push_back(std::stoll(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw Error(Errc::InvalidConfig, "bad layout component '" + token + "'");
    }
    pos = comma + 1;
  }
  if (parts.size() != 5) throw Error(Errc::InvalidConfig, "layout needs nvar,ni,nj,nk,blocks");
  UnkLayout l{parts[0], 0, parts[1] - 1, 0, parts[2] - 1, 0, parts[3] - 1, parts[4], 8};
  l.validate();
  return l;
}

struct TraceMeta {
  UnkLayout layout;
  Traversal traversal;
  std::uint64_t passes = 1;
};

inline std::filesystem::path trace_sidecar_path(const std::filesystem::path& trace_path) {
  auto p = trace_path;
  p += ".json";
  return p;
}

// Writes the trace as little-endian u64 offsets plus a JSON sidecar.
inline void write_trace(const std::filesystem::path& path, const AddressTrace& trace, const TraceMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  std::vector<unsigned char> buf(trace.accesses.size() * 8);
  for (std::size_t n = 0; n < trace.accesses.size(); ++n) {
    auto v = trace.accesses[n];
    for (int b = 0; b < 8; ++b) buf[n * 8 + b] = static_cast<unsigned char>(v >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(Errc::Io, "short write to " + path.string());

  nlohmann::json side = {{"layout", layout_to_json(meta.layout)},
                         {"pattern", traversal_name(meta.traversal)},
                         {"passes", meta.passes},
                         {"count", trace.accesses.size()},
                         {"elem_bytes", trace.elem_bytes}};
  std::ofstream sidecar(trace_sidecar_path(path));
  sidecar << side.dump(2) << '\n';
}

inline AddressTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() % 8 != 0) throw Error(Errc::Io, path.string() + " is not a whole number of u64 offsets");
  AddressTrace trace;
  trace.accesses.resize(buf.size() / 8);
  for (std::size_t n = 0; n < trace.accesses.size(); ++n) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(buf[n * 8 + b]) << (8 * b);
    trace.accesses[n] = v;
  }
  if (std::ifstream side(trace_sidecar_path(path)); side) {
    auto j = nlohmann::json::parse(side, nullptr, false);
    if (!j.is_discarded()) trace.elem_bytes = j.value("elem_bytes", std::uint64_t{8});
  }
  return trace;
}

}  // namespace pagescope
