#pragma once

#include <zlib.h>

#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sparseflex/formats.hpp"
#include "sparseflex/mcf_cost.hpp"

namespace sparseflex {

// ---------------------------------------------------------------------------
// Text parsers
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
T field(std::string_view s, int lineno, const char* what) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw Error("line " + std::to_string(lineno) + ": bad " + what + " '" + std::string(s) + "'");
  return v;
}

inline std::string lower(std::string_view s) {
  std::string o(s);
  for (auto& c : o) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return o;
}

}  // namespace detail

/// Matrix Market coordinate files: real/integer/pattern, general/symmetric.
inline CooMatrix parse_mtx(std::istream& in) {
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw Error("empty Matrix Market input");
  ++lineno;
  auto head = detail::split_ws(line);
  if (head.size() != 5 || head[0] != "%%MatrixMarket" || detail::lower(head[1]) != "matrix")
    throw Error("line 1: malformed Matrix Market header");
  if (detail::lower(head[2]) != "coordinate") throw Error("line 1: only coordinate Matrix Market files are supported");
  const std::string fieldtype = detail::lower(head[3]), symmetry = detail::lower(head[4]);
  if (fieldtype != "real" && fieldtype != "integer" && fieldtype != "pattern")
    throw Error("line 1: unsupported field type '" + fieldtype + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw Error("line 1: unsupported symmetry '" + symmetry + "'");
  const bool pattern = fieldtype == "pattern", symmetric = symmetry == "symmetric";

  index_t M = -1, K = -1, declared = -1;
  CooMatrix c;
  index_t seen = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    auto f = detail::split_ws(line);
    if (f.empty()) continue;
    if (M < 0) {
      if (f.size() != 3) throw Error("line " + std::to_string(lineno) + ": expected 'rows cols nnz'");
      M = detail::field<index_t>(f[0], lineno, "row count");
      K = detail::field<index_t>(f[1], lineno, "column count");
      declared = detail::field<index_t>(f[2], lineno, "entry count");
      if (M < 0 || K < 0 || declared < 0) throw Error("line " + std::to_string(lineno) + ": negative size");
      c.rows = M;
      c.cols = K;
      continue;
    }
    if (f.size() != (pattern ? 2u : 3u))
      throw Error("line " + std::to_string(lineno) + ": wrong number of columns");
    auto i = detail::field<index_t>(f[0], lineno, "row index");
    auto j = detail::field<index_t>(f[1], lineno, "column index");
    double v = pattern ? 1.0 : detail::field<double>(f[2], lineno, "value");
    if (i < 1 || i > M || j < 1 || j > K)
      throw Error("line " + std::to_string(lineno) + ": index (" + std::to_string(i) + ", " + std::to_string(j) +
                  ") out of range");
    if (++seen > declared) throw Error("line " + std::to_string(lineno) + ": more entries than declared");
    c.row_ids.push_back(i - 1);
    c.col_ids.push_back(j - 1);
    c.values.push_back(v);
    if (symmetric && i != j) {
      c.row_ids.push_back(j - 1);
      c.col_ids.push_back(i - 1);
      c.values.push_back(v);
    }
  }
  if (M < 0) throw Error("missing Matrix Market size line");
  if (seen != declared)
    throw Error("expected " + std::to_string(declared) + " entries, found " + std::to_string(seen));
  return canonicalize(std::move(c));
}

inline CooMatrix parse_mtx(const std::string& text) {
  std::istringstream in(text);
  return parse_mtx(in);
}

/// FROSTT .tns: "i j k value" per line, 1-indexed. Dims are the maximum
/// coordinate per mode unless given.
inline CooTensor3 parse_tns(std::istream& in, std::optional<Dims3> dims = std::nullopt) {
  CooTensor3 t;
  Dims3 maxc{0, 0, 0};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    auto f = detail::split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 4)
      throw Error("line " + std::to_string(lineno) + ": expected 4 columns, found " + std::to_string(f.size()));
    for (int m = 0; m < 3; ++m) {
      auto c = detail::field<index_t>(f[static_cast<std::size_t>(m)], lineno, "coordinate");
      if (c < 1) throw Error("line " + std::to_string(lineno) + ": coordinates are 1-indexed");
      if (dims && c > (*dims)[m]) throw Error("line " + std::to_string(lineno) + ": coordinate out of range");
      maxc[m] = std::max(maxc[m], c);
      t.coords[m].push_back(c - 1);
    }
    t.values.push_back(detail::field<double>(f[3], lineno, "value"));
  }
  t.dims = dims ? *dims : maxc;
  return canonicalize(std::move(t));
}

inline CooTensor3 parse_tns(const std::string& text, std::optional<Dims3> dims = std::nullopt) {
  std::istringstream in(text);
  return parse_tns(in, dims);
}

/// Shortest round-trip decimal, independent of locale.
inline std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline std::string write_mtx(const CooMatrix& c) {
  std::string out = "%%MatrixMarket matrix coordinate real general\n";
  out += std::to_string(c.rows) + " " + std::to_string(c.cols) + " " + std::to_string(c.nnz()) + "\n";
  for (index_t p = 0; p < c.nnz(); ++p)
    out += std::to_string(c.row_ids[p] + 1) + " " + std::to_string(c.col_ids[p] + 1) + " " +
           format_number(c.values[p]) + "\n";
  return out;
}

inline std::string write_tns(const CooTensor3& t) {
  std::string out;
  for (index_t p = 0; p < t.nnz(); ++p) {
    for (int m = 0; m < 3; ++m) out += std::to_string(t.coords[m][p] + 1) + " ";
    out += format_number(t.values[p]) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// SFRM container
// ---------------------------------------------------------------------------

using AnyFormatted = std::variant<FormattedMatrix, FormattedTensor3>;

struct StoredValue {
  int dtype_bits = 32;
  AnyFormatted value;
};

inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 56;
inline constexpr std::size_t kSectionEntryBytes = 25;

namespace detail {

class ByteWriter {
 public:
  std::string bytes;
  template <class T>
  void put(T v, int n = sizeof(T)) {
    auto u = static_cast<std::uint64_t>(v);
    for (int i = 0; i < n; ++i) bytes.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
  }
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view b) : b_(b) {}
  std::uint64_t get(int n) {
    if (pos_ + static_cast<std::size_t>(n) > b_.size()) throw Error("container truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
};

struct Section {
  int width = 0;  // bits per element
  std::vector<std::uint64_t> words;
};

inline std::size_t packed_bytes(std::size_t count, int width) {
  return static_cast<std::size_t>(ceil_div(static_cast<index_t>(count) * width, 8));
}

inline void pack_bits(std::string& out, const std::vector<std::uint64_t>& v, int width) {
  std::size_t start = out.size();
  out.resize(start + packed_bytes(v.size(), width), '\0');
  std::size_t bit = 0;
  for (std::uint64_t x : v) {
    for (int b = 0; b < width; ++b, ++bit)
      if ((x >> b) & 1u) out[start + bit / 8] = static_cast<char>(out[start + bit / 8] | (1 << (bit % 8)));
  }
}

inline std::vector<std::uint64_t> unpack_bits(std::string_view in, std::size_t count, int width) {
  std::vector<std::uint64_t> v(count, 0);
  std::size_t bit = 0;
  for (std::size_t i = 0; i < count; ++i)
    for (int b = 0; b < width; ++b, ++bit)
      if ((static_cast<unsigned char>(in[bit / 8]) >> (bit % 8)) & 1u) v[i] |= std::uint64_t{1} << b;
  return v;
}

inline Section index_section(const std::vector<index_t>& v, int width) {
  Section s{width, {}};
  s.words.reserve(v.size());
  for (index_t x : v) {
    if (x < 0 || (width < 64 && static_cast<std::uint64_t>(x) >> width))
      throw Error("index value does not fit its section width");
    s.words.push_back(static_cast<std::uint64_t>(x));
  }
  return s;
}

inline Section value_section(const std::vector<double>& v, int dtype_bits) {
  Section s{dtype_bits, {}};
  s.words.reserve(v.size());
  for (double x : v) {
    if (dtype_bits == 64) {
      s.words.push_back(std::bit_cast<std::uint64_t>(x));
    } else {
      auto f = static_cast<float>(x);
      if (static_cast<double>(f) != x) throw Error("value not exactly representable in 32 bits");
      s.words.push_back(std::bit_cast<std::uint32_t>(f));
    }
  }
  return s;
}

inline std::vector<index_t> as_index(const Section& s) {
  return {s.words.begin(), s.words.end()};
}

inline std::vector<double> as_values(const Section& s) {
  std::vector<double> v;
  v.reserve(s.words.size());
  for (auto w : s.words)
    v.push_back(s.width == 64 ? std::bit_cast<double>(w)
                              : static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(w))));
  return v;
}

struct Header {
  int rank = 2;
  FormatId format = FormatId::Dense;
  int dtype_bits = 32;
  Dims3 dims{0, 0, 1};
  index_t nnz = 0;
  FormatParams params;
};

/// Sections of an encoding, at the widths the storage model charges.
inline std::vector<Section> sections_of(const AnyFormatted& any, int b, Header& h) {
  std::vector<Section> s;
  if (const auto* mp = std::get_if<FormattedMatrix>(&any)) {
    const FormattedMatrix& m = *mp;
    auto [M, K] = shape_of(m);
    h.rank = 2;
    h.format = format_of(m);
    h.dims = {M, K, 1};
    h.nnz = nnz_density(m).nnz;
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, DenseMatrix>) {
            s.push_back(value_section(x.values, b));
          } else if constexpr (std::is_same_v<T, CooMatrix>) {
            s.push_back(index_section(x.row_ids, index_bits(M)));
            s.push_back(index_section(x.col_ids, index_bits(K)));
            s.push_back(value_section(x.values, b));
          } else if constexpr (std::is_same_v<T, CsrMatrix>) {
            s.push_back(index_section(x.row_ptr, pointer_bits(x.nnz())));
            s.push_back(index_section(x.col_ids, index_bits(K)));
            s.push_back(value_section(x.values, b));
          } else if constexpr (std::is_same_v<T, CscMatrix>) {
            s.push_back(index_section(x.col_ptr, pointer_bits(x.nnz())));
            s.push_back(index_section(x.row_ids, index_bits(M)));
            s.push_back(value_section(x.values, b));
          } else if constexpr (std::is_same_v<T, BsrMatrix>) {
            h.params.block_rows = x.block_rows;
            h.params.block_cols = x.block_cols;
            s.push_back(index_section(x.block_row_ptr, pointer_bits(x.num_blocks())));
            s.push_back(index_section(x.block_col_ids, index_bits(x.block_col_count())));
            s.push_back(value_section(x.block_values, b));
          } else if constexpr (std::is_same_v<T, RlcMatrix>) {
            h.params.run_bits = x.run_bits;
            std::vector<index_t> runs;
            std::vector<double> vals;
            for (const auto& p : x.pairs) {
              runs.push_back(p.run);
              vals.push_back(p.value);
            }
            s.push_back(index_section(runs, x.run_bits));
            s.push_back(value_section(vals, b));
          } else {
            Section mask{1, {}};
            mask.words.assign(x.mask.begin(), x.mask.end());
            s.push_back(std::move(mask));
            s.push_back(value_section(x.values, b));
          }
        },
        m);
    return s;
  }
  const FormattedTensor3& t = std::get<FormattedTensor3>(any);
  const Dims3 d = shape_of(t);
  h.rank = 3;
  h.format = format_of(t);
  h.dims = d;
  h.nnz = nnz_density(t).nnz;
  if (const auto* x = std::get_if<DenseTensor3>(&t)) {
    s.push_back(value_section(x->values, b));
  } else if (const auto* c = std::get_if<CooTensor3>(&t)) {
    for (int m = 0; m < 3; ++m) s.push_back(index_section(c->coords[m], index_bits(d[m])));
    s.push_back(value_section(c->values, b));
  } else {
    const auto& f = std::get<CsfTensor3>(t);
    h.params.mode_order = f.mode_order;
    s.push_back(index_section(f.idx0, index_bits(d[f.mode_order[0]])));
    s.push_back(index_section(f.ptr0, pointer_bits(static_cast<index_t>(f.idx1.size()))));
    s.push_back(index_section(f.idx1, index_bits(d[f.mode_order[1]])));
    s.push_back(index_section(f.ptr1, pointer_bits(f.nnz())));
    s.push_back(index_section(f.idx2, index_bits(d[f.mode_order[2]])));
    s.push_back(value_section(f.values, b));
  }
  return s;
}

inline std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace detail

/// Serializes to little-endian header, section table, bit-packed sections
/// and a trailing CRC32 of everything before it.
inline std::string write_container(const StoredValue& sv) {
  if (sv.dtype_bits != 32 && sv.dtype_bits != 64) throw Error("container values must be 32 or 64 bits");
  std::visit([](const auto& x) { require_valid(x); }, sv.value);
  detail::Header h;
  h.dtype_bits = sv.dtype_bits;
  std::vector<detail::Section> secs = detail::sections_of(sv.value, sv.dtype_bits, h);
  detail::ByteWriter w;
  w.bytes.append("SFRM");
  w.put(kContainerVersion, 2);
  w.put(h.rank, 1);
  w.put(static_cast<int>(h.format), 1);
  w.put(h.dtype_bits, 1);
  w.put(0, 1);
  for (int m = 0; m < 3; ++m) w.put(h.dims[m], 8);
  w.put(h.nnz, 8);
  w.put(h.params.block_rows, 4);
  w.put(h.params.block_cols, 4);
  w.put(h.params.run_bits, 1);
  for (int m = 0; m < 3; ++m) w.put(h.params.mode_order[m], 1);
  w.put(secs.size(), 2);
  std::size_t offset = kContainerHeaderBytes + kSectionEntryBytes * secs.size();
  for (const auto& s : secs) {
    std::size_t len = detail::packed_bytes(s.words.size(), s.width);
    w.put(s.width, 1);
    w.put(s.words.size(), 8);
    w.put(offset, 8);
    w.put(len, 8);
    offset += len;
  }
  for (const auto& s : secs) detail::pack_bits(w.bytes, s.words, s.width);
  w.put(detail::crc32_of(w.bytes), 4);
  return std::move(w.bytes);
}

inline StoredValue read_container(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "SFRM") throw Error("bad magic: not an SFRM container");
  if (bytes.size() < kContainerHeaderBytes + 4) throw Error("container truncated");
  detail::ByteReader r(bytes.substr(0, bytes.size() - 4));
  r.get(4);
  if (auto v = r.get(2); v != kContainerVersion) throw Error("unsupported container version " + std::to_string(v));
  detail::ByteReader tail(bytes.substr(bytes.size() - 4));
  if (tail.get(4) != detail::crc32_of(bytes.substr(0, bytes.size() - 4))) throw Error("container checksum mismatch");
  detail::Header h;
  h.rank = static_cast<int>(r.get(1));
  auto fmt = r.get(1);
  if (fmt > static_cast<std::uint64_t>(FormatId::CSF)) throw Error("unknown format id in container");
  h.format = static_cast<FormatId>(fmt);
  h.dtype_bits = static_cast<int>(r.get(1));
  r.get(1);
  for (int m = 0; m < 3; ++m) h.dims[m] = static_cast<index_t>(r.get(8));
  h.nnz = static_cast<index_t>(r.get(8));
  h.params.block_rows = static_cast<index_t>(r.get(4));
  h.params.block_cols = static_cast<index_t>(r.get(4));
  h.params.run_bits = static_cast<int>(r.get(1));
  for (int m = 0; m < 3; ++m) h.params.mode_order[m] = static_cast<int>(r.get(1));
  const auto nsec = static_cast<std::size_t>(r.get(2));
  if ((h.rank != 2 && h.rank != 3) || (h.dtype_bits != 32 && h.dtype_bits != 64))
    throw Error("corrupt container header");
  std::vector<detail::Section> secs(nsec);
  const std::size_t payload_end = bytes.size() - 4;
  for (auto& s : secs) {
    s.width = static_cast<int>(r.get(1));
    auto count = r.get(8), off = r.get(8), len = r.get(8);
    if (s.width < 1 || s.width > 64 || len != detail::packed_bytes(count, s.width) || off > payload_end ||
        len > payload_end - off)
      throw Error("corrupt container section table");
    s.words = detail::unpack_bits(bytes.substr(off, len), count, s.width);
  }
  auto need = [&](std::size_t n) {
    if (secs.size() != n) throw Error("container has wrong number of sections");
  };
  using detail::as_index;
  using detail::as_values;
  const index_t M = h.dims[0], K = h.dims[1];
  StoredValue out{h.dtype_bits, FormattedMatrix{}};
  if (h.rank == 2) {
    FormattedMatrix m;
    switch (h.format) {
      case FormatId::Dense: {
        need(1);
        DenseMatrix d{M, K};
        d.values = as_values(secs[0]);
        m = std::move(d);
        break;
      }
      case FormatId::COO: need(3); m = CooMatrix{M, K, as_index(secs[0]), as_index(secs[1]), as_values(secs[2])}; break;
      case FormatId::CSR: need(3); m = CsrMatrix{M, K, as_index(secs[0]), as_index(secs[1]), as_values(secs[2])}; break;
      case FormatId::CSC: need(3); m = CscMatrix{M, K, as_index(secs[0]), as_index(secs[1]), as_values(secs[2])}; break;
      case FormatId::BSR:
        need(3);
        m = BsrMatrix{M, K, h.params.block_rows, h.params.block_cols, as_index(secs[0]), as_index(secs[1]),
                      as_values(secs[2])};
        break;
      case FormatId::RLC: {
        need(2);
        if (secs[0].words.size() != secs[1].words.size()) throw Error("container RLC sections disagree");
        RlcMatrix x{M, K, h.params.run_bits, {}};
        auto runs = as_index(secs[0]);
        auto vals = as_values(secs[1]);
        for (std::size_t i = 0; i < runs.size(); ++i) x.pairs.push_back({runs[i], vals[i]});
        m = std::move(x);
        break;
      }
      case FormatId::ZVC: {
        need(2);
        ZvcMatrix z{M, K, {}, as_values(secs[1])};
        z.mask.assign(secs[0].words.begin(), secs[0].words.end());
        m = std::move(z);
        break;
      }
      case FormatId::CSF: throw Error("corrupt container: CSF matrix");
    }
    require_valid(m);
    out.value = std::move(m);
  } else {
    FormattedTensor3 t;
    switch (h.format) {
      case FormatId::Dense: {
        need(1);
        DenseTensor3 d;
        d.dims = h.dims;
        d.values = as_values(secs[0]);
        t = std::move(d);
        break;
      }
      case FormatId::COO:
        need(4);
        t = CooTensor3{h.dims, {as_index(secs[0]), as_index(secs[1]), as_index(secs[2])}, as_values(secs[3])};
        break;
      case FormatId::CSF:
        need(6);
        t = CsfTensor3{h.dims,           h.params.mode_order, as_index(secs[0]), as_index(secs[2]),
                       as_index(secs[4]), as_index(secs[1]),   as_index(secs[3]), as_values(secs[5])};
        break;
      default: throw Error("corrupt container: unsupported tensor format");
    }
    require_valid(t);
    out.value = std::move(t);
  }
  std::visit([&](const auto& x) {
    index_t n = nnz_density(x).nnz;
    if (n != h.nnz) throw Error("container nnz does not match its payload");
  }, out.value);
  return out;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary file in the same directory, then renames, so
/// readers never observe a partial file.
inline void write_file_atomic(const std::string& path, std::string_view bytes) {
  std::random_device rd;
  std::string tmp = path + ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) {
      std::remove(tmp.c_str());
      throw Error("failed writing '" + path + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw Error("cannot rename into '" + path + "': " + ec.message());
  }
}

inline void write_container_file(const std::string& path, const StoredValue& sv) {
  write_file_atomic(path, write_container(sv));
}

inline StoredValue read_container_file(const std::string& path) { return read_container(read_file(path)); }

/// Loads .mtx, .tns or an SFRM container by content/extension.
inline StoredValue load_any(const std::string& path, std::optional<Dims3> tns_dims = std::nullopt) {
  std::string bytes = read_file(path);
  if (bytes.size() >= 4 && bytes.compare(0, 4, "SFRM") == 0) return read_container(bytes);
  if (bytes.rfind("%%MatrixMarket", 0) == 0) return {32, FormattedMatrix{parse_mtx(bytes)}};
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".tns") == 0)
    return {32, FormattedTensor3{parse_tns(bytes, tns_dims)}};
  throw Error("unrecognized input file '" + path + "' (expected .mtx, .tns or SFRM)");
}

}  // namespace sparseflex
