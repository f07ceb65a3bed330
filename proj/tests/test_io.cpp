#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "test_util.hpp"

using namespace sftest;
namespace fs = std::filesystem;

namespace {

const char* kExampleMtx =
    "%%MatrixMarket matrix coordinate real general\n"
    "% comment line\n"
    "4 4 4\n"
    "1 1 5\n"
    "1 4 7\n"
    "3 2 3\n"
    "4 3 1\n";

fs::path temp_dir() {
  fs::path d = fs::temp_directory_path() / ("sparseflex_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::create_directories(d);
  return d;
}

DenseMatrix dense_of(const StoredValue& sv) { return to_dense(std::get<FormattedMatrix>(sv.value)); }

}  // namespace

TEST(Mtx, ParsesGeneralExample) { EXPECT_EQ(parse_mtx(std::string(kExampleMtx)), example4()); }

TEST(Mtx, SortsUnorderedEntries) {
  auto c = parse_mtx(std::string("%%MatrixMarket matrix coordinate real general\n4 4 4\n4 3 1\n3 2 3\n1 4 7\n1 1 5\n"));
  EXPECT_EQ(c, example4());
}

TEST(Mtx, SymmetricExpands) {
  auto c = parse_mtx(std::string("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 4\n2 1 3\n"));
  EXPECT_EQ(c.nnz(), 3);
  auto d = dense_from_coo(c);
  EXPECT_EQ(d.at(0, 1), 3.0);
  EXPECT_EQ(d.at(1, 0), 3.0);
  auto off = parse_mtx(std::string("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 3\n"));
  EXPECT_EQ(off.nnz(), 2);
}

TEST(Mtx, PatternAndIntegerFields) {
  auto p = parse_mtx(std::string("%%MatrixMarket matrix coordinate pattern general\n3 3 2\n1 2\n3 3\n"));
  EXPECT_EQ(p.values, (std::vector<double>{1.0, 1.0}));
  auto i = parse_mtx(std::string("%%MatrixMarket matrix coordinate integer general\n2 2 1\n2 2 -4\n"));
  EXPECT_EQ(i.values, (std::vector<double>{-4.0}));
}

TEST(Mtx, Errors) {
  const std::string head = "%%MatrixMarket matrix coordinate real general\n";
  EXPECT_THROW(parse_mtx(head + "4 4 1\n5 1 1.0\n"), Error);
  EXPECT_THROW(parse_mtx(head + "4 4 1\n0 1 1.0\n"), Error);
  EXPECT_THROW(parse_mtx(head + "4 4 2\n1 1 1.0\n1 1 2.0\n"), Error);
  EXPECT_THROW(parse_mtx(std::string("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n")), Error);
  EXPECT_THROW(parse_mtx(std::string("%MatrixMarket nonsense\n")), Error);
  EXPECT_THROW(parse_mtx(std::string("")), Error);
  EXPECT_THROW(parse_mtx(head + "4 4 2\n1 1 1.0\n"), Error);
  EXPECT_THROW(parse_mtx(head + "4 4 1\n1 1 x\n"), Error);
  EXPECT_THROW(parse_mtx(head + "4 4 1\n1 1\n"), Error);
}

TEST(Mtx, WriteParseRoundTrip) {
  auto c = random_matrix(30, 40, 0.1, 3);
  EXPECT_EQ(parse_mtx(write_mtx(c)), c);
  EXPECT_EQ(write_mtx(example4()), std::string("%%MatrixMarket matrix coordinate real general\n4 4 4\n1 1 5\n1 4 7\n3 2 3\n4 3 1\n"));
}

TEST(Tns, ParsesExample) {
  auto t = parse_tns(std::string("1 1 1 2\n1 2 2 3\n2 1 2 4\n"));
  EXPECT_EQ(t, example_tensor());
}

TEST(Tns, EmptyWithDims) {
  auto t = parse_tns(std::string(""), Dims3{2, 2, 2});
  EXPECT_EQ(t.dims, (Dims3{2, 2, 2}));
  EXPECT_EQ(t.nnz(), 0);
}

TEST(Tns, DimsOverrideAndCommentLines) {
  auto t = parse_tns(std::string("# header\n1 1 1 2\n\n"), Dims3{3, 4, 5});
  EXPECT_EQ(t.dims, (Dims3{3, 4, 5}));
  EXPECT_EQ(t.nnz(), 1);
}

TEST(Tns, Errors) {
  EXPECT_THROW(parse_tns(std::string("1 1 2\n")), Error);
  EXPECT_THROW(parse_tns(std::string("1 1 a 2\n")), Error);
  EXPECT_THROW(parse_tns(std::string("0 1 1 2\n")), Error);
  EXPECT_THROW(parse_tns(std::string("3 1 1 2\n"), Dims3{2, 2, 2}), Error);
}

TEST(Tns, WriteParseRoundTrip) {
  auto t = random_tensor(Dims3{6, 7, 8}, 0.2, 5);
  EXPECT_EQ(parse_tns(write_tns(t), t.dims), t);
}

TEST(Container, RoundTripsEveryMatrixFormat) {
  for (double density : kDensities)
    for (FormatId f : kAllFormats) {
      if (f == FormatId::CSF) continue;
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto p = params_for(f, seed);
        auto m = from_dense(random_dense(23, 17, density, seed), f, p);
        for (int b : {32, 64}) {
          StoredValue back = read_container(write_container({b, m}));
          EXPECT_EQ(back.dtype_bits, b);
          ASSERT_TRUE(std::holds_alternative<FormattedMatrix>(back.value));
          EXPECT_EQ(std::get<FormattedMatrix>(back.value), m) << to_string(f) << " density " << density;
        }
      }
    }
}

TEST(Container, RoundTripsEveryTensorFormat) {
  for (double density : kDensities)
    for (FormatId f : {FormatId::Dense, FormatId::COO, FormatId::CSF})
      for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto t = from_dense(random_dense(Dims3{5, 7, 4}, density, seed), f, params_for(f, seed));
        StoredValue back = read_container(write_container({32, t}));
        ASSERT_TRUE(std::holds_alternative<FormattedTensor3>(back.value));
        EXPECT_EQ(std::get<FormattedTensor3>(back.value), t) << to_string(f);
      }
}

TEST(Container, ZvcByteLength) {
  auto zvc = from_coo(example4(), FormatId::ZVC);
  std::string bytes = write_container({32, zvc});
  EXPECT_EQ(bytes.size(), kContainerHeaderBytes + 2 * kSectionEntryBytes + 16 / 8 + 4 * 4 + 4);
}

TEST(Container, RejectsValuesThatDoNotFit) {
  CooMatrix c{1, 1, {0}, {0}, {0.1}};
  EXPECT_THROW(write_container({32, FormattedMatrix{c}}), Error);
  EXPECT_NO_THROW(write_container({64, FormattedMatrix{c}}));
  EXPECT_THROW(write_container({16, FormattedMatrix{example4()}}), Error);
}

TEST(Container, DetectsCorruption) {
  const std::string good = write_container({32, from_coo(example4(), FormatId::CSR)});
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(read_container(bad_magic), Error);

  std::string bad_version = good;
  bad_version[4] = 9;
  EXPECT_THROW(read_container(bad_version), Error);

  std::string flipped = good;
  flipped[kContainerHeaderBytes + 3] ^= 0x10;
  EXPECT_THROW(read_container(flipped), Error);

  std::string payload_flip = good;
  payload_flip[good.size() - 6] ^= 0x01;
  EXPECT_THROW(read_container(payload_flip), Error);

  for (std::size_t n : {std::size_t{0}, std::size_t{3}, std::size_t{20}, good.size() - 1})
    EXPECT_THROW(read_container(std::string_view(good).substr(0, n)), Error) << n;
}

TEST(Container, Deterministic) {
  auto m = from_dense(random_dense(40, 40, 0.1, 8), FormatId::RLC);
  EXPECT_EQ(write_container({32, m}), write_container({32, m}));
}

TEST(Files, AtomicWriteAndLoadAny) {
  fs::path dir = temp_dir();
  const std::string sfrm = (dir / "a.sfrm").string();
  write_container_file(sfrm, {32, from_coo(example4(), FormatId::CSC)});
  for (const auto& e : fs::directory_iterator(dir)) EXPECT_EQ(e.path().filename(), "a.sfrm");
  EXPECT_EQ(dense_of(load_any(sfrm)), dense_from_coo(example4()));

  const std::string mtx = (dir / "b.mtx").string();
  write_file_atomic(mtx, kExampleMtx);
  EXPECT_EQ(dense_of(load_any(mtx)), dense_from_coo(example4()));

  const std::string tns = (dir / "c.tns").string();
  write_file_atomic(tns, write_tns(example_tensor()));
  auto t = load_any(tns, Dims3{2, 2, 2});
  EXPECT_EQ(std::get<FormattedTensor3>(t.value), FormattedTensor3{example_tensor()});

  const std::string junk = (dir / "d.bin").string();
  write_file_atomic(junk, "hello");
  EXPECT_THROW(load_any(junk), Error);
  EXPECT_THROW(load_any((dir / "missing.mtx").string()), Error);
  EXPECT_THROW(write_file_atomic((dir / "no" / "such" / "dir.sfrm").string(), "x"), Error);
  fs::remove_all(dir);
}

TEST(Files, FailedWriteLeavesOldFileIntact) {
  fs::path dir = temp_dir();
  const std::string path = (dir / "keep.sfrm").string();
  write_container_file(path, {32, from_coo(example4(), FormatId::COO)});
  const std::string before = read_file(path);
  CooMatrix bad{1, 1, {0}, {0}, {0.1}};
  EXPECT_THROW(write_container_file(path, {32, FormattedMatrix{bad}}), Error);
  EXPECT_EQ(read_file(path), before);
  fs::remove_all(dir);
}
