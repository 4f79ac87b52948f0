#include "pufsim/snapshot.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include <unistd.h>
#include <random>

#include "pufsim/error.hpp"

namespace pufsim::io {
namespace {

namespace fs = std::filesystem;

class SnapshotTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("pufsim_snapshot_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

SignatureSet random_set(std::mt19937_64& rng, std::size_t devices, std::size_t trials, std::size_t n) {
  SignatureSet s(devices, trials, n);
  for (std::size_t d = 0; d < devices; ++d) {
    for (std::size_t t = 0; t < trials; ++t) {
      for (std::size_t p = 0; p < n; ++p) s.set_bit(d, t, p, rng() & 1u);
    }
  }
  return s;
}

TEST_F(SnapshotTest, PopulationRoundTrip) {
  PopulationSpec spec;
  spec.num_devices = 7;
  spec.cells_per_device = 1024;
  spec.placement = make_d3_adjacent64x16();
  spec.bias_map[{15, 3}] = 0.125;
  spec.master_seed = 99;
  const DevicePopulation pop = generate_population(spec);
  write_population(dir_ / "pop.bin", pop);
  const DevicePopulation back = read_population(dir_ / "pop.bin");
  EXPECT_EQ(back, pop);
  EXPECT_EQ(back.cells()[1030].region, pop.cells()[1030].region);
  EXPECT_EQ(back.cells()[1030].position, pop.cells()[1030].position);
}

TEST_F(SnapshotTest, SignatureRoundTripOverRandomShapes) {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 40; ++iter) {
    const std::size_t devices = 1 + rng() % 6;
    const std::size_t trials = 1 + rng() % 4;
    const std::size_t n = 1 + rng() % 200;
    SignatureSet s = random_set(rng, devices, trials, n);
    if (iter % 3 == 1) {
      BitVector mask(n, true);
      mask.set(0, n == 1);
      s.set_position_mask(mask);
    }
    if (iter % 4 == 2) {
      BitMatrix masks(devices, n);
      for (std::size_t d = 0; d < devices; ++d) {
        for (std::size_t p = 0; p < n; ++p) masks.set(d, p, rng() % 5 != 0);
      }
      s.set_device_masks(masks);
    }
    write_signatures(dir_ / "s.bin", s);
    EXPECT_EQ(read_signatures_file(dir_ / "s.bin"), s) << "iteration " << iter;
  }
}

TEST_F(SnapshotTest, GoldenRoundTrip) {
  std::mt19937_64 rng(11);
  const SignatureSet s = random_set(rng, 5, 3, 70);
  const GoldenSignature g = enroll_golden(s);
  write_golden(dir_ / "g.bin", g);
  const GoldenSignature back = read_golden(dir_ / "g.bin");
  EXPECT_EQ(back.bits, g.bits);
  EXPECT_EQ(back.stability, g.stability);
}

TEST_F(SnapshotTest, RejectsForeignTruncatedAndFutureFiles) {
  std::mt19937_64 rng(1);
  write_signatures(dir_ / "s.bin", random_set(rng, 2, 1, 64));
  EXPECT_THROW(read_population(dir_ / "s.bin"), Error);

  std::string bytes = read_text(dir_ / "s.bin");
  write_text(dir_ / "short.bin", bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_signatures_file(dir_ / "short.bin"), Error);

  bytes[8] = 2;  // version field
  write_text(dir_ / "v2.bin", bytes);
  try {
    read_signatures_file(dir_ / "v2.bin");
    FAIL() << "expected a version error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
  EXPECT_THROW(read_signatures_file(dir_ / "absent.bin"), Error);
}

TEST_F(SnapshotTest, SignatureCsvLayout) {
  SignatureSet s(2, 1, 3);
  s.set_bit(1, 0, 2, true);
  write_signatures_csv(dir_ / "s.csv", s);
  EXPECT_EQ(read_text(dir_ / "s.csv"), "device,trial,bits\n0,0,000\n1,0,001\n");
}

TEST_F(SnapshotTest, SequenceFiles) {
  write_text(dir_ / "a.txt", "1011\n0 01\n");
  const nist::BitSequence a = read_sequence_file(dir_ / "a.txt", SequenceFormat::Ascii);
  EXPECT_EQ(a.size(), 7u);
  EXPECT_EQ(a[0], 1);
  EXPECT_EQ(a[6], 1);

  write_text(dir_ / "p.bin", std::string("\xA0", 1));
  const nist::BitSequence p = read_sequence_file(dir_ / "p.bin", SequenceFormat::Packed);
  ASSERT_EQ(p.size(), 8u);
  EXPECT_EQ(p[0], 1);
  EXPECT_EQ(p[1], 0);
  EXPECT_EQ(p[2], 1);
  EXPECT_EQ(p[7], 0);
}

TEST_F(SnapshotTest, HistogramCsv) {
  Histogram h = make_histogram(25.0);
  h.add(10.0);
  h.add(100.0);
  write_histogram_csv(dir_ / "h.csv", h);
  EXPECT_EQ(read_text(dir_ / "h.csv"),
            "bucket_start_percent,bucket_end_percent,count\n0,25,1\n25,50,0\n50,75,0\n75,100,0\n100,125,1\n");
}

}  // namespace
}  // namespace pufsim::io
