#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "rawcsi/csi.h"
#include "rawcsi/rng.h"
#include "test_util.h"

namespace rawcsi {
namespace {

using testing::codeOf;

// Random dataset whose values are exactly representable as f32.
CsiDataset randomDataset(std::size_t count, std::size_t m, std::size_t n, std::size_t c, std::size_t classes,
                         std::uint64_t seed) {
  auto e = makeEngine(seed, {7});
  CsiDataset ds;
  for (std::size_t k = 0; k < classes; ++k) ds.labelNames.push_back("g" + std::to_string(k));
  ds.meta["source"] = "unit";
  ds.meta["note"] = "x=1";
  for (std::size_t i = 0; i < count; ++i) {
    Tensor planes({2 * m, n, c});
    for (double& v : planes.data()) v = static_cast<float>(uniform(e, -3.0, 3.0));
    ds.instances.emplace_back(std::move(planes), static_cast<int>(i % classes));
  }
  return ds;
}

std::string bytesOf(const CsiDataset& ds) {
  std::ostringstream os(std::ios::binary);
  writeDataset(ds, os);
  return os.str();
}

TEST(CsiInstance, ComplexAt) {
  CsiInstance ones(Tensor({4, 3, 2}), 0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      ones.planes.at(0, i, j) = 1.0;
      ones.planes.at(2, i, j) = 1.0;
    }
  }
  EXPECT_EQ(ones.complexAt(1, 2, 1), std::complex<double>(1, 0));

  const std::vector<std::complex<double>> v{{3, 4}, {0, 0}};
  const auto inst = CsiInstance::fromComplex(1, 2, 1, v, 0);
  EXPECT_EQ(inst.complexAt(0, 0, 0), std::complex<double>(3, 4));
  EXPECT_EQ(inst.planes.at(0, 0, 0), 3.0);
  EXPECT_EQ(inst.planes.at(1, 0, 0), 4.0);
  EXPECT_EQ(codeOf([&] { inst.complexAt(1, 0, 0); }), Errc::kIndexOutOfRange);
}

TEST(CsiInstance, InterleaveRoundTrip) {
  const auto ds = randomDataset(3, 3, 5, 2, 2, 11);
  for (const auto& inst : ds.instances) {
    const auto [re, im] = deinterleave(inst.planes);
    EXPECT_EQ(re.shape(), (Shape{3, 5, 2}));
    EXPECT_EQ(interleave(re, im), inst.planes);
    EXPECT_EQ(re.at(2, 4, 1), inst.planes.at(4, 4, 1));
    EXPECT_EQ(im.at(2, 4, 1), inst.planes.at(5, 4, 1));
  }
  EXPECT_EQ(codeOf([] { CsiInstance(Tensor({3, 2, 1}), 0); }), Errc::kShapeMismatch);
}

TEST(Csit, HeaderLeadsWithMagic) {
  CsiDataset ds;
  ds.labelNames = {"a"};
  ds.instances.emplace_back(Tensor({2, 2, 1}), 0);
  const auto bytes = bytesOf(ds);
  ASSERT_GE(bytes.size(), 28u);
  EXPECT_EQ(bytes.substr(0, 4), "CSIT");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);  // version, little-endian
  // header 28 + label (2+1) + metaCount 4 + label 4 + payload 4 floats
  EXPECT_EQ(bytes.size(), 28u + 3u + 4u + 4u + 16u);
}

TEST(Csit, RoundTripIsExact) {
  const auto ds = randomDataset(12, 2, 7, 3, 4, 5);
  const auto bytes = bytesOf(ds);
  std::istringstream is(bytes, std::ios::binary);
  const auto back = readDataset(is);
  EXPECT_EQ(back, ds);
  EXPECT_EQ(bytesOf(back), bytes);
}

TEST(Csit, ReaderErrors) {
  const auto bytes = bytesOf(randomDataset(4, 1, 3, 1, 2, 9));
  std::string bad = bytes;
  bad[0] = 'X';
  std::istringstream badMagic(bad);
  EXPECT_EQ(codeOf([&] { readDataset(badMagic); }), Errc::kBadMagic);

  std::string ver = bytes;
  ver[4] = 2;
  std::istringstream badVersion(ver);
  EXPECT_EQ(codeOf([&] { readDataset(badVersion); }), Errc::kVersionUnsupported);

  std::istringstream truncated(bytes.substr(0, bytes.size() - 5));
  EXPECT_EQ(codeOf([&] { readDataset(truncated); }), Errc::kTruncatedStream);
}

TEST(Csit, WriterRejectsMixedShapes) {
  CsiDataset ds;
  ds.labelNames = {"a"};
  ds.instances.emplace_back(Tensor({2, 30, 1}), 0);
  ds.instances.emplace_back(Tensor({2, 52, 1}), 0);
  std::ostringstream os;
  EXPECT_EQ(codeOf([&] { writeDataset(ds, os); }), Errc::kHeterogeneousShapes);
}

TEST(Folds, SingleClassSplitsEvenly) {
  const auto ds = randomDataset(10, 1, 2, 1, 1, 3);
  const auto plan = makeFolds(ds, 5, 42);
  for (std::size_t f = 0; f < 5; ++f) EXPECT_EQ(plan.testIndices(f).size(), 2u);
  EXPECT_EQ(makeFolds(ds, 5, 42), plan);
}

TEST(Folds, PartitionAndStratification) {
  const auto ds = randomDataset(53, 1, 2, 1, 4, 3);
  const auto plan = makeFolds(ds, 5, 7);
  std::multiset<std::size_t> seen;
  for (std::size_t f = 0; f < 5; ++f) {
    const auto test = plan.testIndices(f);
    const auto train = plan.trainIndices(f);
    EXPECT_EQ(test.size() + train.size(), ds.size());
    std::set<std::size_t> t(test.begin(), test.end());
    for (auto i : train) EXPECT_EQ(t.count(i), 0u);
    seen.insert(test.begin(), test.end());
  }
  EXPECT_EQ(seen.size(), ds.size());
  EXPECT_EQ(std::set<std::size_t>(seen.begin(), seen.end()).size(), ds.size());
  for (int cls = 0; cls < 4; ++cls) {
    std::size_t lo = ds.size(), hi = 0;
    for (std::size_t f = 0; f < 5; ++f) {
      std::size_t count = 0;
      for (auto i : plan.testIndices(f)) count += ds.instances[i].label == cls ? 1 : 0;
      lo = std::min(lo, count);
      hi = std::max(hi, count);
    }
    EXPECT_LE(hi - lo, 1u) << "class " << cls;
  }
}

TEST(Folds, TooFewInstances) {
  const auto ds = randomDataset(3, 1, 2, 1, 1, 3);
  EXPECT_EQ(codeOf([&] { makeFolds(ds, 5, 1); }), Errc::kTooFewInstances);
  EXPECT_EQ(codeOf([&] { makeFolds(ds, 1, 1); }), Errc::kTooFewInstances);
}

}  // namespace
}  // namespace rawcsi
