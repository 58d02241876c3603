#include "rawcsi/csi.h"

#include <algorithm>
#include <fstream>

#include "binary_io.h"
#include "rawcsi/error.h"
#include "rawcsi/rng.h"

namespace rawcsi {

namespace {

constexpr unsigned char kMagic[4] = {0x43, 0x53, 0x49, 0x54};  // "CSIT"
constexpr std::uint32_t kVersion = 1;

void checkPlanes(const Tensor& planes) {
  if (planes.rank() != 3 || planes.dim(0) == 0 || planes.dim(0) % 2 != 0 || planes.dim(1) == 0 ||
      planes.dim(2) == 0) {
    fail(Errc::kShapeMismatch, "CSI planes must be [2m, n, c], got " + shapeString(planes.shape()));
  }
}

}  // namespace

CsiInstance::CsiInstance(Tensor p, int l) : planes(std::move(p)), label(l) { checkPlanes(planes); }

CsiInstance CsiInstance::fromComplex(std::size_t m, std::size_t n, std::size_t c,
                                     std::span<const std::complex<double>> values, int label) {
  if (values.size() != m * n * c) {
    fail(Errc::kShapeMismatch, "expected " + std::to_string(m * n * c) + " complex values");
  }
  Tensor planes({2 * m, n, c});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < c; ++k) {
        const auto v = values[(i * n + j) * c + k];
        planes.at(2 * i, j, k) = v.real();
        planes.at(2 * i + 1, j, k) = v.imag();
      }
    }
  }
  return CsiInstance(std::move(planes), label);
}

std::complex<double> CsiInstance::complexAt(std::size_t sample, std::size_t subcarrier,
                                            std::size_t antenna) const {
  if (sample >= m() || subcarrier >= n() || antenna >= c()) {
    fail(Errc::kIndexOutOfRange, "complexAt(" + std::to_string(sample) + "," + std::to_string(subcarrier) +
                                     "," + std::to_string(antenna) + ") on " + shapeString(planes.shape()));
  }
  return {planes.at(2 * sample, subcarrier, antenna), planes.at(2 * sample + 1, subcarrier, antenna)};
}

std::pair<Tensor, Tensor> deinterleave(const Tensor& planes) {
  checkPlanes(planes);
  const std::size_t m = planes.dim(0) / 2, row = planes.dim(1) * planes.dim(2);
  Tensor re({m, planes.dim(1), planes.dim(2)});
  Tensor im(re.shape());
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(planes.data().begin() + (2 * i) * row, row, re.data().begin() + i * row);
    std::copy_n(planes.data().begin() + (2 * i + 1) * row, row, im.data().begin() + i * row);
  }
  return {std::move(re), std::move(im)};
}

Tensor interleave(const Tensor& re, const Tensor& im) {
  if (re.shape() != im.shape() || re.rank() != 3) {
    fail(Errc::kShapeMismatch, "interleave " + shapeString(re.shape()) + " / " + shapeString(im.shape()));
  }
  const std::size_t m = re.dim(0), row = re.dim(1) * re.dim(2);
  Tensor planes({2 * m, re.dim(1), re.dim(2)});
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(re.data().begin() + i * row, row, planes.data().begin() + (2 * i) * row);
    std::copy_n(im.data().begin() + i * row, row, planes.data().begin() + (2 * i + 1) * row);
  }
  return planes;
}

InstanceShape CsiDataset::shape() const {
  if (instances.empty()) fail(Errc::kEmptyInput, "dataset has no instances");
  const auto& f = instances.front();
  return {f.m(), f.n(), f.c()};
}

void CsiDataset::validate() const {
  const auto s = shape();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    if (inst.planes.rank() != 3 || InstanceShape{inst.m(), inst.n(), inst.c()} != s) {
      fail(Errc::kHeterogeneousShapes, "instance " + std::to_string(i) + " has shape " +
                                           shapeString(inst.planes.shape()));
    }
    if (inst.label < 0 || static_cast<std::size_t>(inst.label) >= labelNames.size()) {
      fail(Errc::kInvariantViolation, "instance " + std::to_string(i) + " label " +
                                          std::to_string(inst.label) + " outside vocabulary");
    }
  }
}

CsiDataset CsiDataset::subset(std::span<const std::size_t> indices) const {
  CsiDataset out;
  out.labelNames = labelNames;
  out.meta = meta;
  out.instances.reserve(indices.size());
  for (auto i : indices) {
    if (i >= instances.size()) fail(Errc::kIndexOutOfRange, "subset index " + std::to_string(i));
    out.instances.push_back(instances[i]);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::testIndices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::trainIndices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != fold) out.push_back(i);
  return out;
}

std::uint64_t writeDataset(const CsiDataset& ds, std::ostream& sink) {
  ds.validate();
  const auto s = ds.shape();
  io::LeWriter w(sink);
  w.bytes(kMagic, 4);
  w.uint<std::uint32_t>(kVersion);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(ds.instances.size()));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(s.m));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(s.n));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(s.c));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(ds.labelNames.size()));
  for (const auto& name : ds.labelNames) w.str16(name);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(ds.meta.size()));
  for (const auto& [key, value] : ds.meta) {
    w.str16(key);
    w.str16(value);
  }
  for (const auto& inst : ds.instances) {
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(inst.label));
    for (double v : inst.planes.data()) w.f32(static_cast<float>(v));
  }
  sink.flush();
  if (!sink) fail(Errc::kIoFailure, "flush failed");
  return w.count();
}

CsiDataset readDataset(std::istream& source) {
  io::LeReader r(source);
  unsigned char magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) fail(Errc::kBadMagic, "not a CSIT stream");
  const auto version = r.uint<std::uint32_t>();
  if (version != kVersion) fail(Errc::kVersionUnsupported, "CSIT version " + std::to_string(version));
  const auto count = r.uint<std::uint32_t>();
  const auto m = r.uint<std::uint32_t>();
  const auto n = r.uint<std::uint32_t>();
  const auto c = r.uint<std::uint32_t>();
  if (m == 0 || n == 0 || c == 0) fail(Errc::kInvariantViolation, "zero extent in header");
  const auto numClasses = r.uint<std::uint32_t>();

  CsiDataset ds;
  for (std::uint32_t i = 0; i < numClasses; ++i) ds.labelNames.push_back(r.str16());
  const auto metaCount = r.uint<std::uint32_t>();
  for (std::uint32_t i = 0; i < metaCount; ++i) {
    auto key = r.str16();
    ds.meta[std::move(key)] = r.str16();
  }
  const std::size_t values = 2ULL * m * n * c;
  ds.instances.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto label = r.uint<std::uint32_t>();
    std::vector<double> data(values);
    for (auto& v : data) v = r.f32();
    if (label >= numClasses) {
      fail(Errc::kInvariantViolation, "instance " + std::to_string(i) + " label out of range");
    }
    ds.instances.emplace_back(Tensor({2ULL * m, n, c}, std::move(data)), static_cast<int>(label));
  }
  if (ds.instances.empty()) fail(Errc::kInvariantViolation, "dataset has no instances");
  ds.validate();
  return ds;
}

void saveDataset(const CsiDataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Errc::kIoFailure, "cannot open " + path);
  writeDataset(ds, os);
}

CsiDataset loadDataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::kIoFailure, "cannot open " + path);
  return readDataset(is);
}

FoldPlan makeFolds(const CsiDataset& ds, std::size_t k, std::uint64_t seed) {
  if (k < 2) fail(Errc::kTooFewInstances, "k must be at least 2");
  ds.validate();
  std::vector<std::vector<std::size_t>> byClass(ds.numClasses());
  for (std::size_t i = 0; i < ds.size(); ++i) byClass[ds.instances[i].label].push_back(i);

  FoldPlan plan{k, std::vector<std::size_t>(ds.size(), 0)};
  // Rotating the starting fold by the running total keeps fold sizes balanced
  // while per-class counts stay within one of each other.
  std::size_t start = 0;
  for (std::size_t cls = 0; cls < byClass.size(); ++cls) {
    auto& members = byClass[cls];
    if (members.empty()) continue;
    if (members.size() < k) {
      fail(Errc::kTooFewInstances, "class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                                       " instances for " + std::to_string(k) + " folds");
    }
    auto engine = makeEngine(seed, {0x464f4c44 /* "FOLD" */, cls});
    shuffle(members.begin(), members.end(), engine);
    for (std::size_t r = 0; r < members.size(); ++r) plan.assignment[members[r]] = (start + r) % k;
    start = (start + members.size()) % k;
  }
  return plan;
}

}  // namespace rawcsi
