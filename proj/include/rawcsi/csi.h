#ifndef RAWCSI_CSI_H_
#define RAWCSI_CSI_H_

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rawcsi/tensor.h"

namespace rawcsi {

// m complex CSI measurements over n subcarriers and c antenna pairs, stored as
// planes of shape [2m, n, c]. Row 2i is Re and row 2i+1 is Im of measurement
// i, so a 2x1 kernel with stride 2x1 sees exactly one (Re, Im) pair.
struct CsiInstance {
  Tensor planes;
  int label = 0;

  CsiInstance() = default;
  CsiInstance(Tensor planes, int label);

  // values is row-major [m, n, c].
  static CsiInstance fromComplex(std::size_t m, std::size_t n, std::size_t c,
                                 std::span<const std::complex<double>> values, int label);

  std::size_t m() const { return planes.dim(0) / 2; }
  std::size_t n() const { return planes.dim(1); }
  std::size_t c() const { return planes.dim(2); }

  std::complex<double> complexAt(std::size_t sample, std::size_t subcarrier, std::size_t antenna) const;

  bool operator==(const CsiInstance&) const = default;
};

// Splits planes into (Re, Im), each [m, n, c].
std::pair<Tensor, Tensor> deinterleave(const Tensor& planes);
Tensor interleave(const Tensor& re, const Tensor& im);

struct InstanceShape {
  std::size_t m = 0, n = 0, c = 0;
  bool operator==(const InstanceShape&) const = default;
};

struct CsiDataset {
  std::vector<CsiInstance> instances;
  std::vector<std::string> labelNames;
  std::map<std::string, std::string> meta;

  std::size_t size() const { return instances.size(); }
  std::size_t numClasses() const { return labelNames.size(); }
  // Shape of the first instance; throws EmptyInput on an empty dataset.
  InstanceShape shape() const;
  // Checks homogeneous shapes and label ranges.
  void validate() const;
  CsiDataset subset(std::span<const std::size_t> indices) const;

  bool operator==(const CsiDataset&) const = default;
};

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;

  std::vector<std::size_t> testIndices(std::size_t fold) const;
  std::vector<std::size_t> trainIndices(std::size_t fold) const;

  bool operator==(const FoldPlan&) const = default;
};

// CSIT stream, little-endian. Returns bytes written.
std::uint64_t writeDataset(const CsiDataset& ds, std::ostream& sink);
CsiDataset readDataset(std::istream& source);

void saveDataset(const CsiDataset& ds, const std::string& path);
CsiDataset loadDataset(const std::string& path);

// Stratified, seed-deterministic fold assignment.
FoldPlan makeFolds(const CsiDataset& ds, std::size_t k, std::uint64_t seed);

}  // namespace rawcsi

#endif  // RAWCSI_CSI_H_
