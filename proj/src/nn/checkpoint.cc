#include "rawcsi/nn/checkpoint.h"

#include <algorithm>
#include <fstream>

#include "../binary_io.h"
#include "rawcsi/error.h"

namespace rawcsi::nn {

namespace {

constexpr unsigned char kMagic[4] = {0x43, 0x53, 0x49, 0x4d};  // "CSIM"
constexpr std::uint32_t kVersion = 1;

void writeEntry(io::LeWriter& w, const std::string& name, const Tensor& t) {
  if (t.rank() > 0xff) fail(Errc::kInvariantViolation, "tensor rank too large");
  w.str16(name);
  w.uint<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape()) w.uint<std::uint32_t>(static_cast<std::uint32_t>(d));
  for (double v : t.data()) w.f32(static_cast<float>(v));
}

}  // namespace

std::uint64_t writeTensors(const NamedTensors& tensors, std::ostream& sink) {
  io::LeWriter w(sink);
  w.bytes(kMagic, 4);
  w.uint<std::uint32_t>(kVersion);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) writeEntry(w, tensors.name(i), tensors[i]);
  sink.flush();
  if (!sink) fail(Errc::kIoFailure, "flush failed");
  return w.count();
}

NamedTensors readTensors(std::istream& source) {
  io::LeReader r(source);
  unsigned char magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) fail(Errc::kBadMagic, "not a CSIM stream");
  const auto version = r.uint<std::uint32_t>();
  if (version != kVersion) fail(Errc::kVersionUnsupported, "CSIM version " + std::to_string(version));
  const auto count = r.uint<std::uint32_t>();
  NamedTensors out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str16();
    const auto rank = r.uint<std::uint8_t>();
    Shape shape(rank);
    for (auto& d : shape) d = r.uint<std::uint32_t>();
    std::vector<double> data(shapeProduct(shape));
    for (auto& v : data) v = r.f32();
    out.add(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

std::uint64_t writeCheckpoint(const Network& net, std::ostream& sink) {
  NamedTensors all;
  for (std::size_t i = 0; i < net.parameters().size(); ++i) all.add(net.parameters().name(i), net.parameters()[i]);
  for (std::size_t i = 0; i < net.buffers().size(); ++i) all.add(net.buffers().name(i), net.buffers()[i]);
  return writeTensors(all, sink);
}

void loadCheckpoint(Network& net, const NamedTensors& tensors) {
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& name = tensors.name(i);
    NamedTensors& home = net.parameters().contains(name) ? net.parameters() : net.buffers();
    Tensor& dst = home.get(name);
    if (dst.shape() != tensors[i].shape()) {
      fail(Errc::kShapeMismatch, "checkpoint tensor " + name + " has shape " + shapeString(tensors[i].shape()));
    }
    dst = tensors[i];
  }
}

void saveCheckpoint(const Network& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Errc::kIoFailure, "cannot open " + path);
  writeCheckpoint(net, os);
}

void loadCheckpoint(Network& net, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::kIoFailure, "cannot open " + path);
  loadCheckpoint(net, readTensors(is));
}

}  // namespace rawcsi::nn
