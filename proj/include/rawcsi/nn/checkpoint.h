#ifndef RAWCSI_NN_CHECKPOINT_H_
#define RAWCSI_NN_CHECKPOINT_H_

// CSIM checkpoint: "CSIM", u32 version, u32 tensor count, then per tensor
// u16-length name, u8 rank, u32 dims, f32 payload. Little-endian.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "rawcsi/nn/network.h"

namespace rawcsi::nn {

std::uint64_t writeTensors(const NamedTensors& tensors, std::ostream& sink);
NamedTensors readTensors(std::istream& source);

// Parameters followed by buffers.
std::uint64_t writeCheckpoint(const Network& net, std::ostream& sink);
// Copies every named tensor into the network; names and shapes must match.
void loadCheckpoint(Network& net, const NamedTensors& tensors);

void saveCheckpoint(const Network& net, const std::string& path);
void loadCheckpoint(Network& net, const std::string& path);

}  // namespace rawcsi::nn

#endif  // RAWCSI_NN_CHECKPOINT_H_
