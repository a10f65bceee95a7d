#include "enslab/numkit/rng.hpp"

namespace enslab {

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id),
      key_(mix64(mix64(seed + kGolden) ^ (stream_id * 0xd1b54a32d192ed03ULL + kGolden))) {}

RngStream RngStream::split(std::uint64_t child_id) const {
    return RngStream(mix64(key_ ^ 0x5851f42d4c957f2dULL), child_id);
}

}  // namespace enslab
