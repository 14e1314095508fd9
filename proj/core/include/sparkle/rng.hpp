#pragma once

#include <cstdint>
#include <random>

namespace sparkle {

// Counter-keyed random stream. Every (master seed, replicate, agent,
// iteration) tuple owns an independent stream, so sample sequences do not
// depend on scheduling or thread count.
class RngStream {
 public:
  RngStream(std::uint64_t k0, std::uint64_t k1, std::uint64_t k2,
            std::uint64_t k3) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(k0), static_cast<std::uint32_t>(k0 >> 32),
        static_cast<std::uint32_t>(k1), static_cast<std::uint32_t>(k1 >> 32),
        static_cast<std::uint32_t>(k2), static_cast<std::uint32_t>(k2 >> 32),
        static_cast<std::uint32_t>(k3), static_cast<std::uint32_t>(k3 >> 32)};
    gen_.seed(seq);
  }

  double normal() { return normal_(gen_); }
  double uniform() { return uniform_(gen_); }
  std::uint64_t next_u64() { return gen_(); }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Stream used by the optimizer when agent `agent` draws its samples at
// iteration `k` of replicate `rep`.
inline RngStream agent_stream(std::uint64_t master_seed, std::uint32_t rep,
                              std::uint32_t agent, std::uint64_t k) {
  return RngStream(master_seed, (std::uint64_t{rep} << 32) | agent, k,
                   0x5350524b4c45ull);  // stream domain tag
}

// Stream used once while generating instance data (matrices, targets, ...).
inline RngStream setup_stream(std::uint64_t seed, std::uint32_t tag) {
  return RngStream(seed, tag, 0, 0x5345545550ull);
}

}  // namespace sparkle
