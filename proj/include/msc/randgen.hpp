#pragma once

#include <cstdint>

#include "msc/msc.hpp"
#include "msc/pdl.hpp"

namespace msc {

// Deterministic generator (splitmix64) so that seeded test corpora and
// difftest reports are reproducible byte for byte across runs.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n).
  int below(int n) { return n <= 1 ? 0 : (int)(next() % (uint64_t)n); }

  // True with probability num/den.
  bool chance(int num, int den) { return below(den) < num; }

  Rng fork() { return Rng(next()); }

 private:
  uint64_t state_;
};

struct RandomMscParams {
  int processes = 3;      // exact process count of the signature
  int labels = 2;
  int min_events = 1;
  int max_events = 12;
  int message_percent = 60;  // density of message edges over eligible events
};

Signature random_signature_for(const RandomMscParams& params);

// Samples per-process chains, then greedily adds FIFO-consistent acyclic
// messages until the density target is met or no candidate is left.
Msc random_msc(Rng& rng, const RandomMscParams& params);

// Random star-free PDL material for the differential suites.  All outputs
// stay in the Loop fragment; `allow_loop` controls whether Loop may appear
// inside guards and tests.
PathPtr random_loop_path(Rng& rng, const Signature& sig, int depth, bool allow_loop = true);
EvPtr random_loop_event(Rng& rng, const Signature& sig, int depth, bool allow_loop = true);
EvPtr random_loopfree_event(Rng& rng, const Signature& sig, int depth);
}  // namespace msc
