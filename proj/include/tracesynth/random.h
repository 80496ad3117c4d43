// Copyright 2026 The Tracesynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef TRACESYNTH_RANDOM_H_
#define TRACESYNTH_RANDOM_H_

#include <cstdint>
#include <random>

namespace tracesynth {

// Mixes a master seed with a stream index so that independent tasks (trials,
// traces, features) get uncorrelated sources regardless of scheduling order.
uint64_t DeriveSeed(uint64_t master_seed, uint64_t stream);

// Seeded random source. All conversions from raw engine output are done here
// rather than through <random> distributions, whose output is
// implementation-defined; this keeps runs bit-reproducible across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed), seed_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform on the open interval (0, 1).
  double UniformOpen();

  // Uniform on [lo, hi).
  double Uniform(double lo, double hi);

  // Uniform integer on [lo, hi].
  int64_t UniformInt(int64_t lo, int64_t hi);

  double StandardNormal();

  // Child source for sub-task `stream`. Depends only on the construction
  // seed, not on how far this source has advanced.
  Rng Fork(uint64_t stream) const { return Rng(DeriveSeed(seed_, stream)); }

  uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 engine_;
  uint64_t seed_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace tracesynth

#endif  // TRACESYNTH_RANDOM_H_
