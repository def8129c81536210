#pragma once

#include "hmggc/density.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace hmggc {

struct SimBatch {
  std::vector<double> samples;
  std::uint64_t seed = 0;
  std::string meta;
};

// n independent draws. Named families use their direct samplers; others
// invert the CDF by bisection.
SimBatch sample(const Density& spec, std::size_t n, std::uint64_t seed);

// Seed for stream `index` derived from a base seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

void write_csv(std::ostream& os, const SimBatch& batch);

}  // namespace hmggc
