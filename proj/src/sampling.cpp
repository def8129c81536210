#include "hmggc/sampling.hpp"

#include "hmggc/errors.hpp"

#include <iomanip>
#include <random>

namespace hmggc {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SimBatch sample(const Density& spec, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample: n must be >= 1");
  if (!spec.has_sampler()) throw UnsupportedSampler("sample: family '" + spec.family() + "' has no sampler");
  std::mt19937_64 gen(seed);
  SimBatch b;
  b.seed = seed;
  b.meta = "mt19937_64; " + spec.to_json().dump();
  b.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = spec.draw(gen);
    if (!(v > 0)) throw DomainError("sampler produced a non-positive value");
    b.samples.push_back(v);
  }
  return b;
}

void write_csv(std::ostream& os, const SimBatch& batch) {
  os << "# seed=" << batch.seed << " " << batch.meta << "\n";
  os << "sample\n" << std::setprecision(17);
  for (double v : batch.samples) os << v << '\n';
}

}  // namespace hmggc
