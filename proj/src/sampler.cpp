#include "dualarm/sampler.hpp"

#include <limits>

namespace dualarm {

std::size_t uniform_index(Rng& rng, std::size_t k) {
  if (k == 0) throw DomainError("uniform_index over an empty range");
  const std::uint64_t bound = static_cast<std::uint64_t>(k);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return static_cast<std::size_t>(draw % bound);
}

std::uint64_t batch_seed(std::uint64_t base, std::uint64_t k) {
  std::uint64_t z = base + k * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

double uniform_in(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

bool opposite_exclusive(const ObjectSpec& o, const WorkspaceConfig& c) {
  const Region a = region_of(o.pick.x, c);
  const Region b = region_of(o.place.x, c);
  return (a == Region::ExclusiveLeft && b == Region::ExclusiveRight) ||
         (a == Region::ExclusiveRight && b == Region::ExclusiveLeft);
}

}  // namespace

Instance sample_instance(const SamplerSpec& spec) {
  spec.config.validate();
  if (spec.n == 0) throw DomainError("sampler needs n >= 1");
  const WorkspaceConfig& c = spec.config;
  Rng rng(spec.seed);

  Instance inst;
  inst.config = c;
  inst.scheme = spec.scheme;
  inst.seed = spec.seed;
  inst.objects.reserve(spec.n);

  const double x_lo = spec.scheme == Scheme::CA ? c.arm2_x_min : 0.0;
  const double x_hi = spec.scheme == Scheme::CA ? c.arm1_x_max : c.width;
  while (inst.objects.size() < spec.n) {
    ObjectSpec o;
    o.pick.x = uniform_in(rng, x_lo, x_hi);
    o.pick.y = uniform_in(rng, 0.0, c.height);
    o.place.x = uniform_in(rng, x_lo, x_hi);
    o.place.y = uniform_in(rng, 0.0, c.height);
    if (spec.scheme == Scheme::FS && opposite_exclusive(o, c)) continue;
    inst.objects.push_back(o);
  }
  return inst;
}

std::vector<Instance> sample_batch(std::size_t n, Scheme scheme, std::size_t count, std::uint64_t seed,
                                   const WorkspaceConfig& config) {
  std::vector<Instance> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(sample_instance({n, scheme, batch_seed(seed, k), config}));
  return out;
}

}  // namespace dualarm
