#include "rggfpp/runner.hpp"

#include <cmath>
#include <random>

namespace rggfpp {

Instance make_instance(const ModelSpec& model, std::uint64_t seed, std::uint64_t replica) {
  const BoxDomain domain(model.dim, model.side);
  auto points = make_stream(seed, replica, Purpose::kPoints);
  auto weights = make_stream(seed, replica, Purpose::kWeights);
  GeometricGraph graph = build_rgg(sample_ppp(domain, model.intensity, points, model.radius), model.radius);
  ComponentLabeling labels = components(graph);
  PassageTimeField field = sample_weights(graph, model.distribution, weights);
  return {std::move(graph), std::move(labels), std::move(field)};
}

Point random_direction(int dim, RandomStream& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Point u(dim);
  double n2 = 0.0;
  while (!(n2 > 1e-24)) {
    n2 = 0.0;
    for (auto& c : u) {
      c = normal(rng);
      n2 += c * c;
    }
  }
  const double n = std::sqrt(n2);
  for (auto& c : u) c /= n;
  return u;
}

}  // namespace rggfpp
