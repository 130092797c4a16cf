#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "rggfpp/fpp.hpp"
#include "rggfpp/geometry.hpp"
#include "rggfpp/percolation.hpp"
#include "rggfpp/random.hpp"

namespace rggfpp {

/// Model parameters shared by every replica.
struct ModelSpec {
  int dim = 2;
  double intensity = 1.0;
  double radius = 2.0;
  double side = 600.0;
  PassageDistribution distribution = PassageDistribution::exponential(1.0);
};

/// One sampled environment: graph, components and passage times.
struct Instance {
  GeometricGraph graph;
  ComponentLabeling labels;
  PassageTimeField field;
};

/// Points come from stream (seed, replica, kPoints) and weights from
/// (seed, replica, kWeights), so either can be regenerated alone.
Instance make_instance(const ModelSpec& model, std::uint64_t seed, std::uint64_t replica);

/// Uniform direction on the unit sphere.
Point random_direction(int dim, RandomStream& rng);

template <class R>
struct ReplicaOutcome {
  std::uint64_t replica = 0;
  std::optional<R> value;
  std::string error;
  double wall_seconds = 0.0;
};

/// Runs fn(replica) for every id on up to `jobs` threads. Outcomes come back
/// in the order of `replicas` regardless of scheduling; exceptions become
/// error strings.
template <class R, class Fn>
std::vector<ReplicaOutcome<R>> run_replicas(std::span<const std::uint64_t> replicas, std::size_t jobs, Fn&& fn) {
  std::vector<ReplicaOutcome<R>> out(replicas.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < replicas.size(); k = next++) {
      auto& slot = out[k];
      slot.replica = replicas[k];
      const auto start = std::chrono::steady_clock::now();
      try {
        slot.value.emplace(fn(replicas[k]));
      } catch (const std::exception& e) {
        slot.error = e.what();
      } catch (...) {
        slot.error = "unknown error";
      }
      slot.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, replicas.size()));
  if (threads == 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace rggfpp
