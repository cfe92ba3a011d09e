#pragma once

#include <map>
#include <vector>

#include "isac/syncnet.hpp"

namespace fixtures {

using namespace isac;
using namespace isac::sync;

inline ApertureState node(int id, double x, double y, double psi = 0.0, double to = 0.0) {
  ApertureState s;
  s.id = id;
  s.position = {x, y};
  s.orientation = psi;
  s.timeOffset = to;
  return s;
}

inline std::vector<AperturePrior> priors_for(const std::vector<ApertureState>& truth, const std::set<int>& anchors,
                                             double lo, double hi, double toRange) {
  std::vector<AperturePrior> out;
  for (const auto& s : truth) {
    AperturePrior p;
    p.id = s.id;
    p.anchor = anchors.count(s.id) != 0;
    p.nominal = s;
    if (!p.anchor) {
      p.nominal.position = {0.5 * (lo + hi), 0.5 * (lo + hi)};
      p.nominal.orientation = 0.0;
      p.nominal.timeOffset = 0.0;
      p.components[0] = ComponentPrior::uniform(lo, hi);
      p.components[1] = ComponentPrior::uniform(lo, hi);
      p.components[2] = ComponentPrior::uniform(-kPi, kPi);
      p.components[3] = ComponentPrior::uniform(-toRange * kSpeedOfLight, toRange * kSpeedOfLight);
      p.components[4] = ComponentPrior::uniform(-kPi, kPi);
    }
    out.push_back(p);
  }
  return out;
}

inline std::map<int, ApertureState> by_id(const std::vector<ApertureState>& v) {
  std::map<int, ApertureState> m;
  for (const auto& s : v) m[s.id] = s;
  return m;
}

/// Four anchors on the corners of a 100 m square plus `agents` agents drawn
/// uniformly inside [10, 90]^2 with random orientation and clock offset.
struct MeshScenario {
  NetworkTopology topology;
  std::vector<ApertureState> truth;
  FactorGraph graph;
};

inline MeshScenario noiseless_mesh(std::uint64_t seed, int agents, std::size_t particles = 1000) {
  (void)particles;
  Rng rng(seed);
  std::uniform_real_distribution<double> P(10.0, 90.0), A(-kPi, kPi), T(-5e-8, 5e-8);
  MeshScenario m;
  m.truth = {node(1, 0, 0), node(2, 100, 0), node(3, 100, 100), node(4, 0, 100)};
  for (int a = 0; a < agents; ++a) m.truth.push_back(node(5 + a, P(rng), P(rng), A(rng), T(rng)));
  std::vector<int> ids;
  for (const auto& s : m.truth) ids.push_back(s.id);
  const std::set<int> anchors = {1, 2, 3, 4};
  m.topology = NetworkTopology::full_mesh(ids, anchors);
  ForwardModel model;
  model.noise = {1e-12, 1e-5, 1e-1};
  const auto z = simulate_measurements(m.topology, m.truth, model, seed, 0.0);
  m.graph = build_factor_graph(m.topology, priors_for(m.truth, anchors, 0.0, 100.0, 1e-7), z, model);
  return m;
}

}  // namespace fixtures
