#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/SVD>

#include "isac/syncnet.hpp"

namespace isac::sync {

void ApertureState::normalize() {
  orientation = wrap_angle(orientation);
  cpo = wrap_angle(cpo);
}

std::string_view to_string(Component c) {
  switch (c) {
    case Component::X: return "x";
    case Component::Y: return "y";
    case Component::Orientation: return "orientation";
    case Component::TimeOffset: return "time_offset";
    case Component::Phase: return "phase";
  }
  return "?";
}

bool is_circular(Component c) { return c == Component::Orientation || c == Component::Phase; }

double component_value(const ApertureState& s, Component c) {
  switch (c) {
    case Component::X: return s.position.x();
    case Component::Y: return s.position.y();
    case Component::Orientation: return s.orientation;
    case Component::TimeOffset: return s.timeOffset * kSpeedOfLight;
    case Component::Phase: return s.cpo;
  }
  return 0.0;
}

void set_component(ApertureState& s, Component c, double v) {
  switch (c) {
    case Component::X: s.position.x() = v; break;
    case Component::Y: s.position.y() = v; break;
    case Component::Orientation: s.orientation = wrap_angle(v); break;
    case Component::TimeOffset: s.timeOffset = v / kSpeedOfLight; break;
    case Component::Phase: s.cpo = wrap_angle(v); break;
  }
}

std::vector<Component> StateMask::components() const {
  std::vector<Component> out;
  for (std::size_t i = 0; i < kNumComponents; ++i)
    if (inferred[i]) out.push_back(static_cast<Component>(i));
  return out;
}

// --- topology ----------------------------------------------------------------

NetworkTopology NetworkTopology::full_mesh(std::vector<int> ids, std::set<int> anchors) {
  NetworkTopology t;
  std::sort(ids.begin(), ids.end());
  t.ids = std::move(ids);
  t.anchors = std::move(anchors);
  t.mask = t.all_pairs();
  return t;
}

NetworkTopology NetworkTopology::star(std::vector<int> ids, std::set<int> anchors) {
  NetworkTopology t;
  std::sort(ids.begin(), ids.end());
  t.ids = std::move(ids);
  t.anchors = std::move(anchors);
  for (int a : t.ids)
    for (int b : t.ids)
      if (a != b && (t.is_anchor(a) != t.is_anchor(b))) t.mask.emplace_back(a, b);
  return t;
}

std::vector<int> NetworkTopology::agents() const {
  std::vector<int> out;
  for (int id : ids)
    if (!is_anchor(id)) out.push_back(id);
  return out;
}

std::vector<std::pair<int, int>> NetworkTopology::all_pairs() const {
  std::vector<std::pair<int, int>> out;
  for (int a : ids)
    for (int b : ids)
      if (a != b) out.emplace_back(a, b);
  return out;
}

void NetworkTopology::validate() const {
  std::set<int> seen;
  for (int id : ids)
    if (!seen.insert(id).second) throw TopologyError("duplicate aperture id " + std::to_string(id));
  for (int a : anchors)
    if (!seen.count(a)) throw TopologyError("anchor " + std::to_string(a) + " is not an aperture");
  std::set<std::pair<int, int>> pairs;
  for (const auto& [a, b] : mask) {
    if (a == b || !seen.count(a) || !seen.count(b))
      throw TopologyError("invalid measured pair (" + std::to_string(a) + ", " + std::to_string(b) + ")");
    if (!pairs.insert({a, b}).second)
      throw TopologyError("pair (" + std::to_string(a) + ", " + std::to_string(b) + ") listed twice");
  }
}

// --- measurements ----------------------------------------------------------

PairMeasurement predict_measurement(const ApertureState& tx, const ApertureState& rx, const ForwardModel& model) {
  PairMeasurement z;
  z.tx = tx.id;
  z.rx = rx.id;
  z.noiseStd = model.noise;
  const Eigen::Vector2d d = tx.position - rx.position;
  const double geom = d.norm() / kSpeedOfLight;
  z.delay = geom + (rx.timeOffset - tx.timeOffset);
  z.angle = wrap_angle(std::atan2(d.y(), d.x()) - rx.orientation);
  z.phase = wrap_angle(kTwoPi * std::fmod(model.carrierFrequency * geom, 1.0) + rx.cpo - tx.cpo);
  return z;
}

namespace {

std::map<int, const ApertureState*> index_states(const std::vector<ApertureState>& states) {
  std::map<int, const ApertureState*> m;
  for (const auto& s : states) m[s.id] = &s;
  return m;
}

}  // namespace

std::vector<PairMeasurement> simulate_measurements(const NetworkTopology& topology,
                                                   const std::vector<ApertureState>& truth,
                                                   const ForwardModel& model, std::uint64_t seed,
                                                   double noiseScale) {
  topology.validate();
  const auto byId = index_states(truth);
  for (int id : topology.ids)
    if (!byId.count(id)) throw TopologyError("no true state for aperture " + std::to_string(id));
  std::vector<PairMeasurement> out;
  out.reserve(topology.mask.size());
  for (std::size_t k = 0; k < topology.mask.size(); ++k) {
    const auto [a, b] = topology.mask[k];
    PairMeasurement z = predict_measurement(*byId.at(a), *byId.at(b), model);
    if (noiseScale > 0.0) {
      Rng rng(derive_seed(seed, k, "measurement"));
      std::normal_distribution<double> n(0.0, 1.0);
      z.delay += noiseScale * model.noise.delayStd * n(rng);
      z.angle = wrap_angle(z.angle + noiseScale * model.noise.angleStd * n(rng));
      z.phase = wrap_angle(z.phase + noiseScale * model.noise.phaseStd * n(rng));
    }
    out.push_back(z);
  }
  return out;
}

// --- priors ----------------------------------------------------------------

double ComponentPrior::log_density(double v, bool circular) const {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  switch (kind) {
    case PriorKind::Uniform:
      if (circular && b - a >= kTwoPi - 1e-12) return -std::log(kTwoPi);
      return (v >= a && v <= b) ? -std::log(b - a) : kNegInf;
    case PriorKind::Gaussian: {
      const double d = circular ? wrap_angle(v - a) : v - a;
      return -0.5 * (d / b) * (d / b) - std::log(b * std::sqrt(kTwoPi));
    }
    case PriorKind::PointMass:
      return (circular ? wrap_angle(v - a) : v - a) == 0.0 ? 0.0 : kNegInf;
  }
  return kNegInf;
}

double ComponentPrior::sample(Rng& rng) const {
  switch (kind) {
    case PriorKind::Uniform: return std::uniform_real_distribution<double>(a, b)(rng);
    case PriorKind::Gaussian: return std::normal_distribution<double>(a, b)(rng);
    case PriorKind::PointMass: return a;
  }
  return a;
}

double ComponentPrior::spread() const {
  switch (kind) {
    case PriorKind::Uniform: return (b - a) / std::sqrt(12.0);
    case PriorKind::Gaussian: return b;
    case PriorKind::PointMass: return 0.0;
  }
  return 0.0;
}

// --- graph -------------------------------------------------------------------

std::size_t FactorGraph::prior_factor_count() const {
  return static_cast<std::size_t>(std::count_if(factors.begin(), factors.end(),
                                                [](const FactorNode& f) { return f.kind == FactorNode::Kind::Prior; }));
}

std::size_t FactorGraph::pair_factor_count() const { return factors.size() - prior_factor_count(); }

bool FactorGraph::is_tree() const {
  // Union-find over agent variables; an agent-agent factor joining two
  // already-connected agents closes a loop.
  std::map<int, int> parent;
  for (int v : variables)
    if (!priors.at(v).anchor) parent[v] = v;
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (const auto& f : factors) {
    if (f.kind != FactorNode::Kind::Pair) continue;
    if (priors.at(f.a).anchor || priors.at(f.b).anchor) continue;
    const int ra = find(f.a), rb = find(f.b);
    if (ra == rb) return false;
    parent[ra] = rb;
  }
  return true;
}

FactorGraph build_factor_graph(const NetworkTopology& topology, const std::vector<AperturePrior>& priors,
                               const std::vector<PairMeasurement>& measurements, const ForwardModel& model,
                               const StateMask& mask) {
  topology.validate();
  FactorGraph g;
  g.model = model;
  g.mask = mask;
  g.variables = topology.ids;
  for (const auto& p : priors) {
    if (!std::binary_search(topology.ids.begin(), topology.ids.end(), p.id))
      throw TopologyError("prior for unknown aperture " + std::to_string(p.id));
    if (p.anchor != topology.is_anchor(p.id))
      throw TopologyError("prior of aperture " + std::to_string(p.id) + " disagrees on its anchor role");
    if (!g.priors.emplace(p.id, p).second) throw TopologyError("two priors for aperture " + std::to_string(p.id));
  }
  for (int id : topology.ids) {
    if (!g.priors.count(id)) throw TopologyError("missing prior for aperture " + std::to_string(id));
    g.incidence[id].push_back(g.factors.size());
    g.factors.push_back({FactorNode::Kind::Prior, id, -1, 0});
  }
  const std::set<std::pair<int, int>> masked(topology.mask.begin(), topology.mask.end());
  std::set<std::pair<int, int>> measured;
  for (const auto& z : measurements) {
    if (!masked.count({z.tx, z.rx}))
      throw TopologyError("measurement (" + std::to_string(z.tx) + ", " + std::to_string(z.rx) +
                          ") does not belong to a measured pair");
    if (!measured.insert({z.tx, z.rx}).second)
      throw TopologyError("two measurements for pair (" + std::to_string(z.tx) + ", " + std::to_string(z.rx) + ")");
    const std::size_t m = g.measurements.size();
    g.measurements.push_back(z);
    g.incidence[z.tx].push_back(g.factors.size());
    g.incidence[z.rx].push_back(g.factors.size());
    g.factors.push_back({FactorNode::Kind::Pair, z.tx, z.rx, m});
  }
  for (const auto& p : topology.mask)
    if (!measured.count(p))
      throw TopologyError("masked pair (" + std::to_string(p.first) + ", " + std::to_string(p.second) +
                          ") has no measurement");
  return g;
}

double pair_log_likelihood(const PairMeasurement& z, const ApertureState& tx, const ApertureState& rx,
                           const ForwardModel& model, double sigmaScale) {
  const Eigen::Vector2d d = tx.position - rx.position;
  const double range = d.norm();
  const double lnSqrt2Pi = 0.5 * std::log(kTwoPi);
  double ll = 0.0;
  if (model.observables.delay) {
    const double s = z.noiseStd.delayStd * kSpeedOfLight * sigmaScale;
    const double pred = range + kSpeedOfLight * (rx.timeOffset - tx.timeOffset);
    const double r = (kSpeedOfLight * z.delay - pred) / s;
    ll += -0.5 * r * r - std::log(s) - lnSqrt2Pi;
  }
  if (model.observables.angle) {
    const double s = z.noiseStd.angleStd * sigmaScale;
    const double r = wrap_angle(z.angle - (std::atan2(d.y(), d.x()) - rx.orientation)) / s;
    ll += -0.5 * r * r - std::log(s) - lnSqrt2Pi;
  }
  if (model.observables.phase) {
    const double s = z.noiseStd.phaseStd * sigmaScale;
    const double geomCycles = std::fmod(model.carrierFrequency * range / kSpeedOfLight, 1.0);
    const double r = wrap_angle(z.phase - (kTwoPi * geomCycles + rx.cpo - tx.cpo)) / s;
    ll += -0.5 * r * r - std::log(s) - lnSqrt2Pi;
  }
  return ll;
}

double log_joint(const FactorGraph& graph, const std::map<int, ApertureState>& states) {
  double ll = 0.0;
  for (const auto& f : graph.factors) {
    if (f.kind == FactorNode::Kind::Prior) {
      const auto& p = graph.priors.at(f.a);
      if (p.anchor) continue;
      const ApertureState& s = states.at(f.a);
      for (Component c : graph.mask.components())
        ll += p.components[static_cast<std::size_t>(c)].log_density(component_value(s, c), is_circular(c));
    } else {
      ll += pair_log_likelihood(graph.measurements[f.measurement], states.at(f.a), states.at(f.b), graph.model);
    }
  }
  return ll;
}

// --- reports -----------------------------------------------------------------

SyncReport sync_error_report(const std::map<int, ApertureState>& estimates,
                             const std::map<int, ApertureState>& truth) {
  if (estimates.size() != truth.size() ||
      !std::equal(estimates.begin(), estimates.end(), truth.begin(),
                  [](const auto& a, const auto& b) { return a.first == b.first; }))
    throw IdMismatch("estimate ids differ from truth ids");
  SyncReport r;
  double sq = 0.0;
  for (const auto& [id, e] : estimates) {
    const ApertureState& t = truth.at(id);
    AgentError a;
    a.id = id;
    a.position = (e.position - t.position).norm();
    a.orientation = wrap_angle(e.orientation - t.orientation);
    a.timeOffset = e.timeOffset - t.timeOffset;
    a.cfo = e.cfo - t.cfo;
    a.cpo = wrap_angle(e.cpo - t.cpo);
    sq += a.position * a.position;
    r.agents.push_back(a);
  }
  if (!r.agents.empty()) r.rmsPosition = std::sqrt(sq / static_cast<double>(r.agents.size()));
  for (const auto& a : r.agents)
    for (const auto& b : r.agents)
      r.maxRelativeTimeOffsetError = std::max(r.maxRelativeTimeOffsetError, std::abs(a.timeOffset - b.timeOffset));
  return r;
}

RankDiagnostics jacobian_rank(const FactorGraph& graph, const std::map<int, ApertureState>& states) {
  std::vector<std::pair<int, Component>> cols;
  for (int id : graph.variables)
    if (!graph.priors.at(id).anchor)
      for (Component c : graph.mask.components()) cols.emplace_back(id, c);
  const auto& obs = graph.model.observables;
  const std::size_t perMeas = std::size_t(obs.delay) + std::size_t(obs.angle) + std::size_t(obs.phase);

  auto predict = [&](const std::map<int, ApertureState>& s) {
    Eigen::VectorXd y(graph.measurements.size() * perMeas);
    Eigen::Index k = 0;
    for (const auto& z : graph.measurements) {
      const auto p = predict_measurement(s.at(z.tx), s.at(z.rx), graph.model);
      if (obs.delay) y[k++] = p.delay * kSpeedOfLight;
      if (obs.angle) y[k++] = p.angle;
      if (obs.phase) y[k++] = p.phase;
    }
    return y;
  };

  RankDiagnostics d;
  d.rows = graph.measurements.size() * perMeas;
  d.cols = cols.size();
  if (d.rows == 0 || d.cols == 0) return d;
  Eigen::MatrixXd J(d.rows, d.cols);
  const double h = 1e-6;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    auto plus = states, minus = states;
    const auto [id, comp] = cols[c];
    const double v = component_value(states.at(id), comp);
    set_component(plus.at(id), comp, v + h);
    set_component(minus.at(id), comp, v - h);
    Eigen::VectorXd diff = predict(plus) - predict(minus);
    // Angle rows may straddle the wrap cut; the true differences are tiny.
    for (Eigen::Index i = 0; i < diff.size(); ++i) diff[i] = std::remainder(diff[i], kTwoPi);
    J.col(static_cast<Eigen::Index>(c)) = diff / (2.0 * h);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  const auto& sv = svd.singularValues();
  d.singularValues.assign(sv.data(), sv.data() + sv.size());
  const double tol = (sv.size() ? sv[0] : 0.0) * 1e-7;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > tol) ++d.rank;
  return d;
}

}  // namespace isac::sync
