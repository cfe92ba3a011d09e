#include <chrono>
#include <numeric>
#include <cmath>

#include "doctest.h"
#include "isac/textdoc.hpp"
#include "sync_fixtures.hpp"

using namespace isac;
using namespace isac::sync;
using namespace fixtures;

namespace {

ForwardModel delay_only(double rangeStd) {
  ForwardModel m;
  m.observables = {true, false, false};
  m.noise.delayStd = rangeStd / kSpeedOfLight;
  return m;
}

StateMask position_only() {
  StateMask s;
  s.inferred = {true, true, false, false, false};
  return s;
}

}  // namespace

TEST_SUITE("topology and graph") {
  TEST_CASE("factor counts are J(J-1) + J") {
    for (int J : {1, 2, 3, 5}) {
      std::vector<ApertureState> truth;
      std::vector<int> ids;
      for (int j = 1; j <= J; ++j) {
        truth.push_back(node(j, 10.0 * j, 3.0 * j * j));
        ids.push_back(j);
      }
      const auto topo = NetworkTopology::full_mesh(ids, {1});
      CHECK(topo.all_pairs().size() == std::size_t(J * (J - 1)));
      ForwardModel m;
      const auto g = build_factor_graph(topo, priors_for(truth, {1}, 0, 100, 1e-7),
                                        simulate_measurements(topo, truth, m, 1), m);
      CHECK(g.pair_factor_count() == std::size_t(J * (J - 1)));
      CHECK(g.prior_factor_count() == std::size_t(J));
      CHECK(g.factors.size() == std::size_t(J * (J - 1) + J));
      for (const auto& f : g.factors) {
        if (f.kind == FactorNode::Kind::Pair) CHECK(f.a != f.b);
        else CHECK(f.b == -1);
      }
    }
  }

  TEST_CASE("star around one agent is a tree, a mesh of agents is not") {
    const std::vector<ApertureState> truth = {node(1, 0, 0), node(2, 50, 0), node(3, 0, 50), node(4, 20, 20)};
    const std::set<int> anchors = {1, 2, 3};
    ForwardModel m;
    auto topo = NetworkTopology::star({1, 2, 3, 4}, anchors);
    auto g = build_factor_graph(topo, priors_for(truth, anchors, 0, 50, 1e-7), simulate_measurements(topo, truth, m, 2), m);
    CHECK(g.is_tree());
    const std::vector<ApertureState> t2 = {node(1, 0, 0), node(2, 50, 0), node(3, 0, 50), node(4, 20, 20), node(5, 30, 10)};
    topo = NetworkTopology::full_mesh({1, 2, 3, 4, 5}, anchors);
    g = build_factor_graph(topo, priors_for(t2, anchors, 0, 50, 1e-7), simulate_measurements(topo, t2, m, 2), m);
    CHECK_FALSE(g.is_tree());
  }

  TEST_CASE("missing priors and dangling measurements") {
    const std::vector<ApertureState> truth = {node(1, 0, 0), node(2, 10, 0), node(3, 0, 10)};
    ForwardModel m;
    const auto topo = NetworkTopology::full_mesh({1, 2, 3}, {1});
    const auto z = simulate_measurements(topo, truth, m, 3);
    auto pri = priors_for(truth, {1}, 0, 10, 1e-7);
    CHECK_NOTHROW(build_factor_graph(topo, pri, z, m));
    auto fewer = pri;
    fewer.pop_back();
    CHECK_THROWS_AS(build_factor_graph(topo, fewer, z, m), TopologyError);
    auto extra = z;
    extra.push_back(z.front());
    CHECK_THROWS_AS(build_factor_graph(topo, pri, extra, m), TopologyError);
    auto stray = z;
    stray.back().rx = 9;
    CHECK_THROWS_AS(build_factor_graph(topo, pri, stray, m), TopologyError);
    auto missing = z;
    missing.pop_back();
    CHECK_THROWS_AS(build_factor_graph(topo, pri, missing, m), TopologyError);
    NetworkTopology bad = topo;
    bad.mask.push_back({2, 2});
    CHECK_THROWS_AS(bad.validate(), TopologyError);
  }

  TEST_CASE("factor product equals the joint posterior") {
    Rng rng(4);
    std::uniform_real_distribution<double> P(0.0, 60.0), A(-kPi, kPi), T(-1e-8, 1e-8);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<ApertureState> truth;
      std::vector<int> ids;
      for (int j = 1; j <= 4; ++j) {
        truth.push_back(node(j, P(rng), P(rng), A(rng), T(rng)));
        truth.back().cpo = A(rng);
        ids.push_back(j);
      }
      ForwardModel m;
      m.observables = {true, true, true};
      m.noise = {1e-9, 0.05, 0.3};
      const auto topo = NetworkTopology::full_mesh(ids, {1});
      StateMask mask;
      mask.inferred = {true, true, true, true, true};
      const auto z = simulate_measurements(topo, truth, m, trial);
      const auto g = build_factor_graph(topo, priors_for(truth, {1}, 0, 60, 1e-7), z, m, mask);
      // Direct evaluation: uniform priors plus Gaussian observables.
      double direct = 0.0;
      for (int j = 2; j <= 4; ++j)
        direct += -2.0 * std::log(60.0) - 2.0 * std::log(kTwoPi) - std::log(2e-7 * kSpeedOfLight);
      for (const auto& meas : z) {
        const auto& a = truth[meas.tx - 1];
        const auto& b = truth[meas.rx - 1];
        const double dx = a.position.x() - b.position.x(), dy = a.position.y() - b.position.y();
        const double r = std::hypot(dx, dy);
        const double ed = (meas.delay - (r / kSpeedOfLight + b.timeOffset - a.timeOffset)) / 1e-9;
        const double ea = wrap_angle(meas.angle - std::atan2(dy, dx) + b.orientation) / 0.05;
        const double cyc = m.carrierFrequency * r / kSpeedOfLight;
        const double ep = wrap_angle(meas.phase - kTwoPi * (cyc - std::floor(cyc)) - b.cpo + a.cpo) / 0.3;
        direct += -0.5 * (ed * ed + ea * ea + ep * ep) - std::log(1e-9 * kSpeedOfLight) - std::log(0.05) -
                  std::log(0.3) - 1.5 * std::log(kTwoPi);
      }
      const double lj = log_joint(g, by_id(truth));
      CHECK(std::abs(lj - direct) <= 1e-9 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST_SUITE("measurements") {
  TEST_CASE("noiseless delay is the geometric delay") {
    const auto a = node(1, 0, 0), b = node(2, 30, 40);
    const auto z = predict_measurement(a, b, ForwardModel{});
    CHECK(z.delay == doctest::Approx(50.0 / kSpeedOfLight).epsilon(1e-15));
    CHECK(z.angle == doctest::Approx(std::atan2(-40.0, -30.0)));
  }

  TEST_CASE("swapping the pair negates the clock term") {
    const auto a = node(1, 0, 0, 0.0, 3e-9), b = node(2, 30, 40, 0.0, -1e-9);
    const auto ab = predict_measurement(a, b, ForwardModel{});
    const auto ba = predict_measurement(b, a, ForwardModel{});
    const double geom = 50.0 / kSpeedOfLight;
    CHECK(ab.delay - geom == doctest::Approx(-4e-9).epsilon(1e-6));
    CHECK(ba.delay - geom == doctest::Approx(4e-9).epsilon(1e-6));
    CHECK(ab.delay + ba.delay == doctest::Approx(2.0 * geom).epsilon(1e-12));
  }

  TEST_CASE("noise statistics follow the configuration") {
    const std::vector<ApertureState> truth = {node(1, 0, 0), node(2, 30, 40)};
    NetworkTopology topo;
    topo.ids = {1, 2};
    topo.mask = {{1, 2}};
    ForwardModel m;
    m.noise = {2e-9, 0.02, 0.1};
    const double clean = 50.0 / kSpeedOfLight;
    const int n = 10000;
    double sd = 0.0, sa = 0.0;
    for (int k = 0; k < n; ++k) {
      const auto z = simulate_measurements(topo, truth, m, k).front();
      sd += (z.delay - clean) * (z.delay - clean);
      const double ea = wrap_angle(z.angle - std::atan2(-40.0, -30.0));
      sa += ea * ea;
    }
    CHECK(std::sqrt(sd / n) == doctest::Approx(2e-9).epsilon(0.05));
    CHECK(std::sqrt(sa / n) == doctest::Approx(0.02).epsilon(0.05));
    CHECK(simulate_measurements(topo, truth, m, 7).front().delay ==
          simulate_measurements(topo, truth, m, 7).front().delay);
  }
}

TEST_SUITE("belief propagation") {
  TEST_CASE("tree posterior matches dense grid marginalization") {
    const std::vector<ApertureState> truth = {node(1, -40, -40), node(2, 40, -30), node(3, 0, 45), node(4, 10, -5)};
    const std::set<int> anchors = {1, 2, 3};
    const auto topo = NetworkTopology::star({1, 2, 3, 4}, anchors);
    const ForwardModel model = delay_only(1.5);
    const auto z = simulate_measurements(topo, truth, model, 11);
    const auto g = build_factor_graph(topo, priors_for(truth, anchors, -50, 50, 1e-7), z, model, position_only());
    REQUIRE(g.is_tree());
    BPConfig cfg;
    cfg.particleCount = 5000;
    cfg.maxIterations = 15;
    cfg.seed = 5;
    const auto res = run_loopy_bp(g, cfg);
    const Belief& b = res.beliefs.at(4);
    CHECK(std::abs(std::accumulate(b.weights.begin(), b.weights.end(), 0.0) - 1.0) < 1e-12);

    // Dense grid (5 cm) over a 24 m box around the truth, binned to 2 m cells.
    const double lo = -2.0, step = 0.05, bin = 2.0;
    const int cells = 12, fine = int(24.0 / step);
    std::vector<double> grid(cells * cells, 0.0);
    std::vector<double> lg(fine * fine);
    double mx = -1e300;
    for (int i = 0; i < fine; ++i)
      for (int j = 0; j < fine; ++j) {
        ApertureState s = truth[3];
        s.position = {lo + (i + 0.5) * step, -17.0 + (j + 0.5) * step};
        double l = 0.0;
        for (const auto& meas : z) {
          const auto& a = meas.tx == 4 ? s : truth[meas.tx - 1];
          const auto& r = meas.rx == 4 ? s : truth[meas.rx - 1];
          l += pair_log_likelihood(meas, a, r, model);
        }
        lg[i * fine + j] = l;
        mx = std::max(mx, l);
      }
    double tot = 0.0;
    for (int i = 0; i < fine; ++i)
      for (int j = 0; j < fine; ++j) {
        const double p = std::exp(lg[i * fine + j] - mx);
        grid[(int(i * step / bin)) * cells + int(j * step / bin)] += p;
        tot += p;
      }
    for (double& p : grid) p /= tot;
    std::vector<double> hist(cells * cells, 0.0);
    double outside = 0.0;
    for (Eigen::Index k = 0; k < b.particles.rows(); ++k) {
      const double x = b.particles(k, 0) - lo, y = b.particles(k, 1) + 17.0;
      if (x < 0 || y < 0 || x >= 24.0 || y >= 24.0) {
        outside += b.weights[k];
        continue;
      }
      hist[int(x / bin) * cells + int(y / bin)] += b.weights[k];
    }
    double tv = outside;
    for (int c = 0; c < cells * cells; ++c) tv += std::abs(hist[c] - grid[c]);
    tv *= 0.5;
    MESSAGE("tree TV distance: ", tv, " (ESS ", b.ess, ")");
    CHECK(tv < 0.05);
  }

  TEST_CASE("point-mass agent prior stays at the truth") {
    const std::vector<ApertureState> truth = {node(1, 0, 0), node(2, 40, 0), node(3, 0, 40), node(4, 12, 17)};
    const std::set<int> anchors = {1, 2, 3};
    const auto topo = NetworkTopology::star({1, 2, 3, 4}, anchors);
    const ForwardModel model = delay_only(1.0);
    auto pri = priors_for(truth, anchors, 0, 40, 1e-7);
    pri[3].components[0] = ComponentPrior::point(12.0);
    pri[3].components[1] = ComponentPrior::point(17.0);
    const auto g = build_factor_graph(topo, pri, simulate_measurements(topo, truth, model, 3), model, position_only());
    BPConfig cfg;
    cfg.particleCount = 200;
    for (std::size_t it : {1u, 2u, 5u}) {
      cfg.maxIterations = it;
      const auto res = run_loopy_bp(g, cfg);
      const Belief& b = res.beliefs.at(4);
      CHECK((b.particles.col(0).array() == 12.0).all());
      CHECK((b.particles.col(1).array() == 17.0).all());
    }
  }

  TEST_CASE("noiseless loopy mesh converges to the truth") {
    int good = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto m = noiseless_mesh(seed, 2);
      BPConfig cfg;
      cfg.particleCount = 1000;
      cfg.messageParticles = 64;
      cfg.seed = seed;
      const auto res = run_loopy_bp(m.graph, cfg);
      std::map<int, ApertureState> est, tru;
      for (const auto& s : m.truth)
        if (!m.topology.is_anchor(s.id)) {
          est[s.id] = estimate_mmse(res.beliefs.at(s.id));
          tru[s.id] = s;
        }
      const auto rep = sync_error_report(est, tru);
      double worst = 0.0;
      for (const auto& a : rep.agents) worst = std::max(worst, a.position);
      MESSAGE("seed ", seed, " iterations ", res.iterations, " worst position error ", worst);
      if (worst < 1e-3) ++good;
      // Anchors never move.
      for (int a : {1, 2, 3, 4}) {
        const auto s = estimate_mmse(res.beliefs.at(a));
        CHECK(s.position == m.truth[a - 1].position);
      }
    }
    CHECK(good == 5);
  }

  TEST_CASE("results do not depend on the worker count") {
    const auto m = noiseless_mesh(3, 3);
    BPConfig cfg;
    cfg.particleCount = 200;
    cfg.maxIterations = 6;
    cfg.messageParticles = 32;
    const auto a = run_loopy_bp(m.graph, cfg);
    cfg.workers = 3;
    const auto b = run_loopy_bp(m.graph, cfg);
    for (const auto& [id, bel] : a.beliefs) {
      CHECK(bel.particles == b.beliefs.at(id).particles);
      CHECK(bel.weights == b.beliefs.at(id).weights);
    }
  }

  TEST_CASE("contradictory measurements raise DegeneracyError") {
    const std::vector<ApertureState> truth = {node(1, 0, 0), node(2, 40, 0), node(3, 4, 30)};
    const std::set<int> anchors = {1, 2};
    const auto topo = NetworkTopology::star({1, 2, 3}, anchors);
    ForwardModel model = delay_only(1e-3);
    auto z = simulate_measurements(topo, truth, model, 1, 0.0);
    for (auto& meas : z) meas.delay += 1e-3;  // 300 km, far outside the prior box
    const auto g = build_factor_graph(topo, priors_for(truth, anchors, 0, 40, 1e-7), z, model, position_only());
    BPConfig cfg;
    cfg.particleCount = 100;
    cfg.annealStart = 1.0;
    cfg.maxIterations = 2;
    CHECK_THROWS_AS(run_loopy_bp(g, cfg), DegeneracyError);
  }

  TEST_CASE("configuration bounds") {
    BPConfig cfg;
    cfg.particleCount = 50;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.maxIterations = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  }
}

TEST_SUITE("point estimates") {
  Belief cloud(std::size_t n, std::uint64_t seed, double mx, double my, double s) {
    Rng rng(seed);
    std::normal_distribution<double> X(mx, s), Y(my, s);
    Belief b;
    b.components = {Component::X, Component::Y};
    b.particles.resize(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index i = 0; i < b.particles.rows(); ++i) b.particles.row(i) << X(rng), Y(rng);
    b.weights.assign(n, 1.0 / double(n));
    return b;
  }

  TEST_CASE("Gaussian cloud mean") {
    const std::size_t n = 4000;
    const auto b = cloud(n, 1, 3.0, -2.0, 0.5);
    const auto m = estimate_mmse(b);
    CHECK(std::abs(m.position.x() - 3.0) < 3.0 * 0.5 / std::sqrt(double(n)));
    CHECK(std::abs(m.position.y() + 2.0) < 3.0 * 0.5 / std::sqrt(double(n)));
  }

  TEST_CASE("MAP and MMSE agree on a symmetric cloud") {
    const auto b = cloud(3000, 2, 1.0, 1.0, 0.3);
    const auto h = kde_bandwidth(b);
    const double silverman = 0.3 * std::pow(4.0 / (4.0 * 3000.0), 1.0 / 6.0);
    CHECK(h[0] == doctest::Approx(silverman).epsilon(0.05));
    const auto map = estimate_map(b), mmse = estimate_mmse(b);
    CHECK(std::abs(map.position.x() - mmse.position.x()) < h[0]);
    CHECK(std::abs(map.position.y() - mmse.position.y()) < h[1]);
  }

  TEST_CASE("circular mean across the wrap") {
    Belief b;
    b.components = {Component::Orientation};
    const RVec angles = {kPi - 0.05, -kPi + 0.05, kPi - 0.02, -kPi + 0.02, kPi - 0.1, -kPi + 0.1};
    b.particles.resize(6, 1);
    for (int i = 0; i < 6; ++i) b.particles(i, 0) = angles[i];
    b.weights.assign(6, 1.0 / 6.0);
    double s = 0.0, c = 0.0;
    for (double a : angles) s += std::sin(a), c += std::cos(a);
    const double oracle = std::atan2(s, c);
    const double got = estimate_mmse(b).orientation;
    CHECK(std::abs(wrap_angle(got - oracle)) < 1e-12);
    CHECK(std::abs(std::abs(got) - kPi) < 1e-9);
  }

  TEST_CASE("empty beliefs") {
    Belief b;
    b.components = {Component::X};
    CHECK_THROWS_AS(estimate_mmse(b), EmptyBelief);
    CHECK_THROWS_AS(estimate_map(b), EmptyBelief);
    b.particles = Eigen::MatrixXd::Zero(2, 1);
    b.weights = {0.0, 0.0};
    CHECK_THROWS_AS(estimate_mmse(b), EmptyBelief);
  }
}

TEST_SUITE("reports and diagnostics") {
  TEST_CASE("error report") {
    const std::map<int, ApertureState> truth = {{5, node(5, 1, 2, 0.3, 1e-9)}, {6, node(6, -4, 0, -2.0, 0.0)}};
    CHECK(sync_error_report(truth, truth).rmsPosition == 0.0);
    auto est = truth;
    est[5].orientation += kTwoPi;
    const auto r0 = sync_error_report(est, truth);
    CHECK(std::abs(r0.agents[0].orientation) < 1e-12);
    est = truth;
    est[5].position += Eigen::Vector2d(3, 4);
    est[5].timeOffset += 2e-9;
    est[6].cpo = truth.at(6).cpo + 0.25;
    est[6].cfo = 10.0;
    const auto r = sync_error_report(est, truth);
    CHECK(r.agents[0].position == doctest::Approx(5.0));
    CHECK(r.agents[0].timeOffset == doctest::Approx(2e-9));
    CHECK(r.agents[1].cpo == doctest::Approx(0.25));
    CHECK(r.agents[1].cfo == 10.0);
    CHECK(r.rmsPosition == doctest::Approx(std::sqrt(12.5)));
    CHECK(r.maxRelativeTimeOffsetError == doctest::Approx(2e-9));
    auto wrong = truth;
    wrong.erase(6);
    wrong[7] = node(7, 0, 0);
    CHECK_THROWS_AS(sync_error_report(wrong, truth), IdMismatch);
  }

  TEST_CASE("Jacobian rank reflects anchoring") {
    const auto m = noiseless_mesh(1, 2);
    const auto d = jacobian_rank(m.graph, by_id(m.truth));
    CHECK(d.cols == 8);
    CHECK(d.full_rank());
    // Without anchors a common clock shift, translation and rotation are unobservable.
    std::vector<int> ids = {1, 2, 3, 4, 5};
    std::vector<ApertureState> truth(m.truth.begin(), m.truth.begin() + 5);
    const auto topo = NetworkTopology::full_mesh(ids, {});
    ForwardModel model;
    model.observables = {true, false, false};
    StateMask mask;
    mask.inferred = {true, true, false, true, false};
    const auto g = build_factor_graph(topo, priors_for(truth, {}, 0, 100, 1e-7),
                                      simulate_measurements(topo, truth, model, 1, 0.0), model, mask);
    const auto r = jacobian_rank(g, by_id(truth));
    CHECK(r.cols == 15);
    CHECK(r.rank == 15 - 4);  // 1 clock shift + 2 translations + 1 rotation
  }

  TEST_CASE("anchor-free clocks: only differences are checked") {
    std::map<int, ApertureState> truth = {{1, node(1, 0, 0, 0, 1e-9)}, {2, node(2, 5, 0, 0, -2e-9)}};
    auto est = truth;
    for (auto& [id, s] : est) s.timeOffset += 7e-9;
    const auto r = sync_error_report(est, truth);
    CHECK(r.maxRelativeTimeOffsetError < 1e-20);
    CHECK(std::abs(r.agents[0].timeOffset - 7e-9) < 1e-20);
  }
}

TEST_SUITE("network files") {
  const char* kFile = R"(schema_version = 1
[network]
label = square
observables = delay angle
infer = x y orientation time_offset
delay_std = 1e-12
angle_std = 1e-5
area = 0 100 0 100
noise_scale = 0
[apertures]
node = 1 anchor 0 0
node = 2 anchor 100 0
node = 3 anchor 100 100
node = 4 anchor 0 100
node = 5 agent 30 60 0.5 2e-8
[bp]
particles = 300
iterations = 20
seed = 9
)";

  TEST_CASE("parses apertures, model and BP settings") {
    const auto s = parse_network(kFile, "net");
    CHECK(s.label == "square");
    CHECK(s.truth.size() == 5);
    CHECK(s.topology.anchors.size() == 4);
    CHECK(s.topology.mask.size() == 20);
    CHECK(s.model.observables.angle);
    CHECK_FALSE(s.model.observables.phase);
    CHECK(s.mask.has(Component::TimeOffset));
    CHECK_FALSE(s.mask.has(Component::Phase));
    CHECK(s.noiseScale == 0.0);
    CHECK(s.bp.particleCount == 300);
    CHECK(s.bp.seed == 9);
    CHECK(s.truth[4].timeOffset == 2e-8);
    CHECK(s.priors[4].components[0].b == 100.0);
    const auto z = simulate_measurements(s.topology, s.truth, s.model, 0, s.noiseScale);
    CHECK_NOTHROW(build_factor_graph(s.topology, s.priors, z, s.model, s.mask));
  }

  TEST_CASE("reports every problem at once") {
    const char* bad = R"(schema_version = 1
[network]
observables = delay sonar
delay_std = -1
[apertures]
node = 1 anchor 0 0
node = 1 agent 3 4
[bp]
particles = 10
colour = blue
)";
    try {
      parse_network(bad, "bad");
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(e.issues().size() == 5);
    }
  }
}
