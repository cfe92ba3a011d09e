#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <thread>

#include <Eigen/Cholesky>

#include "isac/syncnet.hpp"

namespace isac::sync {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsumexp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// Normalizes log weights in place; returns false when all are -inf or NaN.
bool normalize_log(RVec& lw) {
  for (double& x : lw)
    if (std::isnan(x)) x = kNegInf;
  const double z = logsumexp(lw);
  if (!std::isfinite(z)) return false;
  for (double& x : lw) x -= z;
  return true;
}

RVec exp_weights(const RVec& lw) {
  RVec w(lw.size());
  double s = 0.0;
  for (std::size_t i = 0; i < lw.size(); ++i) s += (w[i] = std::exp(lw[i]));
  for (double& x : w) x /= s;
  return w;
}

double effective_size(const RVec& w) {
  double s2 = 0.0;
  for (double x : w) s2 += x * x;
  return s2 > 0.0 ? 1.0 / s2 : 0.0;
}

std::vector<std::size_t> systematic_resample(const RVec& w, std::size_t m, Rng& rng) {
  std::vector<std::size_t> idx(m);
  const double u0 = std::uniform_real_distribution<double>(0.0, 1.0)(rng) / static_cast<double>(m);
  double c = w.empty() ? 0.0 : w[0];
  std::size_t i = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double u = u0 + static_cast<double>(k) / static_cast<double>(m);
    while (u > c && i + 1 < w.size()) c += w[++i];
    idx[k] = i;
  }
  return idx;
}

/// One agent's (or anchor's) particle belief plus the incoming messages
/// evaluated at its particles.
struct Node {
  Eigen::MatrixXd X;  // N x D
  RVec logw;
  std::map<std::size_t, RVec> logMsg;                   // factor -> message at particles
  std::map<std::size_t, std::vector<ApertureState>> used;  // factor -> neighbour particles last used
};

struct Context {
  const FactorGraph& g;
  const BPConfig& cfg;
  std::vector<Component> comps;
  std::map<int, std::vector<bool>> free;  // per agent: component sampled (not a point mass)
  std::map<int, RVec> floorStd;
};

ApertureState make_state(const AperturePrior& p, const std::vector<Component>& comps, const double* row) {
  ApertureState s = p.nominal;
  s.id = p.id;
  for (std::size_t d = 0; d < comps.size(); ++d) set_component(s, comps[d], row[d]);
  return s;
}

ApertureState make_state(const AperturePrior& p, const std::vector<Component>& comps, const Eigen::MatrixXd& X,
                         Eigen::Index i) {
  RVec row(comps.size());
  for (std::size_t d = 0; d < comps.size(); ++d) row[d] = X(i, static_cast<Eigen::Index>(d));
  return make_state(p, comps, row.data());
}

double log_prior(const Context& ctx, const AperturePrior& p, const double* row) {
  double lp = 0.0;
  for (std::size_t d = 0; d < ctx.comps.size(); ++d) {
    const Component c = ctx.comps[d];
    const auto& cp = p.components[static_cast<std::size_t>(c)];
    if (cp.kind == PriorKind::PointMass) continue;
    lp += cp.log_density(row[d], is_circular(c));
  }
  return lp;
}

struct GaussianFit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd L;  // Cholesky factor of the covariance
  double logNorm = 0.0;
  std::vector<std::size_t> dims;  // free dims
};

GaussianFit fit_gaussian(const Context& ctx, int id, const Node& node) {
  GaussianFit f;
  const auto& fr = ctx.free.at(id);
  for (std::size_t d = 0; d < ctx.comps.size(); ++d)
    if (fr[d]) f.dims.push_back(d);
  const auto k = static_cast<Eigen::Index>(f.dims.size());
  const RVec w = exp_weights(node.logw);
  f.mean = Eigen::VectorXd::Zero(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const auto col = static_cast<Eigen::Index>(f.dims[a]);
    if (is_circular(ctx.comps[f.dims[a]])) {
      double s = 0.0, c = 0.0;
      for (Eigen::Index i = 0; i < node.X.rows(); ++i) {
        s += w[i] * std::sin(node.X(i, col));
        c += w[i] * std::cos(node.X(i, col));
      }
      f.mean[a] = std::atan2(s, c);
    } else {
      for (Eigen::Index i = 0; i < node.X.rows(); ++i) f.mean[a] += w[i] * node.X(i, col);
    }
  }
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd dev(k);
  for (Eigen::Index i = 0; i < node.X.rows(); ++i) {
    if (w[i] == 0.0) continue;
    for (Eigen::Index a = 0; a < k; ++a) {
      const double v = node.X(i, static_cast<Eigen::Index>(f.dims[a])) - f.mean[a];
      dev[a] = is_circular(ctx.comps[f.dims[a]]) ? wrap_angle(v) : v;
    }
    cov.noalias() += w[i] * dev * dev.transpose();
  }
  const RVec& fl = ctx.floorStd.at(id);
  for (Eigen::Index a = 0; a < k; ++a) cov(a, a) += fl[f.dims[a]] * fl[f.dims[a]];
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov = cov.diagonal().asDiagonal();
    llt.compute(cov);
  }
  f.L = llt.matrixL();
  f.logNorm = -0.5 * static_cast<double>(k) * std::log(kTwoPi);
  for (Eigen::Index a = 0; a < k; ++a) f.logNorm -= std::log(f.L(a, a));
  return f;
}

double gaussian_log_density(const Context& ctx, const GaussianFit& f, const double* row) {
  const auto k = static_cast<Eigen::Index>(f.dims.size());
  Eigen::VectorXd dev(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const double v = row[f.dims[a]] - f.mean[a];
    dev[a] = is_circular(ctx.comps[f.dims[a]]) ? wrap_angle(v) : v;
  }
  const Eigen::VectorXd z = f.L.triangularView<Eigen::Lower>().solve(dev);
  return f.logNorm - 0.5 * z.squaredNorm();
}

double anneal_kappa(const FactorGraph& g, const BPConfig& cfg) {
  if (cfg.annealStart > 0.0) return cfg.annealStart;
  double posSpread = 0.0;
  for (const auto& [id, p] : g.priors) {
    if (p.anchor) continue;
    posSpread = std::max({posSpread, p.components[0].spread(), p.components[1].spread()});
  }
  double kappa = 1.0;
  const auto& o = g.model.observables;
  const auto& n = g.model.noise;
  if (o.delay) kappa = std::max(kappa, posSpread / (kSpeedOfLight * n.delayStd));
  if (o.angle) kappa = std::max(kappa, 1.0 / n.angleStd);
  if (o.phase) kappa = std::max(kappa, kPi / n.phaseStd);
  return kappa;
}

/// log message from factor f into `self`, evaluated at self's particle rows,
/// using the given neighbour particle states.
RVec message(const Context& ctx, std::size_t f, int self, const Eigen::MatrixXd& X,
             const std::vector<ApertureState>& neighbour, double sigma) {
  const FactorNode& fn = ctx.g.factors[f];
  const PairMeasurement& z = ctx.g.measurements[fn.measurement];
  const AperturePrior& p = ctx.g.priors.at(self);
  const bool selfIsTx = fn.a == self;
  RVec out(static_cast<std::size_t>(X.rows()));
  RVec terms(neighbour.size());
  const double logM = std::log(static_cast<double>(neighbour.size()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const ApertureState s = make_state(p, ctx.comps, X, i);
    for (std::size_t l = 0; l < neighbour.size(); ++l)
      terms[l] = selfIsTx ? pair_log_likelihood(z, s, neighbour[l], ctx.g.model, sigma)
                          : pair_log_likelihood(z, neighbour[l], s, ctx.g.model, sigma);
    out[static_cast<std::size_t>(i)] = logsumexp(terms) - logM;
  }
  return out;
}

Node update_agent(const Context& ctx, int id, const std::map<int, Node>& prev, std::size_t t, double sigma,
                  bool first) {
  const BPConfig& cfg = ctx.cfg;
  const AperturePrior& prior = ctx.g.priors.at(id);
  Rng rng(derive_seed(cfg.seed, t, "agent:" + std::to_string(id)));
  const std::size_t N = cfg.particleCount;
  const auto D = static_cast<Eigen::Index>(ctx.comps.size());
  const auto& fr = ctx.free.at(id);

  Node node;
  node.X.resize(static_cast<Eigen::Index>(N), D);
  RVec logq(N, 0.0);
  const Node& old = prev.at(id);
  std::optional<GaussianFit> fit;
  if (!first) fit = fit_gaussian(ctx, id, old);
  const double alpha = first ? 1.0 : cfg.priorMixture;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> Nrm(0.0, 1.0);
  RVec row(static_cast<std::size_t>(D));
  for (std::size_t i = 0; i < N; ++i) {
    const bool fromPrior = first || U(rng) < alpha;
    if (fromPrior) {
      for (Eigen::Index d = 0; d < D; ++d)
        row[d] = prior.components[static_cast<std::size_t>(ctx.comps[d])].sample(rng);
    } else {
      const auto k = static_cast<Eigen::Index>(fit->dims.size());
      Eigen::VectorXd z(k);
      for (Eigen::Index a = 0; a < k; ++a) z[a] = Nrm(rng);
      const Eigen::VectorXd x = fit->mean + fit->L * z;
      for (Eigen::Index d = 0; d < D; ++d)
        if (!fr[d]) row[d] = prior.components[static_cast<std::size_t>(ctx.comps[d])].a;
      for (Eigen::Index a = 0; a < k; ++a) row[fit->dims[a]] = x[a];
    }
    for (Eigen::Index d = 0; d < D; ++d)
      if (is_circular(ctx.comps[d])) row[d] = wrap_angle(row[d]);
    for (Eigen::Index d = 0; d < D; ++d) node.X(static_cast<Eigen::Index>(i), d) = row[d];
    const double lp = log_prior(ctx, prior, row.data());
    if (first) {
      logq[i] = lp;
    } else {
      const double lg = gaussian_log_density(ctx, *fit, row.data());
      const double a = alpha > 0.0 ? std::log(alpha) + lp : kNegInf;
      const double b = std::log1p(-alpha) + lg;
      const double m = std::max(a, b);
      logq[i] = m + std::log(std::exp(a - m) + std::exp(b - m));
    }
  }

  node.logw.assign(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    for (Eigen::Index d = 0; d < D; ++d) row[d] = node.X(static_cast<Eigen::Index>(i), d);
    node.logw[i] = log_prior(ctx, prior, row.data()) - logq[i];
  }

  for (std::size_t f : ctx.g.incidence.at(id)) {
    const FactorNode& fn = ctx.g.factors[f];
    if (fn.kind != FactorNode::Kind::Pair) continue;
    const int other = fn.a == id ? fn.b : fn.a;
    const AperturePrior& op = ctx.g.priors.at(other);
    const Node& on = prev.at(other);
    std::vector<ApertureState> nb;
    if (op.anchor) {
      nb.push_back(op.nominal);
    } else if (on.X.rows() == 0) {
      // No belief yet: the neighbour's prior stands in for it.
      RVec r(ctx.comps.size());
      for (std::size_t l = 0; l < cfg.messageParticles; ++l) {
        for (std::size_t d = 0; d < ctx.comps.size(); ++d)
          r[d] = op.components[static_cast<std::size_t>(ctx.comps[d])].sample(rng);
        nb.push_back(make_state(op, ctx.comps, r.data()));
      }
    } else {
      // Extrinsic belief of the neighbour: its belief without this factor's message.
      RVec lw = on.logw;
      if (auto it = on.logMsg.find(f); it != on.logMsg.end())
        for (std::size_t l = 0; l < lw.size(); ++l)
          if (std::isfinite(lw[l])) lw[l] -= it->second[l];
      if (!normalize_log(lw)) lw = on.logw;
      const RVec w = exp_weights(lw);
      for (std::size_t l : systematic_resample(w, cfg.messageParticles, rng)) nb.push_back(make_state(op, ctx.comps, on.X, static_cast<Eigen::Index>(l)));
    }
    RVec m = message(ctx, f, id, node.X, nb, sigma);
    if (!op.anchor && cfg.damping > 0.0) {
      if (auto it = old.used.find(f); it != old.used.end()) {
        const RVec mo = message(ctx, f, id, node.X, it->second, sigma);
        for (std::size_t i = 0; i < N; ++i) {
          if (std::isfinite(m[i]) && std::isfinite(mo[i])) m[i] = (1.0 - cfg.damping) * m[i] + cfg.damping * mo[i];
          else m[i] = kNegInf;
        }
      }
    }
    for (std::size_t i = 0; i < N; ++i) node.logw[i] += m[i];
    node.logMsg[f] = std::move(m);
    node.used[f] = std::move(nb);
  }

  // Weights are kept in the log domain; degeneracy is judged on their linear
  // values, which all underflow once the best one falls below DBL_MIN.
  const double best = *std::max_element(node.logw.begin(), node.logw.end());
  if (!(best >= std::log(std::numeric_limits<double>::min())) || !normalize_log(node.logw))
    throw DegeneracyError("all particle weights of aperture " + std::to_string(id) + " underflowed at iteration " +
                          std::to_string(t));
  const RVec w = exp_weights(node.logw);
  if (effective_size(w) < cfg.resampleThreshold * static_cast<double>(N)) {
    const auto idx = systematic_resample(w, N, rng);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(N), D);
    for (std::size_t i = 0; i < N; ++i) X.row(static_cast<Eigen::Index>(i)) = node.X.row(static_cast<Eigen::Index>(idx[i]));
    node.X = std::move(X);
    for (auto& [f, m] : node.logMsg) {
      RVec r(N);
      for (std::size_t i = 0; i < N; ++i) r[i] = m[idx[i]];
      m = std::move(r);
    }
    node.logw.assign(N, -std::log(static_cast<double>(N)));
  }
  return node;
}

Eigen::VectorXd belief_mean(const std::vector<Component>& comps, const Eigen::MatrixXd& X, const RVec& w) {
  const auto D = static_cast<Eigen::Index>(comps.size());
  Eigen::VectorXd m = Eigen::VectorXd::Zero(D);
  for (Eigen::Index d = 0; d < D; ++d) {
    if (is_circular(comps[d])) {
      double s = 0.0, c = 0.0;
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        s += w[i] * std::sin(X(i, d));
        c += w[i] * std::cos(X(i, d));
      }
      m[d] = std::atan2(s, c);
    } else {
      for (Eigen::Index i = 0; i < X.rows(); ++i) m[d] += w[i] * X(i, d);
    }
  }
  return m;
}

}  // namespace

void BPConfig::validate() const {
  if (particleCount < 100) throw InvalidArgument("particle count must be at least 100");
  if (maxIterations < 1) throw InvalidArgument("iteration cap must be at least 1");
  if (!(messageTol > 0.0)) throw InvalidArgument("message tolerance must be positive");
  if (!(resampleThreshold > 0.0 && resampleThreshold <= 1.0)) throw InvalidArgument("resample threshold must be in (0, 1]");
  if (!(damping >= 0.0 && damping < 1.0)) throw InvalidArgument("damping must be in [0, 1)");
  if (!(annealStart >= 0.0)) throw InvalidArgument("anneal start must be >= 0");
  if (!(annealRate > 0.0 && annealRate < 1.0)) throw InvalidArgument("anneal rate must be in (0, 1)");
  if (!(priorMixture >= 0.0 && priorMixture < 1.0)) throw InvalidArgument("prior mixture must be in [0, 1)");
  if (messageParticles < 1) throw InvalidArgument("message particle count must be positive");
  if (workers < 1) throw InvalidArgument("worker count must be positive");
}

ApertureState Belief::state_of(Eigen::Index particle) const {
  ApertureState s = base;
  for (std::size_t d = 0; d < components.size(); ++d)
    set_component(s, components[d], particles(particle, static_cast<Eigen::Index>(d)));
  return s;
}

BPResult run_loopy_bp(const FactorGraph& graph, const BPConfig& cfg) {
  cfg.validate();
  Context ctx{graph, cfg, graph.mask.components(), {}, {}};
  std::vector<int> agents;
  std::map<int, Node> cur;
  for (int id : graph.variables) {
    const AperturePrior& p = graph.priors.at(id);
    if (p.anchor) {
      Node n;
      n.X.resize(1, static_cast<Eigen::Index>(ctx.comps.size()));
      for (std::size_t d = 0; d < ctx.comps.size(); ++d)
        n.X(0, static_cast<Eigen::Index>(d)) = component_value(p.nominal, ctx.comps[d]);
      n.logw = {0.0};
      cur[id] = std::move(n);
      continue;
    }
    agents.push_back(id);
    std::vector<bool> fr(ctx.comps.size());
    RVec fl(ctx.comps.size());
    for (std::size_t d = 0; d < ctx.comps.size(); ++d) {
      const auto& cp = p.components[static_cast<std::size_t>(ctx.comps[d])];
      fr[d] = cp.kind != PriorKind::PointMass;
      fl[d] = 1e-9 * cp.spread();
    }
    ctx.free[id] = fr;
    ctx.floorStd[id] = fl;
    cur[id] = Node{};
  }

  const double kappa = anneal_kappa(graph, cfg);
  BPResult res;
  std::map<int, Eigen::VectorXd> lastMean;
  for (std::size_t t = 0; t < cfg.maxIterations; ++t) {
    const double sigma = std::max(1.0, kappa * std::pow(cfg.annealRate, static_cast<double>(t)));
    std::map<int, Node> next = cur;
    std::vector<Node> out(agents.size());
    std::vector<std::exception_ptr> errs(agents.size());
    auto work = [&](std::size_t w) {
      for (std::size_t a = w; a < agents.size(); a += cfg.workers) {
        try {
          out[a] = update_agent(ctx, agents[a], cur, t, sigma, t == 0);
        } catch (...) {
          errs[a] = std::current_exception();
        }
      }
    };
    const std::size_t nw = std::min(cfg.workers, std::max<std::size_t>(agents.size(), 1));
    if (nw <= 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < nw; ++w) pool.emplace_back(work, w);
      for (auto& th : pool) th.join();
    }
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);

    double change = 0.0;
    for (std::size_t a = 0; a < agents.size(); ++a) {
      const Eigen::VectorXd m = belief_mean(ctx.comps, out[a].X, exp_weights(out[a].logw));
      if (auto it = lastMean.find(agents[a]); it != lastMean.end()) {
        for (Eigen::Index d = 0; d < m.size(); ++d) {
          const double v = m[d] - it->second[d];
          change = std::max(change, std::abs(is_circular(ctx.comps[d]) ? wrap_angle(v) : v));
        }
      } else {
        change = std::numeric_limits<double>::infinity();
      }
      lastMean[agents[a]] = m;
      next[agents[a]] = std::move(out[a]);
    }
    cur = std::move(next);
    res.iterations = t + 1;
    res.maxChange.push_back(change);
    res.annealing.push_back(sigma);
    if (sigma == 1.0 && change < cfg.messageTol) {
      res.converged = true;
      break;
    }
  }

  for (int id : graph.variables) {
    const AperturePrior& p = graph.priors.at(id);
    const Node& n = cur.at(id);
    Belief b;
    b.id = id;
    b.components = ctx.comps;
    b.particles = n.X;
    b.weights = p.anchor ? RVec{1.0} : exp_weights(n.logw);
    b.base = p.nominal;
    b.base.id = id;
    b.iteration = p.anchor ? 0 : res.iterations;
    b.ess = effective_size(b.weights);
    res.beliefs[id] = std::move(b);
  }
  return res;
}

namespace {

void check_belief(const Belief& b) {
  if (b.particles.rows() == 0 || b.weights.empty() || static_cast<std::size_t>(b.particles.rows()) != b.weights.size())
    throw EmptyBelief("belief of aperture " + std::to_string(b.id) + " has no particles");
  double s = 0.0;
  for (double w : b.weights) s += w;
  if (!(s > 0.0) || !std::isfinite(s)) throw EmptyBelief("belief of aperture " + std::to_string(b.id) + " has no mass");
}

RVec normalized(const RVec& w) {
  double s = 0.0;
  for (double x : w) s += x;
  RVec o(w);
  for (double& x : o) x /= s;
  return o;
}

}  // namespace

ApertureState estimate_mmse(const Belief& b) {
  check_belief(b);
  const Eigen::VectorXd m = belief_mean(b.components, b.particles, normalized(b.weights));
  ApertureState s = b.base;
  for (std::size_t d = 0; d < b.components.size(); ++d) set_component(s, b.components[d], m[static_cast<Eigen::Index>(d)]);
  return s;
}

RVec kde_bandwidth(const Belief& b) {
  check_belief(b);
  const RVec w = normalized(b.weights);
  const Eigen::VectorXd m = belief_mean(b.components, b.particles, w);
  const double neff = effective_size(w);
  const double D = static_cast<double>(b.components.size());
  const double factor = std::pow(4.0 / ((D + 2.0) * neff), 1.0 / (D + 4.0));
  RVec h(b.components.size());
  for (std::size_t d = 0; d < h.size(); ++d) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < b.particles.rows(); ++i) {
      double dv = b.particles(i, static_cast<Eigen::Index>(d)) - m[static_cast<Eigen::Index>(d)];
      if (is_circular(b.components[d])) dv = wrap_angle(dv);
      v += w[i] * dv * dv;
    }
    h[d] = std::sqrt(v) * factor;
  }
  return h;
}

ApertureState estimate_map(const Belief& b) {
  check_belief(b);
  const RVec w = normalized(b.weights);
  const RVec h = kde_bandwidth(b);
  const Eigen::Index n = b.particles.rows();
  const auto D = b.components.size();
  double best = -1.0;
  Eigen::Index arg = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double dens = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (w[j] == 0.0) continue;
      double q = 0.0;
      for (std::size_t d = 0; d < D; ++d) {
        if (!(h[d] > 0.0)) continue;
        double dv = b.particles(i, static_cast<Eigen::Index>(d)) - b.particles(j, static_cast<Eigen::Index>(d));
        if (is_circular(b.components[d])) dv = wrap_angle(dv);
        q += (dv / h[d]) * (dv / h[d]);
      }
      dens += w[j] * std::exp(-0.5 * q);
    }
    if (dens > best) {
      best = dens;
      arg = i;
    }
  }
  return b.state_of(arg);
}

}  // namespace isac::sync
