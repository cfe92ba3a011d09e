#include <algorithm>
#include <fstream>
#include <sstream>

#include "isac/syncnet.hpp"
#include "isac/textdoc.hpp"

namespace isac::sync {

NetworkScenario parse_network(std::string_view text, const std::string& origin) {
  const TextDoc doc = TextDoc::parse(text, origin);
  DocReader r(doc);
  r.declare("", {"schema_version"});
  r.declare("network", {"label", "carrier_frequency", "observables", "infer", "delay_std", "angle_std", "phase_std",
                        "area", "time_offset_range", "mask", "noise_scale"},
            {"pair"});
  r.declare("apertures", {}, {"node"});
  r.declare("bp", {"particles", "iterations", "tol", "resample_threshold", "damping", "anneal_start", "anneal_rate",
                   "prior_mixture", "message_particles", "seed"});

  if (auto v = r.integer("", "schema_version", true); v && *v != 1)
    r.fail("", "schema_version", "unsupported schema version " + std::to_string(*v));

  NetworkScenario s;
  s.label = r.text("network", "label").value_or("");
  if (auto f = r.number("network", "carrier_frequency")) {
    r.require_range("network", "carrier_frequency", *f, 0.0, INFINITY, false);
    s.model.carrierFrequency = *f;
  }
  if (auto w = r.words("network", "observables")) {
    s.model.observables = {false, false, false};
    for (const auto& o : *w) {
      if (o == "delay") s.model.observables.delay = true;
      else if (o == "angle") s.model.observables.angle = true;
      else if (o == "phase") s.model.observables.phase = true;
      else r.fail("network", "observables", "unknown observable '" + o + "' (delay, angle, phase)");
    }
  }
  if (auto w = r.words("network", "infer")) {
    s.mask.inferred.fill(false);
    for (const auto& o : *w) {
      bool ok = false;
      for (std::size_t c = 0; c < kNumComponents; ++c)
        if (o == to_string(static_cast<Component>(c))) s.mask.inferred[c] = ok = true;
      if (!ok) r.fail("network", "infer", "unknown component '" + o + "' (x, y, orientation, time_offset, phase)");
    }
  }
  auto positive = [&](const char* key, double& out) {
    if (auto v = r.number("network", key)) {
      r.require_range("network", key, *v, 0.0, INFINITY, false);
      out = *v;
    }
  };
  positive("delay_std", s.model.noise.delayStd);
  positive("angle_std", s.model.noise.angleStd);
  positive("phase_std", s.model.noise.phaseStd);
  if (auto v = r.number("network", "noise_scale")) {
    r.require_range("network", "noise_scale", *v, 0.0, INFINITY);
    s.noiseScale = *v;
  }
  RVec area = {-50.0, 50.0, -50.0, 50.0};
  if (auto v = r.numbers("network", "area")) {
    if (v->size() != 4 || (*v)[1] <= (*v)[0] || (*v)[3] <= (*v)[2])
      r.fail("network", "area", "expected '<xmin> <xmax> <ymin> <ymax>' with min < max");
    else area = *v;
  }
  double toRange = 1e-7;
  positive("time_offset_range", toRange);

  std::set<int> anchors;
  std::vector<int> ids;
  for (const Entry* e : r.rows("apertures", "node")) {
    const auto w = split_words(e->value);
    // node = <id> <anchor|agent> <x> <y> [orientation] [time_offset] [cpo]
    if (w.size() < 4 || w.size() > 7 || (w[1] != "anchor" && w[1] != "agent")) {
      r.fail("apertures", "node", "expected '<id> anchor|agent <x> <y> [orientation] [time_offset] [cpo]'", e->line);
      continue;
    }
    std::vector<double> v;
    bool bad = false;
    for (std::size_t i = 2; i < w.size(); ++i) {
      auto d = parse_double(w[i]);
      if (!d) bad = true;
      else v.push_back(*d);
    }
    auto id = parse_double(w[0]);
    if (bad || !id || *id != std::floor(*id)) {
      r.fail("apertures", "node", "malformed number", e->line);
      continue;
    }
    ApertureState st;
    st.id = static_cast<int>(*id);
    st.position = {v[0], v[1]};
    if (v.size() > 2) st.orientation = v[2];
    if (v.size() > 3) st.timeOffset = v[3];
    if (v.size() > 4) st.cpo = v[4];
    st.normalize();
    if (std::find(ids.begin(), ids.end(), st.id) != ids.end()) {
      r.fail("apertures", "node", "duplicate id " + std::to_string(st.id), e->line);
      continue;
    }
    ids.push_back(st.id);
    if (w[1] == "anchor") anchors.insert(st.id);
    s.truth.push_back(st);
  }
  if (ids.empty()) r.fail("apertures", "node", "at least one aperture is required", 0);

  const std::string mask = r.text("network", "mask").value_or("full");
  if (mask == "full") {
    s.topology = NetworkTopology::full_mesh(ids, anchors);
  } else if (mask == "star") {
    s.topology = NetworkTopology::star(ids, anchors);
  } else if (mask == "custom") {
    s.topology.ids = ids;
    std::sort(s.topology.ids.begin(), s.topology.ids.end());
    s.topology.anchors = anchors;
    for (const Entry* e : r.rows("network", "pair")) {
      const auto w = split_words(e->value);
      auto a = w.size() == 2 ? parse_double(w[0]) : std::nullopt;
      auto b = w.size() == 2 ? parse_double(w[1]) : std::nullopt;
      if (!a || !b) {
        r.fail("network", "pair", "expected '<tx id> <rx id>'", e->line);
        continue;
      }
      s.topology.mask.emplace_back(static_cast<int>(*a), static_cast<int>(*b));
    }
  } else {
    r.fail("network", "mask", "expected full, star or custom");
  }
  if (mask != "custom" && !r.rows("network", "pair").empty())
    r.fail("network", "pair", "pairs are only allowed with mask = custom");

  auto& bp = s.bp;
  if (auto v = r.unsigned_integer("bp", "particles")) {
    if (*v < 100) r.fail("bp", "particles", "must be >= 100");
    bp.particleCount = *v;
  }
  if (auto v = r.unsigned_integer("bp", "iterations")) {
    if (*v < 1) r.fail("bp", "iterations", "must be >= 1");
    bp.maxIterations = *v;
  }
  if (auto v = r.number("bp", "tol")) {
    r.require_range("bp", "tol", *v, 0.0, INFINITY, false);
    bp.messageTol = *v;
  }
  if (auto v = r.number("bp", "resample_threshold")) {
    r.require_range("bp", "resample_threshold", *v, 0.0, 1.0, false);
    bp.resampleThreshold = *v;
  }
  if (auto v = r.number("bp", "damping")) {
    r.require_range("bp", "damping", *v, 0.0, 1.0, true, false);
    bp.damping = *v;
  }
  if (auto v = r.number("bp", "anneal_start")) {
    r.require_range("bp", "anneal_start", *v, 0.0, INFINITY);
    bp.annealStart = *v;
  }
  if (auto v = r.number("bp", "anneal_rate")) {
    r.require_range("bp", "anneal_rate", *v, 0.0, 1.0, false, false);
    bp.annealRate = *v;
  }
  if (auto v = r.number("bp", "prior_mixture")) {
    r.require_range("bp", "prior_mixture", *v, 0.0, 1.0, true, false);
    bp.priorMixture = *v;
  }
  if (auto v = r.unsigned_integer("bp", "message_particles")) {
    if (*v < 1) r.fail("bp", "message_particles", "must be >= 1");
    bp.messageParticles = *v;
  }
  if (auto v = r.unsigned_integer("bp", "seed")) bp.seed = *v;
  r.finish();

  try {
    s.topology.validate();
  } catch (const TopologyError& e) {
    throw ValidationError({{origin, 0, "network.pair", e.what()}});
  }

  for (const auto& t : s.truth) {
    AperturePrior p;
    p.id = t.id;
    p.anchor = anchors.count(t.id) != 0;
    p.nominal = t;
    if (!p.anchor) {
      // Uninferred components keep their file values; inferred ones get
      // uninformative priors.
      p.components[0] = ComponentPrior::uniform(area[0], area[1]);
      p.components[1] = ComponentPrior::uniform(area[2], area[3]);
      p.components[2] = ComponentPrior::uniform(-kPi, kPi);
      p.components[3] = ComponentPrior::uniform(-toRange * kSpeedOfLight, toRange * kSpeedOfLight);
      p.components[4] = ComponentPrior::uniform(-kPi, kPi);
    }
    s.priors.push_back(p);
  }
  return s;
}

NetworkScenario load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str(), path.string());
}

}  // namespace isac::sync
