#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "isac/scene.hpp"
#include "isac/textdoc.hpp"

namespace isac {
namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TargetScene parse_scene(std::string_view text, const std::string& origin) {
  const TextDoc doc = TextDoc::parse(text, origin);
  DocReader r(doc);
  r.declare("", {"schema_version"});
  r.declare("scene", {"label"}, {"target"});
  r.declare("clutter", {"density", "amplitude_scale", "delay_range", "doppler_range", "cell"});

  if (auto v = r.integer("", "schema_version", true); v && *v != 1)
    r.fail("", "schema_version", "unsupported schema version " + std::to_string(*v));

  std::string label = r.text("scene", "label").value_or("");
  std::vector<Target> targets;
  for (const Entry* e : r.rows("scene", "target")) {
    const auto w = split_words(e->value);
    std::vector<double> v;
    for (const auto& s : w)
      if (auto d = parse_double(s)) v.push_back(*d);
    if (w.size() != 4 || v.size() != 4) {
      r.fail("scene", "target", "expected '<re h> <im h> <delay s> <doppler Hz>'", e->line);
      continue;
    }
    if (v[2] < 0.0) {
      r.fail("scene", "target", "delay must be >= 0", e->line);
      continue;
    }
    targets.push_back({{v[0], v[1]}, v[2], v[3]});
  }

  std::optional<ClutterModel> clutter;
  if (doc.has_section("clutter")) {
    ClutterModel c;
    c.density = r.number("clutter", "density", true).value_or(0.0);
    c.amplitudeScale = r.number("clutter", "amplitude_scale", true).value_or(0.0);
    r.require_range("clutter", "density", c.density, 0.0, INFINITY);
    r.require_range("clutter", "amplitude_scale", c.amplitudeScale, 0.0, INFINITY);
    auto pair = [&](const char* key, double& a, double& b, bool positive) {
      auto v = r.numbers("clutter", key, true);
      if (!v) return;
      if (v->size() != 2 || (*v)[1] < (*v)[0] || (positive && !((*v)[0] > 0.0 && (*v)[1] > 0.0))) {
        r.fail("clutter", key, positive ? "expected two positive numbers" : "expected '<min> <max>' with min <= max");
        return;
      }
      a = (*v)[0];
      b = (*v)[1];
    };
    pair("delay_range", c.region.delayMin, c.region.delayMax, false);
    pair("doppler_range", c.region.dopplerMin, c.region.dopplerMax, false);
    double cd = 1.0, cn = 1.0;
    if (auto v = r.numbers("clutter", "cell", true)) {
      if (v->size() != 2 || !((*v)[0] > 0.0) || !((*v)[1] > 0.0)) r.fail("clutter", "cell", "expected two positive numbers");
      else cd = (*v)[0], cn = (*v)[1];
    }
    c.cellDelay = cd;
    c.cellDoppler = cn;
    if (c.region.delayMin < 0.0) r.fail("clutter", "delay_range", "delays must be >= 0");
    clutter = c;
  }
  r.finish();
  try {
    return TargetScene(std::move(targets), clutter, std::move(label));
  } catch (const InvalidArgument& e) {
    throw ValidationError({{origin, 0, "scene", e.what()}});
  }
}

TargetScene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str(), path.string());
}

std::string format_scene(const TargetScene& scene) {
  std::ostringstream os;
  os << "schema_version = 1\n[scene]\n";
  if (!scene.label().empty()) os << "label = " << scene.label() << "\n";
  for (const auto& t : scene.targets())
    os << "target = " << g17(t.amplitude.real()) << " " << g17(t.amplitude.imag()) << " " << g17(t.delay) << " "
       << g17(t.doppler) << "\n";
  if (const auto& c = scene.clutter()) {
    os << "[clutter]\n";
    os << "density = " << g17(c->density) << "\n";
    os << "amplitude_scale = " << g17(c->amplitudeScale) << "\n";
    os << "delay_range = " << g17(c->region.delayMin) << " " << g17(c->region.delayMax) << "\n";
    os << "doppler_range = " << g17(c->region.dopplerMin) << " " << g17(c->region.dopplerMax) << "\n";
    os << "cell = " << g17(c->cellDelay) << " " << g17(c->cellDoppler) << "\n";
  }
  return os.str();
}

}  // namespace isac
