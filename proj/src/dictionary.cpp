#include "isac/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "isac/fft.hpp"
#include "isac/kernels.hpp"
#include "isac/scene.hpp"

namespace isac {

struct Dictionary::CoherenceCache {
  std::once_flag once;
  double value = 0.0;
};

namespace {

void check_increasing(const RVec& g, const char* name) {
  if (g.empty()) throw InvalidArgument(std::string(name) + " grid is empty");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) throw InvalidArgument(std::string(name) + " grid has non-finite entries");
    if (i > 0 && !(g[i] > g[i - 1])) throw InvalidArgument(std::string(name) + " grid must be strictly increasing");
  }
}

}  // namespace

void Dictionary::check_grids() const {
  check_increasing(delayGrid_, "delay");
  check_increasing(dopplerGrid_, "Doppler");
  if (delayGrid_.front() < 0.0) throw InvalidArgument("delay grid must be >= 0");
}

Dictionary::Dictionary(const Waveform& probe, RVec delayGrid, RVec dopplerGrid, std::size_t rxLength)
    : delayGrid_(std::move(delayGrid)),
      dopplerGrid_(std::move(dopplerGrid)),
      numDelays_(delayGrid_.size()),
      numDopplers_(dopplerGrid_.size()),
      rxLength_(rxLength),
      sampleRate_(probe.sampleRate),
      probe_(probe),
      band_(probe.band),
      coherence_(std::make_shared<CoherenceCache>()) {
  check_grids();
  if (rxLength_ < probe.size()) throw InvalidArgument("receive length shorter than the probe");
  if (probe.size() == 0) throw InvalidArgument("probe waveform is empty");
  frequencyBins_ = probe.layout.kind == ModulationKind::Ofdm ? probe.layout.numSubcarriers
                                                             : std::min<std::size_t>(64, probe.size());
  atoms_.resize(size() * rxLength_);
  norms_.resize(size());
  for (std::size_t iv = 0; iv < numDopplers_; ++iv) {
    for (std::size_t id = 0; id < numDelays_; ++id) {
      const std::size_t idx = index(id, iv);
      CVec a = delayed_copy(probe.samples, sampleRate_, delayGrid_[id], dopplerGrid_[iv], rxLength_,
                            &synthesisFlops_);
      const double n = std::sqrt(kernels::energy(a));
      if (!(n > 0.0)) throw InvalidArgument("dictionary atom has zero energy (delay beyond the receive window?)");
      for (auto& v : a) v /= n;
      norms_[idx] = n;
      std::copy(a.begin(), a.end(), atoms_.begin() + static_cast<std::ptrdiff_t>(idx * rxLength_));
    }
  }
}

Dictionary Dictionary::from_atoms(RVec delayGrid, RVec dopplerGrid, std::vector<CVec> atoms, double sampleRate) {
  Dictionary d;
  d.delayGrid_ = std::move(delayGrid);
  d.dopplerGrid_ = std::move(dopplerGrid);
  d.numDelays_ = d.delayGrid_.size();
  d.numDopplers_ = d.dopplerGrid_.size();
  d.sampleRate_ = sampleRate;
  d.coherence_ = std::make_shared<CoherenceCache>();
  d.check_grids();
  if (atoms.size() != d.size()) throw InvalidArgument("atom count does not match the grid size");
  d.rxLength_ = atoms.front().size();
  d.frequencyBins_ = std::min<std::size_t>(64, d.rxLength_);
  d.band_ = {-sampleRate / 2.0, sampleRate / 2.0};
  d.atoms_.resize(d.size() * d.rxLength_);
  d.norms_.resize(d.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].size() != d.rxLength_) throw InvalidArgument("atoms must share one length");
    const double n = std::sqrt(kernels::energy(atoms[i]));
    if (!(n > 0.0)) throw InvalidArgument("atom has zero energy");
    d.norms_[i] = n;
    for (std::size_t k = 0; k < d.rxLength_; ++k) d.atoms_[i * d.rxLength_ + k] = atoms[i][k] / n;
  }
  return d;
}

double Dictionary::coherence() const {
  std::call_once(coherence_->once, [this] {
    double best = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = i + 1; j < size(); ++j) best = std::max(best, std::abs(kernels::cdot(atom(i), atom(j))));
    coherence_->value = best;
  });
  return coherence_->value;
}

void Dictionary::set_frequency_bins(std::size_t bins) {
  if (bins == 0) throw InvalidArgument("frequency bin count must be positive");
  frequencyBins_ = bins;
}

std::vector<std::size_t> Dictionary::required_frequency_bins() const {
  std::vector<std::size_t> out;
  const double tol = 1e-9 * sampleRate_;
  for (std::size_t k = 0; k < frequencyBins_; ++k)
    if (band_.contains(fft::bin_frequency(k, frequencyBins_, sampleRate_), tol)) out.push_back(k);
  return out;
}

}  // namespace isac
