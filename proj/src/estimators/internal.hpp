#pragma once

#include <cstdint>
#include <vector>

#include "isac/dictionary.hpp"
#include "isac/estimators.hpp"

namespace isac::detail {

/// Cells of a Doppler-major (nv x nd) surface that are >= all 8 neighbours
/// and strictly greater than the neighbours preceding them in index order,
/// so a plateau yields one cell.
std::vector<std::size_t> local_maxima(const RVec& surface, std::size_t nd, std::size_t nv);

struct LsFit {
  CVec coefficients;  // per unit-norm atom
  CVec predicted;
  double condition = 1.0;
};

/// Least-squares fit of rx onto the given atoms. Throws RankError when the
/// condition number exceeds 1e12.
LsFit ls_refit(const Dictionary& dict, const std::vector<std::size_t>& cells, std::span<const cplx> rx,
               std::uint64_t* flops);

void check_receive(const ReceivedSignal& rx, const Dictionary& dict);

/// Sets predictedSignal-derived fields: residual energy.
void finalize(EstimateReport& report, const ReceivedSignal& rx);

}  // namespace isac::detail
