#include <algorithm>
#include <cmath>
#include <string>

#include "isac/metrics.hpp"

namespace isac {

namespace {

void check_pair(std::span<const double> y, std::span<const double> yhat, std::size_t minLength) {
  if (y.size() != yhat.size())
    throw LengthError("prediction length " + std::to_string(yhat.size()) + " differs from data length " +
                      std::to_string(y.size()));
  if (y.size() < minLength) throw LengthError("need at least " + std::to_string(minLength) + " samples");
}

double sum_squared_residual(std::span<const double> y, std::span<const double> yhat) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return s;
}

}  // namespace

double r_squared(std::span<const double> y, std::span<const double> yhat) {
  check_pair(y, yhat, 2);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double sst = 0.0;
  for (double v : y) sst += (v - mean) * (v - mean);
  if (!(sst > 0.0)) throw DegenerateData("r_squared: data is constant");
  const double r2 = 1.0 - sum_squared_residual(y, yhat) / sst;
  return std::clamp(r2, 0.0, 1.0);
}

double fpe(std::span<const double> y, std::span<const double> yhat, std::size_t modelDim) {
  check_pair(y, yhat, 1);
  const auto n = static_cast<double>(y.size());
  if (modelDim >= y.size())
    throw DimensionError("model dimension " + std::to_string(modelDim) + " is not below the sample count " +
                         std::to_string(y.size()));
  const double r = static_cast<double>(modelDim) / n;
  return (1.0 + r) / (1.0 - r) * sum_squared_residual(y, yhat) / n;
}

double cost_criterion(std::span<const double> y, std::span<const double> yhat, double penalty, Loss loss) {
  check_pair(y, yhat, 1);
  if (!(penalty >= 0.0)) throw InvalidArgument("penalty must be non-negative");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y[i] - yhat[i];
    s += loss == Loss::Squared ? e * e : std::abs(e);
  }
  return (1.0 + penalty) * s / static_cast<double>(y.size());
}

}  // namespace isac
