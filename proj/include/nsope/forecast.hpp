#pragma once

#include <span>
#include <utility>
#include <vector>

namespace nsope {

// Cosine-basis regression over normalized time: psi(u) = (cos(2 pi u j)) for
// j = 0..basis_dim-1 with u = t / time_normalizer. The j = 0 term is the
// constant 1, so constant series forecast exactly.
struct ForecastModel {
  int basis_dim = 5;
  double time_normalizer = 1.0;
  std::vector<double> weights;
};

// Ordinary least squares of the values on the cosine basis. A 1e-8 ridge is
// applied when the design cannot support a plain solve (fewer points than
// basis dimensions, or a singular normal matrix).
ForecastModel fit_forecast(std::span<const std::pair<double, double>> series, int basis_dim,
                           double time_normalizer);

double forecast_predict(const ForecastModel& model, double t_future);

}  // namespace nsope
