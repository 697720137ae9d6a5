#include "nsope/forecast.hpp"

#include <cmath>
#include <stdexcept>

#include "nsope/linalg.hpp"

namespace nsope {

namespace {

void eval_basis(double t, double normalizer, int dim, double* out) {
  const double u = t / normalizer;
  for (int j = 0; j < dim; ++j) out[j] = std::cos(2.0 * M_PI * u * j);
}

}  // namespace

ForecastModel fit_forecast(std::span<const std::pair<double, double>> series, int basis_dim,
                           double time_normalizer) {
  if (series.empty()) throw std::invalid_argument("fit_forecast: empty series");
  if (basis_dim < 1) throw std::invalid_argument("fit_forecast: basis_dim must be >= 1");
  if (!(time_normalizer > 0.0)) {
    throw std::invalid_argument("fit_forecast: time_normalizer must be > 0");
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    for (std::size_t j = i + 1; j < series.size(); ++j) {
      if (series[i].first == series[j].first) {
        throw std::invalid_argument("fit_forecast: duplicate time points");
      }
    }
  }

  DenseMatrix gram(basis_dim, basis_dim);
  std::vector<double> rhs(basis_dim, 0.0);
  std::vector<double> psi(basis_dim);
  for (const auto& [t, value] : series) {
    eval_basis(t, time_normalizer, basis_dim, psi.data());
    for (int i = 0; i < basis_dim; ++i) {
      for (int j = i; j < basis_dim; ++j) gram(i, j) += psi[i] * psi[j];
      rhs[i] += psi[i] * value;
    }
  }
  for (int i = 0; i < basis_dim; ++i) {
    for (int j = 0; j < i; ++j) gram(i, j) = gram(j, i);
  }

  ForecastModel model;
  model.basis_dim = basis_dim;
  model.time_normalizer = time_normalizer;
  if (static_cast<int>(series.size()) < basis_dim) {
    model.weights = solve_ridge(gram, rhs, 1e-8);
  } else {
    try {
      model.weights = solve_spd(gram, rhs);
    } catch (const SingularDesignError&) {
      model.weights = solve_ridge(gram, rhs, 1e-8);
    }
  }
  return model;
}

double forecast_predict(const ForecastModel& model, double t_future) {
  if (model.weights.empty()) throw std::invalid_argument("forecast_predict: unfitted model");
  std::vector<double> psi(model.basis_dim);
  eval_basis(t_future, model.time_normalizer, model.basis_dim, psi.data());
  double v = 0.0;
  for (int j = 0; j < model.basis_dim; ++j) v += psi[j] * model.weights[j];
  return v;
}

}  // namespace nsope
