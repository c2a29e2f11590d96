#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tendonsim/model.hpp"

namespace tendonsim {

/// One commanded homogeneous equilibrium and the tensions that held it.
struct StaticSample {
  double theta;  // rad
  double u1;     // N
  double u2;     // N
  int repeat_index;

  bool operator==(const StaticSample&) const = default;
};

/// Gaussian tension noise: u <- u (1 + relative * N(0,1)) + sigma * N(0,1),
/// drawn independently for u1 and u2 and clipped at zero.
struct NoiseModel {
  double sigma = 0.0;     // N
  double relative = 0.0;  // fraction of the tension
  std::uint64_t seed = 0;
};

struct DatasetSpec {
  std::vector<double> thetas;
  /// Pretension per angle; a single entry applies to every angle.
  std::vector<double> tau2 = {0.0};
  int repeats = 1;
  NoiseModel noise;
};

struct RejectedSample {
  double theta;
  double tau2_requested;
  double tau2_min;  // smallest pretension that keeps u1 >= 0
  int repeat_index;
};

struct StaticDataset {
  std::vector<StaticSample> samples;
  std::vector<RejectedSample> rejected;
};

/// Solves alpha1 sin(n theta) + alpha2 theta = (c1 + c2 sin theta) u1 +
/// (c2 sin theta - c1) u2 with u2 = tau2 for every angle and repeat.
StaticDataset generate_static_dataset(const RobotParams& params, const DatasetSpec& spec);

/// The static balance is homogeneous in (alpha1, alpha2, c1, c2): tensions
/// only fix the parameters up to a common scale. One parameter is therefore
/// held at a known value and the other three are fitted.
enum class IdentParameter { alpha1, alpha2, c1, c2 };

std::string_view to_string(IdentParameter p);
IdentParameter ident_parameter_from_string(std::string_view name);

struct IdentAnchor {
  IdentParameter parameter = IdentParameter::c1;
  double value = presets::identified().c1;
};

struct IdentResult {
  double c1_hat = 0.0;
  double c2_hat = 0.0;
  double alpha1_hat = 0.0;
  double alpha2_hat = 0.0;
  double residual_rms = 0.0;  // N.m
  bool sign_ok = false;
  IdentAnchor anchor;
  std::size_t samples = 0;
};

/// Linear least squares on the static residual
/// alpha1 sin(n theta) + alpha2 theta - c1 (u1 - u2) - c2 sin(theta) (u1 + u2)
/// by column-pivoted QR. Signs are checked afterwards, not imposed.
IdentResult fit_parameters(const std::vector<StaticSample>& dataset, int n,
                           const IdentAnchor& anchor = {});

/// Residual of one sample under the given parameters.
double static_residual(const StaticSample& sample, int n, double alpha1, double alpha2, double c1, double c2);

/// Columns theta_rad, u1_N, u2_N, repeat.
void write_dataset_csv(std::ostream& out, const std::vector<StaticSample>& dataset);
std::vector<StaticSample> read_dataset_csv(std::istream& in);

void write_summary(std::ostream& out, const IdentResult& result);

}  // namespace tendonsim
