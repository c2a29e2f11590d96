#include <gtest/gtest.h>

#include <sstream>

#include "tendonsim/analysis.hpp"
#include "tendonsim/ident.hpp"

namespace tendonsim {
namespace {

std::vector<double> grid_deg(double from, double to, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(deg2rad(from + (to - from) * i / (count - 1)));
  return out;
}

std::vector<double> with_margin(const std::vector<double>& thetas, const RobotParams& p, double margin) {
  std::vector<double> out;
  for (double t : thetas) out.push_back(minimal_pretension(t, p) + margin);
  return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

void expect_recovered(const IdentResult& r, const RobotParams& p, double tol) {
  EXPECT_LT(rel(r.c1_hat, p.c1), tol);
  EXPECT_LT(rel(r.c2_hat, p.c2), tol);
  EXPECT_LT(rel(r.alpha1_hat, p.alpha1), tol);
  EXPECT_LT(rel(r.alpha2_hat, p.alpha2), tol);
}

TEST(Identification, NoiselessFixedPoint) {
  const RobotParams p;
  const std::vector<std::vector<double>> grids = {grid_deg(-15, 15, 15), grid_deg(-10, 12, 3), grid_deg(2, 14, 5),
                                                  {deg2rad(-7.0), deg2rad(1.0), deg2rad(9.5)}};
  for (const auto& thetas : grids) {
    DatasetSpec spec;
    spec.thetas = thetas;
    spec.tau2 = with_margin(thetas, p, 10.0);
    spec.repeats = 2;
    const StaticDataset data = generate_static_dataset(p, spec);
    ASSERT_TRUE(data.rejected.empty());
    const IdentResult r = fit_parameters(data.samples, p.n);
    expect_recovered(r, p, 1e-8);
    EXPECT_TRUE(r.sign_ok);
    EXPECT_LT(r.residual_rms, 1e-12);
  }
}

TEST(Identification, AnyAnchorGivesTheSameScale) {
  const RobotParams p;
  DatasetSpec spec;
  spec.thetas = grid_deg(-15, 15, 9);
  spec.tau2 = with_margin(spec.thetas, p, 5.0);
  const auto samples = generate_static_dataset(p, spec).samples;
  for (IdentParameter which : {IdentParameter::alpha1, IdentParameter::alpha2, IdentParameter::c2}) {
    const double value = which == IdentParameter::alpha1 ? p.alpha1 : which == IdentParameter::alpha2 ? p.alpha2 : p.c2;
    expect_recovered(fit_parameters(samples, p.n, {which, value}), p, 1e-8);
  }
}

TEST(Identification, DuplicatedPairLeavesMinimizerUnchanged) {
  const RobotParams p;
  DatasetSpec spec;
  spec.thetas = grid_deg(-15, 15, 7);
  spec.tau2 = {25.0};
  spec.noise = {0.05, 0.01, 3};
  auto samples = generate_static_dataset(p, spec).samples;
  const IdentResult base = fit_parameters(samples, p.n);
  std::vector<StaticSample> doubled = samples;
  doubled.insert(doubled.end(), samples.begin(), samples.end());
  const IdentResult twice = fit_parameters(doubled, p.n);
  EXPECT_LT(rel(twice.alpha1_hat, base.alpha1_hat), 1e-12);
  EXPECT_LT(std::abs(twice.alpha2_hat - base.alpha2_hat), 1e-12 * std::abs(base.alpha1_hat));
  EXPECT_LT(rel(twice.c2_hat, base.c2_hat), 1e-12);
}

TEST(Identification, RejectedSamplesAcceptMinimalPretension) {
  const RobotParams p;
  DatasetSpec spec;
  spec.thetas = grid_deg(-15, 15, 31);
  spec.tau2 = {0.0};
  const StaticDataset data = generate_static_dataset(p, spec);
  ASSERT_FALSE(data.rejected.empty());
  for (const RejectedSample& r : data.rejected) {
    EXPECT_GT(r.tau2_min, r.tau2_requested);
    DatasetSpec retry;
    retry.thetas = {r.theta};
    retry.tau2 = {r.tau2_min};
    const StaticDataset again = generate_static_dataset(p, retry);
    EXPECT_TRUE(again.rejected.empty());
    ASSERT_EQ(again.samples.size(), 1u);
    EXPECT_GE(again.samples[0].u1, 0.0);
  }
}

TEST(Identification, SeededNoiseIsDeterministic) {
  const RobotParams p;
  DatasetSpec spec;
  spec.thetas = grid_deg(-15, 15, 15);
  spec.tau2 = {30.0};
  spec.repeats = 6;
  spec.noise = {0.0, 0.01, 0};
  const auto a = generate_static_dataset(p, spec).samples;
  const auto b = generate_static_dataset(p, spec).samples;
  EXPECT_EQ(a, b);
  spec.noise.seed = 1;
  EXPECT_NE(a, generate_static_dataset(p, spec).samples);
  for (const auto& s : a) EXPECT_GE(s.u1, 0.0);
}

TEST(Identification, RankDeficiencyIsReported) {
  const RobotParams p;
  DatasetSpec spec;
  spec.thetas = {deg2rad(5.0)};
  spec.tau2 = {10.0};
  spec.repeats = 5;
  const auto samples = generate_static_dataset(p, spec).samples;
  try {
    fit_parameters(samples, p.n);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("rank deficient"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("1 distinct angles"), std::string::npos);
  }
  EXPECT_THROW(fit_parameters({}, p.n), DomainError);
}

TEST(Identification, CsvRoundTrip) {
  const RobotParams p;
  DatasetSpec spec;
  spec.thetas = grid_deg(-15, 15, 5);
  spec.tau2 = {20.0};
  spec.noise = {0.1, 0.0, 7};
  const auto samples = generate_static_dataset(p, spec).samples;
  std::stringstream buf;
  write_dataset_csv(buf, samples);
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')), "theta_rad,u1_N,u2_N,repeat");
  EXPECT_EQ(read_dataset_csv(buf), samples);
}

TEST(Identification, ParameterNames) {
  EXPECT_EQ(ident_parameter_from_string("alpha2"), IdentParameter::alpha2);
  EXPECT_EQ(to_string(IdentParameter::c2), "c2");
  EXPECT_THROW(ident_parameter_from_string("beta"), DomainError);
}

}  // namespace
}  // namespace tendonsim
