#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bb/util.hpp"

namespace bb {

// Point of the (interior of the) compactified scattering cotangent bundle in
// a foliation chart: fiber element xi*dx/x^2 + eta.dy/x over base (x,y).
// y and eta have length n-1; eta(0) is the distinguished direction spanning S.
struct CotangentPoint {
  double x = 0.0;
  VectorXd y;
  double xi = 0.0;
  VectorXd eta;

  int dim() const { return 1 + int(y.size()); }
};

CotangentPoint make_point(double x, std::initializer_list<double> y, double xi,
                          std::initializer_list<double> eta);

// The boundary-defining functions of the twice-blown-up space at a point.
//   rho      = <(xi,eta)>^{-1}           (fiber infinity)
//   tau      = (rho*xi, rho*eta_2, ...)  (length n-1)
//   d_sigma  = (|tau|^2 + rho)^{1/2}     (first front face)
//   tau_tilde= tau/d_sigma, rho_tilde = rho/d_sigma^2
//   d_gamma  = (x + d_sigma^2 + |tau_tilde|^2)^{1/2}  (second front face)
struct DefiningFunctions {
  double rho = 0.0;
  double xval = 0.0;
  VectorXd tau;
  VectorXd tau_tilde;
  double rho_tilde = 0.0;
  double d_sigma = 0.0;
  double d_gamma = 0.0;
};

DefiningFunctions defining_functions(const CotangentPoint& p);

// Inverse chart maps. Near Sigma the fiber is parametrized by (rho, tau)
// with eta_1 = sign*sqrt(1 - rho^2 - |tau|^2)/rho; requires rho^2+|tau|^2 < 1.
CotangentPoint from_rho_tau(double x, const VectorXd& y, double rho,
                            const VectorXd& tau, int sign_eta1 = +1);
// Chart adapted to the first blow-up: tau = ds*tt, rho = ds^2*(1-|tt|^2).
CotangentPoint from_dsigma_tautilde(double x, const VectorXd& y, double ds,
                                    const VectorXd& tt, int sign_eta1 = +1);

// Generators of the boundary-tangent vector fields on the blown-up space
// (first four span V_2 over smooth functions; the rest extend to V_{2,c}).
enum class Gen {
  XDx,            // x d/dx
  Dy,             // d/dy_j
  RhoDRho,        // rho d/drho        (fiber chart (rho,tau))
  DGamDSigDTau,   // d_gamma d_sigma d/dtau_j
  TauDTau,        // tau_i d/dtau_j
  RhoDTau,        // rho d/dtau_j
  SqrtXRhoDTau,   // x^{1/2} rho^{1/2} d/dtau_j
};

struct GeneratorVectorField {
  Gen kind = Gen::XDx;
  int i = 0;  // first index where applicable
  int j = 0;  // second index where applicable
};

using ScalarField = std::function<Complex(const CotangentPoint&)>;

struct ApplyInfo {
  std::string warning;  // nonempty on precision degradation (e.g. x == 0)
};

// (Vf)(p) by central differences in the appropriate chart. Multiplicative
// generators (x d/dx, rho d/drho) difference in the log of the coordinate.
Complex apply_generator(const GeneratorVectorField& V, const ScalarField& f,
                        const CotangentPoint& p, double step = 1e-5,
                        ApplyInfo* info = nullptr);

// Chart-level directional derivatives used by the lift-identity suite.
// These act in the (x, y, d_sigma, tau_tilde) chart of the first blow-up.
Complex dsigma_d_dsigma(const ScalarField& f, const CotangentPoint& p,
                        double step = 1e-5);
Complex dgamma_d_tautilde(const ScalarField& f, const CotangentPoint& p, int j,
                          double step = 1e-5);
Complex x_d_x(const ScalarField& f, const CotangentPoint& p,
              double step = 1e-5);
Complex rho_d_rho(const ScalarField& f, const CotangentPoint& p,
                  double step = 1e-5);
Complex d_tau(const ScalarField& f, const CotangentPoint& p, int j,
              double step = 1e-5);

struct IdentityResult {
  std::string name;
  double max_residual = 0.0;
  int points_tested = 0;
};

struct IdentitySuiteOptions {
  int points = 1000;
  uint64_t seed = 1;
  double step = 1e-5;
  double x_min = 1e-3;
  double x_max = 1.0;
  // dimensions sampled for the cloud; identities are dimension-generic
  std::vector<int> dims = {2, 3};
};

// Every closed-form lift identity of the two blow-up tables, evaluated on a
// random cloud; finite differences against the stated right-hand sides.
std::vector<IdentityResult> lift_identity_suite(const IdentitySuiteOptions& opt);

// Random interior point with all defining functions within sane ranges.
CotangentPoint sample_point(Rng& rng, int n, double x_min, double x_max);

void write_point_cloud_csv(const std::string& path,
                           const std::vector<CotangentPoint>& pts);
std::vector<CotangentPoint> read_point_cloud_csv(const std::string& path);
void write_identity_report_csv(const std::string& path,
                               const std::vector<IdentityResult>& results);

}  // namespace bb
