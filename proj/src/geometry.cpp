#include "bb/geometry.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace bb {

CotangentPoint make_point(double x, std::initializer_list<double> y, double xi,
                          std::initializer_list<double> eta) {
  CotangentPoint p;
  p.x = x;
  p.y = VectorXd(int(y.size()));
  int k = 0;
  for (double v : y) p.y[k++] = v;
  p.xi = xi;
  p.eta = VectorXd(int(eta.size()));
  k = 0;
  for (double v : eta) p.eta[k++] = v;
  return p;
}

DefiningFunctions defining_functions(const CotangentPoint& p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.xi) || !p.y.allFinite() ||
      !p.eta.allFinite())
    throw std::invalid_argument("defining_functions: non-finite point");
  if (p.x < 0.0)
    throw std::invalid_argument("defining_functions: x must be >= 0");
  int nt = int(p.eta.size());
  DefiningFunctions d;
  d.xval = p.x;
  d.rho = 1.0 / std::sqrt(1.0 + p.xi * p.xi + p.eta.squaredNorm());
  d.tau = VectorXd(nt);
  d.tau[0] = d.rho * p.xi;
  for (int i = 1; i < nt; i++) d.tau[i] = d.rho * p.eta[i];
  d.d_sigma = std::sqrt(d.tau.squaredNorm() + d.rho);
  d.tau_tilde = d.tau / d.d_sigma;
  d.rho_tilde = d.rho / (d.d_sigma * d.d_sigma);
  d.d_gamma = std::sqrt(p.x + d.d_sigma * d.d_sigma + d.tau_tilde.squaredNorm());
  return d;
}

CotangentPoint from_rho_tau(double x, const VectorXd& y, double rho,
                            const VectorXd& tau, int sign_eta1) {
  if (rho <= 0.0) throw std::invalid_argument("from_rho_tau: rho must be > 0");
  double r2 = rho * rho + tau.squaredNorm();
  if (r2 >= 1.0)
    throw std::invalid_argument("from_rho_tau: rho^2 + |tau|^2 must be < 1");
  CotangentPoint p;
  p.x = x;
  p.y = y;
  p.xi = tau[0] / rho;
  p.eta = VectorXd(tau.size());
  p.eta[0] = sign_eta1 * std::sqrt(1.0 - r2) / rho;
  for (int i = 1; i < tau.size(); i++) p.eta[i] = tau[i] / rho;
  return p;
}

CotangentPoint from_dsigma_tautilde(double x, const VectorXd& y, double ds,
                                    const VectorXd& tt, int sign_eta1) {
  double t2 = tt.squaredNorm();
  if (!(t2 < 1.0))
    throw std::invalid_argument("from_dsigma_tautilde: |tau_tilde| must be < 1");
  VectorXd tau = ds * tt;
  double rho = ds * ds * (1.0 - t2);
  return from_rho_tau(x, y, rho, tau, sign_eta1);
}

namespace {

// f along the (rho,tau) fiber chart with tau_j displaced by h.
Complex eval_tau_shift(const ScalarField& f, const CotangentPoint& p, int j,
                       double h) {
  DefiningFunctions d = defining_functions(p);
  VectorXd tau = d.tau;
  tau[j] += h;
  int sign = p.eta[0] >= 0 ? +1 : -1;
  return f(from_rho_tau(p.x, p.y, d.rho, tau, sign));
}

Complex eval_rho_scale(const ScalarField& f, const CotangentPoint& p,
                       double factor) {
  DefiningFunctions d = defining_functions(p);
  int sign = p.eta[0] >= 0 ? +1 : -1;
  return f(from_rho_tau(p.x, p.y, d.rho * factor, d.tau, sign));
}

}  // namespace

Complex x_d_x(const ScalarField& f, const CotangentPoint& p, double step) {
  if (p.x == 0.0) return Complex(0.0);
  CotangentPoint a = p, b = p;
  a.x = p.x * std::exp(step);
  b.x = p.x * std::exp(-step);
  return (f(a) - f(b)) / (2.0 * step);
}

Complex rho_d_rho(const ScalarField& f, const CotangentPoint& p, double step) {
  return (eval_rho_scale(f, p, std::exp(step)) -
          eval_rho_scale(f, p, std::exp(-step))) /
         (2.0 * step);
}

Complex d_tau(const ScalarField& f, const CotangentPoint& p, int j,
              double step) {
  DefiningFunctions d = defining_functions(p);
  double h = step * std::max(d.d_sigma, 1e-8);
  return (eval_tau_shift(f, p, j, h) - eval_tau_shift(f, p, j, -h)) / (2.0 * h);
}

Complex dsigma_d_dsigma(const ScalarField& f, const CotangentPoint& p,
                        double step) {
  DefiningFunctions d = defining_functions(p);
  int sign = p.eta[0] >= 0 ? +1 : -1;
  double up = d.d_sigma * std::exp(step), dn = d.d_sigma * std::exp(-step);
  Complex fu = f(from_dsigma_tautilde(p.x, p.y, up, d.tau_tilde, sign));
  Complex fd = f(from_dsigma_tautilde(p.x, p.y, dn, d.tau_tilde, sign));
  return (fu - fd) / (2.0 * step);
}

Complex dgamma_d_tautilde(const ScalarField& f, const CotangentPoint& p, int j,
                          double step) {
  DefiningFunctions d = defining_functions(p);
  int sign = p.eta[0] >= 0 ? +1 : -1;
  VectorXd ta = d.tau_tilde, tb = d.tau_tilde;
  double h = step;
  ta[j] += h;
  tb[j] -= h;
  Complex fu = f(from_dsigma_tautilde(p.x, p.y, d.d_sigma, ta, sign));
  Complex fd = f(from_dsigma_tautilde(p.x, p.y, d.d_sigma, tb, sign));
  return d.d_gamma * (fu - fd) / (2.0 * h);
}

Complex apply_generator(const GeneratorVectorField& V, const ScalarField& f,
                        const CotangentPoint& p, double step, ApplyInfo* info) {
  switch (V.kind) {
    case Gen::XDx:
      if (p.x == 0.0) {
        if (info) info->warning = "x == 0: x d/dx evaluated as 0 (tangency)";
        return Complex(0.0);
      }
      if (p.x < 1e-12 && info)
        info->warning = "x near 0: log-step differencing near underflow";
      return x_d_x(f, p, step);
    case Gen::Dy: {
      CotangentPoint a = p, b = p;
      double h = step * std::max(1.0, std::abs(p.y[V.j]));
      a.y[V.j] += h;
      b.y[V.j] -= h;
      return (f(a) - f(b)) / (2.0 * h);
    }
    case Gen::RhoDRho:
      return rho_d_rho(f, p, step);
    case Gen::DGamDSigDTau: {
      DefiningFunctions d = defining_functions(p);
      return d.d_gamma * d.d_sigma * d_tau(f, p, V.j, step);
    }
    case Gen::TauDTau: {
      DefiningFunctions d = defining_functions(p);
      return d.tau[V.i] * d_tau(f, p, V.j, step);
    }
    case Gen::RhoDTau: {
      DefiningFunctions d = defining_functions(p);
      return d.rho * d_tau(f, p, V.j, step);
    }
    case Gen::SqrtXRhoDTau: {
      DefiningFunctions d = defining_functions(p);
      if (p.x == 0.0) {
        if (info) info->warning = "x == 0: x^{1/2}rho^{1/2} d/dtau is 0";
        return Complex(0.0);
      }
      return std::sqrt(p.x * d.rho) * d_tau(f, p, V.j, step);
    }
  }
  return Complex(0.0);
}

CotangentPoint sample_point(Rng& rng, int n, double x_min, double x_max) {
  int nt = n - 1;
  double x = rng.log_uniform(x_min, x_max);
  VectorXd y(nt);
  for (int i = 0; i < nt; i++) y[i] = rng.uniform(-1.0, 1.0);
  // fiber via the blow-up chart: keeps all faces at sane distances
  double ds = rng.log_uniform(0.05, 0.7);
  double tnorm = rng.uniform(0.0, 0.95);
  VectorXd tt(nt);
  for (int i = 0; i < nt; i++) tt[i] = rng.normal();
  double nn = tt.norm();
  tt = nn > 0 ? VectorXd(tt * (tnorm / nn)) : VectorXd::Zero(nt);
  CotangentPoint p = from_dsigma_tautilde(x, y, ds, tt, rng.uniform() < 0.5 ? -1 : 1);
  return p;
}

namespace {

struct Identity {
  std::string name;
  // evaluates (lhs - rhs) at p for index pair (i,j); indices ignored when
  // the identity has none
  std::function<Complex(const CotangentPoint&, int, int, double)> residual;
  bool uses_i = false;
  bool uses_j = false;
};

ScalarField field_dsigma() {
  return [](const CotangentPoint& q) { return Complex(defining_functions(q).d_sigma); };
}
ScalarField field_rhotilde() {
  return [](const CotangentPoint& q) { return Complex(defining_functions(q).rho_tilde); };
}
ScalarField field_tautilde(int i) {
  return [i](const CotangentPoint& q) { return Complex(defining_functions(q).tau_tilde[i]); };
}
ScalarField field_dgamma() {
  return [](const CotangentPoint& q) { return Complex(defining_functions(q).d_gamma); };
}
ScalarField field_ds_over_dg() {
  return [](const CotangentPoint& q) {
    auto d = defining_functions(q);
    return Complex(d.d_sigma / d.d_gamma);
  };
}
ScalarField field_x_over_dg2() {
  return [](const CotangentPoint& q) {
    auto d = defining_functions(q);
    return Complex(q.x / (d.d_gamma * d.d_gamma));
  };
}
ScalarField field_tt_over_dg(int i) {
  return [i](const CotangentPoint& q) {
    auto d = defining_functions(q);
    return Complex(d.tau_tilde[i] / d.d_gamma);
  };
}

std::vector<Identity> identity_table() {
  std::vector<Identity> ids;
  auto add = [&](const std::string& name, bool ui, bool uj, auto fn) {
    ids.push_back({name, fn, ui, uj});
  };

  // --- first blow-up: rho d/drho and d_sigma d/dtau_j against d_sigma,
  //     rho_tilde, tau_tilde_i ---
  add("rho_drho(d_sigma)", false, false,
      [](const CotangentPoint& p, int, int, double h) {
        auto d = defining_functions(p);
        return rho_d_rho(field_dsigma(), p, h) -
               Complex(0.5 * d.d_sigma * d.rho_tilde);
      });
  add("dsig_dtau_j(d_sigma)", false, true,
      [](const CotangentPoint& p, int, int j, double h) {
        auto d = defining_functions(p);
        return d.d_sigma * d_tau(field_dsigma(), p, j, h) - Complex(d.tau[j]);
      });
  add("rho_drho(rho_tilde)", false, false,
      [](const CotangentPoint& p, int, int, double h) {
        auto d = defining_functions(p);
        return rho_d_rho(field_rhotilde(), p, h) -
               Complex(d.rho_tilde - d.rho_tilde * d.rho_tilde);
      });
  add("dsig_dtau_j(rho_tilde)", false, true,
      [](const CotangentPoint& p, int, int j, double h) {
        auto d = defining_functions(p);
        return d.d_sigma * d_tau(field_rhotilde(), p, j, h) -
               Complex(-2.0 * d.rho_tilde * d.tau_tilde[j]);
      });
  add("rho_drho(tau_tilde_i)", true, false,
      [](const CotangentPoint& p, int i, int, double h) {
        auto d = defining_functions(p);
        return rho_d_rho(field_tautilde(i), p, h) -
               Complex(-0.5 * d.rho_tilde * d.tau_tilde[i]);
      });
  add("dsig_dtau_j(tau_tilde_i)", true, true,
      [](const CotangentPoint& p, int i, int j, double h) {
        auto d = defining_functions(p);
        double delta = i == j ? 1.0 : 0.0;
        return d.d_sigma * d_tau(field_tautilde(i), p, j, h) -
               Complex(delta - d.tau_tilde[i] * d.tau_tilde[j]);
      });
  add("taui_dtau_j(tau_tilde_k)", true, true,
      [](const CotangentPoint& p, int i, int j, double h) {
        // k is tied to i to keep the loop two-dimensional
        auto d = defining_functions(p);
        double delta = j == i ? 1.0 : 0.0;
        return d.tau[i] * d_tau(field_tautilde(i), p, j, h) -
               Complex(d.tau_tilde[i] * (delta - d.tau_tilde[j] * d.tau_tilde[i]));
      });

  // --- second blow-up: d_sigma d/dd_sigma, d_gamma d/dtt_j, x d/dx against
  //     d_gamma, d_sigma/d_gamma, x/d_gamma^2, tt_i/d_gamma ---
  auto r2 = [](const CotangentPoint& p) {
    auto d = defining_functions(p);
    struct {
      double dg, rat, xg2;
    } v{d.d_gamma, d.d_sigma / d.d_gamma, p.x / (d.d_gamma * d.d_gamma)};
    return v;
  };

  add("dsig_ddsig(d_gamma)", false, false,
      [r2](const CotangentPoint& p, int, int, double h) {
        auto v = r2(p);
        return dsigma_d_dsigma(field_dgamma(), p, h) -
               Complex(v.dg * v.rat * v.rat);
      });
  add("dgam_dtt_j(d_gamma)", false, true,
      [](const CotangentPoint& p, int, int j, double h) {
        auto d = defining_functions(p);
        return dgamma_d_tautilde(field_dgamma(), p, j, h) -
               Complex(d.tau_tilde[j]);
      });
  add("xdx(d_gamma)", false, false,
      [r2](const CotangentPoint& p, int, int, double h) {
        auto v = r2(p);
        return x_d_x(field_dgamma(), p, h) - Complex(v.dg * 0.5 * v.xg2);
      });
  add("dsig_ddsig(ds/dg)", false, false,
      [r2](const CotangentPoint& p, int, int, double h) {
        auto v = r2(p);
        return dsigma_d_dsigma(field_ds_over_dg(), p, h) -
               Complex(v.rat * (1.0 - v.rat * v.rat));
      });
  add("dgam_dtt_j(ds/dg)", false, true,
      [r2](const CotangentPoint& p, int, int j, double h) {
        auto d = defining_functions(p);
        auto v = r2(p);
        return dgamma_d_tautilde(field_ds_over_dg(), p, j, h) -
               Complex(-v.rat * d.tau_tilde[j] / d.d_gamma);
      });
  add("xdx(ds/dg)", false, false,
      [r2](const CotangentPoint& p, int, int, double h) {
        auto v = r2(p);
        return x_d_x(field_ds_over_dg(), p, h) -
               Complex(-v.rat * 0.5 * v.xg2);
      });
  add("dsig_ddsig(x/dg^2)", false, false,
      [r2](const CotangentPoint& p, int, int, double h) {
        auto v = r2(p);
        return dsigma_d_dsigma(field_x_over_dg2(), p, h) -
               Complex(-2.0 * v.xg2 * v.rat * v.rat);
      });
  add("dgam_dtt_j(x/dg^2)", false, true,
      [r2](const CotangentPoint& p, int, int j, double h) {
        auto d = defining_functions(p);
        auto v = r2(p);
        return dgamma_d_tautilde(field_x_over_dg2(), p, j, h) -
               Complex(-2.0 * v.xg2 * d.tau_tilde[j] / d.d_gamma);
      });
  add("xdx(x/dg^2)", false, false,
      [r2](const CotangentPoint& p, int, int, double h) {
        auto v = r2(p);
        return x_d_x(field_x_over_dg2(), p, h) -
               Complex(v.xg2 * (1.0 - v.xg2));
      });
  add("dsig_ddsig(tt_i/dg)", true, false,
      [r2](const CotangentPoint& p, int i, int, double h) {
        auto d = defining_functions(p);
        auto v = r2(p);
        return dsigma_d_dsigma(field_tt_over_dg(i), p, h) -
               Complex(-v.rat * v.rat * d.tau_tilde[i] / d.d_gamma);
      });
  add("dgam_dtt_j(tt_i/dg)", true, true,
      [](const CotangentPoint& p, int i, int j, double h) {
        auto d = defining_functions(p);
        double delta = i == j ? 1.0 : 0.0;
        double ti = d.tau_tilde[i] / d.d_gamma, tj = d.tau_tilde[j] / d.d_gamma;
        return dgamma_d_tautilde(field_tt_over_dg(i), p, j, h) -
               Complex(delta - ti * tj);
      });
  add("xdx(tt_i/dg)", true, false,
      [r2](const CotangentPoint& p, int i, int, double h) {
        auto d = defining_functions(p);
        auto v = r2(p);
        return x_d_x(field_tt_over_dg(i), p, h) -
               Complex(-(d.tau_tilde[i] / d.d_gamma) * 0.5 * v.xg2);
      });
  return ids;
}

}  // namespace

std::vector<IdentityResult> lift_identity_suite(const IdentitySuiteOptions& opt) {
  Rng rng(opt.seed);
  std::vector<CotangentPoint> cloud;
  cloud.reserve(opt.points);
  for (int i = 0; i < opt.points; i++) {
    int n = opt.dims[rng.next_u64() % opt.dims.size()];
    cloud.push_back(sample_point(rng, n, opt.x_min, opt.x_max));
  }

  std::vector<Identity> ids = identity_table();
  std::vector<IdentityResult> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    IdentityResult r;
    r.name = id.name;
    for (const auto& p : cloud) {
      int nt = int(p.eta.size());
      int imax = id.uses_i ? nt : 1;
      int jmax = id.uses_j ? nt : 1;
      for (int i = 0; i < imax; i++)
        for (int j = 0; j < jmax; j++) {
          double res = std::abs(id.residual(p, i, j, opt.step));
          r.max_residual = std::max(r.max_residual, res);
        }
      r.points_tested++;
    }
    out.push_back(r);
  }
  return out;
}

void write_point_cloud_csv(const std::string& path,
                           const std::vector<CotangentPoint>& pts) {
  if (pts.empty()) throw std::invalid_argument("empty point cloud");
  int nt = int(pts[0].y.size());
  std::string header = "x";
  for (int i = 0; i < nt; i++) header += ",y" + std::to_string(i + 1);
  header += ",xi";
  for (int i = 0; i < nt; i++) header += ",eta" + std::to_string(i + 1);
  CsvWriter w(path, header);
  for (const auto& p : pts) {
    std::vector<std::string> cells;
    cells.push_back(fmt_g17(p.x));
    for (int i = 0; i < nt; i++) cells.push_back(fmt_g17(p.y[i]));
    cells.push_back(fmt_g17(p.xi));
    for (int i = 0; i < nt; i++) cells.push_back(fmt_g17(p.eta[i]));
    w.row(cells);
  }
}

std::vector<CotangentPoint> read_point_cloud_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
  int cols = 1 + int(std::count(line.begin(), line.end(), ','));
  if (cols < 4 || cols % 2 != 0)
    throw std::runtime_error("point cloud csv must have 2n columns: " + path);
  int nt = (cols - 2) / 2;
  std::vector<CotangentPoint> pts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (int(v.size()) != cols)
      throw std::runtime_error("bad row in point cloud csv: " + path);
    CotangentPoint p;
    p.x = v[0];
    p.y = VectorXd(nt);
    for (int i = 0; i < nt; i++) p.y[i] = v[1 + i];
    p.xi = v[1 + nt];
    p.eta = VectorXd(nt);
    for (int i = 0; i < nt; i++) p.eta[i] = v[2 + nt + i];
    pts.push_back(p);
  }
  return pts;
}

void write_identity_report_csv(const std::string& path,
                               const std::vector<IdentityResult>& results) {
  CsvWriter w(path, "identity_name,max_residual,points_tested");
  for (const auto& r : results)
    w.row({r.name, fmt_g17(r.max_residual), std::to_string(r.points_tested)});
}

}  // namespace bb
