#include "bb/symbols.hpp"

#include <algorithm>

namespace bb {

WeightValue weight(const DefiningFunctions& d, const SymbolOrder& o) {
  WeightValue w;
  auto apply = [&](double base, const Rational& r) {
    double e = -r.value();
    if (base == 0.0 && e < 0.0) {
      w.infinite = true;
      w.value = std::numeric_limits<double>::infinity();
      return;
    }
    if (e != 0.0) w.value *= std::pow(base, e);
  };
  apply(d.rho, o.m);
  if (w.infinite) return w;
  apply(d.xval, o.l);
  if (w.infinite) return w;
  apply(d.d_sigma, o.k);
  if (w.infinite) return w;
  apply(d.d_gamma, o.j);
  return w;
}

WeightValue weight(const CotangentPoint& p, const SymbolOrder& o) {
  return weight(defining_functions(p), o);
}

Inclusion includes(const SymbolOrder& o1, const SymbolOrder& o2) {
  if (order_leq(o1, o2)) return Inclusion::Proved;
  // combined exchange: S^{m,l,k,j} subset
  //   S^{m+(k-k'+s(j-j')_+)_+/2, l+t(j-j')_+/2, k', j'},  s+t=1
  Rational jgap = rational_pos(o1.j - o2.j);
  for (int si = 0; si <= 8; si++) {
    Rational s(si, 8), t(8 - si, 8);
    Rational m2 = o1.m + Rational(1, 2) * rational_pos(o1.k - o2.k + s * jgap);
    Rational l2 = o1.l + Rational(1, 2) * (t * jgap);
    if (m2 <= o2.m && l2 <= o2.l) return Inclusion::Proved;
  }
  // j-for-k exchange first, then k-for-rho
  Rational k2 = o1.k + jgap;
  Rational m2 = o1.m + Rational(1, 2) * rational_pos(k2 - o2.k);
  if (m2 <= o2.m && o1.l <= o2.l) return Inclusion::Proved;
  return Inclusion::Unknown;
}

// ---------------------------------------------------------------------------

namespace {

struct ApproachPath {
  std::string face;  // "rho", "x", "d_sigma", "d_gamma"
  std::vector<CotangentPoint> pts;
  std::vector<double> t;  // value of the approached defining function
};

std::vector<ApproachPath> build_paths(Rng& rng, const OrderEstimateOptions& o) {
  int nt = o.n - 1;
  int npts = o.pts_per_decade * o.decades;
  auto dir = [&](double norm) {
    VectorXd v(nt);
    for (int i = 0; i < nt; i++) v[i] = rng.normal();
    double nn = v.norm();
    return nn > 0 ? VectorXd(v * (norm / nn)) : VectorXd::Zero(nt);
  };
  auto ladder = [&](double t0) {
    std::vector<double> ts(npts);
    for (int i = 0; i < npts; i++) ts[i] = t0 * std::pow(10.0, -double(i) / o.pts_per_decade);
    return ts;
  };

  std::vector<ApproachPath> paths;
  for (int a = 0; a < o.anchors_per_face; a++) {
    double xbar = rng.log_uniform(0.05, 0.5);
    VectorXd ybar(nt);
    for (int i = 0; i < nt; i++) ybar[i] = rng.uniform(-0.5, 0.5);

    {  // fiber infinity: rho -> 0 at fixed tau != 0
      ApproachPath p;
      p.face = "rho";
      VectorXd tau = dir(rng.uniform(0.25, 0.5));
      for (double t : ladder(0.05)) {
        p.pts.push_back(from_rho_tau(xbar, ybar, t, tau));
        p.t.push_back(t);
      }
      paths.push_back(std::move(p));
    }
    {  // base: x -> 0 at fixed fiber
      ApproachPath p;
      p.face = "x";
      VectorXd tt = dir(rng.uniform(0.3, 0.6));
      double ds = rng.uniform(0.2, 0.5);
      for (double t : ladder(0.5)) {
        p.pts.push_back(from_dsigma_tautilde(t, ybar, ds, tt));
        p.t.push_back(t);
      }
      paths.push_back(std::move(p));
    }
    {  // first front face: d_sigma -> 0 at fixed tau_tilde
      ApproachPath p;
      p.face = "d_sigma";
      VectorXd tt = dir(rng.uniform(0.3, 0.7));
      for (double t : ladder(0.3)) {
        p.pts.push_back(from_dsigma_tautilde(xbar, ybar, t, tt));
        p.t.push_back(t);
      }
      paths.push_back(std::move(p));
    }
    {  // second front face: x ~ t^2, d_sigma ~ t, tau_tilde ~ t
      ApproachPath p;
      p.face = "d_gamma";
      double s0 = rng.uniform(0.3, 0.7);
      VectorXd tt0 = dir(rng.uniform(0.3, 0.7));
      double dg_scale = std::sqrt(1.0 + s0 * s0 + tt0.squaredNorm());
      for (double t : ladder(0.3)) {
        p.pts.push_back(from_dsigma_tautilde(t * t, ybar, t * s0, VectorXd(t * tt0)));
        p.t.push_back(t * dg_scale);
      }
      paths.push_back(std::move(p));
    }
  }
  return paths;
}

std::vector<std::vector<GeneratorVectorField>> enumerate_words(int n,
                                                               int max_len) {
  int nt = n - 1;
  std::vector<GeneratorVectorField> alphabet;
  alphabet.push_back({Gen::XDx, 0, 0});
  alphabet.push_back({Gen::RhoDRho, 0, 0});
  for (int j = 0; j < nt; j++) alphabet.push_back({Gen::Dy, 0, j});
  for (int j = 0; j < nt; j++) alphabet.push_back({Gen::DGamDSigDTau, 0, j});

  std::vector<std::vector<GeneratorVectorField>> words;
  words.push_back({});  // the empty word: f itself
  std::vector<std::vector<GeneratorVectorField>> frontier = {{}};
  for (int len = 1; len <= max_len; len++) {
    std::vector<std::vector<GeneratorVectorField>> next;
    for (const auto& w : frontier)
      for (const auto& g : alphabet) {
        auto w2 = w;
        w2.push_back(g);
        next.push_back(w2);
        words.push_back(w2);
      }
    frontier = std::move(next);
  }
  return words;
}

std::string word_name(const std::vector<GeneratorVectorField>& w) {
  if (w.empty()) return "id";
  std::string s;
  for (const auto& g : w) {
    if (!s.empty()) s += ".";
    switch (g.kind) {
      case Gen::XDx: s += "xDx"; break;
      case Gen::RhoDRho: s += "rhoDrho"; break;
      case Gen::Dy: s += "Dy" + std::to_string(g.j + 1); break;
      case Gen::DGamDSigDTau: s += "dGdSDtau" + std::to_string(g.j + 1); break;
      case Gen::TauDTau: s += "tauDtau"; break;
      case Gen::RhoDTau: s += "rhoDtau"; break;
      case Gen::SqrtXRhoDTau: s += "sxrDtau"; break;
    }
  }
  return s;
}

// Per-depth differencing steps: deeper nests need larger steps to keep
// rounding noise below truncation error.
double depth_step(int depth) {
  static const double steps[] = {1e-5, 1e-4, 6.3e-4, 2e-3};
  return steps[std::min(depth, 3)];
}

ScalarField word_field(const std::vector<GeneratorVectorField>& w,
                       const ScalarField& f) {
  ScalarField g = f;
  int depth = int(w.size());
  // apply from the innermost letter outward
  for (int k = int(w.size()) - 1; k >= 0; k--) {
    GeneratorVectorField gen = w[k];
    ScalarField inner = g;
    double h = depth_step(depth - 1 - k);
    g = [gen, inner, h](const CotangentPoint& p) {
      return apply_generator(gen, inner, p, h);
    };
  }
  return g;
}

}  // namespace

OrderEstimate estimate_order(const SymbolField& f,
                             const OrderEstimateOptions& opt) {
  Rng rng(opt.seed);
  auto paths = build_paths(rng, opt);
  auto words = enumerate_words(opt.n, opt.word_max_len);

  OrderEstimate est;
  est.m = est.l = est.k = est.j = -std::numeric_limits<double>::infinity();

  // per-face best (largest) slopes in the weight sense, per word
  for (const auto& w : words) {
    ScalarField wf = word_field(w, f.eval);
    double m_w = -std::numeric_limits<double>::infinity();
    double l_w = m_w, sk_w = m_w, sg_w = m_w;
    bool have[4] = {false, false, false, false};
    for (const auto& path : paths) {
      std::vector<double> lx, ly;
      for (size_t i = 0; i < path.pts.size(); i++) {
        double v = std::abs(wf(path.pts[i]));
        if (v > 1e-280 && std::isfinite(v)) {
          lx.push_back(std::log(path.t[i]));
          ly.push_back(std::log(v));
        }
      }
      WordSlope ws;
      ws.word = word_name(w);
      ws.face = path.face;
      if (lx.size() < path.pts.size() * 3 / 5) {
        ws.flagged = true;  // field vanishes along this approach
        est.slopes.push_back(ws);
        continue;
      }
      LineFit fit = fit_line(lx, ly);
      ws.slope = fit.slope;
      ws.r2 = fit.r2;
      ws.flagged = fit.r2 < opt.r2_min;
      est.slopes.push_back(ws);
      if (ws.flagged) continue;
      int fi = path.face == "rho" ? 0 : path.face == "x" ? 1 : path.face == "d_sigma" ? 2 : 3;
      double idx;
      switch (fi) {
        case 0: idx = -fit.slope; m_w = std::max(m_w, idx); have[0] = true; break;
        case 1: idx = -fit.slope; l_w = std::max(l_w, idx); have[1] = true; break;
        case 2: sk_w = std::max(sk_w, -fit.slope); have[2] = true; break;
        default: sg_w = std::max(sg_w, -fit.slope); have[3] = true; break;
      }
    }
    if (have[0]) est.m = std::max(est.m, m_w);
    if (have[1]) est.l = std::max(est.l, l_w);
    // the front-face paths see combined powers; strip the already-fitted ones
    if (have[2] && have[0]) est.k = std::max(est.k, sk_w - 2.0 * m_w);
    if (have[3] && have[0] && have[1] && have[2])
      est.j = std::max(est.j, sg_w - 2.0 * m_w - 2.0 * l_w - (sk_w - 2.0 * m_w));
  }
  auto fin = [](double& v) {
    if (!std::isfinite(v)) v = 0.0;
  };
  fin(est.m);
  fin(est.l);
  fin(est.k);
  fin(est.j);
  return est;
}

void write_order_report_csv(const std::string& path,
                            const std::vector<WordSlope>& slopes) {
  CsvWriter w(path, "word,face,slope,r2");
  for (const auto& s : slopes)
    w.row({s.word, s.face, fmt_g17(s.slope), fmt_g17(s.r2)});
}

// ---------------------------------------------------------------------------

std::vector<CotangentPoint> sample_region(const SampleRegion& region) {
  Rng rng(region.seed);
  int nt = region.n - 1;
  std::vector<CotangentPoint> pts;
  pts.reserve(region.count);
  int guard = 0;
  while (int(pts.size()) < region.count && guard < region.count * 50) {
    guard++;
    double x = rng.log_uniform(region.x_min, region.x_max);
    double ds = rng.log_uniform(region.ds_min, region.ds_max);
    VectorXd tt(nt);
    for (int i = 0; i < nt; i++) tt[i] = rng.normal();
    double nn = tt.norm();
    double tnorm = rng.uniform(0.0, region.tt_max);
    tt = nn > 0 ? VectorXd(tt * (tnorm / nn)) : VectorXd::Zero(nt);
    double rho = ds * ds * (1.0 - tt.squaredNorm());
    if (rho <= 0 || rho > region.rho_max) continue;
    VectorXd y(nt);
    for (int i = 0; i < nt; i++) y[i] = rng.uniform(-region.y_max, region.y_max);
    pts.push_back(from_dsigma_tautilde(x, y, ds, tt));
  }
  if (pts.empty()) throw std::invalid_argument("sample_region: empty region");
  return pts;
}

double is_elliptic(const SymbolField& f, const SampleRegion& region) {
  auto pts = sample_region(region);
  double c = std::numeric_limits<double>::infinity();
  int used = 0;
  for (const auto& p : pts) {
    if (f.support_hint && !f.support_hint(p)) continue;
    WeightValue w = weight(p, f.claimed_order);
    if (w.infinite || w.value <= 0) continue;
    c = std::min(c, std::abs(f.eval(p)) / w.value);
    used++;
  }
  if (used == 0) throw std::invalid_argument("is_elliptic: empty region");
  return c;
}

SymbolField reciprocal_symbol(
    const SymbolField& f,
    const std::function<double(const CotangentPoint&)>& cutoff) {
  SymbolField g;
  g.claimed_order = -f.claimed_order;
  g.fd_depth = f.fd_depth;
  ScalarField fe = f.eval;
  g.eval = [fe, cutoff](const CotangentPoint& p) -> Complex {
    double c = cutoff(p);
    if (c == 0.0) return Complex(0.0);
    return c / fe(p);
  };
  return g;
}

// ---------------------------------------------------------------------------

SymbolField assemble_three_term_symbol(const CoefficientFields& co) {
  SymbolField f;
  f.claimed_order = {Rational(-1), Rational(0), Rational(-2), Rational(-2)};
  f.eval = [co](const CotangentPoint& p) -> Complex {
    DefiningFunctions d = defining_functions(p);
    double r = d.rho;
    double re = co.a_m1(p.x, p.y, d.tau) * r + co.a_m3(p.x, p.y, d.tau) * r * r * r;
    double im = p.x * co.a_tilde(p.x, p.y, d.tau) * r * r;
    return Complex(re, im);
  };
  return f;
}

StructuralEllipticityReport structural_ellipticity_check(
    const CoefficientFields& co, const SampleRegion& region) {
  StructuralEllipticityReport rep;
  auto pts = sample_region(region);

  // hypothesis sampling
  double quad_lo = std::numeric_limits<double>::infinity(), quad_hi = 0.0;
  double im_lo = std::numeric_limits<double>::infinity();
  double a3_lo = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    DefiningFunctions d = defining_functions(p);
    double a1 = co.a_m1(p.x, p.y, d.tau);
    if (a1 < -1e-12) {
      rep.hypotheses_ok = false;
      rep.violation = "a_m1 negative at sample";
    }
    double t2 = d.tau.squaredNorm();
    if (t2 > 1e-12 && t2 < 0.04) {
      quad_lo = std::min(quad_lo, a1 / t2);
      quad_hi = std::max(quad_hi, a1 / t2);
    }
    if (t2 < 0.01) im_lo = std::min(im_lo, std::abs(co.a_tilde(p.x, p.y, d.tau)));
    if (t2 < 0.01 && p.x < 0.05) a3_lo = std::min(a3_lo, co.a_m3(p.x, p.y, d.tau));
  }
  if (rep.hypotheses_ok && !(quad_lo > 1e-9)) {
    rep.hypotheses_ok = false;
    rep.violation = "a_m1 does not vanish exactly quadratically on Sigma (lower bound fails)";
  }
  if (rep.hypotheses_ok && !(im_lo > 1e-9)) {
    rep.hypotheses_ok = false;
    rep.violation = "a_tilde vanishes near Sigma (subprincipal term degenerate)";
  }
  if (rep.hypotheses_ok && !(a3_lo > 1e-9)) {
    rep.hypotheses_ok = false;
    rep.violation = "a_m3 not positive near Sigma cap {x=0}";
  }

  SymbolField a = assemble_three_term_symbol(co);
  double cmin = std::numeric_limits<double>::infinity();
  double b1 = std::numeric_limits<double>::infinity();
  double b2 = std::numeric_limits<double>::infinity();
  double b3 = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    DefiningFunctions d = defining_functions(p);
    double wgt = d.rho * d.d_sigma * d.d_sigma * d.d_gamma * d.d_gamma;
    Complex av = a.eval(p);
    cmin = std::min(cmin, std::abs(av) / wgt);
    double dg2 = d.d_gamma * d.d_gamma;
    double tt2 = d.tau_tilde.squaredNorm();
    double ratio2 = d.d_sigma * d.d_sigma / dg2;
    if (d.rho_tilde >= 0.5) {
      double factor = tt2 / dg2 + ratio2 * d.rho_tilde * d.rho_tilde +
                      (p.x / dg2) * d.rho_tilde;
      b1 = std::min(b1, factor);
    }
    if (tt2 >= 0.5) {
      double factor = (tt2 + d.d_sigma * d.d_sigma * (1 - tt2) * (1 - tt2)) / dg2;
      b2 = std::min(b2, factor);
    }
    if (d.tau.squaredNorm() < 0.01 && p.x > 0) {
      b3 = std::min(b3, std::abs(av.imag()) / (p.x * d.rho * d.rho));
    }
  }
  rep.c_measured = cmin;
  rep.branch_rho_tilde = std::isfinite(b1) ? b1 : 0.0;
  rep.branch_tau = std::isfinite(b2) ? b2 : 0.0;
  rep.branch_imag = std::isfinite(b3) ? b3 : 0.0;
  return rep;
}

}  // namespace bb
