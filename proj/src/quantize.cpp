#include "bb/quantize.hpp"

#include <unsupported/Eigen/FFT>

namespace bb {

double chi_window(double s, double plateau, double support) {
  double r2 = s * s;
  double p2 = plateau * plateau, s2 = support * support;
  if (r2 <= p2) return 1.0;
  if (r2 >= s2) return 0.0;
  return smoothstep((s2 - r2) / (s2 - p2));
}

namespace {

CotangentPoint cpoint(double x, double y, double xi, double eta) {
  CotangentPoint p;
  p.x = x;
  p.y = VectorXd::Constant(1, y);
  p.xi = xi;
  p.eta = VectorXd::Constant(1, eta);
  return p;
}

struct FiberGrid {
  int P, Q;
  double dxi, deta;
  double dX, dY;
  double xi(int p) const { return (p - P / 2) * dxi; }
  double eta(int q) const { return (q - Q / 2) * deta; }
  double X(int u) const { return (u - P / 2) * dX; }
  double Y(int v) const { return (v - Q / 2) * dY; }
};

FiberGrid fiber_grid(const GridSpec& g) {
  FiberGrid f;
  f.P = g.p_xi;
  f.Q = g.p_eta;
  f.dxi = 2.0 * g.xi_max / g.p_xi;
  f.deta = 2.0 * g.eta_max / g.p_eta;
  f.dX = M_PI / g.xi_max;
  f.dY = M_PI / g.eta_max;
  return f;
}

// K_{uv} = (2pi)^{-2} sum_{pq} e^{i(xi_p X_u + eta_q Y_v)} a_{pq} dxi deta,
// on the centered integer grids; reduces to sign-twisted inverse FFTs.
MatrixXcd kernel_from_fiber(const FiberGrid& f, const MatrixXcd& a) {
  MatrixXcd b(f.P, f.Q);
  for (int p = 0; p < f.P; p++)
    for (int q = 0; q < f.Q; q++)
      b(p, q) = ((p + q) & 1) ? -a(p, q) : a(p, q);
  Eigen::FFT<double> fft;
  // rows: transform in q for each p
  MatrixXcd c(f.P, f.Q);
  std::vector<Complex> in(f.Q), out(f.Q);
  for (int p = 0; p < f.P; p++) {
    for (int q = 0; q < f.Q; q++) in[q] = b(p, q);
    fft.inv(out, in);
    for (int q = 0; q < f.Q; q++) c(p, q) = out[q] * double(f.Q);
  }
  std::vector<Complex> in2(f.P), out2(f.P);
  for (int q = 0; q < f.Q; q++) {
    for (int p = 0; p < f.P; p++) in2[p] = c(p, q);
    fft.inv(out2, in2);
    for (int p = 0; p < f.P; p++) c(p, q) = out2[p] * double(f.P);
  }
  double scale = (f.dxi / (2.0 * M_PI)) * (f.deta / (2.0 * M_PI));
  for (int u = 0; u < f.P; u++)
    for (int v = 0; v < f.Q; v++)
      c(u, v) *= ((u + v) & 1) ? -scale : scale;
  return c;
}

struct SplatTarget {
  int ix0;
  double tx;
  bool x_ok;
};

SplatTarget locate_x(const GridSpec& g, double xp) {
  SplatTarget t;
  const auto& xs = g.x_nodes;
  if (xp < xs.front() || xp > xs.back()) {
    t.x_ok = false;
    return t;
  }
  int ix = int(std::upper_bound(xs.begin(), xs.end(), xp) - xs.begin()) - 1;
  ix = std::clamp(ix, 0, g.nx() - 2);
  t.ix0 = ix;
  t.tx = (xp - xs[ix]) / (xs[ix + 1] - xs[ix]);
  t.x_ok = true;
  return t;
}

struct RowStats {
  double kept = 0.0, dropped = 0.0;
};

// Splat the kernel value val at (x', y-offset sy in index units) into the
// given matrix row.
void splat(const GridSpec& g, MatrixXcd& M, std::int64_t row,
           const SplatTarget& tx, double sy_index, int iy_row, Complex val,
           bool nearest, RowStats& st) {
  double a = std::abs(val);
  if (!tx.x_ok) {
    st.dropped += a;
    return;
  }
  double s = iy_row + sy_index;
  if (s < 0.0 || s > g.ny - 1) {
    st.dropped += a;
    return;
  }
  int iy = std::clamp(int(s), 0, g.ny - 2);
  double ty = s - iy;
  st.kept += a;
  if (nearest) {
    int jx = tx.tx < 0.5 ? tx.ix0 : tx.ix0 + 1;
    int jy = ty < 0.5 ? iy : iy + 1;
    M(row, g.index(jx, jy)) += val;
    return;
  }
  M(row, g.index(tx.ix0, iy)) += val * ((1 - tx.tx) * (1 - ty));
  M(row, g.index(tx.ix0, iy + 1)) += val * ((1 - tx.tx) * ty);
  M(row, g.index(tx.ix0 + 1, iy)) += val * (tx.tx * (1 - ty));
  M(row, g.index(tx.ix0 + 1, iy + 1)) += val * (tx.tx * ty);
}

void check_edge_mass(const GridSpec& g, const FiberGrid& f, const MatrixXcd& K,
                     double x, const QuantizeOptions& opt) {
  double avail_X = 0.5 * f.P * f.dX, avail_Y = 0.5 * f.Q * f.dY;
  double need = opt.chi_support / x;
  if (avail_X >= need && avail_Y >= need) return;
  double total = 0, edge = 0;
  int bx = int(0.45 * f.P), by = int(0.45 * f.Q);
  for (int u = 0; u < f.P; u++)
    for (int v = 0; v < f.Q; v++) {
      double m = std::abs(K(u, v));
      total += m;
      if (std::abs(u - f.P / 2) >= bx || std::abs(v - f.Q / 2) >= by) edge += m;
    }
  if (total <= 0) return;
  if (edge / total > opt.edge_mass_tol && opt.refuse_on_edge_mass) {
    // required count so that P*dX/2 = pi*P/(2 xi_max) >= chi_support/x
    int preq = 4;
    while (M_PI * preq / (2.0 * std::max(g.xi_max, g.eta_max)) < need)
      preq *= 2;
    throw std::runtime_error(
        "quantize: fiber grid does not cover the cutoff window at x = " +
        fmt_g17(x) + "; need fiber counts >= " + std::to_string(preq) +
        " at this extent (edge mass " + fmt_g17(edge / total) + ")");
  }
}

}  // namespace

KernelMatrix quantize(const SymbolField& a, const GridSpec& g,
                      const QuantizeOptions& opt) {
  g.validate();
  if (g.n != 2)
    throw std::invalid_argument("quantize: dense assembly requires n == 2");
  FiberGrid f = fiber_grid(g);
  KernelMatrix km;
  km.grid = g;
  km.weights = g.measure_weights();
  km.entries = MatrixXcd::Zero(g.node_count(), g.node_count());

  std::vector<RowStats> stats(g.nx());

  parallel_for(g.nx(), opt.jobs, [&](std::int64_t ixl) {
    int ix = int(ixl);
    double x = g.x_nodes[ix];
    double dual_cell = f.dX * f.dY;
    // one kernel per (x, y_row); with a y-independent symbol one slice serves
    // every row at this x
    int row_reps = opt.y_invariant ? 1 : g.ny;
    for (int rep = 0; rep < row_reps; rep++) {
      MatrixXcd fiber(f.P, f.Q);
      double y_for_symbol = opt.y_invariant ? g.y_of(g.ny / 2) : g.y_of(rep);
      for (int p = 0; p < f.P; p++)
        for (int q = 0; q < f.Q; q++)
          fiber(p, q) = a.eval(cpoint(x, y_for_symbol, f.xi(p), f.eta(q)));
      MatrixXcd K = kernel_from_fiber(f, fiber);
      check_edge_mass(g, f, K, x, opt);

      // precompute per-dual-node cutoff, targets
      int iy_lo = opt.y_invariant ? 0 : rep;
      int iy_hi = opt.y_invariant ? g.ny - 1 : rep;
      for (int u = 0; u < f.P; u++) {
        double X = f.X(u);
        double xp = x + x * x * X;
        SplatTarget tx = locate_x(g, xp);
        for (int v = 0; v < f.Q; v++) {
          double Y = f.Y(v);
          double cut = chi_window(std::hypot(x * X, x * Y), opt.chi_plateau,
                                  opt.chi_support);
          if (cut == 0.0) continue;
          Complex val = K(u, v) * cut * dual_cell;
          double sy = x * Y / g.dy;
          for (int iy = iy_lo; iy <= iy_hi; iy++)
            splat(g, km.entries, g.index(ix, iy), tx, sy, iy, val,
                  opt.nearest_neighbor, stats[ix]);
        }
      }
    }
  });
  for (const auto& s : stats) {
    km.mass_kept += s.kept;
    km.mass_dropped += s.dropped;
  }
  return km;
}

KernelMatrix quantize(const FullSymbolField& a, const GridSpec& g,
                      const QuantizeOptions& opt) {
  g.validate();
  if (g.n != 2)
    throw std::invalid_argument("quantize: dense assembly requires n == 2");
  FiberGrid f = fiber_grid(g);
  KernelMatrix km;
  km.grid = g;
  km.weights = g.measure_weights();
  km.entries = MatrixXcd::Zero(g.node_count(), g.node_count());
  std::vector<RowStats> stats(g.nx() * g.ny);

  double dual_cell = f.dX * f.dY;
  double fiber_cell = f.dxi * f.deta;
  parallel_for(g.node_count(), opt.jobs, [&](std::int64_t rowi) {
    int ix = int(rowi / g.ny), iy = int(rowi % g.ny);
    double x = g.x_nodes[ix], y = g.y_of(iy);
    VectorXd Yv(1);
    for (int u = 0; u < f.P; u++) {
      double X = f.X(u);
      double xp = x + x * x * X;
      SplatTarget tx = locate_x(g, xp);
      for (int v = 0; v < f.Q; v++) {
        double Y = f.Y(v);
        double cut = chi_window(std::hypot(x * X, x * Y), opt.chi_plateau,
                                opt.chi_support);
        if (cut == 0.0) continue;
        // direct oscillatory sum over the fiber grid at this dual node;
        // phase factors advance by recurrence
        Complex acc = 0.0;
        Yv[0] = Y;
        Complex step_x = std::polar(1.0, f.dxi * X);
        Complex step_y = std::polar(1.0, f.deta * Y);
        Complex phase_x = std::polar(1.0, f.xi(0) * X);
        for (int p = 0; p < f.P; p++) {
          double xi = f.xi(p);
          Complex ph = phase_x * std::polar(1.0, f.eta(0) * Y);
          for (int q = 0; q < f.Q; q++) {
            acc += ph * a.eval(cpoint(x, y, xi, f.eta(q)), X, Yv);
            ph *= step_y;
          }
          phase_x *= step_x;
        }
        acc *= fiber_cell / (4.0 * M_PI * M_PI);
        Complex val = acc * cut * dual_cell;
        double sy = x * Y / g.dy;
        splat(g, km.entries, rowi, tx, sy, iy, val, opt.nearest_neighbor,
              stats[rowi]);
      }
    }
  });
  for (const auto& s : stats) {
    km.mass_kept += s.kept;
    km.mass_dropped += s.dropped;
  }
  return km;
}

// ---------------------------------------------------------------------------

namespace {

// weights of the 3-point central stencil for derivative order 0..2,
// offsets {-h, 0, +h}
void stencil_weights(int order, double h, double w[3]) {
  switch (order) {
    case 0:
      w[0] = 0.0;
      w[1] = 1.0;
      w[2] = 0.0;
      break;
    case 1:
      w[0] = -0.5 / h;
      w[1] = 0.0;
      w[2] = 0.5 / h;
      break;
    case 2:
      w[0] = 1.0 / (h * h);
      w[1] = -2.0 / (h * h);
      w[2] = 1.0 / (h * h);
      break;
    default:
      throw std::invalid_argument("stencil order > 2 not supported");
  }
}

double factorial(int k) {
  double f = 1;
  for (int i = 2; i <= k; i++) f *= i;
  return f;
}

Complex ipow(int k) {
  switch (k & 3) {
    case 0: return {1, 0};
    case 1: return {0, 1};
    case 2: return {-1, 0};
    default: return {0, -1};
  }
}

// All derivatives up to order 2 per axis come from one shared 3x3 (or
// 3x3x3x3) table of evaluations; the combinatorial trees of repeated
// compositions stay affordable this way.
struct Stencil2 {
  Complex v[3][3];
  double h1, h2;
  Complex deriv(int o1, int o2) const {
    double w1[3], w2[3];
    stencil_weights(o1, h1, w1);
    stencil_weights(o2, h2, w2);
    Complex acc = 0.0;
    for (int i = 0; i < 3; i++) {
      if (w1[i] == 0.0) continue;
      for (int j = 0; j < 3; j++) {
        if (w2[j] == 0.0) continue;
        acc += w1[i] * w2[j] * v[i][j];
      }
    }
    return acc;
  }
};

// differencing step per expression depth: deeper finite-difference trees
// carry truncation dust that a smaller outer step would amplify
double depth_scale(int depth) {
  static const double sc[] = {5e-4, 8e-3, 5e-2, 1e-1};
  return sc[std::min(depth, 3)];
}

Stencil2 fiber_stencil(const ScalarField& a, double x, double y, double xi,
                       double eta, int depth) {
  Stencil2 s;
  double sc = std::sqrt(1.0 + xi * xi + eta * eta);
  s.h1 = s.h2 = depth_scale(depth) * sc;
  for (int i = 0; i < 3; i++)
    for (int j = 0; j < 3; j++)
      s.v[i][j] = a(cpoint(x, y, xi + (i - 1) * s.h1, eta + (j - 1) * s.h2));
  return s;
}

using FullEval =
    std::function<Complex(const CotangentPoint&, double, const VectorXd&)>;

Stencil2 dual_stencil(const FullEval& a, double x, double y, double xi,
                      double eta, int depth) {
  Stencil2 s;
  s.h1 = s.h2 = depth_scale(depth) / std::max(x, 1e-8);
  CotangentPoint p = cpoint(x, y, xi, eta);
  VectorXd Yv(1);
  for (int i = 0; i < 3; i++)
    for (int j = 0; j < 3; j++) {
      Yv[0] = (j - 1) * s.h2;
      s.v[i][j] = a(p, (i - 1) * s.h1, Yv);
    }
  return s;
}

}  // namespace

SymbolField left_reduce(const FullSymbolField& a, int N,
                        SymbolOrder* remainder_order) {
  if (N < 1 || N > 3)
    throw std::invalid_argument("left_reduce: N in [1,3] supported");
  FullEval ae = a.eval;
  SymbolField out;
  out.claimed_order = a.claimed_order;
  out.fd_depth = a.fd_depth + 1;
  int dep = a.fd_depth;
  out.eval = [ae, N, dep](const CotangentPoint& p) -> Complex {
    // shared 3^4 table over (xi,eta,X,Y)
    double sc = std::sqrt(1.0 + p.xi * p.xi + p.eta[0] * p.eta[0]);
    double hf = depth_scale(dep) * sc;
    double hd = depth_scale(dep) / std::max(p.x, 1e-8);
    Complex tab[3][3][3][3];
    VectorXd Yv(1);
    for (int i = 0; i < 3; i++)
      for (int j = 0; j < 3; j++) {
        CotangentPoint q =
            cpoint(p.x, p.y[0], p.xi + (i - 1) * hf, p.eta[0] + (j - 1) * hf);
        for (int u = 0; u < 3; u++)
          for (int v = 0; v < 3; v++) {
            Yv[0] = (v - 1) * hd;
            tab[i][j][u][v] = ae(q, (u - 1) * hd, Yv);
          }
      }
    Complex acc = 0.0;
    for (int a1 = 0; a1 < N; a1++)
      for (int a2 = 0; a2 + a1 < N; a2++) {
        double w1[3], w2[3], w3[3], w4[3];
        stencil_weights(a1, hf, w1);
        stencil_weights(a2, hf, w2);
        stencil_weights(a1, hd, w3);
        stencil_weights(a2, hd, w4);
        Complex d = 0.0;
        for (int i = 0; i < 3; i++) {
          if (w1[i] == 0.0) continue;
          for (int j = 0; j < 3; j++) {
            if (w2[j] == 0.0) continue;
            for (int u = 0; u < 3; u++) {
              if (w3[u] == 0.0) continue;
              for (int v = 0; v < 3; v++) {
                if (w4[v] == 0.0) continue;
                d += w1[i] * w2[j] * w3[u] * w4[v] * tab[i][j][u][v];
              }
            }
          }
        }
        acc += ipow(a1 + a2) / (factorial(a1) * factorial(a2)) * d;
      }
    return acc;
  };
  if (remainder_order) {
    Rational nn(N);
    *remainder_order = {a.claimed_order.m - nn, a.claimed_order.l - nn,
                        a.claimed_order.k + nn, a.claimed_order.j + nn};
  }
  return out;
}

FullSymbolField adjoint_symbol(const SymbolField& a, int n) {
  FullSymbolField out;
  out.claimed_order = a.claimed_order;
  out.fd_depth = a.fd_depth;
  ScalarField ae = a.eval;
  out.eval = [ae, n](const CotangentPoint& p, double X,
                     const VectorXd& Y) -> Complex {
    double kappa = 1.0 + p.x * X;
    if (kappa < 0.05) return Complex(0.0);
    double cut = chi_window(
        std::hypot(p.x * X / kappa, p.x * Y[0]), 0.5, 1.0);
    if (cut == 0.0) return Complex(0.0);
    CotangentPoint q;
    q.x = p.x * kappa;
    q.y = p.y + p.x * Y;
    q.xi = kappa * kappa * p.xi;
    q.eta = kappa * p.eta;
    return std::conj(ae(q)) * std::pow(kappa, n + 1) * cut;
  };
  return out;
}

FullSymbolField full_lift(const SymbolField& b) {
  FullSymbolField out;
  out.claimed_order = b.claimed_order;
  out.fd_depth = b.fd_depth;
  ScalarField be = b.eval;
  out.eval = [be](const CotangentPoint& p, double X,
                  const VectorXd& Y) -> Complex {
    double cut = chi_window(std::hypot(p.x * X, p.x * Y[0]), 0.5, 1.0);
    if (cut == 0.0) return Complex(0.0);
    double kappa = 1.0 + p.x * X;
    CotangentPoint q;
    q.x = p.x * kappa;
    q.y = p.y + p.x * Y;
    q.xi = kappa * kappa * p.xi;
    q.eta = kappa * p.eta;
    return be(q) * cut;
  };
  return out;
}

SymbolField compose_symbols(const SymbolField& a, const FullSymbolField& b,
                            int N, SymbolOrder* remainder_order) {
  if (N < 1 || N > 3)
    throw std::invalid_argument("compose_symbols: N in [1,3] supported");
  SymbolField out;
  out.claimed_order = a.claimed_order + b.claimed_order;
  ScalarField ae = a.eval;
  FullEval be = b.eval;
  out.fd_depth = std::max(a.fd_depth, b.fd_depth) + 1;
  int da = a.fd_depth, db = b.fd_depth;
  out.eval = [ae, be, N, da, db](const CotangentPoint& p) -> Complex {
    Stencil2 sa = fiber_stencil(ae, p.x, p.y[0], p.xi, p.eta[0], da);
    Stencil2 sb = dual_stencil(be, p.x, p.y[0], p.xi, p.eta[0], db);
    Complex acc = 0.0;
    for (int a1 = 0; a1 < N; a1++)
      for (int a2 = 0; a2 + a1 < N; a2++)
        acc += ipow(a1 + a2) / (factorial(a1) * factorial(a2)) *
               sa.deriv(a1, a2) * sb.deriv(a1, a2);
    return acc;
  };
  if (remainder_order) {
    Rational nn(N);
    SymbolOrder sum = a.claimed_order + b.claimed_order;
    *remainder_order = {sum.m - nn, sum.l - nn, sum.k + nn, sum.j + nn};
  }
  return out;
}

ParametrixResult parametrix(const SymbolField& a, const GridSpec& g,
                            const ParametrixOptions& opt) {
  SampleRegion region = opt.ellipticity_region;
  region.x_min = g.x_nodes.front();
  region.x_max = g.x_nodes.back();
  double c = is_elliptic(a, region);
  if (!(c > opt.min_ellipticity))
    throw std::runtime_error(
        "parametrix: symbol fails the ellipticity precondition (c = " +
        fmt_g17(c) + ")");

  SymbolField q = reciprocal_symbol(a, [](const CotangentPoint&) { return 1.0; });
  for (int it = 0; it < opt.iterations; it++) {
    // q <- q - q # (a # q - 1)
    SymbolField aq = compose_symbols(a, full_lift(q), opt.compose_terms);
    SymbolField r;
    r.claimed_order = {Rational(-1), Rational(-1), Rational(1), Rational(1)};
    r.fd_depth = aq.fd_depth;
    ScalarField aqe = aq.eval;
    r.eval = [aqe](const CotangentPoint& p) { return aqe(p) - Complex(1.0); };
    SymbolField corr = compose_symbols(q, full_lift(r), opt.compose_terms);
    SymbolField qn;
    qn.claimed_order = q.claimed_order;
    qn.fd_depth = corr.fd_depth;
    ScalarField qe = q.eval, ce = corr.eval;
    qn.eval = [qe, ce](const CotangentPoint& p) { return qe(p) - ce(p); };
    q = qn;
  }

  ParametrixResult res;
  res.q_symbol = q;
  res.ellipticity_constant = c;
  res.Q = quantize(q, g, opt.quant);
  KernelMatrix A = quantize(a, g, opt.quant);
  res.R.grid = g;
  res.R.weights = res.Q.weights;
  res.R.entries = res.Q.entries * A.entries;
  res.R.entries -= MatrixXcd::Identity(res.R.entries.rows(), res.R.entries.cols());
  return res;
}

double operator_norm_probe(const KernelMatrix& K, int probe_count,
                           int iterations, uint64_t seed) {
  const VectorXd& w = K.weights;
  auto adj_apply = [&](const VectorXcd& u) {
    VectorXcd wu = u;
    for (Eigen::Index i = 0; i < wu.size(); i++) wu[i] *= w[i];
    VectorXcd z = K.entries.adjoint() * wu;
    for (Eigen::Index i = 0; i < z.size(); i++) z[i] /= w[i];
    return z;
  };
  double best = 0.0;
  Rng rng(seed);
  for (int pr = 0; pr < probe_count; pr++) {
    VectorXcd v(K.entries.cols());
    for (Eigen::Index i = 0; i < v.size(); i++)
      v[i] = Complex(rng.normal(), rng.normal());
    double lam = 0.0;
    for (int it = 0; it < iterations; it++) {
      VectorXcd t = adj_apply(K.apply(v));
      double nrm = K.norm(t);
      if (nrm == 0.0) {
        lam = 0.0;
        break;
      }
      lam = std::abs(K.inner(t, v)) / std::abs(K.inner(v, v));
      v = t / nrm;
    }
    best = std::max(best, std::sqrt(lam));
  }
  return best;
}

}  // namespace bb
