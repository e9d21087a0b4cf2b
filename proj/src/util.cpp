#include "bb/util.hpp"

#include <cstdio>
#include <filesystem>
#include <thread>

namespace bb {

GaussLegendre gauss_legendre(int n) {
  GaussLegendre gl;
  gl.nodes.resize(n);
  gl.weights.resize(n);
  // Newton iteration on Legendre polynomials, symmetric nodes.
  for (int i = 0; i < (n + 1) / 2; i++) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; it++) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; k++) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    gl.nodes[i] = -x;
    gl.nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    gl.weights[i] = w;
    gl.weights[n - 1 - i] = w;
  }
  return gl;
}

double quad_gl(const std::function<double(double)>& f, double a, double b,
               int nseg, int npts) {
  GaussLegendre gl = gauss_legendre(npts);
  double sum = 0.0;
  double h = (b - a) / nseg;
  for (int s = 0; s < nseg; s++) {
    double c = a + s * h, half = 0.5 * h;
    for (int i = 0; i < npts; i++)
      sum += gl.weights[i] * half * f(c + half * (gl.nodes[i] + 1.0));
  }
  return sum;
}

Complex quad_gl_c(const std::function<Complex(double)>& f, double a, double b,
                  int nseg, int npts) {
  GaussLegendre gl = gauss_legendre(npts);
  Complex sum = 0.0;
  double h = (b - a) / nseg;
  for (int s = 0; s < nseg; s++) {
    double c = a + s * h, half = 0.5 * h;
    for (int i = 0; i < npts; i++)
      sum += gl.weights[i] * half * f(c + half * (gl.nodes[i] + 1.0));
  }
  return sum;
}

namespace {
double simpson(const std::function<double(double)>& f, double a, double fa,
               double b, double fb, double m, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double fa,
             double b, double fb, double m, double fm, double whole, double tol,
             int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(f, a, fa, m, fm, lm, flm);
  double right = simpson(f, m, fm, b, fb, rm, frm);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adapt(f, a, fa, m, fm, lm, flm, left, tol / 2, depth - 1) +
         adapt(f, m, fm, b, fb, rm, frm, right, tol / 2, depth - 1);
}
}  // namespace

double quad_adaptive(const std::function<double(double)>& f, double a, double b,
                     double tol, int max_depth) {
  double m = 0.5 * (a + b);
  double fa = f(a), fb = f(b), fm = f(m);
  double whole = simpson(f, a, fa, b, fb, m, fm);
  return adapt(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit r;
  size_t n = std::min(x.size(), y.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  int m = 0;
  for (size_t i = 0; i < n; i++) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
    m++;
  }
  r.npts = m;
  if (m < 2) return r;
  double det = m * sxx - sx * sx;
  if (std::abs(det) < 1e-300) return r;
  r.slope = (m * sxy - sx * sy) / det;
  r.intercept = (sy - r.slope * sx) / m;
  double ss_tot = syy - sy * sy / m;
  double ss_res = 0.0;
  for (size_t i = 0; i < n; i++) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    double e = y[i] - (r.slope * x[i] + r.intercept);
    ss_res += e * e;
  }
  r.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return r;
}

void parallel_for(std::int64_t n, int jobs,
                  const std::function<void(std::int64_t)>& fn) {
  if (n <= 0) return;
  if (jobs <= 1 || n == 1) {
    for (std::int64_t i = 0; i < n; i++) fn(i);
    return;
  }
  int nw = int(std::min<std::int64_t>(jobs, n));
  std::vector<std::thread> workers;
  workers.reserve(nw);
  for (int w = 0; w < nw; w++) {
    std::int64_t lo = n * w / nw, hi = n * (w + 1) / nw;
    workers.emplace_back([lo, hi, &fn] {
      for (std::int64_t i = lo; i < hi; i++) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& header) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f_ = f;
  std::fprintf(f, "%s\n", header.c_str());
}

CsvWriter::~CsvWriter() { close(); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  FILE* f = static_cast<FILE*>(f_);
  if (!f) throw std::runtime_error("CsvWriter already closed");
  for (size_t i = 0; i < cells.size(); i++)
    std::fprintf(f, "%s%s", i ? "," : "", cells[i].c_str());
  std::fprintf(f, "\n");
}

void CsvWriter::close() {
  if (f_) {
    std::fclose(static_cast<FILE*>(f_));
    f_ = nullptr;
  }
}

void ensure_dir(const std::string& path) {
  std::filesystem::create_directories(path);
}

}  // namespace bb
