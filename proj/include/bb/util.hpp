#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bb {

using Complex = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// Deterministic RNG. All randomized sampling in the library goes through this
// so that a (config, seed) pair pins every output bit.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  uint64_t next_u64() {
    // splitmix64
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() { return std::ldexp(double(next_u64() >> 11), -53); }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // log-uniform in [a,b], a,b > 0
  double log_uniform(double a, double b) {
    return std::exp(uniform(std::log(a), std::log(b)));
  }

  double normal() {
    // Box-Muller, fully deterministic
    double u1 = uniform(), u2 = uniform();
    u1 = std::max(u1, 1e-300);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  uint64_t state_;
};

// C-infinity step: 0 for t<=0, 1 for t>=1.
inline double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double g0 = std::exp(-1.0 / t);
  double g1 = std::exp(-1.0 / (1.0 - t));
  return g0 / (g0 + g1);
}

// Support cutoff used throughout quantization: identically 1 for |s|<=1/2,
// supported in |s|<=1, smooth.
inline double chi_cutoff(double s) {
  double r2 = s * s;
  if (r2 <= 0.25) return 1.0;
  if (r2 >= 1.0) return 0.0;
  return smoothstep((1.0 - r2) / 0.75);
}

// Gauss-Legendre nodes/weights on [-1,1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussLegendre gauss_legendre(int n);

// Composite Gauss-Legendre quadrature of f over [a,b] with nseg segments of
// npts points each.
double quad_gl(const std::function<double(double)>& f, double a, double b,
               int nseg, int npts);
Complex quad_gl_c(const std::function<Complex(double)>& f, double a, double b,
                  int nseg, int npts);

// Adaptive Simpson; independent oracle-grade 1D quadrature.
double quad_adaptive(const std::function<double(double)>& f, double a, double b,
                     double tol = 1e-12, int max_depth = 40);

// Least-squares line fit y = slope*x + intercept. r2 is the coefficient of
// determination; returns false when fewer than two usable points remain.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int npts = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Runs fn(i) for i in [0,n). Work is split contiguously; with jobs<=1 this is
// a plain loop. Each index is owned by exactly one worker, so accumulation
// into per-index slots is deterministic.
void parallel_for(std::int64_t n, int jobs,
                  const std::function<void(std::int64_t)>& fn);

// Fixed formatting for CSV artifacts (deterministic reruns).
std::string fmt_g17(double v);

struct CsvWriter {
  explicit CsvWriter(const std::string& path, const std::string& header);
  ~CsvWriter();
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  void* f_ = nullptr;
};

void ensure_dir(const std::string& path);

}  // namespace bb
