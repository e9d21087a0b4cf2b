#include "bb/grid.hpp"

#include <cstdio>
#include <cstring>

#include "json.hpp"

namespace bb {

void GridSpec::validate() const {
  if (n != 2 && n != 3) throw std::invalid_argument("GridSpec: n must be 2 or 3");
  if (x_nodes.size() < 2) throw std::invalid_argument("GridSpec: need >= 2 x nodes");
  if (x_nodes.front() <= 0.0)
    throw std::invalid_argument("GridSpec: x nodes must be > 0");
  for (size_t i = 1; i < x_nodes.size(); i++)
    if (x_nodes[i] <= x_nodes[i - 1])
      throw std::invalid_argument("GridSpec: x nodes must be strictly increasing");
  if (ny < 2 || dy <= 0) throw std::invalid_argument("GridSpec: bad y grid");
  auto pow2 = [](int p) { return p >= 4 && (p & (p - 1)) == 0; };
  if (!pow2(p_xi) || !pow2(p_eta))
    throw std::invalid_argument("GridSpec: fiber counts must be powers of two >= 4");
}

double GridSpec::x_cell(int ix) const {
  int m = nx();
  if (m == 1) return 1.0;
  if (ix == 0) return 0.5 * (x_nodes[1] - x_nodes[0]);
  if (ix == m - 1) return 0.5 * (x_nodes[m - 1] - x_nodes[m - 2]);
  return 0.5 * (x_nodes[ix + 1] - x_nodes[ix - 1]);
}

VectorXd GridSpec::measure_weights() const {
  VectorXd w(node_count());
  double ycell = std::pow(dy, d_t());
  for (int ix = 0; ix < nx(); ix++) {
    double base = x_cell(ix) * ycell / std::pow(x_nodes[ix], n + 1);
    if (d_t() == 1)
      for (int iy = 0; iy < ny; iy++) w[index(ix, iy)] = base;
    else
      for (int i1 = 0; i1 < ny; i1++)
        for (int i2 = 0; i2 < ny; i2++) w[index(ix, i1, i2)] = base;
  }
  return w;
}

GridSpec make_grid(int n, double x_lo, double x_hi, int nx, double y_half,
                   int ny, double fiber_extent, int fiber_count, bool log_x) {
  GridSpec g;
  g.n = n;
  g.x_nodes.resize(nx);
  for (int i = 0; i < nx; i++) {
    double t = nx == 1 ? 0.0 : double(i) / (nx - 1);
    g.x_nodes[i] = log_x ? x_lo * std::pow(x_hi / x_lo, t)
                         : x_lo + (x_hi - x_lo) * t;
  }
  g.ny = ny;
  g.y0 = -y_half;
  g.dy = 2.0 * y_half / (ny - 1);
  g.xi_max = g.eta_max = fiber_extent;
  g.p_xi = g.p_eta = fiber_count;
  g.validate();
  return g;
}

std::string grid_to_json(const GridSpec& g) {
  nlohmann::json j;
  j["n"] = g.n;
  j["x_nodes"] = g.x_nodes;
  j["y0"] = g.y0;
  j["dy"] = g.dy;
  j["ny"] = g.ny;
  j["xi_max"] = g.xi_max;
  j["eta_max"] = g.eta_max;
  j["p_xi"] = g.p_xi;
  j["p_eta"] = g.p_eta;
  return j.dump(2);
}

GridSpec grid_from_json_string(const std::string& s) {
  nlohmann::json j = nlohmann::json::parse(s);
  GridSpec g;
  g.n = j.at("n").get<int>();
  g.x_nodes = j.at("x_nodes").get<std::vector<double>>();
  g.y0 = j.at("y0").get<double>();
  g.dy = j.at("dy").get<double>();
  g.ny = j.at("ny").get<int>();
  g.xi_max = j.at("xi_max").get<double>();
  g.eta_max = j.at("eta_max").get<double>();
  g.p_xi = j.at("p_xi").get<int>();
  g.p_eta = j.at("p_eta").get<int>();
  g.validate();
  return g;
}

VectorXcd sample_grid(const GridSpec& g,
                      const std::function<Complex(double, const VectorXd&)>& f) {
  VectorXcd v(g.node_count());
  VectorXd y(g.d_t());
  for (int ix = 0; ix < g.nx(); ix++)
    for (int i1 = 0; i1 < g.ny; i1++) {
      y[0] = g.y_of(i1);
      if (g.d_t() == 1) {
        v[g.index(ix, i1)] = f(g.x_nodes[ix], y);
      } else {
        for (int i2 = 0; i2 < g.ny; i2++) {
          y[1] = g.y_of(i2);
          v[g.index(ix, i1, i2)] = f(g.x_nodes[ix], y);
        }
      }
    }
  return v;
}

VectorXd sample_grid_real(const GridSpec& g,
                          const std::function<double(double, const VectorXd&)>& f) {
  VectorXcd v = sample_grid(
      g, [&](double x, const VectorXd& y) { return Complex(f(x, y)); });
  return v.real();
}

double interp_grid(const GridSpec& g, const VectorXd& values, double x,
                   const VectorXd& y) {
  const auto& xs = g.x_nodes;
  if (x < xs.front() || x > xs.back()) return 0.0;
  int ix = int(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
  ix = std::clamp(ix, 0, g.nx() - 2);
  double tx = (x - xs[ix]) / (xs[ix + 1] - xs[ix]);

  auto locate_y = [&](double yv, int& iy, double& t) {
    double s = (yv - g.y0) / g.dy;
    if (s < 0.0 || s > g.ny - 1) return false;
    iy = std::clamp(int(s), 0, g.ny - 2);
    t = s - iy;
    return true;
  };
  int i1;
  double t1;
  if (!locate_y(y[0], i1, t1)) return 0.0;
  if (g.d_t() == 1) {
    double v00 = values[g.index(ix, i1)], v01 = values[g.index(ix, i1 + 1)];
    double v10 = values[g.index(ix + 1, i1)],
           v11 = values[g.index(ix + 1, i1 + 1)];
    return (1 - tx) * ((1 - t1) * v00 + t1 * v01) +
           tx * ((1 - t1) * v10 + t1 * v11);
  }
  int i2;
  double t2;
  if (!locate_y(y[1], i2, t2)) return 0.0;
  double acc = 0.0;
  for (int a = 0; a < 2; a++)
    for (int b = 0; b < 2; b++)
      for (int c = 0; c < 2; c++) {
        double w = (a ? tx : 1 - tx) * (b ? t1 : 1 - t1) * (c ? t2 : 1 - t2);
        acc += w * values[g.index(ix + a, i1 + b, i2 + c)];
      }
  return acc;
}

Complex KernelMatrix::inner(const VectorXcd& u, const VectorXcd& v) const {
  Complex s = 0.0;
  for (Eigen::Index i = 0; i < u.size(); i++)
    s += weights[i] * u[i] * std::conj(v[i]);
  return s;
}

double KernelMatrix::norm(const VectorXcd& u) const {
  return std::sqrt(std::abs(inner(u, u)));
}

MatrixXcd KernelMatrix::adjoint_entries() const {
  MatrixXcd a = entries.adjoint();
  for (Eigen::Index r = 0; r < a.rows(); r++)
    for (Eigen::Index c = 0; c < a.cols(); c++)
      a(r, c) *= weights[c] / weights[r];
  return a;
}

KernelMatrix identity_kernel(const GridSpec& g) {
  KernelMatrix k;
  k.grid = g;
  k.entries = MatrixXcd::Identity(g.node_count(), g.node_count());
  k.weights = g.measure_weights();
  return k;
}

// ---------------------------------------------------------------------------

namespace {
void put_u32(FILE* f, uint32_t v) {
  unsigned char b[4] = {(unsigned char)(v & 0xff),
                        (unsigned char)((v >> 8) & 0xff),
                        (unsigned char)((v >> 16) & 0xff),
                        (unsigned char)((v >> 24) & 0xff)};
  std::fwrite(b, 1, 4, f);
}
uint32_t get_u32(FILE* f) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, f) != 4) throw std::runtime_error("truncated header");
  return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
         (uint32_t(b[3]) << 24);
}

void write_matrix(const std::string& path, const char* magic,
                  const MatrixXcd& m, bool wide) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  std::fwrite(magic, 1, 4, f);
  put_u32(f, uint32_t(m.rows()));
  put_u32(f, uint32_t(m.cols()));
  put_u32(f, wide ? 1u : 0u);
  for (Eigen::Index r = 0; r < m.rows(); r++)
    for (Eigen::Index c = 0; c < m.cols(); c++) {
      if (wide) {
        double re = m(r, c).real(), im = m(r, c).imag();
        std::fwrite(&re, 8, 1, f);
        std::fwrite(&im, 8, 1, f);
      } else {
        float re = float(m(r, c).real()), im = float(m(r, c).imag());
        std::fwrite(&re, 4, 1, f);
        std::fwrite(&im, 4, 1, f);
      }
    }
  std::fclose(f);
}

MatrixXcd read_matrix(const std::string& path, const char* magic) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open: " + path);
  char got[4];
  if (std::fread(got, 1, 4, f) != 4 || std::memcmp(got, magic, 4) != 0) {
    std::fclose(f);
    throw std::runtime_error("bad magic in " + path);
  }
  uint32_t rows = get_u32(f), cols = get_u32(f), flags = get_u32(f);
  bool wide = flags & 1u;
  MatrixXcd m(rows, cols);
  for (uint32_t r = 0; r < rows; r++)
    for (uint32_t c = 0; c < cols; c++) {
      double re, im;
      if (wide) {
        if (std::fread(&re, 8, 1, f) != 1 || std::fread(&im, 8, 1, f) != 1) {
          std::fclose(f);
          throw std::runtime_error("truncated payload in " + path);
        }
      } else {
        float rf, mf;
        if (std::fread(&rf, 4, 1, f) != 1 || std::fread(&mf, 4, 1, f) != 1) {
          std::fclose(f);
          throw std::runtime_error("truncated payload in " + path);
        }
        re = rf;
        im = mf;
      }
      m(r, c) = Complex(re, im);
    }
  std::fclose(f);
  return m;
}
}  // namespace

void write_bbk1(const std::string& path, const MatrixXcd& m, bool wide) {
  write_matrix(path, "BBK1", m, wide);
}
MatrixXcd read_bbk1(const std::string& path) { return read_matrix(path, "BBK1"); }

void write_bbg1(const std::string& path, const VectorXd& v, bool wide) {
  MatrixXcd m(v.size(), 1);
  for (Eigen::Index i = 0; i < v.size(); i++) m(i, 0) = Complex(v[i], 0.0);
  write_matrix(path, "BBG1", m, wide);
}
VectorXd read_bbg1(const std::string& path) {
  MatrixXcd m = read_matrix(path, "BBG1");
  VectorXd v(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); i++) v[i] = m(i, 0).real();
  return v;
}

}  // namespace bb
