#pragma once

#include <string>

#include "bb/geometry.hpp"
#include "bb/util.hpp"

namespace bb {

// Base grid plus per-base-point fiber grid. Tangential directions are
// uniform with shared spacing; x nodes are any strictly increasing positive
// sequence (bounded away from 0). Dense operator assembly requires n == 2;
// n == 3 grids serve as sampled-function boxes for the ray machinery.
struct GridSpec {
  int n = 2;
  std::vector<double> x_nodes;
  double y0 = -1.0;
  double dy = 2.0 / 63.0;
  int ny = 64;

  double xi_max = 16.0;   // fiber extent, xi direction
  double eta_max = 16.0;  // fiber extent, each eta direction
  int p_xi = 128;         // fiber node counts (powers of two)
  int p_eta = 128;

  int d_t() const { return n - 1; }
  int nx() const { return int(x_nodes.size()); }
  std::int64_t node_count() const {
    std::int64_t c = nx();
    for (int d = 0; d < d_t(); d++) c *= ny;
    return c;
  }
  std::int64_t index(int ix, int iy1, int iy2 = 0) const {
    if (d_t() == 1) return std::int64_t(ix) * ny + iy1;
    return (std::int64_t(ix) * ny + iy1) * ny + iy2;
  }
  double y_of(int iy) const { return y0 + dy * iy; }

  void validate() const;

  // trapezoid cell widths in x
  double x_cell(int ix) const;
  // scattering measure weight dx dy / x^{n+1} of a node cell
  VectorXd measure_weights() const;
};

GridSpec make_grid(int n, double x_lo, double x_hi, int nx, double y_half,
                   int ny, double fiber_extent, int fiber_count,
                   bool log_x = false);

std::string grid_to_json(const GridSpec& g);
GridSpec grid_from_json_string(const std::string& s);

// Grid sampling / interpolation of functions on the base.
VectorXcd sample_grid(const GridSpec& g,
                      const std::function<Complex(double, const VectorXd&)>& f);
VectorXd sample_grid_real(const GridSpec& g,
                          const std::function<double(double, const VectorXd&)>& f);
// multilinear interpolation; returns 0 outside the grid box
double interp_grid(const GridSpec& g, const VectorXd& values, double x,
                   const VectorXd& y);

// Dense discretized operator on the base grid; application includes the
// scattering measure only through the weighted inner product helpers.
struct KernelMatrix {
  GridSpec grid;
  MatrixXcd entries;
  VectorXd weights;  // measure weights per node
  double mass_kept = 0.0;
  double mass_dropped = 0.0;

  VectorXcd apply(const VectorXcd& u) const { return entries * u; }
  Complex inner(const VectorXcd& u, const VectorXcd& v) const;
  double norm(const VectorXcd& u) const;
  // adjoint with respect to the weighted inner product: W^{-1} A^H W
  MatrixXcd adjoint_entries() const;
};

KernelMatrix identity_kernel(const GridSpec& g);

// BBK1 binary: 16-byte header (magic, u32 rows, u32 cols, u32 flags, all
// little-endian), then row-major (re,im) pairs. flags bit 0: 64-bit floats
// (else 32-bit). BBG1 uses the same layout for real-valued grids.
void write_bbk1(const std::string& path, const MatrixXcd& m, bool wide = false);
MatrixXcd read_bbk1(const std::string& path);
void write_bbg1(const std::string& path, const VectorXd& v, bool wide = true);
VectorXd read_bbg1(const std::string& path);

}  // namespace bb
