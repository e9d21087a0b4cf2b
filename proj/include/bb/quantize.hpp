#pragma once

#include "bb/grid.hpp"
#include "bb/symbols.hpp"

namespace bb {

// Symbol depending additionally on the stretched double-space coordinates
// X = (x'-x)/x^2, Y = (y'-y)/x.
struct FullSymbolField {
  std::function<Complex(const CotangentPoint&, double X, const VectorXd& Y)> eval;
  SymbolOrder claimed_order;
  int fd_depth = 0;
};

struct QuantizeOptions {
  int jobs = 1;
  // assembler may reuse one kernel slice per x node when the symbol does not
  // depend on y
  bool y_invariant = false;
  bool nearest_neighbor = false;  // cross-check splat mode
  double chi_plateau = 0.5;       // chi == 1 for |s| <= plateau
  double chi_support = 1.0;       // chi == 0 for |s| >= support
  bool refuse_on_edge_mass = true;
  double edge_mass_tol = 1e-6;
};

// cutoff with configurable plateau/support (see QuantizeOptions)
double chi_window(double s, double plateau, double support);

// Kernel assembly: per base node, inverse DFT of the symbol over the fiber
// grid, support cutoff chi(xX,xY), tent splat onto x' = x + x^2 X,
// y' = y + x Y with the dual cell volume dX dY.
KernelMatrix quantize(const SymbolField& a, const GridSpec& g,
                      const QuantizeOptions& opt = {});
KernelMatrix quantize(const FullSymbolField& a, const GridSpec& g,
                      const QuantizeOptions& opt = {});

// Left reduction: sum_{|alpha|<N} (i^|alpha|/alpha!)
// d^alpha_{xi,eta} d^alpha_{X,Y} a |_{X=Y=0}. remainder_order receives
// (m-N, l-N, k+N, j+N).
SymbolField left_reduce(const FullSymbolField& a, int N,
                        SymbolOrder* remainder_order = nullptr);

// Adjoint with respect to dx dy / x^{n+1}: the transformed full symbol of the
// proof, cutoff included. Left-reduced principal symbol is conj(a).
FullSymbolField adjoint_symbol(const SymbolField& a, int n = 2);

// Position-shifted lift used to compose two left-quantized operators:
// b~(x,y,X,Y,xi,eta) = b(x+x^2 X, y+xY, (1+xX)^2 xi, (1+xX) eta) chi(xX,xY).
FullSymbolField full_lift(const SymbolField& b);

// a#b truncated at N terms; claimed order adds, remainder order recorded.
SymbolField compose_symbols(const SymbolField& a, const FullSymbolField& b,
                            int N, SymbolOrder* remainder_order = nullptr);

struct ParametrixResult {
  KernelMatrix Q;
  KernelMatrix R;  // Q * quantize(a) - Id
  SymbolField q_symbol;
  double ellipticity_constant = 0.0;
};

struct ParametrixOptions {
  int iterations = 1;      // symbol correction sweeps
  int compose_terms = 3;   // truncation order N in each #
  QuantizeOptions quant;
  SampleRegion ellipticity_region;  // x-range is overridden from the grid
  double min_ellipticity = 1e-8;
};

ParametrixResult parametrix(const SymbolField& a, const GridSpec& g,
                            const ParametrixOptions& opt = {});

// Power-iteration estimate of the operator norm on the weighted L^2 space.
double operator_norm_probe(const KernelMatrix& K, int probe_count = 2,
                           int iterations = 40, uint64_t seed = 101);

}  // namespace bb
