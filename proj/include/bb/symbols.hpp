#pragma once

#include "bb/geometry.hpp"
#include "bb/rational.hpp"
#include "bb/util.hpp"

namespace bb {

// Quadruple of rational orders indexing S^{m,l,k,j}; m,l,k,j weight rho, x,
// d_sigma, d_gamma respectively.
struct SymbolOrder {
  Rational m, l, k, j;

  friend SymbolOrder operator+(const SymbolOrder& a, const SymbolOrder& b) {
    return {a.m + b.m, a.l + b.l, a.k + b.k, a.j + b.j};
  }
  friend SymbolOrder operator-(const SymbolOrder& a) {
    return {-a.m, -a.l, -a.k, -a.j};
  }
  friend bool operator==(const SymbolOrder& a, const SymbolOrder& b) {
    return a.m == b.m && a.l == b.l && a.k == b.k && a.j == b.j;
  }
  std::string str() const {
    return "(" + m.str() + "," + l.str() + "," + k.str() + "," + j.str() + ")";
  }
};

inline bool order_leq(const SymbolOrder& a, const SymbolOrder& b) {
  return a.m <= b.m && a.l <= b.l && a.k <= b.k && a.j <= b.j;
}

struct WeightValue {
  double value = 1.0;
  bool infinite = false;
};

// rho^{-m} x^{-l} d_sigma^{-k} d_gamma^{-j} at p.
WeightValue weight(const DefiningFunctions& d, const SymbolOrder& o);
WeightValue weight(const CotangentPoint& p, const SymbolOrder& o);

enum class Inclusion { Proved, Unknown };

// Sufficient (not complete) test for S^{o1} subset S^{o2} from the four
// lattice rules; the combined rule's split is searched over s in {0,1/8,...,1}.
Inclusion includes(const SymbolOrder& o1, const SymbolOrder& o2);

struct SymbolField {
  ScalarField eval;
  SymbolOrder claimed_order;
  // optional base-region restriction (unset: everywhere)
  std::function<bool(const CotangentPoint&)> support_hint;
  // how many finite-difference layers this field already contains; deeper
  // expressions get differenced with larger steps
  int fd_depth = 0;
};

// ---- empirical order estimation ------------------------------------------

struct OrderEstimateOptions {
  int n = 2;                 // chart dimension
  int word_max_len = 3;      // derivative words over the V_2 generators
  int pts_per_decade = 10;
  int decades = 4;
  int anchors_per_face = 2;  // random anchors per boundary face
  uint64_t seed = 11;
  double r2_min = 0.99;
};

struct WordSlope {
  std::string word;
  std::string face;
  double slope = 0.0;
  double r2 = 0.0;
  bool flagged = false;  // non-convergent fit or vanishing field
};

struct OrderEstimate {
  // real-valued fitted indices (max over derivative words)
  double m = 0.0, l = 0.0, k = 0.0, j = 0.0;
  std::vector<WordSlope> slopes;
};

// Log-log regression of |V^alpha f| against the approached defining function,
// one boundary face at a time; conormality means no word may worsen the fit.
OrderEstimate estimate_order(const SymbolField& f,
                             const OrderEstimateOptions& opt);

void write_order_report_csv(const std::string& path,
                            const std::vector<WordSlope>& slopes);

// ---- ellipticity -----------------------------------------------------------

struct SampleRegion {
  int n = 2;
  double x_min = 1e-3, x_max = 0.5;
  double y_max = M_PI;
  double ds_min = 0.02, ds_max = 0.6;
  double tt_max = 0.95;
  double rho_max = 1.0;  // keep only samples with rho below this
  int count = 4000;
  uint64_t seed = 17;
};

std::vector<CotangentPoint> sample_region(const SampleRegion& region);

// inf over samples of |f| / weight(claimed order); c > 0 under refinement is
// the empirical ellipticity criterion.
double is_elliptic(const SymbolField& f, const SampleRegion& region);

// 1/f on the cutoff region, extended by 0 through the cutoff; claimed order
// is the negated order. Caller is responsible for is_elliptic > 0 there.
SymbolField reciprocal_symbol(const SymbolField& f,
                              const std::function<double(const CotangentPoint&)>& cutoff);

// ---- structural ellipticity (three-term near-fiber-infinity form) ---------

// Coefficients as functions of (x, y, tau); the assembled symbol is
// a = a_m1*rho + i*x*a_tilde*rho^2 + a_m3*rho^3.
struct CoefficientFields {
  std::function<double(double, const VectorXd&, const VectorXd&)> a_m1;
  std::function<double(double, const VectorXd&, const VectorXd&)> a_tilde;
  std::function<double(double, const VectorXd&, const VectorXd&)> a_m3;
};

struct StructuralEllipticityReport {
  bool hypotheses_ok = true;
  std::string violation;
  double c_measured = 0.0;        // inf |a| / (rho d_sigma^2 d_gamma^2)
  double branch_rho_tilde = 0.0;  // min parenthetical factor where rho_tilde >= 1/2
  double branch_tau = 0.0;        // min real-part factor where |tt|^2 >= 1/2
  double branch_imag = 0.0;       // min |Im a|/(x rho^2) near Sigma
};

StructuralEllipticityReport structural_ellipticity_check(
    const CoefficientFields& co, const SampleRegion& region);

SymbolField assemble_three_term_symbol(const CoefficientFields& co);

}  // namespace bb
