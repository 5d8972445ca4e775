#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cocycle/torus_dynamics.hpp"

namespace cocycle {

/// Regularity data of a potential: Hölder exponent alpha, B_alpha, B_0 = sup|f|
/// and B_1 = sup|grad f| (infinite for discontinuous functions).
struct HolderData {
  double alpha = 1.0;
  double holder_constant = 0.0;
  double sup_norm = 0.0;
  double grad_bound = 0.0;
};

enum class PotentialKind { Constant, Cos1, Cos2d, CosCos, Weierstrass, Sawtooth, Grid };

/// Real function on T^2: a named closed form or an M x M periodic grid with
/// bilinear interpolation. Copies share grid storage.
class Potential {
 public:
  static Potential constant(double c);
  /// cos(2 pi x1)
  static Potential cos1();
  /// cos(2 pi x1) + cos(2 pi x2)
  static Potential cos2d();
  /// cos(2 pi x1) cos(2 pi x2)
  static Potential coscos();
  /// sum_{j=0}^{12} 2^{-alpha j} cos(2 pi 2^j x1) + cos(2 pi x2)
  static Potential weierstrass(double alpha);
  /// x1 in [0, 1); discontinuous across x1 = 0.
  static Potential sawtooth();
  /// Grid node (i, j) sits at (i/M, j/M); values are row-major in i. Regularity
  /// data is estimated from the samples (alpha supplied by the caller).
  static Potential grid(std::size_t m, std::vector<double> values, double alpha = 1.0);
  static Potential grid(std::size_t m, std::vector<double> values, const HolderData& holder);

  /// Parses "cos2d", "weierstrass(0.5)", "constant(3)", ...
  static Potential builtin(std::string_view spec);

  [[nodiscard]] double operator()(double x1, double x2) const;
  [[nodiscard]] double operator()(TorusPoint x) const { return (*this)(x.x1, x.x2); }

  [[nodiscard]] PotentialKind kind() const { return kind_; }
  [[nodiscard]] const HolderData& holder() const { return holder_; }
  [[nodiscard]] std::string name() const;
  [[nodiscard]] bool is_constant() const { return kind_ == PotentialKind::Constant; }
  /// The constant's value or weierstrass's alpha; 0 otherwise.
  [[nodiscard]] double parameter() const { return parameter_; }

  [[nodiscard]] std::size_t grid_size() const;
  [[nodiscard]] std::span<const double> grid_values() const;

 private:
  Potential(PotentialKind kind, double parameter, HolderData holder)
      : kind_(kind), parameter_(parameter), holder_(holder) {}

  PotentialKind kind_ = PotentialKind::Constant;
  double parameter_ = 0.0;
  HolderData holder_;
  std::size_t m_ = 0;
  std::shared_ptr<const std::vector<double>> grid_;
};

struct BuiltinInfo {
  std::string name;
  std::string description;
  std::string alpha;  // numeric or "param"
  HolderData holder;  // representative metadata (alpha = 0.5 for parameterized entries)
};

/// Sorted by name.
std::vector<BuiltinInfo> builtin_catalog();

/// Largest finite-difference Hölder quotient |f(x + h e) - f(x)| / |h|^alpha over
/// dyadic separations h = 2^-k, k in [k_min, k_max], axis and diagonal
/// directions, and a probe x-grid of probe x probe points.
double max_holder_quotient(const Potential& f, double alpha, int k_min = 3, int k_max = 9,
                           std::size_t probe = 64);

/// Grid CSV: header "m,row,values..." then one line per row i:
/// "M,i,v_0,...,v_{M-1}" with 17 significant digits.
Potential read_grid_csv(std::istream& in, double alpha = 1.0);
void write_grid_csv(std::ostream& out, const Potential& grid);
Potential load_grid_csv(const std::string& path, double alpha = 1.0);

/// Samples any potential onto an M x M grid (node (i, j) at (i/M, j/M)).
std::vector<double> sample_on_grid(const Potential& f, std::size_t m);

}  // namespace cocycle
