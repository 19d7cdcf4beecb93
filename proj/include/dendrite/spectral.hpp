#pragma once

// Principal eigenvalue, spectral gap, eigenvalue bounds and total-variation
// mixing bounds on compact trees (no open leaves).
//
// The continuum problems are discretized on a mesh of width h with the exact
// Dirichlet form of piecewise-linear functions and the lumped speed measure;
// eigenpairs are those of Q u = λ M u.

#include <span>
#include <vector>

#include "dendrite/calculus.hpp"
#include "dendrite/measure.hpp"
#include "dendrite/potential.hpp"
#include "dendrite/tree.hpp"

namespace dendrite {

enum class EigenMethod {
  automatic,          // dense below a size threshold, inverse iteration above
  dense,              // symmetric eigensolver on M^{-1/2} Q M^{-1/2}
  inverse_iteration,  // sparse LDLT + Rayleigh quotient, residual 1e-10
};

struct SpectralResult {
  double eigenvalue = 0.0;
  MeshFunction eigenfunction;  // normalized to (f,f)_M = 1
  std::vector<double> mass;    // lumped measure on the mesh
  double mesh_size = 0.0;
};

/// Smallest λ with Q u = λ M u among u vanishing on `dirichlet_set`. The
/// returned eigenfunction is non-negative.
SpectralResult principal_eigenvalue(const Tree& t, const SpeedMeasure& nu, std::span<const PointRef> dirichlet_set,
                                    double h, EigenMethod method = EigenMethod::automatic);

/// Smallest non-zero eigenvalue of the Neumann problem, i.e. over functions
/// with zero mean under the lumped measure.
SpectralResult spectral_gap(const Tree& t, const SpeedMeasure& nu, double h,
                            EigenMethod method = EigenMethod::automatic);

struct EigenvalueBounds {
  double lower = 0.0;  // 1 / (2 diam ν(T))
  double upper = 0.0;  // ½ inf_x (ν{y : x ∈ [y,b]} r(x,b))^{-1}
};

/// Two-sided bound on the principal eigenvalue with Dirichlet point b.
/// With h > 0 the infimum in the upper bound runs over the vertices of the
/// width-h mesh (matching `principal_eigenvalue` at the same h); with h == 0
/// it runs over the whole tree.
EigenvalueBounds eigenvalue_bounds(const Tree& t, const SpeedMeasure& nu, const PointRef& b, double h = 0.0);

/// ∫ (dν'/dν) dν' for ν' absolutely continuous with respect to ν.
double density_second_moment(const Tree& t, const SpeedMeasure& nu, const SpeedMeasure& nu_prime);

/// (1 + ν(T) sqrt(∫ dν'/dν dν')) exp(-t / (2 diam ν(T))) at each time.
std::vector<double> mixing_bound(const Tree& t, const SpeedMeasure& nu, const SpeedMeasure& nu_prime,
                                 std::span<const double> times);

/// Diagnostic using the spectral gap instead of its lower bound:
/// (1 + sqrt(ν(T) ∫ dν'/dν dν')) exp(-λ₂ t).
std::vector<double> gap_mixing_bound(const Tree& t, const SpeedMeasure& nu, const SpeedMeasure& nu_prime,
                                     double gap, std::span<const double> times);

/// ‖ν'P_t − ν/ν(T)‖_TV (half the L¹ distance) for the heat semigroup of the
/// mesh chain, by exact matrix exponential. Throws InvalidArgument if the
/// mesh has more than `max_vertices` vertices.
std::vector<double> tv_distance_curve(const Tree& t, const SpeedMeasure& nu, const SpeedMeasure& nu_prime,
                                      std::span<const double> times, double h, std::size_t max_vertices = 500);

struct MixingCurve {
  std::vector<double> times;
  std::vector<double> tv;
  std::vector<double> bound;      // bound with the diameter exponent
  std::vector<double> gap_bound;  // λ₂-based diagnostic
  double gap = 0.0;
};

MixingCurve mixing_curve(const Tree& t, const SpeedMeasure& nu, const SpeedMeasure& nu_prime,
                         std::span<const double> times, double h, std::size_t max_vertices = 500);

/// ν restricted to the subtree hanging below `top` (inclusive), normalized to
/// a probability measure.
SpeedMeasure restricted_law(const Tree& t, const SpeedMeasure& nu, VertexId top);

}  // namespace dendrite
