#pragma once

// Monte Carlo for the nu-Brownian motion through the continuous-time Markov
// chain of the discrete Dirichlet form on a mesh.
//
// From mesh vertex x the chain jumps to neighbour y with probability
// proportional to the conductance 1/(2 r(x,y)) and holds for an exponential
// time of rate (Σ_y 1/(2 r(x,y))) / m(x), m the lumped speed measure. Its
// generator is -M^{-1} Q, so expected hitting times and occupation
// functionals solve Q u = M f exactly.
//
// Randomness: walk i draws from SplitMix64 seeded with mix(seed, i). Walks
// are grouped in fixed blocks of kWalkBlock and folded in index order, so
// aggregates are bit-identical for any thread count.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dendrite/calculus.hpp"
#include "dendrite/measure.hpp"
#include "dendrite/tree.hpp"

namespace dendrite {

inline constexpr std::size_t kWalkBlock = 256;

/// SplitMix64 (Steele, Lea, Flood 2014).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  /// Substream for walk `index` under `seed`.
  static SplitMix64 for_walk(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Immutable jump chain on a mesh of a tree.
struct Chain {
  explicit Chain(Refinement m) : mesh(std::move(m)) {}

  Refinement mesh;
  std::vector<std::size_t> offset;     // CSR row starts, size n+1
  std::vector<VertexId> target;        // neighbour per slot
  std::vector<double> cumulative;      // running jump probability per slot
  std::vector<double> rate;            // holding rate; 0 at killing vertices
  std::vector<double> mass;            // lumped speed measure
  std::vector<std::uint8_t> killing;   // open leaves
  std::vector<std::uint8_t> fair;      // exactly two neighbours, probability ½ each
  double mesh_h = 0.0;

  std::size_t size() const { return mass.size(); }
  std::vector<double> jump_probabilities(VertexId v) const;
  /// Mesh vertex of a point of the original tree; throws if it is not one.
  VertexId vertex_of(const PointRef& original_point) const;
};

/// Builds the chain on the width-h refinement of `t` with `points` inserted.
/// Throws InvalidArgument if h <= 0 or if a non-killing mesh vertex has zero
/// lumped mass.
Chain build_chain(const Tree& t, const SpeedMeasure& nu, double h, std::span<const PointRef> points = {});

enum class Clock {
  exponential,      // holding times Exp(rate)
  jump_count_only,  // elapsed counts jumps; for exit laws
};

struct WalkConfig {
  double mesh_h = 0.01;
  std::size_t n_walks = 1000;
  std::uint64_t seed = 0;
  std::vector<PointRef> stop;          // points of the original tree; hit mode when non-empty
  std::optional<double> horizon;       // time mode (may combine with stop)
  Clock clock = Clock::exponential;
  std::uint64_t max_jumps = 1'000'000'000;
  unsigned threads = 0;                // 0: hardware concurrency, capped by DENDRITE_THREADS
  bool track_occupation = false;
  std::vector<double> functional;      // optional f on mesh vertices; accumulates ∫ f(X_s) ds
  double max_censored_fraction = 0.0;  // estimators throw above this

  void validate() const;
};

struct WalkRecord {
  std::optional<std::size_t> exit;  // index into WalkConfig::stop
  double elapsed = 0.0;
  bool killed = false;
  bool censored = false;
  std::uint64_t jumps = 0;
  double functional = 0.0;
  std::vector<double> occupation;   // per mesh vertex, when tracked
};

/// Sums over walks, folded in walk order. Moments are over walks that were
/// neither killed nor censored.
struct WalkAggregate {
  std::size_t n_walks = 0;
  std::size_t n_killed = 0;
  std::size_t n_censored = 0;
  std::size_t n_horizon = 0;            // stopped by the time horizon
  std::vector<std::size_t> exit_counts;  // per stop point
  std::size_t n_completed = 0;
  double sum_elapsed = 0.0;
  double sum_elapsed_sq = 0.0;
  double sum_functional = 0.0;
  double sum_functional_sq = 0.0;
  std::uint64_t total_jumps = 0;
  std::vector<double> occupation;        // summed over all walks, when tracked

  bool operator==(const WalkAggregate&) const = default;
};

/// Number of worker threads: `requested` (or the hardware count when 0),
/// capped by the DENDRITE_THREADS environment variable.
unsigned resolve_threads(unsigned requested);

WalkRecord run_single_walk(const Chain& chain, const WalkConfig& cfg, const PointRef& start, std::uint64_t index);

WalkAggregate run_walks(const Chain& chain, const WalkConfig& cfg, const PointRef& start);

/// All per-walk records, in walk order (for CSV output).
std::vector<WalkRecord> run_walk_records(const Chain& chain, const WalkConfig& cfg, const PointRef& start);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_used = 0;
  std::size_t n_killed = 0;
  std::size_t n_censored = 0;
};

/// Mean of τ_target from `start`; the chain is built from `t` with the
/// start and target inserted.
Estimate estimate_hitting_time(const Tree& t, const SpeedMeasure& nu, const WalkConfig& cfg, const PointRef& start,
                               const PointRef& target);

/// Mean of ∫_0^{τ_target} f(X_s) ds with f piecewise linear on `t`.
Estimate estimate_occupation(const Tree& t, const SpeedMeasure& nu, const WalkConfig& cfg, const PointRef& start,
                             const PointRef& target, const PiecewiseLinearFn& f);

/// Fraction of walks from `start` that hit a before b; binomial standard error.
Estimate estimate_hitting_probability(const Tree& t, const SpeedMeasure& nu, const WalkConfig& cfg,
                                      const PointRef& start, const PointRef& a, const PointRef& b);

/// Exact E^x[∫_0^{τ} f(X_s) ds] for the chain, τ the hitting time of
/// `stop` (or of a killing vertex): solves Q u = M f with u = 0 there.
std::vector<double> chain_expected_functional(const Chain& chain, std::span<const VertexId> stop,
                                              std::span<const double> f);

struct MeanHittingBound {
  double exact = 0.0;  // E^x[τ_b]
  double bound = 0.0;  // 2 ν(T) r(x,b)
  bool holds = false;
};

MeanHittingBound bound_check_mean_hitting(const Tree& t, const SpeedMeasure& nu, const PointRef& x,
                                          const PointRef& b);

}  // namespace dendrite
