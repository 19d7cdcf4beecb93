#include "dendrite/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <bit>
#include <cstring>
#include <limits>
#include <thread>

#include <Eigen/SparseCore>

#include "dendrite/error.hpp"
#include "dendrite/potential.hpp"

namespace dendrite {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Per-vertex record packed so that one load decides the next step.
struct Node {
  double rate;
  std::uint32_t first;   // fair: left neighbour; general: first CSR slot
  std::uint32_t second;  // fair: right neighbour; general: one past the last slot
  std::int32_t stop;     // index into the stop set, or -1
  std::uint32_t room;    // fair runs: steps that cannot leave the run
  std::uint8_t kind;
};

enum : std::uint8_t { kGeneral = 0, kFair = 1, kStop = 2, kKill = 3 };

// Per-run lookup tables shared read-only by all workers.
struct WalkPlan {
  const Chain& chain;
  const WalkConfig& cfg;
  VertexId start;
  std::vector<Node> nodes;
};

WalkPlan make_plan(const Chain& chain, const WalkConfig& cfg, const PointRef& start) {
  cfg.validate();
  if (!cfg.functional.empty() && cfg.functional.size() != chain.size()) {
    throw InvalidArgument("functional must give one value per mesh vertex");
  }
  if (chain.size() > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("mesh too large");
  WalkPlan plan{chain, cfg, chain.vertex_of(start), std::vector<Node>(chain.size())};
  for (VertexId v = 0; v < chain.size(); ++v) {
    Node& nd = plan.nodes[v];
    nd.rate = chain.rate[v];
    nd.stop = -1;
    nd.room = 0;
    if (chain.killing[v]) {
      nd.kind = kKill;
    } else if (chain.fair[v]) {
      nd.kind = kFair;
      nd.first = static_cast<std::uint32_t>(chain.target[chain.offset[v]]);
      nd.second = static_cast<std::uint32_t>(chain.target[chain.offset[v] + 1]);
    } else {
      nd.kind = kGeneral;
      nd.first = static_cast<std::uint32_t>(chain.offset[v]);
      nd.second = static_cast<std::uint32_t>(chain.offset[v + 1]);
    }
  }
  for (std::size_t i = 0; i < cfg.stop.size(); ++i) {
    Node& nd = plan.nodes[chain.vertex_of(cfg.stop[i])];
    if (nd.stop < 0) nd.stop = static_cast<std::int32_t>(i);
    nd.kind = kStop;
  }
  // Runs of consecutive ids whose members are fair with neighbours id±1
  // (the interior of a uniformly subdivided segment). Inside a run the walk
  // is a simple random walk, so k steps move it by 2·popcount(k bits) - k.
  auto in_run = [&](std::uint32_t v) {
    const Node& nd = plan.nodes[v];
    if (nd.kind != kFair) return false;
    const std::uint32_t lo = std::min(nd.first, nd.second);
    const std::uint32_t hi = std::max(nd.first, nd.second);
    return lo + 1 == v && v + 1 == hi;
  };
  const auto n = static_cast<std::uint32_t>(chain.size());
  for (std::uint32_t v = 0; v < n;) {
    if (!in_run(v)) {
      ++v;
      continue;
    }
    std::uint32_t end = v;
    while (end + 1 < n && in_run(end + 1)) ++end;
    for (std::uint32_t u = v; u <= end; ++u) plan.nodes[u].room = std::min(u - v, end - u) + 1;
    v = end + 1;
  }
  return plan;
}

void walk(const WalkPlan& plan, std::uint64_t index, WalkRecord& rec) {
  const Chain& ch = plan.chain;
  const WalkConfig& cfg = plan.cfg;
  const Node* nodes = plan.nodes.data();
  SplitMix64 rng = SplitMix64::for_walk(cfg.seed, index);
  const bool exponential = cfg.clock == Clock::exponential;
  const bool has_f = !cfg.functional.empty();
  const bool track = cfg.track_occupation;
  // block steps skip the per-step bookkeeping, so only for pure exit laws
  const bool block_steps = !exponential && !has_f && !track;
  const double horizon = cfg.horizon.value_or(std::numeric_limits<double>::infinity());
  if (track) rec.occupation.assign(ch.size(), 0.0);

  std::uint64_t bits = 0;
  int bits_left = 0;
  std::uint32_t v = static_cast<std::uint32_t>(plan.start);
  double elapsed = 0.0;
  std::uint64_t jumps = 0;
  for (;;) {
    const Node& nd = nodes[v];
    if (nd.kind == kStop) {
      rec.exit = static_cast<std::size_t>(nd.stop);
      break;
    }
    if (nd.kind == kKill) {
      rec.killed = true;
      break;
    }
    if (jumps >= cfg.max_jumps) {
      rec.censored = true;
      break;
    }
    double hold = exponential ? -std::log1p(-rng.uniform()) / nd.rate : 1.0;
    const bool last = elapsed + hold >= horizon;
    if (last) hold = horizon - elapsed;
    if (has_f) rec.functional += cfg.functional[v] * hold;
    if (track) rec.occupation[v] += hold;
    if (last) {
      elapsed = horizon;
      break;
    }
    elapsed += hold;

    if (nd.kind == kFair && block_steps && nd.room >= 8 && jumps + 32 <= cfg.max_jumps && elapsed + 32.0 < horizon) {
      const int k = nd.room >= 32 ? 32 : 8;
      if (bits_left < k) {
        bits = rng.next();
        bits_left = 64;
      }
      const std::uint64_t chunk = bits & ((std::uint64_t{1} << k) - 1);
      bits >>= k;
      bits_left -= k;
      v = static_cast<std::uint32_t>(static_cast<std::int64_t>(v) + 2 * std::popcount(chunk) - k);
      jumps += static_cast<std::uint64_t>(k);
      elapsed += static_cast<double>(k - 1);  // one unit was already added above
      continue;
    }
    if (nd.kind == kFair) {
      if (bits_left == 0) {
        bits = rng.next();
        bits_left = 64;
      }
      // branch-free select: the direction is a coin flip the predictor cannot learn
      const std::uint32_t mask = 0U - static_cast<std::uint32_t>(bits & 1U);
      v = nd.first ^ ((nd.first ^ nd.second) & mask);
      bits >>= 1;
      --bits_left;
    } else {
      const double u = rng.uniform();
      std::uint32_t k = nd.first;
      while (k + 1 < nd.second && !(u < ch.cumulative[k])) ++k;
      v = static_cast<std::uint32_t>(ch.target[k]);
    }
    ++jumps;
  }
  rec.elapsed = elapsed;
  rec.jumps = jumps;
}

void accumulate(WalkAggregate& agg, const WalkRecord& rec, bool horizon_stop) {
  ++agg.n_walks;
  agg.total_jumps += rec.jumps;
  if (!rec.occupation.empty()) {
    for (std::size_t i = 0; i < rec.occupation.size(); ++i) agg.occupation[i] += rec.occupation[i];
  }
  if (rec.killed) {
    ++agg.n_killed;
    return;
  }
  if (rec.censored) {
    ++agg.n_censored;
    return;
  }
  if (rec.exit) ++agg.exit_counts[*rec.exit];
  if (horizon_stop) ++agg.n_horizon;
  ++agg.n_completed;
  agg.sum_elapsed += rec.elapsed;
  agg.sum_elapsed_sq += rec.elapsed * rec.elapsed;
  agg.sum_functional += rec.functional;
  agg.sum_functional_sq += rec.functional * rec.functional;
}

void merge(WalkAggregate& into, const WalkAggregate& part) {
  into.n_walks += part.n_walks;
  into.n_killed += part.n_killed;
  into.n_censored += part.n_censored;
  into.n_horizon += part.n_horizon;
  into.n_completed += part.n_completed;
  for (std::size_t i = 0; i < into.exit_counts.size(); ++i) into.exit_counts[i] += part.exit_counts[i];
  into.sum_elapsed += part.sum_elapsed;
  into.sum_elapsed_sq += part.sum_elapsed_sq;
  into.sum_functional += part.sum_functional;
  into.sum_functional_sq += part.sum_functional_sq;
  into.total_jumps += part.total_jumps;
  for (std::size_t i = 0; i < into.occupation.size(); ++i) into.occupation[i] += part.occupation[i];
}

WalkAggregate empty_aggregate(const WalkPlan& plan) {
  WalkAggregate agg;
  agg.exit_counts.assign(plan.cfg.stop.size(), 0);
  if (plan.cfg.track_occupation) agg.occupation.assign(plan.chain.size(), 0.0);
  return agg;
}

// Runs `body(block)` for every block index on up to `threads` workers.
template <class Body>
void for_each_block(std::size_t blocks, unsigned threads, Body body) {
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, blocks));
  if (threads <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) body(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t b = next.fetch_add(1);
        if (b >= blocks || failed.load()) return;
        try {
          body(b);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

Estimate moments(const WalkAggregate& agg, double sum, double sum_sq, const WalkConfig& cfg) {
  if (static_cast<double>(agg.n_censored) > cfg.max_censored_fraction * static_cast<double>(agg.n_walks)) {
    throw NumericalError("censored walks exceed the allowed fraction (" + std::to_string(agg.n_censored) + " of " +
                         std::to_string(agg.n_walks) + ")");
  }
  Estimate est;
  est.n_used = agg.n_completed;
  est.n_killed = agg.n_killed;
  est.n_censored = agg.n_censored;
  if (agg.n_completed == 0) throw NumericalError("no completed walks");
  const double n = static_cast<double>(agg.n_completed);
  est.mean = sum / n;
  if (agg.n_completed > 1) {
    const double var = std::max(0.0, (sum_sq - n * est.mean * est.mean) / (n - 1.0));
    est.std_error = std::sqrt(var / n);
  }
  return est;
}

void require_hit_mode(const WalkConfig& cfg) {
  if (cfg.horizon) throw InvalidArgument("hitting estimators do not take a time horizon");
}

}  // namespace

SplitMix64 SplitMix64::for_walk(std::uint64_t seed, std::uint64_t index) {
  return SplitMix64(mix64(seed ^ mix64(index + 0x9e3779b97f4a7c15ULL)));
}

std::vector<double> Chain::jump_probabilities(VertexId v) const {
  std::vector<double> p;
  double prev = 0.0;
  for (std::size_t k = offset.at(v); k < offset.at(v + 1); ++k) {
    p.push_back(cumulative[k] - prev);
    prev = cumulative[k];
  }
  return p;
}

VertexId Chain::vertex_of(const PointRef& original_point) const {
  const PointRef p = mesh.map(original_point);
  if (!p.is_vertex()) throw InvalidArgument("point is not a vertex of the simulation mesh");
  return p.vertex();
}

Chain build_chain(const Tree& t, const SpeedMeasure& nu, double h, std::span<const PointRef> points) {
  if (!std::isfinite(h) || !(h > 0.0)) throw InvalidArgument("mesh size must be positive");
  nu.validate(t);
  if (t.edge_count() == 0) throw InvalidArgument("tree has no edges");
  Chain ch(refine(t, h, points));
  ch.mesh_h = h;
  const Tree& m = ch.mesh.tree;
  const std::size_t n = m.vertex_count();
  ch.mass = lump(refine_measure(ch.mesh, nu), m).mass;
  ch.offset.assign(n + 1, 0);
  ch.rate.assign(n, 0.0);
  ch.killing.assign(n, 0);
  ch.fair.assign(n, 0);
  for (VertexId v = 0; v < n; ++v) {
    ch.offset[v] = ch.target.size();
    if (m.is_open(v)) {
      ch.killing[v] = 1;
      continue;
    }
    if (!(ch.mass[v] > 0.0)) {
      throw InvalidArgument("speed measure gives no mass to mesh vertex '" + m.name(v) +
                            "'; the chain would not leave it");
    }
    double total = 0.0;
    for (const Incidence& inc : m.incident(v)) total += 1.0 / (2.0 * m.edge(inc.edge).length);
    double run = 0.0;
    for (const Incidence& inc : m.incident(v)) {
      run += 1.0 / (2.0 * m.edge(inc.edge).length);
      ch.target.push_back(inc.neighbor);
      ch.cumulative.push_back(run / total);
    }
    ch.cumulative.back() = 1.0;
    ch.rate[v] = total / ch.mass[v];
    const auto inc = m.incident(v);
    if (inc.size() == 2 && m.edge(inc[0].edge).length == m.edge(inc[1].edge).length) ch.fair[v] = 1;
  }
  ch.offset[n] = ch.target.size();
  return ch;
}

void WalkConfig::validate() const {
  if (!std::isfinite(mesh_h) || !(mesh_h > 0.0)) throw InvalidArgument("mesh_h must be positive");
  if (n_walks < 1) throw InvalidArgument("n_walks must be at least 1");
  if (horizon && !(*horizon >= 0.0)) throw InvalidArgument("time horizon must be non-negative");
  if (stop.empty() && !horizon) throw InvalidArgument("need a non-empty stop set or a time horizon");
  if (!(max_censored_fraction >= 0.0 && max_censored_fraction <= 1.0)) {
    throw InvalidArgument("max_censored_fraction must lie in [0,1]");
  }
}

unsigned resolve_threads(unsigned requested) {
  unsigned n = requested != 0 ? requested : std::max(1U, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DENDRITE_THREADS")) {
    unsigned cap = 0;
    const char* end = env + std::strlen(env);
    auto [ptr, ec] = std::from_chars(env, end, cap);
    if (ec == std::errc() && ptr == end && cap > 0) n = std::min(n, cap);
  }
  return n;
}

WalkRecord run_single_walk(const Chain& chain, const WalkConfig& cfg, const PointRef& start, std::uint64_t index) {
  const WalkPlan plan = make_plan(chain, cfg, start);
  WalkRecord rec;
  walk(plan, index, rec);
  return rec;
}

WalkAggregate run_walks(const Chain& chain, const WalkConfig& cfg, const PointRef& start) {
  const WalkPlan plan = make_plan(chain, cfg, start);
  const std::size_t blocks = (cfg.n_walks + kWalkBlock - 1) / kWalkBlock;
  std::vector<WalkAggregate> parts(blocks);
  for_each_block(blocks, resolve_threads(cfg.threads), [&](std::size_t b) {
    WalkAggregate agg = empty_aggregate(plan);
    const std::size_t lo = b * kWalkBlock;
    const std::size_t hi = std::min(cfg.n_walks, lo + kWalkBlock);
    WalkRecord rec;
    for (std::size_t i = lo; i < hi; ++i) {
      rec = WalkRecord{};
      walk(plan, i, rec);
      accumulate(agg, rec, cfg.horizon && !rec.exit && !rec.killed && !rec.censored);
    }
    parts[b] = std::move(agg);
  });
  WalkAggregate total = empty_aggregate(plan);
  for (const WalkAggregate& part : parts) merge(total, part);
  return total;
}

std::vector<WalkRecord> run_walk_records(const Chain& chain, const WalkConfig& cfg, const PointRef& start) {
  const WalkPlan plan = make_plan(chain, cfg, start);
  std::vector<WalkRecord> out(cfg.n_walks);
  const std::size_t blocks = (cfg.n_walks + kWalkBlock - 1) / kWalkBlock;
  for_each_block(blocks, resolve_threads(cfg.threads), [&](std::size_t b) {
    const std::size_t hi = std::min(cfg.n_walks, (b + 1) * kWalkBlock);
    for (std::size_t i = b * kWalkBlock; i < hi; ++i) walk(plan, i, out[i]);
  });
  return out;
}

Estimate estimate_hitting_time(const Tree& t, const SpeedMeasure& nu, const WalkConfig& cfg, const PointRef& start,
                               const PointRef& target) {
  require_hit_mode(cfg);
  const PointRef pts[] = {start, target};
  const Chain chain = build_chain(t, nu, cfg.mesh_h, pts);
  WalkConfig c = cfg;
  c.stop = {target};
  const WalkAggregate agg = run_walks(chain, c, start);
  return moments(agg, agg.sum_elapsed, agg.sum_elapsed_sq, c);
}

Estimate estimate_occupation(const Tree& t, const SpeedMeasure& nu, const WalkConfig& cfg, const PointRef& start,
                             const PointRef& target, const PiecewiseLinearFn& f) {
  require_hit_mode(cfg);
  f.check(t);
  const PointRef pts[] = {start, target};
  const Chain chain = build_chain(t, nu, cfg.mesh_h, pts);
  WalkConfig c = cfg;
  c.stop = {target};
  const PiecewiseLinearFn mf = transfer(t, chain.mesh, f);
  c.functional.assign(mf.values().begin(), mf.values().end());
  const WalkAggregate agg = run_walks(chain, c, start);
  return moments(agg, agg.sum_functional, agg.sum_functional_sq, c);
}

Estimate estimate_hitting_probability(const Tree& t, const SpeedMeasure& nu, const WalkConfig& cfg,
                                      const PointRef& start, const PointRef& a, const PointRef& b) {
  require_hit_mode(cfg);
  const PointRef pts[] = {start, a, b};
  const Chain chain = build_chain(t, nu, cfg.mesh_h, pts);
  WalkConfig c = cfg;
  c.stop = {a, b};
  const WalkAggregate agg = run_walks(chain, c, start);
  const double hits = static_cast<double>(agg.exit_counts[0]);
  return moments(agg, hits, hits, c);
}

std::vector<double> chain_expected_functional(const Chain& chain, std::span<const VertexId> stop,
                                              std::span<const double> f) {
  const Tree& m = chain.mesh.tree;
  const std::size_t n = chain.size();
  if (f.size() != n) throw InvalidArgument("functional must give one value per mesh vertex");
  std::vector<Eigen::Triplet<double>> trip;
  for (EdgeId e = 0; e < m.edge_count(); ++e) {
    const Edge& ed = m.edge(e);
    const double c = 1.0 / (2.0 * ed.length);
    const auto u = static_cast<Eigen::Index>(ed.u);
    const auto v = static_cast<Eigen::Index>(ed.v);
    trip.emplace_back(u, u, c);
    trip.emplace_back(v, v, c);
    trip.emplace_back(u, v, -c);
    trip.emplace_back(v, u, -c);
  }
  Eigen::SparseMatrix<double> q(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  q.setFromTriplets(trip.begin(), trip.end());
  std::vector<bool> fixed(n, false);
  for (VertexId v = 0; v < n; ++v) fixed[v] = chain.killing[v] != 0;
  for (VertexId s : stop) fixed.at(s) = true;
  if (std::none_of(fixed.begin(), fixed.end(), [](bool b) { return b; })) {
    throw InvalidArgument("need a stop vertex or a killing vertex");
  }
  std::vector<double> rhs(n);
  for (VertexId v = 0; v < n; ++v) rhs[v] = chain.mass[v] * f[v];
  const std::vector<double> zeros(n, 0.0);
  return solve_dirichlet(q, rhs, fixed, zeros);
}

MeanHittingBound bound_check_mean_hitting(const Tree& t, const SpeedMeasure& nu, const PointRef& x,
                                          const PointRef& b) {
  MeanHittingBound out;
  out.exact = expected_occupation(t, nu, x, b, PiecewiseLinearFn::constant(t, 1.0));
  out.bound = 2.0 * total_mass(nu, t) * distance(t, x, b);
  out.holds = out.exact <= out.bound * (1.0 + 1e-12);
  return out;
}

}  // namespace dendrite
