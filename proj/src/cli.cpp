#include "dendrite/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dendrite/acceptance.hpp"
#include "dendrite/calculus.hpp"
#include "dendrite/classify.hpp"
#include "dendrite/error.hpp"
#include "dendrite/generator.hpp"
#include "dendrite/io.hpp"
#include "dendrite/potential.hpp"
#include "dendrite/simulate.hpp"
#include "dendrite/spectral.hpp"

#ifndef DENDRITE_VERSION
#define DENDRITE_VERSION "0.0.0"
#endif

namespace dendrite {

namespace {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << x;
  return os.str();
}

struct Input {
  TreeFile file;
  std::string hash;  // fnv1a64 of the file bytes
};

Input load_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return {parse_tree_string(bytes), "fnv1a64:" + hex64(fnv1a(bytes))};
}

// Everything a subcommand writes goes through here so `--emit` can add the
// manifest sidecar.
class Sink {
 public:
  Sink(std::ostream& out, std::string emit, std::string command_line)
      : out_(out), emit_(std::move(emit)), command_line_(std::move(command_line)),
        started_(std::chrono::steady_clock::now()) {}

  std::ostream& stream() { return emit_.empty() ? out_ : buffer_; }
  std::ostream& terminal() { return out_; }
  void set_input_hash(std::string h) { input_hash_ = std::move(h); }
  void set_seed(std::uint64_t s) { seed_ = s; }

  void finish() {
    if (emit_.empty()) return;
    std::ofstream file(emit_, std::ios::binary);
    if (!file) throw InvalidArgument("cannot write '" + emit_ + "'");
    file << buffer_.str();
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    std::ofstream man(emit_ + ".manifest", std::ios::binary);
    if (!man) throw InvalidArgument("cannot write '" + emit_ + ".manifest'");
    man << "command," << command_line_ << "\n"
        << "input_hash," << (input_hash_.empty() ? "none" : input_hash_) << "\n"
        << "seed," << (seed_ ? std::to_string(*seed_) : "none") << "\n"
        << "version," << DENDRITE_VERSION << "\n"
        << "wall_time_s," << format_number(wall) << "\n";
    out_ << "wrote," << emit_ << "\n";
  }

 private:
  std::ostream& out_;
  std::string emit_;
  std::string command_line_;
  std::ostringstream buffer_;
  std::string input_hash_;
  std::optional<std::uint64_t> seed_;
  std::chrono::steady_clock::time_point started_;
};

// Significant digits of computed results; solver accuracy is about 1e-15,
// so the default hides the last-bit noise (cap on the Y-tree prints 0.1).
int g_digits = 15;

std::string num(double x) { return format_number(x, g_digits); }

void kv(std::ostream& os, std::string_view key, double value) { os << key << "," << num(value) << "\n"; }

// `name` for a vertex, `u/v@s` for the point at distance s from u on edge uv.
std::vector<PointRef> parse_points(const Tree& t, const std::vector<std::string>& texts) {
  std::vector<PointRef> out;
  for (const auto& s : texts) out.push_back(parse_point(t, s));
  return out;
}

void write_vertex_table(std::ostream& os, const Tree& original, const MeshFunction& f) {
  os << "vertex,value\n";
  for (VertexId v = 0; v < original.vertex_count(); ++v) {
    os << original.name(v) << "," << num(f.at(PointRef::at(v))) << "\n";
  }
}

EigenMethod parse_method(const std::string& s) {
  if (s == "dense") return EigenMethod::dense;
  if (s == "inverse") return EigenMethod::inverse_iteration;
  return EigenMethod::automatic;
}

struct Options {
  std::string file;
  std::string emit;
  // gen
  int k = 2;
  double c = 1.0;
  double first = 1.0;
  std::size_t depth = 4;
  std::size_t n = 10;
  double min_len = 0.5;
  double max_len = 2.0;
  // compute
  std::string quantity;
  std::vector<std::string> a, b;
  std::string x, y;
  double alpha = 0.0;
  double h = 0.0;
  // spectrum / mixing
  std::string dirichlet;
  std::string method = "auto";
  std::string law;
  double t_max = 0.0;
  std::size_t steps = 50;
  std::size_t max_vertices = 500;
  // classify
  std::vector<double> kary;
  bool random_walk = false;
  // simulate
  double mesh_h = 0.01;
  std::size_t walks = 1000;
  std::uint64_t seed = 0;
  std::string start;
  std::vector<std::string> stop;
  double horizon = -1.0;
  std::string clock = "exponential";
  unsigned threads = 0;
  // selftest
  std::vector<int> only;
};

int cmd_gen(const std::string& kind, const Options& o, Sink& sink) {
  std::ostream& os = sink.stream();
  if (kind == "kary") {
    const GeneratorSpec gen{o.k, o.c, o.first};
    gen.validate();
    const Tree t = build_generator_tree(gen, o.depth);
    os << serialize_tree(t, SpeedMeasure::length_measure(t), GeneratorMetadata{gen, o.depth});
  } else {
    if (o.n < 1) throw InvalidArgument("--n must be at least 1");
    std::mt19937_64 rng(o.seed);
    sink.set_seed(o.seed);
    const Tree t = random_tree(o.n, rng, o.min_len, o.max_len);
    os << serialize_tree(t, SpeedMeasure::length_measure(t));
  }
  return kExitOk;
}

int cmd_compute(const Options& o, Sink& sink) {
  const Input in = load_input(o.file);
  sink.set_input_hash(in.hash);
  const Tree& t = in.file.tree;
  const SpeedMeasure& nu = in.file.measure;
  std::ostream& os = sink.stream();
  const std::string& q = o.quantity;
  auto one = [&](const std::vector<std::string>& v, const char* flag) {
    if (v.size() != 1) throw InvalidArgument(std::string("--") + flag + " takes exactly one point here");
    return parse_point(t, v.front());
  };
  auto need = [&](const std::string& s, const char* flag) {
    if (s.empty()) throw InvalidArgument(std::string("missing --") + flag);
    return parse_point(t, s);
  };

  if (q == "cap") {
    const auto as = parse_points(t, o.a);
    const auto bs = parse_points(t, o.b);
    kv(os, "cap", capacity(t, nu, bs, as, o.alpha, o.h));
  } else if (q == "distance") {
    kv(os, "distance", distance(t, need(o.x, "x"), need(o.y, "y")));
  } else if (q == "diameter") {
    kv(os, "diameter", diameter(t));
  } else if (q == "mass") {
    kv(os, "mass", total_mass(nu, t));
  } else if (q == "green") {
    const PointRef x = need(o.x, "x");
    const PointRef bb = one(o.b, "b");
    if (!o.y.empty()) {
      kv(os, "green", green_two_point(t, x, bb, parse_point(t, o.y)));
    } else {
      const PointRef kill[] = {bb};
      const PointMass pole[] = {{x, 1.0}};
      write_vertex_table(os, t, green_general(t, nu, kill, pole, o.alpha, o.h));
    }
  } else if (q == "hit") {
    kv(os, "hit", hitting_probability(t, need(o.x, "x"), one(o.a, "a"), one(o.b, "b")));
  } else if (q == "harmonic") {
    const auto ones = parse_points(t, o.a);
    const auto zeros = parse_points(t, o.b);
    const HarmonicSolution sol = harmonic(t, nu, zeros, ones, o.alpha, o.h);
    write_vertex_table(os, t, sol);
  } else if (q == "occupation") {
    kv(os, "occupation",
       expected_occupation(t, nu, need(o.x, "x"), one(o.b, "b"), PiecewiseLinearFn::constant(t, 1.0)));
  } else if (q == "hitting-bound") {
    const MeanHittingBound r = bound_check_mean_hitting(t, nu, need(o.x, "x"), one(o.b, "b"));
    kv(os, "exact", r.exact);
    kv(os, "bound", r.bound);
    os << "holds," << (r.holds ? "true" : "false") << "\n";
  } else {
    throw InvalidArgument("unknown quantity '" + q + "'");
  }
  return kExitOk;
}

int cmd_spectrum(const Options& o, Sink& sink) {
  const Input in = load_input(o.file);
  sink.set_input_hash(in.hash);
  const Tree& t = in.file.tree;
  const SpeedMeasure& nu = in.file.measure;
  const double h = o.h > 0.0 ? o.h : diameter(t) / 100.0;
  std::ostream& os = sink.stream();
  if (!o.dirichlet.empty()) {
    const PointRef b = parse_point(t, o.dirichlet);
    const PointRef dir[] = {b};
    const SpectralResult r = principal_eigenvalue(t, nu, dir, h, parse_method(o.method));
    const EigenvalueBounds bounds = eigenvalue_bounds(t, nu, b, h);
    kv(os, "lambda", r.eigenvalue);
    kv(os, "lower", bounds.lower);
    kv(os, "upper", bounds.upper);
    kv(os, "mesh_h", h);
    if (!o.emit.empty()) write_vertex_table(os, t, r.eigenfunction);
  } else {
    const SpectralResult r = spectral_gap(t, nu, h, parse_method(o.method));
    kv(os, "gap", r.eigenvalue);
    kv(os, "gap_lower", 1.0 / (2.0 * diameter(t) * total_mass(nu, t)));
    kv(os, "mesh_h", h);
    if (!o.emit.empty()) write_vertex_table(os, t, r.eigenfunction);
  }
  return kExitOk;
}

int cmd_mixing(const Options& o, Sink& sink) {
  const Input in = load_input(o.file);
  sink.set_input_hash(in.hash);
  const Tree& t = in.file.tree;
  const SpeedMeasure& nu = in.file.measure;
  double length = 0.0;
  for (const Edge& e : t.edges()) length += e.length;
  const double h = o.h > 0.0 ? o.h : length / 200.0;
  const SpeedMeasure law = o.law.empty() ? scaled(nu, 1.0 / total_mass(nu, t)) : restricted_law(t, nu, t.vertex(o.law));
  const double t_max = o.t_max > 0.0 ? o.t_max : 4.0 * diameter(t) * total_mass(nu, t);
  std::vector<double> times;
  const std::size_t steps = std::max<std::size_t>(o.steps, 1);
  for (std::size_t i = 0; i <= steps; ++i) times.push_back(t_max * static_cast<double>(i) / static_cast<double>(steps));
  const MixingCurve c = mixing_curve(t, nu, law, times, h, o.max_vertices);
  std::ostream& os = sink.stream();
  os << "t,tv,bound,gap_bound\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    os << num(c.times[i]) << "," << num(c.tv[i]) << "," << num(c.bound[i]) << "," << num(c.gap_bound[i]) << "\n";
  }
  return kExitOk;
}

void write_classification(std::ostream& os, const Classification& c) {
  os << "verdict=" << to_string(c.verdict) << "\n";
  if (c.compact) os << "compact=" << (*c.compact ? "true" : "false") << "\n";
  if (c.resistance_limit) os << "resistance_limit=" << num(*c.resistance_limit) << "\n";
  if (c.hausdorff_dimension) os << "hausdorff_dimension=" << num(*c.hausdorff_dimension) << "\n";
  if (!c.note.empty()) os << "note=" << c.note << "\n";
}

int cmd_classify(const Options& o, Sink& sink) {
  std::ostream& os = sink.stream();
  std::optional<GeneratorSpec> gen;
  if (!o.kary.empty()) {
    if (o.kary.size() != 2) throw InvalidArgument("--kary takes k and c");
    const double k = o.kary[0];
    if (k != std::floor(k) || k < 1.0) throw InvalidArgument("k must be a positive integer");
    gen = GeneratorSpec{static_cast<int>(k), o.kary[1], 1.0};
  } else if (!o.file.empty()) {
    const Input in = load_input(o.file);
    sink.set_input_hash(in.hash);
    if (in.file.generator) {
      gen = in.file.generator->spec;
      os << "source=generator\n";
    } else {
      os << "source=finite\n";
      write_classification(os, classify_finite(in.file.tree, in.file.measure));
      return kExitOk;
    }
  } else {
    throw InvalidArgument("classify needs --kary k c or --file");
  }
  write_classification(os, o.random_walk ? classify_random_walk(*gen) : classify_generator(*gen));
  return kExitOk;
}

int cmd_simulate(const Options& o, Sink& sink) {
  const Input in = load_input(o.file);
  sink.set_input_hash(in.hash);
  sink.set_seed(o.seed);
  const Tree& t = in.file.tree;
  if (o.start.empty()) throw InvalidArgument("missing --start");
  WalkConfig cfg;
  cfg.mesh_h = o.mesh_h;
  cfg.n_walks = o.walks;
  cfg.seed = o.seed;
  cfg.stop = parse_points(t, o.stop);
  if (o.horizon >= 0.0) cfg.horizon = o.horizon;
  if (o.clock == "jumps") {
    cfg.clock = Clock::jump_count_only;
  } else if (o.clock != "exponential") {
    throw InvalidArgument("--clock is 'exponential' or 'jumps'");
  }
  cfg.threads = o.threads;
  cfg.validate();
  const PointRef start = parse_point(t, o.start);
  std::vector<PointRef> pts = cfg.stop;
  pts.push_back(start);
  const Chain chain = build_chain(t, in.file.measure, cfg.mesh_h, pts);
  const std::vector<WalkRecord> recs = run_walk_records(chain, cfg, start);

  std::size_t killed = 0, censored = 0, completed = 0;
  std::vector<std::size_t> exits(cfg.stop.size(), 0);
  double sum = 0.0, sum_sq = 0.0;
  for (const WalkRecord& r : recs) {
    if (r.killed) {
      ++killed;
    } else if (r.censored) {
      ++censored;
    } else {
      ++completed;
      sum += r.elapsed;
      sum_sq += r.elapsed * r.elapsed;
      if (r.exit) ++exits[*r.exit];
    }
  }
  if (!o.emit.empty()) {
    std::ostream& os = sink.stream();
    os << "walk_id,exit,elapsed,killed\n";
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const WalkRecord& r = recs[i];
      os << i << "," << (r.exit ? o.stop[*r.exit] : (r.censored ? "censored" : "none")) << ","
         << format_number(r.elapsed) << "," << (r.killed ? 1 : 0) << "\n";
    }
  }
  // the summary always goes to the terminal
  std::ostringstream summary;
  summary << "walks," << recs.size() << "\n"
          << "completed," << completed << "\n"
          << "killed," << killed << "\n"
          << "censored," << censored << "\n";
  for (std::size_t i = 0; i < exits.size(); ++i) summary << "exit:" << o.stop[i] << "," << exits[i] << "\n";
  if (completed > 0) {
    const double n = static_cast<double>(completed);
    const double mean = sum / n;
    const double var = completed > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
    kv(summary, "mean_elapsed", mean);
    kv(summary, "std_error", std::sqrt(var / n));
  }
  sink.terminal() << summary.str();
  return kExitOk;
}

int cmd_selftest(const Options& o, std::ostream& out) {
  bool ok = true;
  for (const CriterionResult& r : run_acceptance(o.only)) {
    out << format_result(r) << std::endl;
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitNumerical;
}

std::string join_args(int argc, const char* const* argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Brownian motion on metric trees: potential theory, spectra, classification, simulation", "dendrite"};
  app.set_version_flag("--version", DENDRITE_VERSION);
  app.require_subcommand(1);
  Options o;
  int digits = 15;
  app.add_option("--digits", digits, "significant digits of results (0: shortest round-trip)")
      ->check(CLI::Range(0, 17));

  auto add_emit = [&](CLI::App* sub) { sub->add_option("--emit", o.emit, "write output to this path plus a .manifest"); };
  auto add_file = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--file", o.file, "tree file (rtree v1)");
    if (required) opt->required();
  };

  std::string gen_kind;
  auto* gen = app.add_subcommand("gen", "generate a tree file");
  gen->add_option("kind", gen_kind, "kary | random")->required()->check(CLI::IsMember({"kary", "random"}));
  gen->add_option("--k", o.k, "children per branch point");
  gen->add_option("--c", o.c, "edge length ratio between levels");
  gen->add_option("--first", o.first, "length of the root edge");
  gen->add_option("--depth", o.depth, "levels of edges");
  gen->add_option("--n", o.n, "vertices (random)");
  gen->add_option("--seed", o.seed, "seed (random)");
  gen->add_option("--min-len", o.min_len);
  gen->add_option("--max-len", o.max_len);
  add_emit(gen);

  auto* compute = app.add_subcommand("compute", "exact potential-theoretic quantities");
  compute->add_option("quantity", o.quantity, "cap | green | hit | harmonic | occupation | hitting-bound | distance | diameter | mass")
      ->required()
      ->check(CLI::IsMember({"cap", "green", "hit", "harmonic", "occupation", "hitting-bound", "distance", "diameter",
                             "mass"}));
  add_file(compute, true);
  compute->add_option("--a", o.a, "point(s) of A (value 1)")->delimiter(',');
  compute->add_option("--b", o.b, "point(s) of B (value 0 / killing)")->delimiter(',');
  compute->add_option("--x", o.x, "start or pole");
  compute->add_option("--y", o.y, "evaluation point");
  compute->add_option("--alpha", o.alpha, "resolvent parameter");
  compute->add_option("--mesh-h", o.h, "mesh width (0: no subdivision)");
  add_emit(compute);

  auto* spectrum = app.add_subcommand("spectrum", "principal eigenvalue with bounds, or the spectral gap");
  add_file(spectrum, true);
  spectrum->add_option("--dirichlet", o.dirichlet, "Dirichlet point b (omit for the spectral gap)");
  spectrum->add_option("--mesh-h", o.h, "mesh width (default diam/100)");
  spectrum->add_option("--method", o.method)->check(CLI::IsMember({"auto", "dense", "inverse"}));
  add_emit(spectrum);

  auto* mixing = app.add_subcommand("mixing", "total-variation curve against the mixing bound");
  add_file(mixing, true);
  mixing->add_option("--law", o.law, "initial law: nu restricted below this vertex (default: nu normalized)");
  mixing->add_option("--mesh-h", o.h, "mesh width (default total length/200)");
  mixing->add_option("--t-max", o.t_max, "last time (default 4 diam nu(T))");
  mixing->add_option("--steps", o.steps, "grid intervals");
  mixing->add_option("--max-vertices", o.max_vertices, "mesh size limit");
  add_emit(mixing);

  auto* classify = app.add_subcommand("classify", "recurrence or transience");
  classify->add_option("--kary", o.kary, "k c of a self-similar tree")->expected(2);
  add_file(classify, false);
  classify->add_flag("--random-walk", o.random_walk, "discrete random walk criterion");
  add_emit(classify);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo of the embedded chain");
  add_file(simulate, true);
  simulate->add_option("--mesh-h", o.mesh_h, "mesh width");
  simulate->add_option("--walks", o.walks, "number of walks");
  simulate->add_option("--seed", o.seed, "64-bit seed");
  simulate->add_option("--start", o.start, "start point")->required();
  simulate->add_option("--stop", o.stop, "stop point(s)")->delimiter(',');
  simulate->add_option("--horizon", o.horizon, "time horizon");
  simulate->add_option("--clock", o.clock, "exponential | jumps");
  simulate->add_option("--threads", o.threads, "workers (DENDRITE_THREADS caps this)");
  add_emit(simulate);

  auto* selftest = app.add_subcommand("selftest", "run the acceptance suite");
  selftest->add_option("--only", o.only, "criterion ids")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << DENDRITE_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "dendrite: " << e.what() << "\n";
    return kExitUsage;
  }

  g_digits = digits;
  Sink sink(out, o.emit, join_args(argc, argv));
  try {
    int code = kExitOk;
    if (*gen) {
      code = cmd_gen(gen_kind, o, sink);
    } else if (*compute) {
      code = cmd_compute(o, sink);
    } else if (*spectrum) {
      code = cmd_spectrum(o, sink);
    } else if (*mixing) {
      code = cmd_mixing(o, sink);
    } else if (*classify) {
      code = cmd_classify(o, sink);
    } else if (*simulate) {
      code = cmd_simulate(o, sink);
    } else if (*selftest) {
      return cmd_selftest(o, out);
    }
    sink.finish();
    return code;
  } catch (const ParseError& e) {
    err << "dendrite: " << o.file << ": " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericalError& e) {
    err << "dendrite: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    err << "dendrite: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace dendrite
