#include "conespec/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>

#include "conespec/dynamics.hpp"
#include "conespec/io.hpp"

namespace conespec {

namespace {

struct Loaded {
  Instance inst;
  Tolerances tol;
  std::uint64_t seed = 0;
};

Loaded load(const std::string& path, const std::optional<std::uint64_t>& seed_flag) {
  Instance inst = parse_instance(read_input(path));
  const Tolerances tol = inst.tolerances(Tolerances::from_environment());
  const std::uint64_t seed = seed_flag ? *seed_flag : inst.seed.value_or(0);
  return Loaded{std::move(inst), tol, seed};
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty() || out_path == "-") {
    out << text;
  } else {
    write_file_atomic(out_path, text);
  }
}

// Bad input or parameters exit with 2; everything else is a numerical failure.
int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InvalidCone:
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownFamily:
    case ErrorCode::NotInCone:
    case ErrorCode::NotSolid:
    case ErrorCode::SplitOnSpectrum:
    case ErrorCode::NotEigenvectors:
      return kExitParseError;
    default:
      return kExitNumericalFailure;
  }
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ParseError(std::string(what) + ": expected a nonnegative integer, got '" + s + "'");
  return v;
}

// "a..b" with both ends given, or a single number.
std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string& s, const char* what) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) {
    const std::uint64_t v = parse_u64(s, what);
    return {v, v};
  }
  return {parse_u64(s.substr(0, dots), what), parse_u64(s.substr(dots + 2), what)};
}

CVector parse_vector_arg(const std::string& text, Index n) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error&) {
    throw ParseError("--x0: malformed JSON vector");
  }
  const CVector v = cvector_from_json(j);
  if (v.size() != n) throw ParseError("--x0: expected " + std::to_string(n) + " entries");
  if (!v.allFinite()) throw ParseError("--x0: entries must be finite");
  return v;
}

struct AnalyzeOpts {
  std::string path, out;
  std::optional<std::uint64_t> seed;
};

struct CertifyOpts {
  std::string path, out, theorem;
  std::optional<double> rho;
  std::optional<std::uint64_t> seed;
  bool strict = false;
};

struct FlowOpts {
  std::string path, csv, x0, grid = "linear";
  double alpha = 0.0, tmax = 40.0;
  int points = 200;
  bool unchecked = false;
};

struct GenOpts {
  std::string family, out;
  Index n = 0;
  std::uint64_t seed = 0;
};

struct SearchOpts {
  std::string family = "complexified", n_range = "2..8", seeds = "100", out, corpus;
  int threads = 0;
  bool resume = false, strict = false;
};

int cmd_analyze(const AnalyzeOpts& o, std::ostream& out) {
  const Loaded l = load(o.path, o.seed);
  CertificationReport rep = analyze(l.inst.matrix, l.inst.cone, l.tol, l.seed);
  rep.input_digest = instance_digest(l.inst);
  emit(pretty_json(report_to_json(rep)), o.out, out);
  return kExitOk;
}

int cmd_certify(const CertifyOpts& o, std::ostream& out) {
  const Loaded l = load(o.path, o.seed);
  CertificationReport rep;
  if (o.theorem == "3.6") {
    rep = certify_theorem_3_6(l.inst.matrix, l.inst.cone, l.tol, l.seed);
  } else if (o.theorem == "1.1") {
    if (!o.rho) throw ParseError("--rho is required for --theorem 1.1");
    if (!(*o.rho > 0.0 && *o.rho < 1.0)) throw ParseError("--rho must lie in (0, 1)");
    const double rs = eigen_spectrum(l.inst.matrix, l.tol).spectral_radius;
    rep = certify_theorem_1_1(l.inst.matrix, l.inst.cone, *o.rho * rs, l.tol, l.seed);
    rep.extra["rho_fraction"] = EvidenceValue::num(*o.rho);
  } else {
    rep = certify_real_kr(decomplexify(l.inst.matrix), l.inst.cone, l.tol, l.seed);
  }
  rep.input_digest = instance_digest(l.inst);
  emit(pretty_json(report_to_json(rep)), o.out, out);
  if (rep.failed()) return kExitAssertionFailed;
  if (o.strict && rep.undecided()) return kExitUndecided;
  return kExitOk;
}

int cmd_flow(const FlowOpts& o, std::ostream& out) {
  const Loaded l = load(o.path, std::nullopt);
  const Index n = l.inst.matrix.rows();
  CVector x0;
  if (o.x0.empty()) {
    const CMatrix& g = l.inst.cone.member_generators();
    x0 = g.rowwise().sum();
    x0 /= x0.norm();
  } else {
    x0 = parse_vector_arg(o.x0, n);
  }
  if (!o.unchecked && !member(l.inst.cone, x0, 10 * l.tol.tol_cone))
    throw Error(ErrorCode::NotInCone, "--x0 is not in the cone (pass --unchecked to allow)");
  if (!(o.tmax > 0.0) || o.points < 2) throw ParseError("--tmax must be positive and --points at least 2");
  const std::vector<double> grid =
      o.grid == "geometric" ? geometric_grid(o.tmax * 1e-3, o.tmax, o.points) : linear_grid(0.0, o.tmax, o.points);
  const FlowTrajectory traj = evolve(l.inst.matrix, o.alpha, x0, grid, true);
  const InvarianceReport inv = monitor_cone_invariance(traj, l.inst.cone, l.tol);
  std::string alpha_hat = "nan", nu_hat = "nan";
  try {
    const GrowthEstimate g = estimate_growth(traj);
    alpha_hat = format_double(g.alpha_hat);
    nu_hat = std::to_string(g.nu_hat);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InsufficientData) throw;
  }
  std::string text = trajectory_csv(traj);
  text += "# alpha_hat=" + alpha_hat + " nu_hat=" + nu_hat + " violations=" + std::to_string(inv.violations) +
          " max_violation=" + format_double(inv.max_violation) + "\n";
  emit(text, o.csv, out);
  return kExitOk;
}

int cmd_gen(const GenOpts& o, std::ostream& out) {
  emit(serialize_instance(generate_instance(o.family, o.n, o.seed)), o.out, out);
  return kExitOk;
}

std::vector<Instance> load_corpus(const std::string& path) {
  const std::string text = read_input(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError("corpus: malformed JSON");
  }
  if (!j.is_array()) throw ParseError("corpus must be a JSON array of instances");
  std::vector<Instance> out;
  for (const auto& item : j) out.push_back(instance_from_json(item));
  return out;
}

int cmd_search(const SearchOpts& o, std::ostream& out, std::ostream& err) {
  SearchConfig cfg;
  cfg.tol = Tolerances::from_environment();
  cfg.threads = o.threads;
  if (!o.corpus.empty()) {
    cfg.corpus = load_corpus(o.corpus);
  } else {
    cfg.family = o.family;
    const auto [n0, n1] = parse_range(o.n_range, "--n-range");
    cfg.n_min = static_cast<Index>(n0);
    cfg.n_max = static_cast<Index>(n1);
    const auto dots = o.seeds.find("..");
    if (dots == std::string::npos) {
      cfg.seed_begin = 0;
      cfg.seed_end = parse_u64(o.seeds, "--seeds");
    } else {
      std::tie(cfg.seed_begin, cfg.seed_end) = parse_range(o.seeds, "--seeds");
    }
    if (cfg.n_min > cfg.n_max || cfg.seed_begin > cfg.seed_end) throw ParseError("empty --n-range or --seeds");
    const auto& names = family_names();
    if (std::find(names.begin(), names.end(), cfg.family) == names.end())
      throw Error(ErrorCode::UnknownFamily, "unknown family '" + cfg.family + "'");
  }
  if (o.resume && o.out.empty()) throw ParseError("--resume needs --out");

  // Finished records are appended to <out>.partial as JSON lines; --resume
  // reads them back (and the records of a complete <out>).
  std::vector<SearchRecord> done;
  const std::string partial = o.out.empty() ? std::string() : o.out + ".partial";
  if (o.resume) {
    if (std::filesystem::exists(o.out)) {
      try {
        const Json prev = Json::parse(read_input(o.out));
        for (const auto& r : prev.at("records")) done.push_back(search_record_from_json(r));
      } catch (const Json::exception&) {
        throw ParseError("--resume: '" + o.out + "' is not a search report");
      }
    }
    if (std::filesystem::exists(partial)) {
      std::ifstream in(partial);
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
          done.push_back(search_record_from_json(Json::parse(line)));
        } catch (const Json::exception&) {
          break;  // a torn last line from an interrupted run
        }
      }
    }
  }
  std::ofstream log;
  if (!partial.empty()) log.open(partial, o.resume ? std::ios::app : std::ios::trunc);
  std::mutex mu;
  const auto progress = [&](const SearchRecord& r) {
    if (!log.is_open()) return;
    std::lock_guard<std::mutex> lock(mu);
    log << canonical_json(search_record_to_json(r)) << '\n' << std::flush;
  };
  const SearchReport rep = search_counterexample(cfg, done, progress);
  int errors = 0;
  for (const auto& r : rep.records) {
    if (r.status != "error") continue;
    ++errors;
    err << "search: n=" << r.n << " seed=" << r.seed << " skipped: " << r.error << '\n';
  }
  emit(pretty_json(search_report_to_json(rep)), o.out, out);
  if (log.is_open()) {
    log.close();
    std::filesystem::remove(partial);
  }
  return errors > 0 && o.strict ? kExitNumericalFailure : kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cone-preserving operators: spectra, certificates, flows and searches", "conespec"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  AnalyzeOpts ao;
  auto* analyze_cmd = app.add_subcommand("analyze", "Spectrum, positivity certificate and dominant pair");
  analyze_cmd->add_option("path", ao.path, "Instance file, or - for stdin")->required();
  analyze_cmd->add_option("--out", ao.out, "Report file (default stdout)");
  analyze_cmd->add_option("--seed", ao.seed, "Probe seed (default: instance seed, else 0)");

  CertifyOpts co;
  auto* certify_cmd = app.add_subcommand("certify", "Certify the assertions of a theorem");
  certify_cmd->add_option("path", co.path, "Instance file, or - for stdin")->required();
  certify_cmd->add_option("--theorem", co.theorem, "3.6, 1.1 or real-kr")
      ->required()
      ->check(CLI::IsMember({"3.6", "1.1", "real-kr"}));
  certify_cmd->add_option("--rho", co.rho, "Split radius for 1.1 as a fraction of the spectral radius");
  certify_cmd->add_option("--out", co.out, "Report file (default stdout)");
  certify_cmd->add_option("--seed", co.seed, "Probe seed (default: instance seed, else 0)");
  certify_cmd->add_flag("--strict", co.strict, "Exit 4 when an asserted item is Undecided");

  FlowOpts fo;
  auto* flow_cmd = app.add_subcommand("flow", "Trajectory of x' = A x as CSV");
  flow_cmd->add_option("path", fo.path, "Instance file, or - for stdin")->required();
  flow_cmd->add_option("--x0", fo.x0, "Initial state as a JSON array (default: sum of cone generators)");
  flow_cmd->add_option("--alpha", fo.alpha, "Extra growth factor e^{alpha t}");
  flow_cmd->add_option("--tmax", fo.tmax, "Final time");
  flow_cmd->add_option("--points", fo.points, "Number of grid points");
  flow_cmd->add_option("--grid", fo.grid, "linear (from 0) or geometric (from tmax/1000)")
      ->check(CLI::IsMember({"linear", "geometric"}));
  flow_cmd->add_option("--csv", fo.csv, "CSV file (default stdout)");
  flow_cmd->add_flag("--unchecked", fo.unchecked, "Allow x0 outside the cone");

  GenOpts go;
  auto* gen_cmd = app.add_subcommand("gen", "Generate an instance");
  gen_cmd->add_option("--family", go.family, "Instance family")->required();
  gen_cmd->add_option("--n", go.n, "Dimension")->required();
  gen_cmd->add_option("--seed", go.seed, "Seed");
  gen_cmd->add_option("--out", go.out, "Instance file (default stdout)");

  SearchOpts so;
  auto* search_cmd = app.add_subcommand("search", "Geometric multiplicity of the spectral radius over a campaign");
  search_cmd->add_option("--family", so.family, "Instance family");
  search_cmd->add_option("--n-range", so.n_range, "Sizes as a..b (inclusive)");
  search_cmd->add_option("--seeds", so.seeds, "Seed count N (0..N-1) or a..b (b exclusive)");
  search_cmd->add_option("--corpus", so.corpus, "JSON array of instances to use instead of a family");
  search_cmd->add_option("--out", so.out, "Findings file (default stdout)");
  search_cmd->add_option("--threads", so.threads, "Worker threads (0: hardware concurrency)");
  search_cmd->add_flag("--resume", so.resume, "Reuse records of an earlier run writing to --out");
  search_cmd->add_flag("--strict", so.strict, "Exit 3 when an instance fails numerically");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    app.exit(e, out, err);
    return kExitParseError;
  }

  try {
    if (*analyze_cmd) return cmd_analyze(ao, out);
    if (*certify_cmd) return cmd_certify(co, out);
    if (*flow_cmd) return cmd_flow(fo, out);
    if (*gen_cmd) return cmd_gen(go, out);
    return cmd_search(so, out, err);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitParseError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumericalFailure;
  }
}

}  // namespace conespec
