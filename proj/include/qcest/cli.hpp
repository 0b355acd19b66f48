#pragma once

// The qcest command line. Kept in a header so tests can drive run() in
// process and compare its output byte for byte.
//
// Exit codes: 0 success, 2 usage or input error (one-line reason on the
// error stream), 3 a solver stopped at its numerical limit (the report is
// still written, with per-row status).

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qcest/channels.hpp"
#include "qcest/ensembles.hpp"
#include "qcest/errors.hpp"
#include "qcest/json_io.hpp"
#include "qcest/optim.hpp"

#ifndef QCEST_VERSION
#define QCEST_VERSION "0.0.0"
#endif

namespace qcest::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

enum class Format { json, csv };

struct RunConfig {
  std::string command;
  std::optional<std::string> builtin; // "name", "name:param", optionally "^L"
  std::optional<std::string> ensemble_file;
  int n = 2;
  int nmax = 6;
  Formulation formulation = Formulation::ext_bose;
  bool formulation_given = false;
  int dps = 0;
  int outcomes = 0;
  int restarts = kDefaultRestarts;
  std::uint64_t seed = kDefaultSeed;
  double tol = 1e-8;
  int nb = 1;
  int grid = 11;
  std::optional<std::string> choi_file;
  std::optional<std::string> out;
  std::optional<Format> format;

  Format resolved_format() const {
    if (format) return *format;
    return command == "converge" || command == "tradeoff" ? Format::csv : Format::json;
  }
};

/// A finished report: serialized text plus whether any solve fell short.
struct Report {
  std::string text;
  bool numerical_limit = false;
};

/// Parses "name[:param][^L]".
inline Ensemble ensemble_from_spec(const std::string& spec) {
  const auto caret = spec.find('^');
  if (caret == std::string::npos) return make_builtin_from_spec(spec);
  const std::string copies = spec.substr(caret + 1);
  int l = 0;
  try {
    std::size_t used = 0;
    l = std::stoi(copies, &used);
    if (used != copies.size()) throw std::invalid_argument(copies);
  } catch (const std::exception&) {
    throw UsageError("bad copy count '" + copies + "' in ensemble '" + spec + "'");
  }
  if (l < 1) throw UsageError("copy count must be >= 1");
  return lift_copies(make_builtin_from_spec(spec.substr(0, caret)), l);
}

inline Ensemble load_config_ensemble(const RunConfig& c) {
  if (c.builtin) return ensemble_from_spec(*c.builtin);
  if (c.ensemble_file) return load_ensemble(*c.ensemble_file);
  throw UsageError("an ensemble is required (--ensemble or --ensemble-file)");
}

inline io::json provenance(const RunConfig& c) {
  io::json p;
  p["tool_version"] = QCEST_VERSION;
  p["seed"] = c.seed;
  io::json tol;
  tol["solver"] = c.tol;
  tol["psd"] = kChoiPsdTol;
  tol["trace_preservation"] = kChoiTpTol;
  tol["ppt"] = kPptTol;
  tol["monotone_slack"] = kMonotoneSlack;
  tol["certificate_gap_flag"] = kCertificateGapFlag;
  p["tolerances"] = tol;
  return p;
}

inline io::json residuals_json(const sdp::Residuals& r) {
  io::json j;
  j["primal"] = r.primal;
  j["dual"] = r.dual;
  j["gap"] = r.gap;
  return j;
}

inline io::json ensemble_header(const Ensemble& e) {
  io::json j;
  j["label"] = e.label();
  j["d_in"] = e.d_in();
  j["d_target"] = e.d_target();
  j["states"] = static_cast<int>(e.items().size());
  return j;
}

inline io::json strategy_json(const EstimationStrategy& s) {
  io::json j;
  io::json povm = io::json::array();
  for (const auto& m : s.povm) povm.push_back(io::encode(m.matrix()));
  io::json guesses = io::json::array();
  for (const auto& g : s.guesses) guesses.push_back(io::encode(g.amplitudes()));
  j["povm"] = povm;
  j["guesses"] = guesses;
  return j;
}

/// Status strings may carry error messages; keep CSV cells unambiguous.
inline std::string csv_cell(std::string s) {
  for (auto& ch : s)
    if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
  return s;
}

inline sdp::SolverOptions solver_options(const RunConfig& c) {
  sdp::SolverOptions o;
  o.tol = c.tol;
  return o;
}

// ---------------------------------------------------------------------------
// Commands

inline Report cmd_fm(const RunConfig& c) {
  const Ensemble e = load_config_ensemble(c);
  SeesawOptions so;
  so.outcomes = c.outcomes;
  so.restarts = c.restarts;
  so.seed = c.seed;
  so.solver = solver_options(c);
  const auto lower = fm_seesaw(e, so);
  const auto upper = fm_upper(e, c.dps, so.solver);

  io::json j;
  j["command"] = "fm";
  j["ensemble"] = ensemble_header(e);
  io::json up;
  up["value"] = upper.solve.value;
  up["kind"] = upper.bound_kind();
  up["level"] = upper.level;
  up["status"] = sdp::to_string(upper.solve.status);
  up["residuals"] = residuals_json(upper.solve.residuals);
  j["upper"] = up;
  io::json lo;
  lo["value"] = lower.value;
  lo["outcomes"] = static_cast<int>(lower.strategy.outcomes());
  lo["restarts"] = std::max(1, c.restarts);
  lo["best_restart"] = lower.restart;
  lo["iterations"] = lower.iterations;
  lo["monotone"] = lower.monotone;
  lo["strategy"] = strategy_json(lower.strategy);
  j["lower"] = lo;
  const double gap = upper.solve.value - lower.value;
  j["certificate_gap"] = gap;
  j["gap_flagged"] = !(gap <= kCertificateGapFlag);
  j["provenance"] = provenance(c);
  return {io::dump(j), !upper.solve.ok()};
}

inline Report cmd_fc(const RunConfig& c) {
  const Ensemble e = load_config_ensemble(c);
  const auto opt = solver_options(c);
  io::json j;
  j["command"] = "fc";
  j["ensemble"] = ensemble_header(e);
  j["N"] = c.n;
  j["formulation"] = to_string(c.formulation);
  SolveReport solve;
  io::json choi;
  double neg = 0.0;
  if (c.formulation == Formulation::direct) {
    const auto r = fc_direct(e, c.n, opt);
    solve = r.solve;
    const auto marginal = marginal_choi(c.n <= kMaxSymmetrizeClones ? symmetrize(*r.map) : *r.map, 0);
    neg = negativity(marginal);
    choi = to_json(marginal);
  } else {
    const auto r = fc_ext(e, c.n, c.formulation == Formulation::ext_full ? ExtMode::full_perm : ExtMode::bose, opt);
    solve = r.solve;
    neg = r.negativity;
    choi = to_json(*r.marginal);
  }
  j["value"] = solve.value;
  j["status"] = sdp::to_string(solve.status);
  j["iterations"] = solve.iterations;
  j["residuals"] = residuals_json(solve.residuals);
  j["negativity"] = neg;
  j["choi"] = choi;
  j["provenance"] = provenance(c);
  return {io::dump(j), !solve.ok()};
}

inline Report cmd_converge(const RunConfig& c) {
  const Ensemble e = load_config_ensemble(c);
  ConvergeOptions o;
  o.mode = c.formulation;
  o.fm_level = c.dps;
  o.solver = solver_options(c);
  o.seesaw.outcomes = c.outcomes;
  o.seesaw.restarts = c.restarts;
  o.seesaw.seed = c.seed;
  o.seesaw.solver = o.solver;
  const auto rep = converge(e, c.nmax, o);
  const bool short_fall = !rep.all_optimal();

  if (c.resolved_format() == Format::csv) {
    std::ostringstream os;
    os << "N,F_C,mode,negativity,status\n";
    for (const auto& r : rep.rows)
      os << r.n << ',' << io::format_real(r.value) << ',' << to_string(r.mode) << ','
         << io::format_real(r.negativity) << ',' << csv_cell(r.status) << '\n';
    return {os.str(), short_fall};
  }
  io::json j;
  j["command"] = "converge";
  j["ensemble"] = ensemble_header(e);
  j["formulation"] = to_string(c.formulation);
  io::json rows = io::json::array();
  for (const auto& r : rep.rows) {
    io::json row;
    row["N"] = r.n;
    row["F_C"] = r.value;
    row["mode"] = to_string(r.mode);
    row["negativity"] = r.negativity;
    row["status"] = r.status;
    row["residuals"] = residuals_json(r.residuals);
    rows.push_back(row);
  }
  j["rows"] = rows;
  io::json fm;
  fm["lower"] = rep.fm_bounds.lower;
  fm["upper"] = rep.fm_bounds.upper;
  fm["upper_kind"] = rep.fm_bound_kind;
  fm["certificate_gap"] = rep.fm_bounds.gap();
  j["fm_bounds"] = fm;
  j["monotone"] = rep.monotone;
  j["final_gap"] = rep.final_gap;
  j["provenance"] = provenance(c);
  return {io::dump(j), short_fall};
}

inline Report cmd_tradeoff(const RunConfig& c) {
  const Ensemble e = load_config_ensemble(c);
  const auto curve = asym_tradeoff(e, c.nb, default_tradeoff_grid(e, c.grid), solver_options(c));
  bool short_fall = false;
  for (const auto& p : curve.points)
    if (p.status == "numerical-limit" || p.status.rfind("error", 0) == 0) short_fall = true;

  if (c.resolved_format() == Format::csv) {
    std::ostringstream os;
    os << "F_A,F_B,status\n";
    for (const auto& p : curve.points) os << io::format_real(p.fa) << ',' << io::format_real(p.fb) << ',' << csv_cell(p.status) << '\n';
    return {os.str(), short_fall};
  }
  io::json j;
  j["command"] = "tradeoff";
  j["ensemble"] = ensemble_header(e);
  j["N_B"] = curve.nb;
  io::json pts = io::json::array();
  for (const auto& p : curve.points) {
    io::json pt;
    pt["F_A"] = p.fa;
    pt["F_B"] = p.fb;
    pt["status"] = p.status;
    pt["residuals"] = residuals_json(p.residuals);
    pts.push_back(pt);
  }
  j["points"] = pts;
  j["monotone"] = curve.monotone;
  j["provenance"] = provenance(c);
  return {io::dump(j), short_fall};
}

inline io::json channel_check(const ChoiMatrix& j, const std::optional<Ensemble>& e) {
  io::json out;
  const double neg = negativity(j);
  const bool ppt = is_ppt(j);
  out["negativity"] = neg;
  out["min_eigenvalue_pt"] = min_eigenvalue(reference_partial_transpose(j));
  out["ppt"] = ppt;
  out["ppt_is_exact"] = ppt_is_exact(j);
  if (!ppt)
    out["verdict"] = "not entanglement-breaking";
  else
    out["verdict"] = ppt_is_exact(j) ? "entanglement-breaking" : "PPT (separability not certified)";
  if (e) out["fidelity"] = channel_fidelity(j, *e);
  return out;
}

inline Report cmd_ebc_check(const RunConfig& c) {
  if (!c.choi_file) throw UsageError("ebc-check needs --choi-file");
  auto doc = io::read_json_file(*c.choi_file);
  // Reports from `fc` embed their single-clone Choi state under "choi".
  if (doc.is_object() && doc.contains("choi") && doc["choi"].is_object()) doc = doc["choi"];
  const MultiCloneChoi jn = choi_from_json(doc, *c.choi_file);
  std::optional<Ensemble> e;
  if (c.builtin || c.ensemble_file) e = load_config_ensemble(c);
  if (e && (e->d_in() != jn.d_in() || e->d_target() != jn.d_clone()))
    throw DimensionError("ensemble dimensions do not match the Choi file");

  io::json j;
  j["command"] = "ebc-check";
  j["d_in"] = jn.d_in();
  j["d_out"] = jn.d_clone();
  j["clones"] = jn.n_clones();
  io::json per = io::json::array();
  for (int k = 0; k < jn.n_clones(); ++k) per.push_back(channel_check(marginal_choi(jn, k), e));
  j["marginals"] = per;
  if (e && jn.n_clones() > 1) j["average_clone_fidelity"] = average_clone_fidelity(jn, *e);
  j["provenance"] = provenance(c);
  return {io::dump(j), false};
}

// ---------------------------------------------------------------------------
// Parsing and dispatch

/// Parses argv (without the program name). Returns nullopt when help was
/// requested; the help text is then written to `help`.
inline std::optional<RunConfig> parse_args(const std::vector<std::string>& args, std::ostream& help) {
  CLI::App app{"Estimation and cloning fidelities via semidefinite programming", "qcest"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", QCEST_VERSION);
  RunConfig c;
  std::string builtin, ensemble_file, formulation, format, choi_file, out;

  auto common = [&](CLI::App* sub, bool needs_ensemble) {
    auto* b = sub->add_option("--ensemble", builtin, "built-in ensemble: name, name:param, optionally ^L for L copies");
    auto* f = sub->add_option("--ensemble-file", ensemble_file, "ensemble JSON file");
    b->excludes(f);
    f->excludes(b);
    if (needs_ensemble) sub->require_option(1, 0);
    sub->add_option("--out", out, "output path (default: standard output)");
    sub->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--tol", c.tol, "solver tolerance")->check(CLI::PositiveNumber);
  };
  auto seesaw_flags = [&](CLI::App* sub) {
    sub->add_option("--dps", c.dps, "relaxation level of the estimation upper bound")->check(CLI::NonNegativeNumber);
    sub->add_option("--outcomes", c.outcomes, "POVM outcomes (default d_in^2)")->check(CLI::PositiveNumber);
    sub->add_option("--restarts", c.restarts, "see-saw restarts")->check(CLI::PositiveNumber);
    sub->add_option("--seed", c.seed, "random seed");
  };

  auto* fm = app.add_subcommand("fm", "estimation fidelity bounds");
  common(fm, true);
  seesaw_flags(fm);

  auto* fc = app.add_subcommand("fc", "cloning fidelity for N clones");
  common(fc, true);
  fc->add_option("-N,--n", c.n, "number of clones")->check(CLI::PositiveNumber);
  fc->add_option("--formulation", formulation, "ext-full, ext-bose or direct");

  auto* cv = app.add_subcommand("converge", "cloning fidelity for N = 1..nmax against estimation bounds");
  common(cv, true);
  seesaw_flags(cv);
  cv->add_option("--nmax", c.nmax, "largest clone count")->check(CLI::Range(2, 1000));
  cv->add_option("--formulation", formulation, "ext-full, ext-bose or direct");

  auto* tr = app.add_subcommand("tradeoff", "asymmetric trade-off between one clone and N_B clones");
  common(tr, true);
  tr->add_option("--nb", c.nb, "number of B clones")->check(CLI::PositiveNumber);
  tr->add_option("--grid", c.grid, "number of F_A grid points")->check(CLI::Range(2, 10000));

  auto* eb = app.add_subcommand("ebc-check", "entanglement-breaking test of a Choi state");
  common(eb, false);
  eb->add_option("--choi-file", choi_file, "Choi JSON file (or an fc report)")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    help << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    help << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::CallForVersion&) {
    help << QCEST_VERSION << '\n';
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    std::string what = e.what();
    if (what.empty()) what = e.get_name();
    throw UsageError(what);
  }

  for (auto* sub : app.get_subcommands()) c.command = sub->get_name();
  if (!builtin.empty()) c.builtin = builtin;
  if (!ensemble_file.empty()) c.ensemble_file = ensemble_file;
  if (!choi_file.empty()) c.choi_file = choi_file;
  if (!out.empty()) c.out = out;
  if (!format.empty()) c.format = format == "csv" ? Format::csv : Format::json;
  if (!formulation.empty()) {
    c.formulation = parse_formulation(formulation);
    c.formulation_given = true;
  } else if (c.command == "fc") {
    c.formulation = Formulation::ext_full;
  }
  if (c.format == Format::csv && c.command != "converge" && c.command != "tradeoff")
    throw UsageError("csv output is available for converge and tradeoff only");
  return c;
}

inline Report dispatch(const RunConfig& c) {
  if (c.command == "fm") return cmd_fm(c);
  if (c.command == "fc") return cmd_fc(c);
  if (c.command == "converge") return cmd_converge(c);
  if (c.command == "tradeoff") return cmd_tradeoff(c);
  if (c.command == "ebc-check") return cmd_ebc_check(c);
  throw UsageError("unknown command '" + c.command + "'");
}

inline std::string one_line(std::string s) {
  for (auto& ch : s)
    if (ch == '\n' || ch == '\r') ch = ' ';
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

/// Runs one invocation. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const auto config = parse_args(args, out);
    if (!config) return kExitOk;
    const Report rep = dispatch(*config);
    if (config->out)
      io::write_file(*config->out, rep.text);
    else
      out << rep.text;
    if (rep.numerical_limit) {
      err << "qcest: solver stopped at its numerical limit; see status fields\n";
      return kExitNumerical;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "qcest: " << one_line(e.what()) << '\n';
    return kExitUsage;
  }
}

} // namespace qcest::cli
