#include "difactor/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "difactor/cascade.hpp"
#include "difactor/errors.hpp"
#include "difactor/factor.hpp"

namespace difactor {

namespace {

using json = nlohmann::json;

std::string error_name(const std::exception& e) {
  const std::string w = e.what();
  const auto colon = w.find(':');
  return colon == std::string::npos ? "Error" : w.substr(0, colon);
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ValidationError*>(&e)) return kExitInput;
  if (dynamic_cast<const CapacityExceeded*>(&e) || dynamic_cast<const OrderOverflow*>(&e)) return kExitCapacity;
  return kExitFail;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string describe(const MatrixOperator& op, int m) {
  std::string s = "[";
  for (int p = 1; p <= op.m(); ++p) {
    s += p > 1 ? ", [" : "[";
    for (int q = 1; q <= op.m(); ++q) {
      if (q > 1) s += ", ";
      s += to_string(op.at(p, q), PrintOptions{m});
    }
    s += "]";
  }
  return s + "]";
}

std::vector<std::string> describe(const Candidate& c, int m) {
  std::vector<std::string> out;
  if (c.is_matrix()) {
    for (const auto& f : c.matrix_factors) out.push_back(describe(f, m));
  } else {
    for (const auto& f : c.factors) out.push_back(to_string(f, PrintOptions{m}));
  }
  return out;
}

std::string product_text(const std::vector<std::string>& factors) {
  std::string s;
  for (const auto& f : factors) s += "(" + f + ")";
  return s;
}

std::string grid_text(const JetGrid& g, int m) {
  std::string s;
  for (std::size_t p = 0; p < g.size(); ++p) {
    for (std::size_t q = 0; q < g[p].size(); ++q) {
      s += "[" + std::to_string(p + 1) + "," + std::to_string(q + 1) + "] " + to_string(g[p][q], PrintOptions{m}) + "\n";
    }
  }
  return s;
}

json grid_json(const JetGrid& g, int m) {
  json rows = json::array();
  for (const auto& row : g) {
    json r = json::array();
    for (const auto& cell : row) r.push_back(to_string(cell, PrintOptions{m}));
    rows.push_back(r);
  }
  return rows;
}

CheckReport check(const ProblemFile& p, const Candidate& c, const RunOptions& opts) {
  CheckOptions co;
  co.samples = opts.samples;
  co.tol = opts.tol;
  co.seed = opts.seed;
  return p.matrix ? check_candidate(*p.matrix, c, co) : check_candidate(*p.scalar, c, co);
}

json check_json(const CheckReport& r) {
  json j;
  j["conditions"] = r.conditions;
  j["satisfied"] = r.satisfied;
  json res = json::array();
  for (const auto& t : r.residuals) {
    res.push_back({{"label", t.label}, {"monomial", t.monomial}, {"residual", to_string(t.residual)}});
  }
  j["residuals"] = res;
  j["numeric"] = {{"ran", r.numeric_ran},
                  {"max_residual", r.numeric_max_residual},
                  {"ok", r.numeric_ok},
                  {"note", r.numeric_note}};
  return j;
}

struct Report {
  json j;
  std::string text;
  int code = kExitPass;
};

Report cmd_expand(const ProblemFile& p) {
  Report r;
  r.j["verdict"] = "OK";
  const int m = p.m;
  if (p.candidate) {
    r.j["source"] = "candidate";
    if (p.candidate->is_matrix()) {
      const JetGrid g = matrix_expand_product(p.candidate->matrix_factors);
      r.j["expansion"] = grid_json(g, m);
      r.text = grid_text(g, m);
    } else {
      const std::string s = to_string(expand_product(p.candidate->factors), PrintOptions{m});
      r.j["expansion"] = s;
      r.text = s + "\n";
    }
    return r;
  }
  r.j["source"] = "operator";
  if (p.matrix) {
    JetGrid g(m, std::vector<JetPolynomial>(m));
    for (int a = 1; a <= m; ++a) {
      for (int q = 1; q <= m; ++q) g[a - 1][q - 1] = to_jet(p.matrix->at(a, q), q);
    }
    r.j["expansion"] = grid_json(g, m);
    r.text = grid_text(g, m);
  } else {
    const std::string s = to_string(to_jet(*p.scalar), PrintOptions{m});
    r.j["expansion"] = s;
    r.text = s + "\n";
  }
  return r;
}

Report cmd_conditions(const ProblemFile& p) {
  Report r;
  const ConditionSystem sys = derive_conditions(p.kind, p.m);
  r.j["verdict"] = "OK";
  json eqs = json::array();
  for (const auto& e : sys.equations) {
    eqs.push_back({{"lhs", to_string(e.lhs, PrintOptions{p.m})}, {"rhs", to_string(e.rhs, PrintOptions{p.m})}});
  }
  r.j["equations"] = eqs;
  r.j["zero_conditions"] = sys.zero_condition_count();
  r.text = to_string(sys);
  return r;
}

Report cmd_check(const ProblemFile& p, const RunOptions& opts) {
  if (!p.candidate) throw ValidationError("check needs a candidate ([Q1]/[Q2] or [N1]/[N2])");
  Report r;
  const CheckReport rep = check(p, *p.candidate, opts);
  r.j = check_json(rep);
  r.j["verdict"] = rep.pass ? "PASS" : "FAIL";
  r.j["candidates"] = json::array({describe(*p.candidate, p.m)});
  std::ostringstream os;
  os << (rep.pass ? "PASS" : "FAIL") << ", " << rep.satisfied << "/" << rep.conditions << " conditions residual 0\n";
  for (const auto& t : rep.residuals) os << "  " << t.label << " [" << t.monomial << "]: " << to_string(t.residual) << "\n";
  if (rep.numeric_ran) {
    os << "  numeric probe: max residual " << fmt(rep.numeric_max_residual) << (rep.numeric_ok ? "" : " (above tolerance)")
       << "\n";
  } else if (!rep.numeric_note.empty()) {
    os << "  numeric probe: " << rep.numeric_note << "\n";
  }
  r.text = os.str();
  r.code = rep.pass ? kExitPass : kExitFail;
  return r;
}

/// Candidates of the applicable strategy, each with its check verdict.
struct FactorOutcome {
  std::string strategy;
  std::vector<Candidate> candidates;
  std::optional<Expr> delta;
  std::optional<PdeObligation> obligation;
  std::vector<Expr> rejected_residuals;  // PDE branches whose remaining condition is nonzero
};

FactorOutcome factor_problem(const ProblemFile& p, const RunOptions& opts) {
  if (p.kind.matrix) throw UnsupportedTemplate("factorization search for systems is not provided");
  if (p.kind.nonlinear) throw UnsupportedTemplate("factorization search for nonlinear operators is not provided");
  SearchConfig cfg;
  cfg.ansatz_degree = opts.ansatz_degree;
  cfg.seed = opts.seed;
  FactorOutcome out;
  const DiffOperator& op = *p.scalar;
  if (!p.kind.pde) {
    bool constant = true;
    for (const auto& [d, c] : op.coeffs()) constant = constant && as_constant(c).has_value();
    if (constant) {
      out.strategy = "constant";
      out.candidates = factor_constant(op, cfg);
    } else {
      out.strategy = "riccati";
      out.candidates = factor_riccati(op, cfg);
    }
    return out;
  }
  out.strategy = "principal-symbol";
  const PdeFactorResult res = factor_pde_second_order(op, cfg);
  out.delta = res.delta;
  for (const auto& b : res.branches) {
    if (b.success) {
      out.candidates.push_back(b.candidate);
    } else {
      out.rejected_residuals.push_back(b.g01_residual);
    }
  }
  if (res.obligation) {
    out.obligation = res.obligation;
    const ObligationCheck trial = check_obligation(*res.obligation, Expr(0));
    if (trial.ok) out.candidates.push_back(trial.candidate);
  }
  return out;
}

Report cmd_factor(const ProblemFile& p, const RunOptions& opts) {
  Report r;
  const FactorOutcome f = factor_problem(p, opts);
  r.j["strategy"] = f.strategy;
  std::ostringstream os;
  os << "strategy: " << f.strategy << "\n";
  if (f.delta) {
    r.j["delta"] = to_string(*f.delta);
    os << "delta = " << to_string(*f.delta) << "\n";
  }
  json cands = json::array();
  bool all_pass = true;
  for (std::size_t i = 0; i < f.candidates.size(); ++i) {
    const CheckReport rep = check(p, f.candidates[i], opts);
    all_pass = all_pass && rep.pass;
    const auto parts = describe(f.candidates[i], p.m);
    cands.push_back({{"factors", parts}, {"check", rep.pass ? "PASS" : "FAIL"}});
    os << "candidate " << i + 1 << ": " << product_text(parts) << "  " << (rep.pass ? "PASS" : "FAIL") << "\n";
  }
  r.j["candidates"] = cands;
  if (!f.rejected_residuals.empty()) {
    json rej = json::array();
    for (const auto& e : f.rejected_residuals) {
      rej.push_back(to_string(e));
      os << "rejected branch, remaining condition residual: " << to_string(e) << "\n";
    }
    r.j["rejected_residuals"] = rej;
  }
  if (f.obligation) {
    const std::string eq = to_string(f.obligation->equation);
    r.j["obligation"] = eq;
    os << "obligation: " << eq << " = 0\n";
    os << "Z = 0 " << (f.candidates.empty() ? "does not satisfy it" : "satisfies it") << "\n";
  }
  if (f.candidates.empty()) {
    r.j["verdict"] = "FAIL";
    r.j["status"] = f.obligation ? "UnsolvedObligation" : "NoSolutionInAnsatz";
    os << (f.obligation ? "no candidate; the obligation is left to the caller\n" : "NoSolutionInAnsatz\n");
    r.code = kExitFail;
  } else {
    r.j["verdict"] = all_pass ? "PASS" : "FAIL";
    r.code = all_pass ? kExitPass : kExitFail;
  }
  r.text = os.str();
  return r;
}

void write_csv(const std::filesystem::path& path, const Trajectory& t, int m) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write " + path.string());
  f << "x";
  for (std::size_t c = 0; c < t.values.size(); ++c) f << "," << (m == 1 && t.values.size() == 1 ? "u" : "u" + std::to_string(c + 1));
  f << "\n";
  for (std::size_t i = 0; i < t.x.size(); ++i) {
    f << fmt(t.x[i]);
    for (const auto& comp : t.values) f << "," << fmt(comp[i]);
    f << "\n";
  }
}

Report cmd_cascade(const ProblemFile& p, const RunOptions& opts) {
  if (p.kind.pde) throw UnsupportedTemplate("cascade solving for partial differential operators is not provided");
  CascadeOptions co;
  if (auto iv = opts.interval ? opts.interval : p.solve.interval) co.interval = *iv;
  if (auto st = opts.steps ? opts.steps : p.solve.steps) co.steps = *st;
  if (p.solve.C) co.C = *p.solve.C;

  Report r;
  Candidate cand;
  if (p.candidate) {
    cand = *p.candidate;
    // Cascade solutions only solve the file's operator if the candidate factors it.
    CheckOptions co_check;
    co_check.numeric = false;
    const CheckReport ck = p.kind.matrix ? check_candidate(*p.matrix, cand, co_check) : check_candidate(*p.scalar, cand, co_check);
    if (!ck.pass) {
      r.j["verdict"] = "FAIL";
      r.j["status"] = "CandidateMismatch";
      r.j["solutions"] = json::array();
      r.text = "CandidateMismatch: the candidate does not factor the operator (" + std::to_string(ck.satisfied) + "/" +
               std::to_string(ck.conditions) + " conditions satisfied)\n";
      r.code = kExitFail;
      return r;
    }
  } else {
    if (p.kind.matrix || p.kind.nonlinear) throw ValidationError("cascade for this kind needs a candidate");
    const FactorOutcome f = factor_problem(p, opts);
    if (f.candidates.empty()) {
      r.j["verdict"] = "FAIL";
      r.j["status"] = "NoSolutionInAnsatz";
      r.j["solutions"] = json::array();
      r.text = "NoSolutionInAnsatz\n";
      r.code = kExitFail;
      return r;
    }
    cand = f.candidates.front();
  }
  r.j["candidates"] = json::array({describe(cand, p.m)});
  const CascadeSolution sol = p.kind.matrix ? cascade_system_numeric(cand, co) : cascade_ode(cand, co);

  std::ostringstream os;
  os << "candidate: " << product_text(describe(cand, p.m)) << "\n";
  os << "interval: [" << fmt(sol.interval.first) << ", " << fmt(sol.interval.second) << "]\n";
  bool pass = true;
  json sols = json::array();
  for (const auto& e : sol.entries) {
    const bool ok = e.closed_form ? e.residual.symbolic_zero : e.residual.max_relative <= kNumericResidualTol;
    pass = pass && ok;
    json s;
    s["name"] = e.name;
    s["source"] = to_string(e.source);
    s["closed_form"] = e.closed_form ? json(to_string(*e.closed_form, PrintOptions{p.m})) : json(nullptr);
    s["residual"] = {{"max_abs", e.residual.max_abs},
                     {"max_relative", e.residual.max_relative},
                     {"symbolic_zero", e.residual.symbolic_zero},
                     {"undefined_points", e.residual.undefined_points}};
    s["ok"] = ok;
    s["columns"] = e.columns.size();
    sols.push_back(s);
    os << e.name << " [" << to_string(e.source) << "] " << (e.closed_form ? to_string(*e.closed_form, PrintOptions{p.m}) : "(numeric)")
       << "  max relative residual " << fmt(e.residual.max_relative);
    if (e.closed_form) os << (e.residual.symbolic_zero ? ", symbolic residual 0" : ", symbolic residual nonzero");
    if (e.residual.undefined_points) os << ", undefined at " << e.residual.undefined_points << " grid points";
    os << "\n";
    if (opts.csv_dir) {
      std::filesystem::create_directories(*opts.csv_dir);
      for (std::size_t c = 0; c < e.columns.size(); ++c) {
        const std::string file = e.columns.size() == 1 ? e.name + ".csv" : e.name + "_c" + std::to_string(c + 1) + ".csv";
        write_csv(std::filesystem::path(*opts.csv_dir) / file, e.columns[c], p.m);
      }
    }
  }
  r.j["solutions"] = sols;
  r.j["verdict"] = pass ? "PASS" : "FAIL";
  os << (pass ? "PASS" : "FAIL") << "\n";
  r.text = os.str();
  r.code = pass ? kExitPass : kExitFail;
  return r;
}

void emit_error(std::ostream& out, bool as_json, const std::string& command, const std::exception& e) {
  if (as_json) {
    json j;
    j["schema"] = 1;
    j["command"] = command;
    j["verdict"] = "ERROR";
    j["error"] = {{"type", error_name(e)}, {"message", e.what()}};
    out << j.dump(2) << "\n";
  } else {
    out << e.what() << "\n";
  }
}

}  // namespace

int run(const std::string& command, const ProblemFile& problem, const RunOptions& opts, std::ostream& out) {
  try {
    Report r;
    if (command == "expand") {
      r = cmd_expand(problem);
    } else if (command == "conditions") {
      r = cmd_conditions(problem);
    } else if (command == "check") {
      r = cmd_check(problem, opts);
    } else if (command == "factor") {
      r = cmd_factor(problem, opts);
    } else if (command == "cascade") {
      r = cmd_cascade(problem, opts);
    } else {
      throw ValidationError("unknown command '" + command + "'");
    }
    if (opts.json) {
      r.j["schema"] = 1;
      r.j["command"] = command;
      r.j["kind"] = to_string(problem.kind);
      out << r.j.dump(2) << "\n";
    } else {
      out << r.text;
    }
    return r.code;
  } catch (const Error& e) {
    emit_error(out, opts.json, command, e);
    return exit_code_for(e);
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Factorization of differential operators", "difactor"};
  std::string command;
  std::string file;
  RunOptions opts;
  std::string interval;
  std::string csv;
  int steps = 0;
  app.add_option("command", command, "expand | conditions | check | factor | cascade")
      ->required()
      ->check(CLI::IsMember({"expand", "conditions", "check", "factor", "cascade"}));
  app.add_option("problem", file, "problem file")->required();
  app.add_flag("--json", opts.json, "JSON report");
  app.add_option("--seed", opts.seed, "seed of the numeric probes");
  app.add_option("--samples", opts.samples, "numeric probe points")->check(CLI::PositiveNumber);
  app.add_option("--tol", opts.tol, "numeric probe tolerance")->check(CLI::PositiveNumber);
  app.add_option("--ansatz-degree", opts.ansatz_degree, "degree bound of the Riccati ansatz")->check(CLI::NonNegativeNumber);
  auto* iv = app.add_option("--interval", interval, "cascade interval a,b");
  auto* st = app.add_option("--steps", steps, "RK4 steps")->check(CLI::PositiveNumber);
  auto* cv = app.add_option("--csv", csv, "directory for trajectory CSV files");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kExitInput;
  }
  if (st->count()) opts.steps = steps;
  if (cv->count()) opts.csv_dir = csv;
  if (iv->count()) {
    const auto comma = interval.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("comma");
      const double a = std::stod(interval.substr(0, comma));
      const double b = std::stod(interval.substr(comma + 1));
      if (!(a < b)) throw std::invalid_argument("order");
      opts.interval = std::make_pair(a, b);
    } catch (const std::exception&) {
      err << "--interval expects a,b with a < b\n";
      return kExitInput;
    }
  }

  std::ifstream in(file);
  if (!in) {
    err << "cannot read " << file << "\n";
    return kExitInput;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  ProblemFile problem;
  try {
    problem = parse_problem(buf.str());
  } catch (const Error& e) {
    emit_error(out, opts.json, command, e);
    return exit_code_for(e);
  }
  return run(command, problem, opts, out);
}

}  // namespace difactor
