// Copyright 2026 The dsattn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dsattn/dsattn.hpp"

// The `dsattn` command line. run() is kept separate from main() so the test
// suite can drive it with captured streams.

namespace dsattn::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2 };

// Inputs of at most this many matrices run without --full.
inline constexpr std::uint64_t kDeskScaleGrid = std::uint64_t{1} << 20;

struct Options {
  std::string format;  // empty: per-command default
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;  // 0: BIRKHOFF_ATTN_WORKERS or core count

  // operators
  std::string op;
  std::string input = "-";
  int k = -1;  // -1: per-command default
  std::optional<double> tau;
  bool logits = false;
  double tol = 1e-10;
  int max_iter = 50000;
  std::string method = "dykstra";
  std::size_t layers = 8;
  std::optional<std::size_t> aux_qubits;
  std::string ansatz = "simple";
  std::string theta_file;
  std::optional<std::uint64_t> theta_seed;

  // sweeps
  std::size_t n = 0;
  std::size_t d = 3;
  std::string domain = "cube";
  int decimals = 3;
  bool full = false;
  std::size_t count = 100;
  int trials = 0;

  // counting
  int p = 2;
  std::string mode = "brute";

  // circuits
  std::size_t dim = 8;
  std::size_t shots = 10000;
  bool project = false;
  std::string layer_grid = "1,2,4,8";
  std::string aux_grid = "0,1,2,3";
  int reps = 5;

  // attention
  std::string queries, keys, values;
  std::string normalizer = "softmax";
  std::string emit = "output";
};

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(std::vector<std::string> args);

 private:
  // ---- helpers -----------------------------------------------------------
  std::string format(const std::string& fallback) const { return opt_.format.empty() ? fallback : opt_.format; }

  std::uint64_t require_seed(const std::string& why) const {
    if (!opt_.seed) throw UsageError("--seed is required: " + why);
    return *opt_.seed;
  }

  std::size_t workers() const { return opt_.workers ? opt_.workers : default_workers(); }

  SquareMatrix read_input() const {
    if (opt_.input == "-") return io::read_matrix(std::cin);
    return io::read_matrix_file(opt_.input);
  }

  Ansatz ansatz() const {
    if (opt_.ansatz == "simple") return Ansatz::Simple;
    if (opt_.ansatz == "trotter") return Ansatz::Trotter;
    throw UsageError("unknown ansatz '" + opt_.ansatz + "'");
  }

  ProjectionSettings projection() const {
    ProjectionSettings s;
    s.tolerance = opt_.tol;
    s.max_iterations = opt_.max_iter;
    if (opt_.method == "dykstra")
      s.method = ProjectionMethod::Dykstra;
    else if (opt_.method == "splitting")
      s.method = ProjectionMethod::SplittingQP;
    else
      throw UsageError("unknown projection method '" + opt_.method + "'");
    s.validate();
    return s;
  }

  CircuitConfig circuit(std::size_t dim) const {
    CircuitConfig c;
    c.dsm_dim = dim;
    c.layers = opt_.layers;
    c.ansatz = ansatz();
    c.aux_qubits = opt_.aux_qubits.value_or(c.data_qubits() + 1);
    c.validate();
    return c;
  }

  ParamVec theta_for(const CircuitConfig& c) const {
    if (!opt_.theta_file.empty()) {
      std::ifstream f(opt_.theta_file);
      if (!f) throw UsageError("cannot open theta file '" + opt_.theta_file + "'");
      std::vector<double> v;
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(f, line)) {
        ++line_no;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ','))
          if (tok.find_first_not_of(" \t\r") != std::string::npos) v.push_back(io::parse_double(tok, line_no));
      }
      if (v.size() != c.param_count())
        throw UsageError("theta file has " + std::to_string(v.size()) + " values, circuit needs " +
                         std::to_string(c.param_count()));
      return ParamVec(std::move(v));
    }
    const auto seed = opt_.theta_seed ? opt_.theta_seed : opt_.seed;
    if (!seed) throw UsageError("qontot needs --theta-file, --theta-seed or --seed");
    return random_params(c, *seed);
  }

  OperatorOptions operator_options(std::size_t n, int default_k) const {
    OperatorOptions o;
    o.sinkhorn_iterations = opt_.k > 0 ? opt_.k : default_k;
    o.projection = projection();
    o.qontot_layers = opt_.layers;
    o.qontot_aux_qubits = opt_.aux_qubits;
    o.qontot_ansatz = ansatz();
    if (opt_.op == "qr") o.qr_seed = require_seed("the QR operator injects seeded noise on rank deficiency");
    if (opt_.op == "qontot") o.theta = theta_for(circuit(n));
    return o;
  }

  void emit_matrix(const SquareMatrix& m, const StochasticityReport& report, const std::string& fmt) {
    if (fmt == "json") {
      nlohmann::json j = io::to_json(m);
      j["report"] = io::to_json(report);
      out_ << j.dump() << '\n';
    } else {
      io::write_csv(out_, m);
      err_ << "report: " << io::to_json(report).dump() << '\n';
    }
  }

  static std::vector<std::size_t> parse_list(const std::string& s) {
    std::vector<std::size_t> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        v.push_back(static_cast<std::size_t>(std::stoul(tok)));
      } catch (...) {
        throw UsageError("malformed list '" + s + "'");
      }
    }
    if (v.empty()) throw UsageError("empty list");
    return v;
  }

  static nlohmann::json big(const BigInt& v) {
    if (v >= 0 && v <= BigInt(std::numeric_limits<std::uint64_t>::max()))
      return static_cast<std::uint64_t>(v);
    return v.str();
  }

  // ---- subcommands -------------------------------------------------------
  void cmd_apply();
  void cmd_apply_attn();
  void cmd_sweep_unique();
  void cmd_sweep_tradeoff();
  void cmd_props();
  void cmd_count();
  void cmd_shots();
  void cmd_bench();
  void cmd_gradcheck();

  std::ostream& out_;
  std::ostream& err_;
  Options opt_;
  std::optional<SquareMatrix> failing_input_;
};

// Flat key=value config; keys are long option names without dashes.
// Values are appended only for options not already on the command line.
inline std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (path.empty()) return args;
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config file '" + path + "'");
  std::string line;
  while (std::getline(f, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (eq == std::string::npos) {
      if (!trim(line).empty()) throw UsageError("config line without '=': " + line);
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string flag = "--" + key;
    bool present = false;
    for (const auto& a : args) present = present || a == flag || a.rfind(flag + "=", 0) == 0;
    if (present) continue;
    if (value == "true" || value == "1" || value.empty()) {
      if (key == "full" || key == "project" || key == "logits") {
        args.push_back(flag);
        continue;
      }
    }
    if (value == "false" && (key == "full" || key == "project" || key == "logits")) continue;
    args.push_back(flag);
    args.push_back(value);
  }
  return args;
}

inline int Runner::run(std::vector<std::string> args) {
  CLI::App app{"Doubly-stochastic attention operators and analysis harnesses", "dsattn"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto common = [this](CLI::App* sc) {
    sc->add_option("--format", opt_.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sc->add_option("--seed", opt_.seed, "Seed for every random choice");
    sc->add_option("--workers", opt_.workers, "Worker threads (default: BIRKHOFF_ATTN_WORKERS or cores)");
  };
  auto op_flags = [this](CLI::App* sc) {
    sc->add_option("--k", opt_.k, "Sinkhorn iterations (odd)");
    sc->add_option("--tol", opt_.tol, "Projection tolerance");
    sc->add_option("--max-iter", opt_.max_iter, "Projection iteration budget");
    sc->add_option("--method", opt_.method, "Projection method")->check(CLI::IsMember({"dykstra", "splitting"}));
    sc->add_option("--layers", opt_.layers, "Circuit layers");
    sc->add_option("--aux-qubits", opt_.aux_qubits, "Auxiliary qubits (default log2(T)+1)");
    sc->add_option("--ansatz", opt_.ansatz, "Circuit ansatz")->check(CLI::IsMember({"simple", "trotter"}));
    sc->add_option("--theta-file", opt_.theta_file, "CSV of circuit parameters");
    sc->add_option("--theta-seed", opt_.theta_seed, "Seed for theta ~ U(-1,1)");
  };
  const auto op_names = CLI::IsMember(operator_names());

  auto* apply = app.add_subcommand("apply", "Apply a DSM operator to a matrix file");
  common(apply);
  op_flags(apply);
  apply->add_option("--op", opt_.op, "Operator")->required()->check(op_names);
  apply->add_option("--input", opt_.input, "Matrix file (CSV or JSON, '-' for stdin)");
  apply->add_option("--tau", opt_.tau, "Temperature for --logits");
  apply->add_flag("--logits", opt_.logits, "Exponentiate the input first (Sinkhorn on real logits)");

  auto* attn = app.add_subcommand("apply-attn", "Scaled dot-product attention with a chosen normalizer");
  common(attn);
  op_flags(attn);
  attn->add_option("--queries", opt_.queries, "Q as CSV (T x d_k)")->required();
  attn->add_option("--keys", opt_.keys, "K as CSV (T x d_k)")->required();
  attn->add_option("--values", opt_.values, "V as CSV (T x d_v)")->required();
  attn->add_option("--normalizer", opt_.normalizer, "Normalizer")
      ->check(CLI::IsMember({"softmax", "softmax-sigma", "softmax-sigma2", "sinkhorn-naive", "sinkhorn-ot", "qr",
                             "qontot", "birkhoff-project"}));
  attn->add_option("--tau", opt_.tau, "Temperature (default sqrt(d_k))");
  attn->add_option("--emit", opt_.emit, "CSV payload")->check(CLI::IsMember({"output", "attn"}));

  auto* sweep = app.add_subcommand("sweep-unique", "Uniqueness census over a discretized grid");
  common(sweep);
  op_flags(sweep);
  sweep->add_option("--op", opt_.op, "Operator")->required()->check(op_names);
  sweep->add_option("--n", opt_.n, "Matrix dimension")->required();
  sweep->add_option("--d", opt_.d, "Grid points per axis");
  sweep->add_option("--domain", opt_.domain, "Grid domain")->check(CLI::IsMember({"cube", "sphere"}));
  sweep->add_option("--decimals", opt_.decimals, "Rounding before deduplication");
  sweep->add_flag("--full", opt_.full, "Allow grids beyond desk scale (2^20 inputs)");

  auto* tradeoff = app.add_subcommand("sweep-tradeoff", "Entropy vs residual on random Gaussian logits");
  common(tradeoff);
  op_flags(tradeoff);
  tradeoff->add_option("--op", opt_.op, "Comma-separated operators")->required();
  tradeoff->add_option("--n", opt_.n, "Matrix dimension (default 8)");
  tradeoff->add_option("--count", opt_.count, "Number of inputs");

  auto* props = app.add_subcommand("props", "Scale-invariance and permutation-equivariance probes");
  common(props);
  op_flags(props);
  props->add_option("--op", opt_.op, "Operator")->required()->check(op_names);
  props->add_option("--n", opt_.n, "Matrix dimension (default 4)");
  props->add_option("--trials", opt_.trials, "Random trials (default 20)");

  auto* count = app.add_subcommand("count", "Census of discretized DSMs");
  common(count);
  count->add_option("--n", opt_.n, "DSM dimension")->required();
  count->add_option("--p", opt_.p, "Discretization steps")->required();
  count->add_option("--mode", opt_.mode, "brute|analytic|decompose")
      ->check(CLI::IsMember({"brute", "analytic", "decompose"}));

  auto* shots = app.add_subcommand("shots", "Finite-shot sampling of the circuit DSM");
  common(shots);
  op_flags(shots);
  shots->add_option("--dim", opt_.dim, "DSM dimension T (power of two)");
  shots->add_option("--input", opt_.input, "Input matrix file (default: seeded Gaussian)");
  shots->add_option("--shots", opt_.shots, "Total shots");
  shots->add_flag("--project", opt_.project, "Project the sampled matrix onto the Birkhoff polytope");

  auto* bench = app.add_subcommand("bench", "Circuit wall time per (layers, qubits) cell");
  common(bench);
  bench->add_option("--dim", opt_.dim, "DSM dimension T");
  bench->add_option("--layer-grid", opt_.layer_grid, "Comma-separated layer counts");
  bench->add_option("--aux-grid", opt_.aux_grid, "Comma-separated auxiliary qubit counts");
  bench->add_option("--reps", opt_.reps, "Repetitions per cell (>= 5)");
  bench->add_option("--ansatz", opt_.ansatz, "Circuit ansatz")->check(CLI::IsMember({"simple", "trotter"}));

  auto* grad = app.add_subcommand("gradcheck", "Analytic VJP vs central finite differences");
  common(grad);
  grad->add_option("--normalizer", opt_.normalizer, "sinkhorn-naive|softmax")
      ->check(CLI::IsMember({"sinkhorn-naive", "softmax"}));
  grad->add_option("--k", opt_.k, "Sinkhorn iterations (odd)");
  grad->add_option("--trials", opt_.trials, "Random trials");
  grad->add_option("--n", opt_.n, "Matrix dimension (default 8)");
  grad->add_option("--tau", opt_.tau, "Softmax temperature");

  try {
    args = merge_config(std::move(args));
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out_ << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out_ << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err_ << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    err_ << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (apply->parsed()) cmd_apply();
    else if (attn->parsed()) cmd_apply_attn();
    else if (sweep->parsed()) cmd_sweep_unique();
    else if (tradeoff->parsed()) cmd_sweep_tradeoff();
    else if (props->parsed()) cmd_props();
    else if (count->parsed()) cmd_count();
    else if (shots->parsed()) cmd_shots();
    else if (bench->parsed()) cmd_bench();
    else if (grad->parsed()) cmd_gradcheck();
  } catch (const UsageError& e) {
    err_ << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const SweepError& e) {
    err_ << "numerical failure: " << e.what() << '\n';
    err_ << nlohmann::json{{"failing_input", io::to_json(e.input())}, {"grid_index", e.index()}}.dump() << '\n';
    return kNumerical;
  } catch (const ConvergenceError& e) {
    err_ << "numerical failure: " << e.what() << '\n';
    err_ << nlohmann::json{{"last_iterate", io::to_json(e.last_iterate())}, {"report", io::to_json(e.report())}}.dump()
         << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err_ << "numerical failure: " << e.what() << '\n';
    if (failing_input_) err_ << nlohmann::json{{"failing_input", io::to_json(*failing_input_)}}.dump() << '\n';
    return kNumerical;
  }
  return kOk;
}

// ---- subcommand bodies -----------------------------------------------------

inline void Runner::cmd_apply() {
  SquareMatrix m = read_input();
  failing_input_ = m;
  const std::size_t n = m.n();
  MatrixOperator op = make_operator(opt_.op, n, operator_options(n, 201));
  if (opt_.logits) {
    const double tau = opt_.tau.value_or(1.0);
    if (!(tau > 0.0)) throw UsageError("--tau must be > 0");
    m *= 1.0 / tau;
    op = on_logits(std::move(op));
  } else if (op.requires_positive && m.min_entry() <= 0.0) {
    throw UsageError(opt_.op + " needs strictly positive entries; pass --logits for real-valued scores");
  }
  const SquareMatrix out = op(m);
  emit_matrix(out, check_stochasticity(out), format("csv"));
}

inline void Runner::cmd_apply_attn() {
  const DenseMatrix q = io::read_dense_file(opt_.queries);
  const DenseMatrix k = io::read_dense_file(opt_.keys);
  const DenseMatrix v = io::read_dense_file(opt_.values);
  AttentionConfig config;
  config.seq_len = q.rows();
  config.head_dim = q.cols();
  config.temperature = opt_.tau;
  const int iters = opt_.k > 0 ? opt_.k : 21;
  const std::string& name = opt_.normalizer;
  if (name == "softmax") config.normalizer = normalizer::Softmax{};
  else if (name == "softmax-sigma") config.normalizer = normalizer::SoftmaxSigma{};
  else if (name == "softmax-sigma2") config.normalizer = normalizer::SoftmaxSigma2{};
  else if (name == "sinkhorn-naive") config.normalizer = normalizer::SinkhornNaive{iters};
  else if (name == "sinkhorn-ot") config.normalizer = normalizer::SinkhornOT{iters};
  else if (name == "qr") config.normalizer = normalizer::QrDsm{require_seed("the QR normalizer is seeded")};
  else if (name == "birkhoff-project") config.normalizer = normalizer::BirkhoffProject{projection()};
  else if (name == "qontot") {
    const CircuitConfig c = circuit(q.rows());
    config.normalizer = normalizer::Qontot{c, theta_for(c)};
  }
  const AttentionResult r = attention_forward(q, k, v, config);
  if (format("csv") == "json") {
    nlohmann::json j{{"rows", r.output.rows()}, {"cols", r.output.cols()}, {"output", r.output.values()}};
    j["attn"] = io::to_json(r.attn);
    j["tau"] = config.tau();
    out_ << j.dump() << '\n';
  } else if (opt_.emit == "attn") {
    io::write_csv(out_, r.attn);
  } else {
    io::write_csv(out_, r.output);
  }
}

inline void Runner::cmd_sweep_unique() {
  GridSpec spec;
  spec.n = opt_.n;
  spec.d = opt_.d;
  spec.domain = opt_.domain == "sphere" ? GridDomain::Hypersphere : GridDomain::Hypercube;
  spec.rounding_decimals = opt_.decimals;
  std::optional<Grid> grid;
  try {
    grid.emplace(spec, opt_.full ? kDefaultGridLimit : kDeskScaleGrid);
  } catch (const UsageError& e) {
    throw UsageError(std::string(e.what()) + (opt_.full ? "" : "; pass --full to lift the 2^20 desk-scale gate"));
  }
  const MatrixOperator op = on_logits(make_operator(opt_.op, spec.n, operator_options(spec.n, 201)));
  const SweepReport r = uniqueness_sweep(*grid, op, workers());
  auto stats = [](const SummaryStats& s) {
    return nlohmann::json{{"min", s.min}, {"median", s.median}, {"mean", s.mean}, {"max", s.max}};
  };
  if (format("json") == "json") {
    out_ << nlohmann::json{{"op", opt_.op},
                           {"total_inputs", r.total_inputs},
                           {"unique_outputs", r.unique_outputs},
                           {"count_multiset", r.count_multiset},
                           {"entropy", stats(r.entropy_stats)},
                           {"residual", stats(r.residual_stats)}}
                .dump()
         << '\n';
  } else {
    out_ << "key,value\n"
         << "total_inputs," << r.total_inputs << '\n'
         << "unique_outputs," << r.unique_outputs << '\n';
    for (const auto& [label, s] : {std::pair{"entropy", r.entropy_stats}, std::pair{"residual", r.residual_stats}}) {
      out_ << label << "_min," << io::format_double(s.min) << '\n'
           << label << "_median," << io::format_double(s.median) << '\n'
           << label << "_mean," << io::format_double(s.mean) << '\n'
           << label << "_max," << io::format_double(s.max) << '\n';
    }
  }
}

inline void Runner::cmd_sweep_tradeoff() {
  const std::uint64_t seed = require_seed("inputs are random Gaussian logits");
  const std::size_t n = opt_.n ? opt_.n : 8;
  std::vector<std::string> names;
  {
    std::stringstream ss(opt_.op);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto& known = operator_names();
      if (std::find(known.begin(), known.end(), tok) == known.end()) throw UsageError("unknown operator '" + tok + "'");
      names.push_back(tok);
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<SquareMatrix> inputs;
  for (std::size_t i = 0; i < opt_.count; ++i) inputs.push_back(gaussian_matrix(n, rng));
  nlohmann::json j = nlohmann::json::object();
  if (format("csv") == "csv") out_ << "op,index,entropy,residual\n";
  for (const auto& name : names) {
    opt_.op = name;
    const MatrixOperator op = on_logits(make_operator(name, n, operator_options(n, 201)));
    const auto rows = tradeoff_sweep(inputs, op);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (format("csv") == "csv")
        out_ << name << ',' << i << ',' << io::format_double(rows[i].entropy) << ','
             << io::format_double(rows[i].residual) << '\n';
      else
        j[name].push_back({{"entropy", rows[i].entropy}, {"residual", rows[i].residual}});
    }
  }
  if (format("csv") == "json") out_ << j.dump() << '\n';
}

inline void Runner::cmd_props() {
  const std::uint64_t seed = require_seed("probe inputs and permutations are random");
  const std::size_t n = opt_.n ? opt_.n : 4;
  const int trials = opt_.trials > 0 ? opt_.trials : 20;
  const MatrixOperator op = make_operator(opt_.op, n, operator_options(n, 201));
  const InvarianceReport r = probe_invariances(op, n, trials, seed);
  nlohmann::json witnesses = nlohmann::json::array();
  for (const auto& w : r.witnesses) {
    nlohmann::json jw{{"kind", w.kind == WitnessKind::Scale ? "scale" : "permutation"},
                      {"seed", w.seed},
                      {"trial", w.trial},
                      {"input", io::to_json(w.input)},
                      {"discrepancy", w.discrepancy}};
    if (w.kind == WitnessKind::Scale) jw["lambda"] = w.lambda;
    else {
      jw["left"] = w.left;
      jw["right"] = w.right;
    }
    witnesses.push_back(std::move(jw));
  }
  if (format("json") == "json") {
    out_ << nlohmann::json{{"op", opt_.op},
                           {"trials", trials},
                           {"scale_invariant", r.scale_invariant},
                           {"permutation_equivariant", r.permutation_equivariant},
                           {"witnesses", witnesses}}
                .dump()
         << '\n';
  } else {
    out_ << "property,holds\n"
         << "scale_invariant," << (r.scale_invariant ? "true" : "false") << '\n'
         << "permutation_equivariant," << (r.permutation_equivariant ? "true" : "false") << '\n';
  }
}

inline void Runner::cmd_count() {
  CensusQuery q;
  q.n = static_cast<int>(opt_.n);
  q.p = opt_.p;
  q.validate();
  nlohmann::json j{{"n", q.n}, {"p", q.p}, {"mode", opt_.mode}};
  if (opt_.mode == "brute") {
    j["f"] = big(count_brute(q, workers()));
  } else if (opt_.mode == "analytic") {
    if (q.n != 3) throw UsageError("count: the analytic formula covers n = 3 only");
    j["f"] = big(f3_analytic(q.p));
  } else {
    const Decomposition d = decomposition_check(q);
    j["total"] = big(d.total);
    j["c1"] = big(d.c1);
    j["c2"] = big(d.c2);
    j["c12"] = big(d.c12);
    j["f"] = big(d.f);
    j["c2_closed"] = big(c2_closed(q));
    j["identity_holds"] = d.identity_holds();
    j["c2_matches_closed_form"] = d.c2 == c2_closed(q);
  }
  if (format("json") == "json") {
    out_ << j.dump() << '\n';
  } else {
    out_ << "key,value\n";
    for (const auto& [key, value] : j.items()) out_ << key << ',' << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
  }
}

inline void Runner::cmd_shots() {
  const std::uint64_t seed = require_seed("shot sampling is random");
  const std::size_t t = opt_.dim;
  const CircuitConfig config = circuit(t);
  const ParamVec theta = theta_for(config);
  SquareMatrix m(1);
  if (opt_.input == "-") {
    std::mt19937_64 rng(seed ^ 0x5eed5eedULL);
    m = gaussian_matrix(t, rng);
  } else {
    m = io::read_matrix_file(opt_.input);
    if (m.n() != t) throw DimensionError("shots: input is " + std::to_string(m.n()) + "x, --dim is " + std::to_string(t));
  }
  failing_input_ = m;
  const Dsm exact = simulate_dsm(config, theta, m, workers());
  if (opt_.shots < t) throw UsageError("shots: need at least T shots");
  SquareMatrix sampled = sample_columns(exact.matrix(), opt_.shots, seed);
  if (opt_.project) sampled = project(sampled, projection()).release();
  const double rho = spearman_rho(exact.matrix(), sampled);
  const double dist = frobenius_distance(exact.matrix(), sampled);
  if (format("json") == "json") {
    out_ << nlohmann::json{{"shots", opt_.shots},
                           {"projected", opt_.project},
                           {"spearman", rho},
                           {"frobenius", dist},
                           {"exact", io::to_json(exact.matrix())},
                           {"sampled", io::to_json(sampled)}}
                .dump()
         << '\n';
  } else {
    out_ << "shots,projected,spearman,frobenius\n"
         << opt_.shots << ',' << (opt_.project ? "true" : "false") << ',' << io::format_double(rho) << ','
         << io::format_double(dist) << '\n';
  }
}

inline void Runner::cmd_bench() {
  const std::uint64_t seed = require_seed("benchmarked parameters and inputs are random");
  const auto rows = bench_circuit(opt_.dim, parse_list(opt_.layer_grid), parse_list(opt_.aux_grid), ansatz(),
                                  opt_.reps, seed);
  if (format("csv") == "json") {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows)
      j.push_back({{"dsm_dim", r.dsm_dim}, {"layers", r.layers}, {"qubits", r.qubits}, {"median_seconds", r.median_seconds}});
    out_ << j.dump() << '\n';
  } else {
    out_ << "dsm_dim,layers,qubits,median_seconds\n";
    for (const auto& r : rows)
      out_ << r.dsm_dim << ',' << r.layers << ',' << r.qubits << ',' << io::format_double(r.median_seconds) << '\n';
  }
}

inline void Runner::cmd_gradcheck() {
  const std::uint64_t seed = require_seed("inputs and upstream gradients are random");
  const int k = opt_.k > 0 ? opt_.k : 21;
  const int trials = opt_.trials > 0 ? opt_.trials : 10;
  const std::size_t n = opt_.n ? opt_.n : 8;
  const GradientTarget target =
      opt_.normalizer == "sinkhorn-naive" ? GradientTarget::SinkhornNaive : GradientTarget::Softmax;
  if (target == GradientTarget::Softmax && opt_.normalizer != "softmax")
    throw UsageError("gradcheck supports sinkhorn-naive and softmax");
  const double err = gradcheck(target, k, n, trials, seed, opt_.tau.value_or(1.0));
  if (format("json") == "json")
    out_ << nlohmann::json{{"normalizer", opt_.normalizer}, {"trials", trials}, {"max_relative_error", err}}.dump()
         << '\n';
  else
    out_ << "normalizer,trials,max_relative_error\n"
         << opt_.normalizer << ',' << trials << ',' << io::format_double(err) << '\n';
}

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  return Runner(out, err).run(std::move(args));
}

}  // namespace dsattn::cli
