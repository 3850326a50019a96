#include "lrll/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lrll/certify.hpp"
#include "lrll/counterexamples.hpp"
#include "lrll/errors.hpp"
#include "lrll/factorized.hpp"
#include "lrll/format.hpp"
#include "lrll/rng.hpp"
#include "lrll/solvers.hpp"

namespace lrll::cli {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kDefaultOutputDir = "lrll-out";
constexpr const char* kOutputEnv = "LRLL_OUTPUT_DIR";

// ---------------------------------------------------------------------------
// JSON helpers. Every scalar is written as a shortest round-trip decimal
// string.

std::string num(double x) { return format_double(x); }

json matrix_json(const Mat& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(num(M(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const std::vector<double>& v) {
  json out = json::array();
  for (const double x : v) out.push_back(num(x));
  return out;
}

json vector_json(const Vec& v) {
  return vector_json(std::vector<double>(v.data(), v.data() + v.size()));
}

double parse_scalar(const std::string& s, const std::string& what) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw InputError(what + ": not a number: '" + s + "'");
  }
  return x;
}

double scalar_from(const json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_scalar(j.get<std::string>(), what);
  throw InputError(what + ": expected a number");
}

Index index_from(const json& j, const std::string& what) {
  const double x = scalar_from(j, what);
  if (x != std::floor(x) || x < 0) throw InputError(what + ": expected a count");
  return static_cast<Index>(x);
}

const json& field(const json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) {
    throw InputError(what + ": missing field '" + key + "'");
  }
  return j.at(key);
}

Mat matrix_from(const json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + ": expected an array of rows");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows == 0 ? 0 : static_cast<Index>(j.front().size());
  Mat M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j.at(static_cast<size_t>(i));
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw InputError(what + ": ragged matrix");
    }
    for (Index c = 0; c < cols; ++c) {
      M(i, c) = scalar_from(row.at(static_cast<size_t>(c)), what);
    }
  }
  return M;
}

Vec vector_from(const json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + ": expected an array");
  Vec v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) {
    v(i) = scalar_from(j.at(static_cast<size_t>(i)), what);
  }
  return v;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Configuration files. The resolved configuration of a run is written in the
// same format it is read from: global options at the top level and one
// object per subcommand, every value a string.

class JsonConfig final : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool,
                        std::string) const override {
    json j;
    j["schema"] = "lrll.config/1";
    j["rng"] = std::string(kRngAlgorithm);
    write_app(app, default_also, j);
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config: expected an object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static void write_app(const CLI::App* app, bool default_also, json& j) {
    for (const CLI::Option* opt : app->get_options()) {
      if (opt == app->get_help_ptr() || opt == app->get_help_all_ptr() ||
          opt == app->get_config_ptr() || !opt->get_configurable()) {
        continue;
      }
      const std::string name = opt->get_single_name();
      if (name == "out") continue;  // resolved per run, see README
      std::vector<std::string> values = opt->results();
      if (values.empty() && default_also && !opt->get_default_str().empty()) {
        values.push_back(opt->get_default_str());
      }
      if (values.empty()) continue;
      if (values.size() == 1) {
        j[name] = values.front();
      } else {
        j[name] = values;
      }
    }
    for (const CLI::App* sub : app->get_subcommands()) {
      json section = json::object();
      write_app(sub, default_also, section);
      j[sub->get_name()] = std::move(section);
    }
  }

  static void collect(const json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (parents.empty() && (it.key() == "schema" || it.key() == "rng")) {
        continue;
      }
      const json& v = it.value();
      if (v.is_object()) {
        std::vector<std::string> p = parents;
        p.push_back(it.key());
        collect(v, p, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (v.is_string()) {
        item.inputs = {v.get<std::string>()};
      } else if (v.is_boolean()) {
        item.inputs = {v.get<bool>() ? "true" : "false"};
      } else if (v.is_number()) {
        item.inputs = {v.dump()};
      } else if (v.is_array()) {
        for (const json& e : v) item.inputs.push_back(e.is_string() ? e.get<std::string>() : e.dump());
      } else {
        throw CLI::ConversionError("config: unsupported value for " + it.key());
      }
      items.push_back(std::move(item));
    }
  }
};

// ---------------------------------------------------------------------------
// Run context

struct Context {
  fs::path dir;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string subcommand;
  std::ostream* out = nullptr;

  json meta() const {
    json m;
    m["subcommand"] = subcommand;
    m["seed"] = std::to_string(seed);
    m["threads"] = std::to_string(threads);
    m["rng"] = std::string(kRngAlgorithm);
    return m;
  }

  void write(const std::string& name, const std::string& contents) const {
    write_file_atomic(dir / name, contents);
  }

  void write_json(const std::string& name, const std::string& schema,
                  const json& body) const {
    json doc;
    doc["schema"] = schema;
    doc["meta"] = meta();
    for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
    write(name, doc.dump(2) + "\n");
  }

  std::ostream& log() const { return *out; }
};

// ---------------------------------------------------------------------------
// Objective selection shared by most subcommands.

struct ObjectiveArgs {
  std::string sensing;
  std::string family;
  std::string objective_file;
  std::string ensemble_file;
  Index n = 0;
  Index r = 1;
  double theta = 0.6;
  bool symmetric = false;
  bool save_ensemble = false;
};

void add_objective_options(CLI::App* sub, ObjectiveArgs& a) {
  sub->add_option("--sensing", a.sensing,
                  "Gaussian sensing instance, e.g. n=30,m=30,r=3,p=900");
  sub->add_option("--objective", a.family, "Built-in objective")
      ->check(CLI::IsMember({"rank1", "rankr", "dialed", "witness", "identity"}));
  sub->add_option("--objective-file", a.objective_file,
                  "Quadratic objective written by `counterexample` or `witness`");
  sub->add_option("--ensemble", a.ensemble_file, "Saved sensing ensemble header");
  sub->add_option("--n", a.n, "Ambient dimension (0: family default)");
  sub->add_option("--r", a.r, "Rank");
  sub->add_option("--theta", a.theta, "Dial for --objective dialed");
  sub->add_flag("--symmetric", a.symmetric, "Use the symmetric problem h_s");
  sub->add_flag("--save-ensemble", a.save_ensemble,
                "Write the sensing ensemble next to the outputs");
}

struct Instance {
  ObjectivePtr obj;
  Mat Mstar;
  Index r = 1;
  std::optional<FactorPair> special;  // the family's distinguished point
  std::optional<SensingEnsemble> ensemble;
  std::string label;
};

FactorPair factor_pair(const Mat& U, bool symmetric) {
  return symmetric ? FactorPair::symmetric(U) : FactorPair::asymmetric(U, U);
}

json objective_file_json(const TensorObjective& f, Index r,
                         const std::optional<FactorPair>& point,
                         const std::string& family) {
  json j;
  j["schema"] = "lrll.objective/1";
  j["family"] = family;
  j["n"] = std::to_string(f.rows());
  j["m"] = std::to_string(f.cols());
  j["rank"] = std::to_string(r);
  j["symmetric"] = f.symmetric() ? "true" : "false";
  j["c0"] = num(f.tensor().identity_coeff());
  j["mstar"] = matrix_json(f.Mstar());
  json terms = json::array();
  for (const OuterTerm& t : f.tensor().terms()) {
    json term;
    term["coeff"] = num(t.coeff);
    term["L"] = matrix_json(t.L);
    term["R"] = matrix_json(t.R);
    terms.push_back(std::move(term));
  }
  j["terms"] = std::move(terms);
  if (point) {
    json p;
    p["U"] = matrix_json(point->U());
    if (!point->is_symmetric()) p["V"] = matrix_json(point->V());
    j["point"] = std::move(p);
  }
  return j;
}

Instance read_objective_file(const fs::path& path) {
  const json j = read_json_file(path);
  const std::string what = path.string();
  if (!j.contains("schema") || j["schema"] != "lrll.objective/1") {
    throw InputError(what + ": not an lrll objective file");
  }
  const Index n = index_from(field(j, "n", what), what);
  const Index m = index_from(field(j, "m", what), what);
  const bool sym = field(j, "symmetric", what) == "true";
  OuterTensor H(n, m, scalar_from(field(j, "c0", what), what));
  for (const json& t : field(j, "terms", what)) {
    H.add_term(scalar_from(field(t, "coeff", what), what),
               matrix_from(field(t, "L", what), what),
               matrix_from(field(t, "R", what), what));
  }
  Instance I;
  I.Mstar = matrix_from(field(j, "mstar", what), what);
  auto f = std::make_shared<const TensorObjective>(std::move(H), I.Mstar, sym);
  I.obj = f;
  I.r = index_from(field(j, "rank", what), what);
  if (j.contains("point")) {
    const Mat U = matrix_from(field(j["point"], "U", what), what);
    if (j["point"].contains("V")) {
      I.special = FactorPair::asymmetric(U, matrix_from(j["point"]["V"], what));
    } else {
      I.special = FactorPair::symmetric(U);
    }
  }
  I.label = "file:" + path.filename().string();
  return I;
}

Instance build_instance(const ObjectiveArgs& a, std::uint64_t seed) {
  const int given = !a.sensing.empty() + !a.family.empty() +
                    !a.objective_file.empty() + !a.ensemble_file.empty();
  if (given != 1) {
    throw InputError(
        "exactly one of --sensing, --objective, --objective-file, --ensemble "
        "is required");
  }
  if (a.r < 1) throw InputError("--r must be at least 1");
  if (a.n < 0) throw InputError("--n must be non-negative");
  Instance I;
  if (!a.sensing.empty()) {
    const SensingSpec s = parse_sensing_spec(a.sensing);
    if (a.symmetric && s.n != s.m) throw InputError("--symmetric needs n == m");
    I.Mstar = sensing_ground_truth(s.n, s.m, s.r, seed, a.symmetric);
    I.ensemble = gaussian_sensing_ensemble(s.n, s.m, s.r, s.p, I.Mstar, seed);
    I.obj = linear_objective(*I.ensemble);
    I.r = s.r;
    I.label = "sensing:" + a.sensing;
    return I;
  }
  if (!a.ensemble_file.empty()) {
    SensingEnsemble e = read_ensemble(a.ensemble_file);
    if (!e.Mstar) throw InputError("ensemble has no ground truth");
    I.Mstar = *e.Mstar;
    I.ensemble = e;
    I.obj = linear_objective(std::move(e));
    I.r = a.r;
    I.label = "ensemble:" + fs::path(a.ensemble_file).filename().string();
    return I;
  }
  if (!a.objective_file.empty()) return read_objective_file(a.objective_file);

  const std::string& fam = a.family;
  I.label = fam;
  if (fam == "rank1" || fam == "dialed") {
    const Index n = a.n > 0 ? a.n : 2;
    std::shared_ptr<const TensorObjective> f = rank1_example(n, a.symmetric);
    if (fam == "dialed") f = dialed_delta_family(*f, a.theta);
    I.obj = f;
    I.Mstar = f->Mstar();
    I.r = 1;
    I.special = factor_pair(rank1_spurious_factor(n), a.symmetric);
  } else if (fam == "rankr") {
    const Index n = a.n > 0 ? a.n : 2 * a.r;
    const auto f = rankr_linear_example(a.r, n, a.symmetric);
    I.obj = f;
    I.Mstar = f->Mstar();
    I.r = a.r;
    I.special = factor_pair(rankr_spurious_factor(a.r, n), a.symmetric);
  } else if (fam == "witness") {
    SpuriousWitness W = theorem_witness_example(a.r);
    if (a.symmetric) {
      W.variant = WitnessVariant::Symmetric;
      W.B = Mat();
      W.D = Mat();
    }
    const Index n = std::max(a.n, 2 * a.r);
    const WitnessConstruction c = witness_construct_objective(W, n, n);
    I.obj = c.objective;
    I.Mstar = c.Mstar;
    I.r = a.r;
    I.special = c.point;
  } else {  // identity
    const Index n = a.n > 0 ? a.n : 4;
    I.Mstar = sensing_ground_truth(n, n, a.r, seed, a.symmetric);
    I.obj = std::make_shared<const TensorObjective>(OuterTensor(n, n, 1.0),
                                                    I.Mstar, a.symmetric);
    I.r = a.r;
  }
  return I;
}

void maybe_save_ensemble(const ObjectiveArgs& a, const Instance& I,
                         const Context& ctx) {
  if (!a.save_ensemble) return;
  if (!I.ensemble) throw InputError("--save-ensemble needs a sensing objective");
  write_ensemble(ctx.dir / "ensemble.json", *I.ensemble, I.r);
}

std::unique_ptr<FactoredProblem> make_problem(const Instance& I, bool symmetric,
                                              double mu) {
  if (symmetric) return std::make_unique<SymmetricProblem>(I.obj);
  return std::make_unique<RegularizedProblem>(I.obj, mu);
}

FactorPair initial_point(const std::string& init, const Instance& I,
                         bool symmetric, double scale, std::uint64_t seed) {
  if (init == "special") {
    if (!I.special) throw InputError("this objective has no distinguished point");
    const FactorPair& p = *I.special;
    if (symmetric == p.is_symmetric()) return p;
    return symmetric ? FactorPair::symmetric(p.U()) : FactorPair::asymmetric(p.U(), p.V());
  }
  if (init == "global") {
    if (symmetric) return FactorPair::symmetric(psd_factorize(I.Mstar, I.r));
    return balanced_factorize(I.Mstar, I.r);
  }
  RandomStream rng(seed, 7);
  const Mat U = scale * rng.normal_matrix(I.obj->rows(), I.r);
  if (symmetric) return FactorPair::symmetric(U);
  return FactorPair::asymmetric(U, scale * rng.normal_matrix(I.obj->cols(), I.r));
}

json report_json(const CriticalityReport& r) {
  json j;
  j["classification"] = to_string(r.classification);
  j["symmetric"] = r.symmetric ? "true" : "false";
  j["f"] = num(r.f);
  j["f_star"] = num(r.f_star);
  j["gap"] = num(r.gap);
  j["residual_u"] = num(r.residual_u);
  j["residual_v"] = num(r.residual_v);
  j["balance"] = num(r.balance);
  j["grad_norm"] = num(r.grad_norm);
  j["sigma_r"] = num(r.sigma_r);
  j["grad_spectral"] = num(r.grad_spectral);
  j["hessian_lambda_min"] = num(r.hessian_lambda_min);
  j["distance"] = num(r.distance);
  j["correlation"] = num(r.correlation);
  j["tol_grad"] = num(r.tol_grad);
  j["tol_eig"] = num(r.tol_eig);
  return j;
}

json witness_json(const SpuriousWitness& W) {
  json j;
  j["delta"] = num(W.delta);
  j["alpha"] = num(W.alpha);
  j["variant"] = W.variant == WitnessVariant::Symmetric ? "sym" : "asym";
  j["sigma"] = vector_json(W.sigma);
  j["lambda"] = vector_json(W.lambda);
  j["A"] = matrix_json(W.A);
  j["C"] = matrix_json(W.C);
  if (W.variant == WitnessVariant::Asymmetric) {
    j["B"] = matrix_json(W.B);
    j["D"] = matrix_json(W.D);
  }
  return j;
}

SpuriousWitness read_witness_file(const fs::path& path) {
  const json j = read_json_file(path);
  const std::string what = path.string();
  SpuriousWitness W;
  W.delta = scalar_from(field(j, "delta", what), what);
  W.alpha = scalar_from(field(j, "alpha", what), what);
  W.sigma = vector_from(field(j, "sigma", what), what);
  W.lambda = vector_from(field(j, "lambda", what), what);
  W.A = matrix_from(field(j, "A", what), what);
  W.C = matrix_from(field(j, "C", what), what);
  if (j.contains("variant") && j["variant"] == "sym") {
    W.variant = WitnessVariant::Symmetric;
  } else {
    W.B = matrix_from(field(j, "B", what), what);
    W.D = matrix_from(field(j, "D", what), what);
  }
  return W;
}

json witness_report_json(const WitnessReport& rep) {
  json j;
  j["feasible"] = rep.feasible ? "true" : "false";
  j["alpha_interval"] = rep.alpha_interval ? "true" : "false";
  j["sufficient"] = rep.sufficient ? "true" : "false";
  j["cb_zero"] = rep.cb_zero ? "true" : "false";
  j["ad_zero"] = rep.ad_zero ? "true" : "false";
  j["inner_lambda_cd"] = num(rep.inner_lambda_cd);
  j["equality_rhs"] = num(rep.equality_rhs);
  j["third_rhs"] = num(rep.third_rhs);
  j["first_failure"] = rep.first_failure;
  json conds = json::array();
  for (const WitnessCondition& c : rep.conditions) {
    json cj;
    cj["name"] = c.name;
    cj["passed"] = c.passed ? "true" : "false";
    cj["lhs"] = num(c.lhs);
    cj["rhs"] = num(c.rhs);
    cj["slack"] = num(c.slack);
    conds.push_back(std::move(cj));
  }
  j["conditions"] = std::move(conds);
  return j;
}

std::string trace_csv(const SolverTrace& tr) {
  std::ostringstream s;
  tr.write_csv(s);
  return s.str();
}

json trace_summary(const SolverTrace& tr) {
  json j;
  j["status"] = to_string(tr.status);
  j["iterations"] = std::to_string(tr.iterations);
  j["f_initial"] = num(tr.records.front().f);
  j["f_final"] = num(tr.final_value());
  j["f_lb"] = tr.f_lb ? json(num(*tr.f_lb)) : json(nullptr);
  j["grad_norm_initial"] = num(tr.records.front().grad_norm);
  j["grad_norm_final"] = num(tr.records.back().grad_norm);
  return j;
}

int status_exit_code(const SolverTrace& tr) {
  return tr.status == SolverStatus::Diverged ? 2 : 0;
}

// ---------------------------------------------------------------------------
// Subcommands

struct SvpArgs {
  ObjectiveArgs obj;
  std::string manifold = "asym";
  double eta = 0.0;
  int max_iters = 1000;
  double tol = 1e-8;
  std::string init = "zero";
  int rip_samples = 20;
  int rip_refine = 100;
};

int run_svp(SvpArgs a, const Context& ctx) {
  const bool sym = a.manifold == "sym";
  a.obj.symmetric = a.obj.symmetric || sym;
  const Instance I = build_instance(a.obj, ctx.seed);
  maybe_save_ensemble(a.obj, I, ctx);
  const double delta = rip_estimate(*I.obj, 2 * I.r, a.rip_samples, a.rip_refine, ctx.seed);
  SvpOptions opts;
  opts.eta = a.eta > 0.0 ? a.eta : 1.0 / (1.0 + delta);
  opts.max_iters = a.max_iters;
  opts.tol = a.tol;
  Mat M0 = Mat::Zero(I.obj->rows(), I.obj->cols());
  if (a.init == "special") {
    if (!I.special) throw InputError("this objective has no distinguished point");
    M0 = I.special->product();
  }
  const SolverTrace tr = svp(*I.obj, sym ? Manifold::Symmetric : Manifold::Asymmetric,
                             I.r, M0, opts);
  // The contraction bound is only meaningful for delta < 1.
  const double rate_bound =
      delta < 1.0 ? 2 * delta / (1 - delta) : std::numeric_limits<double>::infinity();

  std::ostringstream csv;
  csv << "iter,gap,ratio,bound\n";
  const double lb = tr.f_lb.value_or(0.0);
  double max_ratio = 0.0;
  for (size_t t = 0; t < tr.records.size(); ++t) {
    const double gap = tr.records[t].f - lb;
    csv << tr.records[t].iter << ',' << num(gap) << ',';
    if (t > 0 && tr.f_lb && tr.records[t - 1].f - lb > 0) {
      const double ratio = gap / (tr.records[t - 1].f - lb);
      max_ratio = std::max(max_ratio, ratio);
      csv << num(ratio);
    }
    csv << ',' << num(rate_bound) << '\n';
  }

  json body;
  body["objective"] = I.label;
  body["manifold"] = to_string(sym ? Manifold::Symmetric : Manifold::Asymmetric);
  body["rank"] = std::to_string(I.r);
  body["delta_hat"] = num(delta);
  body["eta"] = num(opts.eta);
  body["tol"] = num(opts.tol);
  body.update(trace_summary(tr));
  body["contraction_factors"] = vector_json(tr.contraction_factors());
  body["max_contraction"] = num(max_ratio);
  body["rate_bound"] = num(rate_bound);
  try {
    const long long bound =
        svp_iteration_bound(delta, tr.records.front().f - lb, opts.tol);
    body["iteration_bound"] = std::to_string(bound);
    body["within_iteration_bound"] =
        tr.status == SolverStatus::Converged && tr.iterations <= bound ? "true" : "false";
  } catch (const DomainError& e) {
    body["iteration_bound"] = nullptr;
    body["iteration_bound_error"] = e.what();
  }
  ctx.write("svp_trace.csv", trace_csv(tr));
  ctx.write("svp_contraction.csv", csv.str());
  ctx.write_json("svp_summary.json", "lrll.svp/1", body);
  ctx.log() << "svp: " << to_string(tr.status) << " after " << tr.iterations
            << " iterations, f = " << num(tr.final_value())
            << ", delta_hat = " << num(delta) << ", max ratio = " << num(max_ratio)
            << " (bound " << num(rate_bound) << ")\n";
  return status_exit_code(tr);
}

struct DescentArgs {
  ObjectiveArgs obj;
  double mu = 0.5;
  double step = 1e-2;
  int max_iters = 10000;
  double tol = 1e-8;
  double f_stop = -1.0;
  std::string init = "random";
  double init_scale = 0.5;
  // perturbed gradient descent only
  double radius = 1e-3;
  double g_thres = 1e-4;
  int t_thres = 100;
  double f_thres = 1e-8;
};

void add_descent_options(CLI::App* sub, DescentArgs& a, bool perturbed) {
  add_objective_options(sub, a.obj);
  sub->add_option("--mu", a.mu, "Balance regularization weight");
  sub->add_option("--step", a.step, "Step size");
  sub->add_option("--max-iters", a.max_iters, "Iteration cap");
  sub->add_option("--tol", a.tol, "Gradient-norm tolerance");
  sub->add_option("--f-stop", a.f_stop, "Stop once f - f_lb <= f-stop (negative: off)");
  sub->add_option("--init", a.init, "Initial point")
      ->check(CLI::IsMember({"random", "special", "global"}));
  sub->add_option("--init-scale", a.init_scale, "Scale of random initial factors");
  if (perturbed) {
    sub->add_option("--radius", a.radius, "Perturbation radius");
    sub->add_option("--g-thres", a.g_thres, "Gradient level that triggers a perturbation");
    sub->add_option("--t-thres", a.t_thres, "Steps between perturbations");
    sub->add_option("--f-thres", a.f_thres, "Required decrease after a perturbation");
  }
}

int run_descent(const DescentArgs& a, const Context& ctx, bool perturbed) {
  const Instance I = build_instance(a.obj, ctx.seed);
  maybe_save_ensemble(a.obj, I, ctx);
  const auto P = make_problem(I, a.obj.symmetric, a.mu);
  const FactorPair F0 = initial_point(a.init, I, a.obj.symmetric, a.init_scale, ctx.seed);
  std::optional<double> f_stop;
  if (a.f_stop >= 0.0) f_stop = a.f_stop;
  SolverTrace tr;
  if (perturbed) {
    PgdOptions o;
    o.step = a.step;
    o.radius = a.radius;
    o.g_thres = a.g_thres;
    o.t_thres = a.t_thres;
    o.f_thres = a.f_thres;
    o.max_iters = a.max_iters;
    o.tol = a.tol;
    o.seed = ctx.seed;
    o.f_stop = f_stop;
    tr = perturbed_gd(*P, F0, o);
  } else {
    GdOptions o;
    o.step = a.step;
    o.max_iters = a.max_iters;
    o.tol = a.tol;
    o.f_stop = f_stop;
    tr = gd_factorized(*P, F0, o);
  }
  const std::string name = perturbed ? "pgd" : "gd";
  json body;
  body["objective"] = I.label;
  body["problem"] = a.obj.symmetric ? "h_s" : "rho";
  body["mu"] = a.obj.symmetric ? json(nullptr) : json(num(a.mu));
  body["rank"] = std::to_string(I.r);
  body.update(trace_summary(tr));
  body["step_halvings"] = std::to_string(tr.count_events("step-halved"));
  if (perturbed) body["perturbations"] = std::to_string(tr.count_events("perturb"));
  if (tr.status != SolverStatus::Diverged) {
    body["final_point"] =
        report_json(criticality_report(*P, tr.final_factors, I.Mstar, 1e-6, 1e-8));
  }
  ctx.write(name + "_trace.csv", trace_csv(tr));
  ctx.write_json(name + "_summary.json", "lrll." + name + "/1", body);
  ctx.log() << name << ": " << to_string(tr.status) << " after " << tr.iterations
            << " iterations, f = " << num(tr.final_value()) << ", |grad| = "
            << num(tr.records.back().grad_norm) << "\n";
  return status_exit_code(tr);
}

struct CertifyArgs {
  ObjectiveArgs obj;
  std::string point = "special";
  double mu = 0.5;
  double tol_grad = 1e-10;
  double tol_eig = 1e-10;
  double fixed_point_delta = -1.0;
  double init_scale = 0.5;
};

int run_certify(CertifyArgs a, const Context& ctx) {
  if (a.point == "e2-over-sqrt2") {
    if (a.obj.family != "rank1" && a.obj.family != "dialed") {
      throw InputError("--point e2-over-sqrt2 needs --objective rank1 or dialed");
    }
    a.point = "special";
  }
  const Instance I = build_instance(a.obj, ctx.seed);
  maybe_save_ensemble(a.obj, I, ctx);
  const auto P = make_problem(I, a.obj.symmetric, a.mu);
  const FactorPair F = initial_point(a.point, I, a.obj.symmetric, a.init_scale, ctx.seed);
  const CriticalityReport rep = criticality_report(*P, F, I.Mstar, a.tol_grad, a.tol_eig);
  json body;
  body["objective"] = I.label;
  body["problem"] = a.obj.symmetric ? "h_s" : "rho";
  body["mu"] = a.obj.symmetric ? json(nullptr) : json(num(a.mu));
  body["point"] = a.point;
  body["report"] = report_json(rep);
  if (a.fixed_point_delta >= 0.0) {
    const FixedPointReport fp = svp_fixed_point_check(
        *I.obj, F.product(), I.r, a.fixed_point_delta,
        a.obj.symmetric ? Manifold::Symmetric : Manifold::Asymmetric);
    json fj;
    fj["delta"] = num(a.fixed_point_delta);
    fj["fixed_point"] = fp.fixed_point ? "true" : "false";
    fj["residual_cols"] = num(fp.residual_cols);
    fj["residual_rows"] = num(fp.residual_rows);
    fj["spectral"] = num(fp.spectral);
    fj["sigma_r"] = num(fp.sigma_r);
    fj["margin"] = num(fp.margin);
    body["svp_fixed_point"] = std::move(fj);
  }
  ctx.write_json("certify_report.json", "lrll.certify/1", body);
  ctx.log() << "classification: " << to_string(rep.classification) << "\n"
            << "gap: " << num(rep.gap) << "\n"
            << "residuals: " << num(rep.residual_u) << " " << num(rep.residual_v) << "\n"
            << "hessian lambda_min: " << num(rep.hessian_lambda_min) << "\n";
  return 0;
}

struct WitnessArgs {
  std::string family = "example4";
  std::string witness_file;
  Index r = 2;
  double delta = -1.0;
  double alpha = -1.0;
  std::string variant = "asym";
  bool construct = false;
  Index n = 0;
  Index m = 0;
};

int run_witness(const WitnessArgs& a, const Context& ctx) {
  SpuriousWitness W = a.witness_file.empty() ? theorem_witness_example(a.r)
                                             : read_witness_file(a.witness_file);
  if (a.delta >= 0.0) W.delta = a.delta;
  if (a.alpha >= 0.0) W.alpha = a.alpha;
  if (a.variant == "sym") {
    W.variant = WitnessVariant::Symmetric;
    W.B = Mat();
    W.D = Mat();
  }
  const WitnessReport rep = witness_check(W);
  json body;
  body["witness"] = witness_json(W);
  body["report"] = witness_report_json(rep);
  ctx.log() << "witness: " << (rep.feasible ? "feasible" : "infeasible");
  if (!rep.feasible) ctx.log() << " (first failure: " << rep.first_failure << ")";
  ctx.log() << ", sufficient: " << (rep.sufficient ? "yes" : "no") << "\n";
  if (a.construct) {
    const Index r = W.rank();
    const Index n = a.n > 0 ? a.n : 2 * r;
    const Index m = a.m > 0 ? a.m : n;
    const WitnessConstruction c = witness_construct_objective(W, n, m);
    ctx.write("witness_objective.json",
              objective_file_json(*c.objective, r, c.point, "witness").dump(2) + "\n");
    std::unique_ptr<FactoredProblem> P;
    if (c.point.is_symmetric()) {
      P = std::make_unique<SymmetricProblem>(c.objective);
    } else {
      P = std::make_unique<RegularizedProblem>(c.objective, 0.0);
    }
    const CriticalityReport cr = criticality_report(*P, c.point, c.Mstar, 1e-10, 1e-9);
    json cj;
    cj["lambda1"] = num(c.lambda1);
    cj["lambda2"] = num(c.lambda2);
    cj["rip_estimate"] = num(rip_estimate(*c.objective, 2 * r, 20, 100, ctx.seed));
    cj["certificate"] = report_json(cr);
    body["construction"] = std::move(cj);
    ctx.log() << "constructed objective: lambda1 = " << num(c.lambda1)
              << ", lambda2 = " << num(c.lambda2) << ", M~ is "
              << to_string(cr.classification) << "\n";
  }
  ctx.write_json("witness_report.json", "lrll.witness/1", body);
  return 0;
}

struct CounterexampleArgs {
  std::string family = "rank1";
  Index n = 0;
  Index r = 1;
  double theta = 0.6;
  bool symmetric = false;
  bool rip = false;
};

int run_counterexample(const CounterexampleArgs& a, const Context& ctx) {
  ObjectiveArgs oa;
  oa.family = a.family;
  oa.n = a.n;
  oa.r = a.r;
  oa.theta = a.theta;
  oa.symmetric = a.symmetric;
  const Instance I = build_instance(oa, ctx.seed);
  const auto& f = dynamic_cast<const TensorObjective&>(*I.obj);
  ctx.write("objective.json",
            objective_file_json(f, I.r, I.special, a.family).dump(2) + "\n");
  const FactorPair& p = *I.special;
  const Mat Mt = p.product();
  const Mat G = f.gradient(Mt);
  json body;
  body["family"] = a.family;
  body["n"] = std::to_string(f.rows());
  body["rank"] = std::to_string(I.r);
  if (a.family == "dialed") body["theta"] = num(a.theta);
  body["value_at_point"] = num(f.value(Mt));
  body["gap"] = num(f.value(Mt) - f.value(I.Mstar));
  body["gradient_at_point"] = matrix_json(G);
  body["correlation"] = num(correlation_measure(Mt, I.Mstar));
  if (a.rip) body["rip_estimate"] = num(rip_estimate(f, 2 * I.r, 20, 100, ctx.seed));
  ctx.write_json("counterexample.json", "lrll.counterexample/1", body);
  ctx.log() << a.family << ": f(M~) - f(M*) = " << num(f.value(Mt) - f.value(I.Mstar))
            << "\n";
  return 0;
}

struct RipArgs {
  ObjectiveArgs obj;
  Index rank = 0;
  int samples = 20;
  int refine = 100;
  double step = 0.5;
  int bdp_samples = 0;
};

int run_rip(const RipArgs& a, const Context& ctx) {
  const Instance I = build_instance(a.obj, ctx.seed);
  maybe_save_ensemble(a.obj, I, ctx);
  const Index rank = a.rank > 0 ? a.rank : 2 * I.r;
  const double d = rip_estimate(*I.obj, rank, RipOptions{a.samples, a.refine, a.step, ctx.seed});
  json body;
  body["objective"] = I.label;
  body["rank"] = std::to_string(rank);
  body["samples"] = std::to_string(a.samples);
  body["refine"] = std::to_string(a.refine);
  body["delta_hat"] = num(d);
  body["below_one_third"] = d < 1.0 / 3.0 ? "true" : "false";
  body["below_one_half"] = d < 0.5 ? "true" : "false";
  if (a.bdp_samples > 0) {
    body["bdp_hat"] = num(bdp_estimate(*I.obj, rank, a.bdp_samples, ctx.seed));
  }
  ctx.write_json("rip_report.json", "lrll.rip/1", body);
  ctx.log() << "delta_hat (rank " << rank << "): " << num(d) << "\n";
  return 0;
}

struct ScanArgs {
  ObjectiveArgs obj;
  double mu = 0.5;
  double alpha = 0.1;
  double beta = 1e-3;
  double gamma = 1e-3;
  int points = 500;
  double radius = 0.0;
  int trajectories = 5;
  int harvest_pct = 40;
  double gd_step = 1e-2;
  int gd_iters = 2000;
  bool include_special = true;
};

int run_scan(const ScanArgs& a, const Context& ctx) {
  const Instance I = build_instance(a.obj, ctx.seed);
  maybe_save_ensemble(a.obj, I, ctx);
  const auto P = make_problem(I, a.obj.symmetric, a.mu);
  ScanOptions o;
  o.alpha = a.alpha;
  o.beta = a.beta;
  o.gamma = a.gamma;
  o.n_points = a.points;
  o.ball_radius = a.radius;
  o.n_trajectories = a.trajectories;
  o.harvest_fraction_pct = a.harvest_pct;
  o.gd.step = a.gd_step;
  o.gd.max_iters = a.gd_iters;
  o.seed = ctx.seed;
  o.threads = ctx.threads;
  if (a.include_special && I.special) {
    o.extra_points.push_back(initial_point("special", I, a.obj.symmetric, 0.0, ctx.seed));
  }
  const ScanReport rep = strict_saddle_scan(*P, I.Mstar, I.r, o);
  std::ostringstream pts;
  pts << "index,source,distance,grad_norm,lambda_min,near,large_gradient,"
         "negative_curvature\n";
  for (const ScanPoint& p : rep.points) {
    pts << p.index << ',' << p.source << ',' << num(p.distance) << ','
        << num(p.grad_norm) << ',' << num(p.lambda_min) << ',' << p.near << ','
        << p.large_gradient << ',' << p.negative_curvature << '\n';
  }
  std::ostringstream fr;
  fr << "alpha,beta,gamma\n";
  for (const FrontierPoint& p : rep.frontier) {
    fr << num(p.alpha) << ',' << num(p.beta) << ',' << num(p.gamma) << '\n';
  }
  json body;
  body["objective"] = I.label;
  body["problem"] = a.obj.symmetric ? "h_s" : "rho";
  body["alpha"] = num(a.alpha);
  body["beta"] = num(a.beta);
  body["gamma"] = num(a.gamma);
  body["points"] = std::to_string(rep.points.size());
  body["violations"] = std::to_string(rep.violations);
  body["wstar_norm"] = num(rep.wstar_norm);
  json obs = json::array();
  for (const int i : rep.obstructions) obs.push_back(std::to_string(i));
  body["obstructions"] = std::move(obs);
  body["obstruction_distance"] = num(rep.obstruction_distance);
  body["frontier_size"] = std::to_string(rep.frontier.size());
  ctx.write("scan_points.csv", pts.str());
  ctx.write("scan_frontier.csv", fr.str());
  ctx.write_json("scan_report.json", "lrll.strict-saddle/1", body);
  ctx.log() << "strict-saddle: " << rep.violations << " violations over "
            << rep.points.size() << " points, " << rep.obstructions.size()
            << " obstructions, " << rep.frontier.size() << " frontier points\n";
  return 0;
}

struct LiftArgs {
  ObjectiveArgs obj;
  double delta = -1.0;
  int trials = 10;
  int rip_samples = 20;
  int rip_refine = 100;
};

int run_lift(const LiftArgs& a, const Context& ctx) {
  if (a.obj.symmetric) throw InputError("lift expects an asymmetric objective");
  const Instance I = build_instance(a.obj, ctx.seed);
  maybe_save_ensemble(a.obj, I, ctx);
  const Index rank = 2 * I.r;
  const double base_delta = rip_estimate(*I.obj, rank, a.rip_samples, a.rip_refine, ctx.seed);
  const double delta = a.delta >= 0.0 ? a.delta : base_delta;
  const auto F = lift_to_symmetric(I.obj, delta);
  const Index n = I.obj->rows();
  RandomStream rng(ctx.seed, 9);
  double loss_err = 0.0, balance_err = 0.0, value_err = 0.0;
  const RegularizedProblem plain(I.obj, 0.0);
  const RegularizedProblem reg(I.obj, F->mu());
  for (int t = 0; t < a.trials; ++t) {
    const Mat W = rng.normal_matrix(n + I.obj->cols(), I.r);
    const FactorPair UV = FactorPair::from_stacked(W, n, false);
    const Mat N = W * W.transpose();
    const double ha = plain.value(UV);
    const double g = std::pow(UV.balance_residual(), 2);
    loss_err = std::max(loss_err, std::abs(F->lifted_loss(N) - 2 * ha) / std::max(1.0, ha));
    balance_err = std::max(balance_err, std::abs(F->lifted_balance(N) - g) / std::max(1.0, g));
    const double rho = reg.value(UV);
    value_err = std::max(value_err, std::abs(F->value(N) - 4 / (1 + delta) * rho) /
                                        std::max(1.0, rho));
  }
  const double lifted = rip_estimate(*F, rank, a.rip_samples, a.rip_refine, ctx.seed);
  json body;
  body["objective"] = I.label;
  body["delta"] = num(delta);
  body["base_delta_hat"] = num(base_delta);
  body["mu"] = num(F->mu());
  body["trials"] = std::to_string(a.trials);
  body["max_rel_error_lifted_loss"] = num(loss_err);
  body["max_rel_error_lifted_balance"] = num(balance_err);
  body["max_rel_error_value"] = num(value_err);
  body["lifted_delta_hat"] = num(lifted);
  body["lifted_delta_bound"] = num(2 * delta / (1 + delta));
  ctx.write_json("lift_report.json", "lrll.lift/1", body);
  ctx.log() << "lift: delta = " << num(delta) << ", lifted delta_hat = " << num(lifted)
            << " (bound " << num(2 * delta / (1 + delta)) << ")\n";
  return 0;
}

struct BenchArgs {
  ObjectiveArgs obj;
  int repeats = 10;
};

int run_bench(const BenchArgs& a, const Context& ctx) {
  const Instance I = build_instance(a.obj, ctx.seed);
  using Clock = std::chrono::steady_clock;
  RandomStream rng(ctx.seed, 11);
  const Mat M = random_low_rank(rng, I.obj->rows(), I.obj->cols(), I.r);
  const Mat K = random_low_rank(rng, I.obj->rows(), I.obj->cols(), 2 * I.r);
  const FactorPair F = balanced_factorize(M, I.r);
  const RegularizedProblem P(I.obj, 0.5);
  double sink = 0.0;
  std::vector<std::pair<std::string, std::function<void()>>> ops = {
      {"value", [&] { sink += I.obj->value(M); }},
      {"gradient", [&] { sink += I.obj->gradient(M)(0, 0); }},
      {"hess_qform", [&] { sink += I.obj->hess_qform(M, K); }},
      {"svp_projection", [&] { sink += truncated_svd_project(M - I.obj->gradient(M), I.r)(0, 0); }},
      {"rho_gradient", [&] { sink += P.gradient(F).U()(0, 0); }},
      {"hessian_lambda_min", [&] { sink += hessian_lambda_min(P, F); }},
  };
  std::ostringstream csv;
  csv << "op,repeats,total_seconds,per_call_seconds\n";
  json timings = json::object();
  for (const auto& [name, fn] : ops) {
    const auto start = Clock::now();
    for (int i = 0; i < a.repeats; ++i) fn();
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    csv << name << ',' << a.repeats << ',' << num(secs) << ',' << num(secs / a.repeats) << '\n';
    timings[name] = num(secs / a.repeats);
    ctx.log() << name << ": " << num(secs / a.repeats) << " s/call\n";
  }
  json body;
  body["objective"] = I.label;
  body["repeats"] = std::to_string(a.repeats);
  body["per_call_seconds"] = std::move(timings);
  body["checksum"] = num(sink);
  body["timings_reproducible"] = "false";
  ctx.write("bench.csv", csv.str());
  ctx.write_json("bench_summary.json", "lrll.bench/1", body);
  return 0;
}

bool flag_given(int argc, const char* const* argv, const std::string& flag) {
  for (int i = 1; i < argc; ++i) {
    const std::string s = argv[i];
    if (s == flag || s.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------

SensingSpec parse_sensing_spec(const std::string& text) {
  std::map<std::string, Index> kv;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw InputError("--sensing: expected key=value in '" + part + "'");
    const std::string key = part.substr(0, eq);
    const std::string val = part.substr(eq + 1);
    if (key != "n" && key != "m" && key != "r" && key != "p") {
      throw InputError("--sensing: unknown key '" + key + "'");
    }
    char* end = nullptr;
    const long long x = std::strtoll(val.c_str(), &end, 10);
    if (val.empty() || end != val.c_str() + val.size() || x < 1) {
      throw InputError("--sensing: " + key + " must be a positive integer");
    }
    kv[key] = static_cast<Index>(x);
  }
  for (const char* k : {"n", "r", "p"}) {
    if (!kv.count(k)) throw InputError(std::string("--sensing: missing ") + k);
  }
  SensingSpec s;
  s.n = kv["n"];
  s.m = kv.count("m") ? kv["m"] : s.n;
  s.r = kv["r"];
  s.p = kv["p"];
  if (s.r > std::min(s.n, s.m)) throw InputError("--sensing: r exceeds min(n, m)");
  return s;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + tmp.string());
    f << contents;
    f.flush();
    if (!f) throw InputError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_ensemble(const fs::path& header, const SensingEnsemble& e,
                    std::optional<Index> rank) {
  e.validate();
  fs::path payload = header;
  payload.replace_extension(".csv");
  std::ostringstream csv;
  csv << 'b';
  for (Index k = 0; k < e.n * e.m; ++k) csv << ",a" << k;
  csv << '\n';
  for (Index i = 0; i < e.measurements(); ++i) {
    csv << num(e.b(i));
    const Mat& A = e.A[static_cast<size_t>(i)];
    for (Index k = 0; k < A.size(); ++k) csv << ',' << num(A.data()[k]);
    csv << '\n';
  }
  json j;
  j["schema"] = "lrll.ensemble/1";
  j["n"] = std::to_string(e.n);
  j["m"] = std::to_string(e.m);
  j["p"] = std::to_string(e.measurements());
  j["seed"] = std::to_string(e.seed);
  j["scale"] = num(e.scale);
  if (rank) j["rank"] = std::to_string(*rank);
  if (e.Mstar) j["mstar"] = matrix_json(*e.Mstar);
  j["payload"] = payload.filename().string();
  write_file_atomic(payload, csv.str());
  write_file_atomic(header, j.dump(2) + "\n");
}

SensingEnsemble read_ensemble(const fs::path& header) {
  const json j = read_json_file(header);
  const std::string what = header.string();
  if (!j.contains("schema") || j["schema"] != "lrll.ensemble/1") {
    throw InputError(what + ": not an lrll ensemble header");
  }
  SensingEnsemble e;
  e.n = index_from(field(j, "n", what), what);
  e.m = index_from(field(j, "m", what), what);
  const Index p = index_from(field(j, "p", what), what);
  const std::string seed = field(j, "seed", what).get<std::string>();
  e.seed = std::strtoull(seed.c_str(), nullptr, 10);
  e.scale = scalar_from(field(j, "scale", what), what);
  if (j.contains("mstar")) e.Mstar = matrix_from(j["mstar"], what);
  const fs::path payload =
      header.parent_path() / field(j, "payload", what).get<std::string>();
  std::ifstream in(payload);
  if (!in) throw InputError("cannot open " + payload.string());
  std::string line;
  std::getline(in, line);  // header row
  e.b.resize(p);
  for (Index i = 0; i < p; ++i) {
    if (!std::getline(in, line)) throw InputError(payload.string() + ": too few rows");
    std::stringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    e.b(i) = parse_scalar(cell, payload.string());
    Mat A(e.n, e.m);
    for (Index k = 0; k < A.size(); ++k) {
      if (!std::getline(row, cell, ',')) throw InputError(payload.string() + ": short row");
      A.data()[k] = parse_scalar(cell, payload.string());
    }
    e.A.push_back(std::move(A));
  }
  e.validate();
  return e;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank landscape toolkit: SVP, factorized descent, certification",
               "lrll"};
  app.option_defaults()->always_capture_default();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON configuration; explicit flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_dir = kDefaultOutputDir;
  app.add_option("--seed", seed, "Global seed");
  app.add_option("--threads", threads, "Worker threads (strict-saddle scan)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "Output directory (overrides LRLL_OUTPUT_DIR)");

  SvpArgs svp_a;
  auto* svp_cmd = app.add_subcommand("svp", "Singular value projection");
  add_objective_options(svp_cmd, svp_a.obj);
  svp_cmd->add_option("--manifold", svp_a.manifold, "Projection target")
      ->check(CLI::IsMember({"asym", "sym"}));
  svp_cmd->add_option("--eta", svp_a.eta, "Step size (0: 1/(1 + delta_hat))");
  svp_cmd->add_option("--max-iters", svp_a.max_iters, "Iteration cap");
  svp_cmd->add_option("--tol", svp_a.tol, "Stop when f - f_lb <= tol");
  svp_cmd->add_option("--init", svp_a.init, "Initial matrix")
      ->check(CLI::IsMember({"zero", "special"}));
  svp_cmd->add_option("--rip-samples", svp_a.rip_samples, "RIP estimator samples");
  svp_cmd->add_option("--rip-refine", svp_a.rip_refine, "RIP estimator refinement steps");

  DescentArgs gd_a, pgd_a;
  pgd_a.max_iters = 20000;
  auto* gd_cmd = app.add_subcommand("gd", "Gradient descent on the factorized problem");
  add_descent_options(gd_cmd, gd_a, false);
  auto* pgd_cmd = app.add_subcommand("pgd", "Perturbed gradient descent");
  add_descent_options(pgd_cmd, pgd_a, true);

  CertifyArgs cert_a;
  auto* cert_cmd = app.add_subcommand("certify", "First/second-order certificate at a point");
  add_objective_options(cert_cmd, cert_a.obj);
  cert_cmd->add_option("--point", cert_a.point, "Point to certify")
      ->check(CLI::IsMember({"special", "e2-over-sqrt2", "global", "random"}));
  cert_cmd->add_option("--mu", cert_a.mu, "Balance regularization weight");
  cert_cmd->add_option("--tol-grad", cert_a.tol_grad, "First-order tolerance");
  cert_cmd->add_option("--tol-eig", cert_a.tol_eig, "Curvature tolerance");
  cert_cmd->add_option("--fixed-point-delta", cert_a.fixed_point_delta,
                       "Also test the SVP fixed-point condition at this delta (negative: off)");
  cert_cmd->add_option("--init-scale", cert_a.init_scale, "Scale of --point random");

  WitnessArgs wit_a;
  auto* wit_cmd = app.add_subcommand("witness", "Check or construct a spurious-SOSP witness");
  wit_cmd->add_option("--family", wit_a.family, "Built-in witness")
      ->check(CLI::IsMember({"example4"}));
  wit_cmd->add_option("--witness-file", wit_a.witness_file, "Witness JSON");
  wit_cmd->add_option("--r", wit_a.r, "Rank of the built-in witness");
  wit_cmd->add_option("--delta", wit_a.delta, "Override delta (negative: keep)");
  wit_cmd->add_option("--alpha", wit_a.alpha, "Override alpha (negative: keep)");
  wit_cmd->add_option("--variant", wit_a.variant, "Witness variant")
      ->check(CLI::IsMember({"asym", "sym"}));
  wit_cmd->add_flag("--construct", wit_a.construct, "Build the certifying objective");
  wit_cmd->add_option("--n", wit_a.n, "Rows of the constructed objective (0: 2r)");
  wit_cmd->add_option("--m", wit_a.m, "Columns of the constructed objective (0: n)");

  CounterexampleArgs ce_a;
  auto* ce_cmd = app.add_subcommand("counterexample", "Emit a counterexample objective");
  ce_cmd->add_option("--family", ce_a.family, "Family")
      ->check(CLI::IsMember({"rank1", "rankr", "witness", "dialed"}));
  ce_cmd->add_option("--n", ce_a.n, "Dimension (0: family default)");
  ce_cmd->add_option("--r", ce_a.r, "Rank (rankr, witness)");
  ce_cmd->add_option("--theta", ce_a.theta, "Dial (dialed)");
  ce_cmd->add_flag("--symmetric", ce_a.symmetric, "Symmetric variant");
  ce_cmd->add_flag("--rip", ce_a.rip, "Also estimate the RIP constant");

  RipArgs rip_a;
  auto* rip_cmd = app.add_subcommand("rip", "Empirical RIP (and BDP) lower bounds");
  add_objective_options(rip_cmd, rip_a.obj);
  rip_cmd->add_option("--rank", rip_a.rank, "Rank of the probes (0: 2r)");
  rip_cmd->add_option("--samples", rip_a.samples, "Random probes");
  rip_cmd->add_option("--refine", rip_a.refine, "Refinement steps per probe");
  rip_cmd->add_option("--step", rip_a.step, "Refinement step");
  rip_cmd->add_option("--bdp-samples", rip_a.bdp_samples, "BDP probes (0: skip)");

  ScanArgs scan_a;
  auto* scan_cmd = app.add_subcommand("strict-saddle", "Empirical strict-saddle scan");
  add_objective_options(scan_cmd, scan_a.obj);
  scan_cmd->add_option("--mu", scan_a.mu, "Balance regularization weight");
  scan_cmd->add_option("--alpha", scan_a.alpha, "Distance threshold");
  scan_cmd->add_option("--beta", scan_a.beta, "Gradient threshold");
  scan_cmd->add_option("--gamma", scan_a.gamma, "Curvature threshold");
  scan_cmd->add_option("--points", scan_a.points, "Number of sampled points");
  scan_cmd->add_option("--radius", scan_a.radius, "Sampling ball radius (0: 2|W*|)");
  scan_cmd->add_option("--trajectories", scan_a.trajectories, "GD trajectories to harvest");
  scan_cmd->add_option("--harvest-pct", scan_a.harvest_pct, "Share of points from GD paths");
  scan_cmd->add_option("--gd-step", scan_a.gd_step, "Step of the harvesting GD");
  scan_cmd->add_option("--gd-iters", scan_a.gd_iters, "Iterations of the harvesting GD");
  scan_cmd->add_option("--include-special", scan_a.include_special,
                       "Add the family's distinguished point to the scan");

  LiftArgs lift_a;
  auto* lift_cmd = app.add_subcommand("lift", "Symmetric lift of an asymmetric objective");
  add_objective_options(lift_cmd, lift_a.obj);
  lift_cmd->add_option("--delta", lift_a.delta, "Lift delta (negative: delta_hat)");
  lift_cmd->add_option("--trials", lift_a.trials, "Random identity checks");
  lift_cmd->add_option("--rip-samples", lift_a.rip_samples, "RIP estimator samples");
  lift_cmd->add_option("--rip-refine", lift_a.rip_refine, "RIP estimator refinement steps");

  BenchArgs bench_a;
  auto* bench_cmd = app.add_subcommand("bench", "Time the core kernels");
  add_objective_options(bench_cmd, bench_a.obj);
  bench_cmd->add_option("--repeats", bench_a.repeats, "Calls per kernel")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  Context ctx;
  ctx.seed = seed;
  ctx.threads = threads;
  ctx.subcommand = sub->get_name();
  ctx.out = &out;
  const char* env = std::getenv(kOutputEnv);
  if (!flag_given(argc, argv, "--out") && env != nullptr && *env != '\0') {
    ctx.dir = env;
  } else {
    ctx.dir = out_dir;
  }

  try {
    fs::create_directories(ctx.dir);
    ctx.write("config.json", app.config_to_str(true, false));
    if (sub == svp_cmd) return run_svp(svp_a, ctx);
    if (sub == gd_cmd) return run_descent(gd_a, ctx, false);
    if (sub == pgd_cmd) return run_descent(pgd_a, ctx, true);
    if (sub == cert_cmd) return run_certify(cert_a, ctx);
    if (sub == wit_cmd) return run_witness(wit_a, ctx);
    if (sub == ce_cmd) return run_counterexample(ce_a, ctx);
    if (sub == rip_cmd) return run_rip(rip_a, ctx);
    if (sub == scan_cmd) return run_scan(scan_a, ctx);
    if (sub == lift_cmd) return run_lift(lift_a, ctx);
    return run_bench(bench_a, ctx);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "input error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace lrll::cli
