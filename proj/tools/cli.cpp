#include "lssid/covariance.hpp"
#include "lssid/error.hpp"
#include "lssid/identify.hpp"
#include "lssid/io.hpp"
#include "lssid/realize.hpp"
#include "lssid/simulate.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <string>

using namespace lssid;
using io::Json;
namespace fs = std::filesystem;

namespace {

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::Io: return 3;
    case ErrorCode::DimensionMismatch:
    case ErrorCode::MissingMarkovParameter:
    case ErrorCode::InsufficientData: return 4;
    case ErrorCode::SingularHankel:
    case ErrorCode::SingularMatrix:
    case ErrorCode::NonConvergence:
    case ErrorCode::NotFullRank:
    case ErrorCode::NoSelectionFound:
    case ErrorCode::IllConditionedRegressor:
    case ErrorCode::UndefinedBfr: return 5;
    case ErrorCode::InvalidMode:
    case ErrorCode::InvalidProbability:
    case ErrorCode::InvalidModel:
    case ErrorCode::InvalidArgument: return 2;
  }
  return 2;
}

[[noreturn]] void bad_config(const std::string& key, const std::string& msg) {
  throw Error(ErrorCode::InvalidArgument, "config: '" + key + "' " + msg);
}

struct Flags {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::string estimator;
  std::string selection;
  std::vector<std::string> positional;
};

// The run configuration with the directory that relative paths refer to.
struct Config {
  Json j = Json::object();
  fs::path base = ".";

  fs::path path(const std::string& key) const {
    const Json* v = find(key);
    if (!v) bad_config(key, "is required");
    if (!v->is_string()) bad_config(key, "must be a path string");
    return resolve(v->get<std::string>());
  }
  fs::path resolve(const std::string& p) const {
    const fs::path q(p);
    return q.is_absolute() ? q : base / q;
  }
  const Json* find(const std::string& key) const {
    const Json* cur = &j;
    std::size_t pos = 0;
    while (true) {
      const auto dot = key.find('.', pos);
      const std::string part = key.substr(pos, dot - pos);
      if (!cur->is_object() || !cur->contains(part)) return nullptr;
      cur = &cur->at(part);
      if (dot == std::string::npos) return cur;
      pos = dot + 1;
    }
  }
  template <typename T>
  T get(const std::string& key, T fallback) const {
    const Json* v = find(key);
    if (!v) return fallback;
    try {
      return v->get<T>();
    } catch (const nlohmann::json::exception&) {
      bad_config(key, "has the wrong type");
    }
  }
};

Config load_config(const Flags& f) {
  Config c;
  if (!f.config.empty()) {
    c.j = io::read_json_file(f.config);
    if (!c.j.is_object()) throw Error(ErrorCode::InvalidArgument, f.config + ": top level must be an object");
    c.base = fs::path(f.config).parent_path();
    if (c.base.empty()) c.base = ".";
  }
  return c;
}

SwitchedModel load_model(const Config& c, const std::string& key) {
  const Json* v = c.find(key);
  if (!v) bad_config(key, "is required");
  SwitchedModel m = v->is_string() ? io::model_from_json(io::read_json_file(c.resolve(v->get<std::string>())))
                                   : io::model_from_json(*v);
  m.validate();
  return m;
}

SimConfig sim_config(const Config& c, const Flags& f, Json& eff) {
  SimConfig s;
  s.seed = f.seed ? *f.seed : c.get<std::uint64_t>("simulate.seed", 0);
  s.length = c.get<std::size_t>("simulate.length", 1000);
  s.burn_in = c.get<std::size_t>("simulate.burn_in", 1000);
  const std::string kind = c.get<std::string>("simulate.input.kind", "uniform");
  if (kind == "uniform") {
    s.input.kind = InputDistribution::Kind::Uniform;
  } else if (kind == "gaussian") {
    s.input.kind = InputDistribution::Kind::Gaussian;
  } else {
    bad_config("simulate.input.kind", "must be 'uniform' or 'gaussian'");
  }
  s.input.low = c.get<double>("simulate.input.low", -1.0);
  s.input.high = c.get<double>("simulate.input.high", 1.0);
  eff = {{"seed", s.seed},
         {"length", s.length},
         {"burn_in", s.burn_in},
         {"input", {{"kind", kind}, {"low", s.input.low}, {"high", s.input.high}}}};
  return s;
}

Dataset load_dataset(const Config& c, const std::string& csv_key, const std::string& clean_key) {
  Dataset d = io::read_dataset_csv(c.path(csv_key));
  if (c.find(clean_key)) io::read_noise_free_csv(c.path(clean_key), d);
  return d;
}

int mode_count(const Config& c, const Dataset& d) {
  if (c.find("modes")) return c.get<int>("modes", 0);
  return d.q.empty() ? 1 : *std::max_element(d.q.begin(), d.q.end());
}

struct Selections {
  std::optional<Selection> sel;
  std::optional<Selection> sel_bar;
  std::string source = "search";
};

Selections selections(const Config& c, const Flags& f, int num_modes) {
  Selections out;
  Json spec = "search";
  if (const Json* v = c.find("identify.selection")) spec = *v;
  if (!f.selection.empty()) spec = f.selection;
  if (spec.is_string()) {
    const std::string s = spec.get<std::string>();
    if (s == "search") return out;
    if (s.rfind("file:", 0) != 0) bad_config("identify.selection", "must be 'search', 'file:PATH' or an object");
    // Flag paths are relative to the working directory, config paths to the config.
    const fs::path p = f.selection.empty() ? c.resolve(s.substr(5)) : fs::path(s.substr(5));
    spec = io::read_json_file(p);
    out.source = s;
  } else {
    out.source = "config";
  }
  if (!spec.is_object() || !spec.contains("sel") || !spec.contains("sel_bar")) {
    bad_config("identify.selection", "needs both 'sel' and 'sel_bar'");
  }
  out.sel = io::selection_from_json(spec.at("sel"), num_modes);
  out.sel_bar = io::selection_from_json(spec.at("sel_bar"), num_modes);
  return out;
}

Estimator estimator(const Config& c, const Flags& f) {
  const std::string e = f.estimator.empty() ? c.get<std::string>("identify.estimator", "ls") : f.estimator;
  if (e == "direct") return Estimator::Direct;
  if (e == "ls") return Estimator::LeastSquares;
  bad_config("identify.estimator", "must be 'direct' or 'ls'");
}

GramModel gram(const Config& c) {
  const std::string g = c.get<std::string>("identify.gram", "white_input");
  if (g == "white_input") return GramModel::WhiteInput;
  if (g == "sample") return GramModel::Sample;
  bad_config("identify.gram", "must be 'white_input' or 'sample'");
}

RealizationOptions realization_options(const Config& c) {
  RealizationOptions r;
  r.fixed_point.tol = c.get<double>("identify.fixed_point.tol", 1e-10);
  r.fixed_point.max_iter = c.get<int>("identify.fixed_point.max_iter", 5000);
  r.rank_tol = c.get<double>("identify.rank_tol", kRankTolerance);
  r.q_guard = c.get<double>("identify.q_guard", 1e-10);
  return r;
}

std::optional<Vector> probabilities(const Config& c) {
  const Json* v = c.find("identify.p");
  if (!v || (v->is_string() && v->get<std::string>() == "empirical")) return std::nullopt;
  return io::vector_from_json(*v, "identify.p");
}

// Everything identify() needs, plus its JSON echo with defaults filled in.
IdentConfig ident_config(const Config& c, const Flags& f, int num_modes, Json& eff, std::string& sel_source) {
  IdentConfig cfg;
  cfg.n_x = c.get<int>("identify.n_x", 0);
  cfg.n_bar = c.get<int>("identify.n_bar", cfg.n_x);
  const Selections s = selections(c, f, num_modes);
  cfg.sel = s.sel;
  cfg.sel_bar = s.sel_bar;
  sel_source = s.source;
  cfg.estimator = estimator(c, f);
  cfg.gram = gram(c);
  cfg.p = probabilities(c);
  cfg.realization = realization_options(c);
  cfg.search.max_word_length = c.get<std::size_t>("identify.search.max_word_length", 2);
  cfg.search.budget = c.get<std::size_t>("identify.search.budget", 1000000);
  cfg.search.rank_tol = cfg.realization.rank_tol;
  cfg.validate();
  eff = {{"n_x", cfg.n_x},
         {"n_bar", cfg.n_bar},
         {"estimator", cfg.estimator == Estimator::Direct ? "direct" : "ls"},
         {"gram", cfg.gram == GramModel::Sample ? "sample" : "white_input"},
         {"p", cfg.p ? io::vector_to_json(*cfg.p) : Json("empirical")},
         {"selection", s.source},
         {"fixed_point", {{"tol", cfg.realization.fixed_point.tol}, {"max_iter", cfg.realization.fixed_point.max_iter}}},
         {"rank_tol", cfg.realization.rank_tol},
         {"q_guard", cfg.realization.q_guard},
         {"search", {{"max_word_length", cfg.search.max_word_length}, {"budget", cfg.search.budget}}}};
  return cfg;
}

Json selections_json(const Selection& sel, const Selection& sel_bar, int num_modes) {
  return {{"sel", io::selection_to_json(sel, num_modes)}, {"sel_bar", io::selection_to_json(sel_bar, num_modes)}};
}

void flatten(const Json& j, const std::string& prefix, std::string& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else if (j.is_number_float()) {
    out += prefix + "," + io::format_double(j.get<double>()) + "\n";
  } else if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      s = q + "\"";
    }
    out += prefix + "," + s + "\n";
  } else {
    out += prefix + "," + j.dump() + "\n";
  }
}

void write_report(const Config& c, const fs::path& out, const Json& report) {
  const std::string format = c.get<std::string>("report_format", "json");
  if (format == "json") {
    io::write_json_file(out / "report.json", report);
  } else if (format == "csv") {
    std::string text = "key,value\n";
    flatten(report, "", text);
    io::write_text_file(out / "report.csv", text);
  } else {
    bad_config("report_format", "must be 'json' or 'csv'");
  }
}

Json validation_json(const ValidationReport& r) {
  return {{"bfr", r.bfr}, {"skipped", r.skipped}, {"whiteness", r.whiteness}};
}

std::string model_hash(const SwitchedModel& m) { return io::fnv1a_hex(io::model_to_json(m).dump()); }

// --- commands ---------------------------------------------------------------

int cmd_simulate(const Config& c, const Flags& f, const fs::path& out) {
  const SwitchedModel m = load_model(c, "model");
  Json sim_eff;
  const SimConfig s = sim_config(c, f, sim_eff);
  const Dataset d = simulate(m, s);
  io::write_dataset_csv(out / "data.csv", d);
  io::write_noise_free_csv(out / "noise_free.csv", d);
  Json manifest = {{"command", "simulate"},
                   {"seed", s.seed},
                   {"model_hash", model_hash(m)},
                   {"rows", d.length()},
                   {"files", {{"dataset", "data.csv"}, {"noise_free", "noise_free.csv"}}},
                   {"config", {{"simulate", sim_eff}, {"model", io::model_to_json(m)}}}};
  io::write_json_file(out / "manifest.json", manifest);
  std::cerr << "wrote " << d.length() << " samples to " << (out / "data.csv").string() << "\n";
  return 0;
}

int cmd_estimate(const Config& c, const Flags& f, const fs::path& out) {
  const Dataset d = load_dataset(c, "data.dataset", "data.noise_free");
  const int D = mode_count(c, d);
  d.validate(D);
  const std::optional<Vector> p_cfg = probabilities(c);
  const Vector p = p_cfg ? *p_cfg : empirical_mode_probabilities(d.q, D);
  const Selections s = selections(c, f, D);
  std::vector<Word> words;
  if (s.sel) {
    std::set<Word> u;
    for (const Word& w : required_words(*s.sel, D)) u.insert(w);
    for (const Word& w : required_words(*s.sel_bar, D)) u.insert(w);
    words.assign(u.begin(), u.end());
  } else {
    words = words_up_to(D, c.get<std::size_t>("estimate.max_word_length", 5));
  }
  const Estimator est = estimator(c, f);
  Json results;
  CovarianceTable table;
  if (est == Estimator::Direct) {
    table = empirical_covariances(d, p, words);
  } else {
    LeastSquaresOptions o;
    o.gram = gram(c);
    LeastSquaresResult ls = least_squares_covariances(d, p, words, words, o);
    results["identity_residual"] = ls.identity_residual;
    table = std::move(ls.table);
  }
  io::write_json_file(out / "covariances.json", io::covariance_table_to_json(table));
  results["words"] = words.size();
  results["samples"] = table.samples;
  Json degenerate = Json::array();
  for (const Word& w : table.degenerate) degenerate.push_back(w.to_string(D));
  results["degenerate"] = degenerate;
  const Json report = {{"command", "estimate"},
                       {"config",
                        {{"data", c.j.value("data", Json::object())},
                         {"modes", D},
                         {"p", io::vector_to_json(p)},
                         {"estimator", est == Estimator::Direct ? "direct" : "ls"},
                         {"selection", s.source}}},
                       {"results", results}};
  write_report(c, out, report);
  return 0;
}

int cmd_realize(const Config& c, const Flags& f, const fs::path& out) {
  const CovarianceTable table = io::covariance_table_from_json(io::read_json_file(c.path("covariances")));
  const Selections s = selections(c, f, table.num_modes);
  if (!s.sel) bad_config("identify.selection", "must name explicit selections for realize");
  const RealizationOptions opts = realization_options(c);
  const RealizationResult r = covariance_realization(table, *s.sel, *s.sel_bar, opts);
  io::write_json_file(out / "model.json", io::model_to_json(r.model.sys()));
  const Json report = {{"command", "realize"},
                       {"config",
                        {{"covariances", c.j.at("covariances")},
                         {"selection", selections_json(*s.sel, *s.sel_bar, table.num_modes)},
                         {"fixed_point", {{"tol", opts.fixed_point.tol}, {"max_iter", opts.fixed_point.max_iter}}},
                         {"rank_tol", opts.rank_tol}}},
                       {"model_hash", model_hash(r.model.sys())},
                       {"diagnostics", io::diagnostics_to_json(r.diagnostics)}};
  write_report(c, out, report);
  return 0;
}

// Validation data: an explicit file, a trailing split of the training data,
// or the training data itself.
Dataset validation_set(const Config& c, Dataset& train) {
  if (c.find("data.validation")) return load_dataset(c, "data.validation", "data.validation_noise_free");
  const double split = c.get<double>("data.validation_split", 0.0);
  if (split < 0.0 || split >= 1.0) bad_config("data.validation_split", "must be in [0, 1)");
  if (split == 0.0) return train;
  const auto nv = static_cast<Eigen::Index>(split * static_cast<double>(train.length()));
  const Dataset val = train.slice(train.length() - nv, nv);
  train = train.slice(0, train.length() - nv);
  return val;
}

int cmd_identify(const Config& c, const Flags& f, const fs::path& out) {
  Dataset d = load_dataset(c, "data.dataset", "data.noise_free");
  const Dataset val = validation_set(c, d);
  const int D = mode_count(c, d);
  Json ident_eff;
  std::string source;
  const IdentConfig cfg = ident_config(c, f, D, ident_eff, source);
  const auto t0 = std::chrono::steady_clock::now();
  const IdentResult r = identify(d, D, cfg);
  const std::size_t skip = c.get<std::size_t>("validate.skip", r.sel.max_word_length());
  const ValidationReport v = validate_model(r.model, val, skip);
  std::cerr << "identified in "
            << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s, BFR " << v.bfr
            << "%\n";
  io::write_json_file(out / "model.json", io::model_to_json(r.model.sys()));
  io::write_series_csv(out / "prediction.csv", v.prediction, val.t0);
  Json results = validation_json(v);
  results["identity_residual"] = r.identity_residual;
  results["samples"] = r.table.samples;
  const Json report = {
      {"command", "identify"},
      {"config",
       {{"data", c.j.value("data", Json::object())}, {"modes", D}, {"identify", ident_eff}, {"validate", {{"skip", skip}}}}},
      {"model_hash", model_hash(r.model.sys())},
      {"selection", selections_json(r.sel, r.sel_bar, D)},
      {"validation", results},
      {"diagnostics", io::diagnostics_to_json(r.diagnostics)}};
  write_report(c, out, report);
  return 0;
}

int cmd_validate(const Config& c, const Flags&, const fs::path& out) {
  const SwitchedModel m = load_model(c, "model");
  const Dataset d = load_dataset(c, "data.dataset", "data.noise_free");
  const std::size_t skip = c.get<std::size_t>("validate.skip", 0);
  const ValidationReport v = validate_model(InnovationModel(m), d, skip);
  io::write_series_csv(out / "prediction.csv", v.prediction, d.t0);
  const Json report = {{"command", "validate"},
                       {"config", {{"data", c.j.value("data", Json::object())}, {"validate", {{"skip", skip}}}}},
                       {"model_hash", model_hash(m)},
                       {"validation", validation_json(v)}};
  write_report(c, out, report);
  return 0;
}

int cmd_compare(const Config& c, const Flags& f, const fs::path& out) {
  Config cc = c;
  if (f.positional.size() == 2) {
    cc.j["model_a"] = fs::absolute(f.positional[0]).string();
    cc.j["model_b"] = fs::absolute(f.positional[1]).string();
  }
  const SwitchedModel a = load_model(cc, "model_a"), b = load_model(cc, "model_b");
  const double tol = cc.get<double>("tol", 1e-8);
  const IsomorphismResult iso = find_isomorphism(a, b, tol);
  const Json residuals = {{"A", iso.residuals.A}, {"B", iso.residuals.B}, {"K", iso.residuals.K},
                          {"C", iso.residuals.C}, {"D", iso.residuals.D}};
  const Json report = {{"command", "compare"},
                       {"config", {{"model_a", cc.j.at("model_a")}, {"model_b", cc.j.at("model_b")}, {"tol", tol}}},
                       {"isomorphic", iso.isomorphic()},
                       {"T", iso.T ? io::matrix_to_json(*iso.T) : Json()},
                       {"residuals", residuals},
                       {"max_residual", iso.residuals.max()},
                       {"markov_distance", markov_distance(InnovationModel(a), InnovationModel(b))},
                       {"diagnostic", iso.diagnostic}};
  write_report(cc, out, report);
  std::cout << (iso.isomorphic() ? "isomorphic" : "not isomorphic") << " (max residual "
            << io::format_double(iso.residuals.max()) << ")\n";
  return 0;
}

int cmd_transform(const Config& c, const Flags&, const fs::path& out) {
  const SwitchedModel m = load_model(c, "model");
  const Json* t = c.find("T");
  if (!t) bad_config("T", "is required");
  const Matrix T = io::matrix_from_json(*t, "T");
  const SwitchedModel mt = m.transformed(T);
  io::write_json_file(out / "model.json", io::model_to_json(mt));
  return 0;
}

int cmd_consistency(const Config& c, const Flags& f, const fs::path& out) {
  const SwitchedModel m = load_model(c, "model");
  Json sim_eff, ident_eff;
  std::string source;
  ConsistencyConfig cfg;
  cfg.sim = sim_config(c, f, sim_eff);
  cfg.ident = ident_config(c, f, m.num_modes(), ident_eff, source);
  cfg.align_tol = c.get<double>("align_tol", 1e-3);
  const auto Ns = c.get<std::vector<std::size_t>>("Ns", {1000, 10000, 100000});
  const auto seeds = c.get<std::vector<std::uint64_t>>("seeds", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  const ConsistencyTable table = consistency_experiment(InnovationModel(m), Ns, seeds, cfg);
  std::string csv = "N,seed,error,aligned,failure\n";
  for (const auto& row : table.rows) {
    std::string failure = row.failure;
    std::replace(failure.begin(), failure.end(), ',', ';');
    std::replace(failure.begin(), failure.end(), '\n', ' ');
    csv += std::to_string(row.N) + "," + std::to_string(row.seed) + "," +
           (std::isfinite(row.error) ? io::format_double(row.error) : std::string("inf")) + "," +
           (row.aligned ? "1" : "0") + "," + failure + "\n";
  }
  io::write_text_file(out / "consistency.csv", csv);
  Json medians = Json::array();
  for (const auto& [N, med] : table.medians) {
    medians.push_back({{"N", N}, {"median_error", std::isfinite(med) ? Json(med) : Json("inf")}});
  }
  sim_eff.erase("seed");
  sim_eff.erase("length");
  const Json report = {{"command", "consistency"},
                       {"config",
                        {{"Ns", Ns},
                         {"seeds", seeds},
                         {"simulate", sim_eff},
                         {"identify", ident_eff},
                         {"align_tol", cfg.align_tol}}},
                       {"model_hash", model_hash(m)},
                       {"medians", medians}};
  write_report(c, out, report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Identification of stationary linear switched systems from input-output data"};
  app.require_subcommand(1);
  Flags flags;
  std::uint64_t seed = 0;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Config&, const Flags&, const fs::path&);
  };
  const Command commands[] = {
      {"simulate", "simulate a model and write a CSV dataset", cmd_simulate},
      {"estimate", "estimate covariances from a dataset", cmd_estimate},
      {"realize", "realize an innovation model from a covariance table", cmd_realize},
      {"identify", "identify a model from a dataset and validate it", cmd_identify},
      {"validate", "run a model's predictor on a dataset", cmd_validate},
      {"compare", "test two models for isomorphism", cmd_compare},
      {"transform", "apply a state transformation to a model", cmd_transform},
      {"consistency", "run the consistency experiment", cmd_consistency},
  };
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", flags.config, "run configuration (JSON)");
    sub->add_option("--out", flags.out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "random seed, overrides the config");
    sub->add_option("--estimator", flags.estimator, "covariance estimator")->check(CLI::IsMember({"direct", "ls"}));
    sub->add_option("--selection", flags.selection, "'search' or 'file:PATH'");
    if (std::string(cmd.name) == "compare") sub->add_option("models", flags.positional, "two model files");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  CLI::App* used = app.get_subcommands().front();
  if (used->count("--seed")) flags.seed = seed;
  for (const auto& cmd : commands) {
    if (used->get_name() != cmd.name) continue;
    try {
      const Config c = load_config(flags);
      const fs::path out(flags.out);
      std::error_code ec;
      fs::create_directories(out, ec);
      if (ec) throw Error(ErrorCode::Io, "cannot create output directory '" + out.string() + "': " + ec.message());
      return cmd.run(c, flags, out);
    } catch (const Error& e) {
      std::cerr << "lssid " << cmd.name << ": " << e.what() << " (" << to_string(e.code()) << ")\n";
      return exit_code(e.code());
    } catch (const std::exception& e) {
      std::cerr << "lssid " << cmd.name << ": " << e.what() << "\n";
      return 2;
    }
  }
  return 2;
}
