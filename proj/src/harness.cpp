#include "igdist/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "igdist/approx.hpp"
#include "igdist/bpsim.hpp"
#include "igdist/error.hpp"
#include "igdist/graphgen.hpp"
#include "igdist/parallel.hpp"
#include "igdist/random.hpp"

namespace igdist {

namespace {

namespace fs = std::filesystem;

std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out.precision(10);
  out << v;
  return out.str();
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

void check_keys(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.contains(key)) throw invalid_input(where + ": unknown key \"" + key + "\"");
  }
}

std::int64_t get_int(const nlohmann::json& obj, const std::string& key, std::int64_t lo, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw invalid_input(where + ": \"" + key + "\" must be an integer");
  const auto x = v.get<std::int64_t>();
  if (x < lo) throw invalid_input(where + ": \"" + key + "\" must be at least " + std::to_string(lo));
  return x;
}

std::vector<double> get_reals(const nlohmann::json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_array()) throw invalid_input(where + ": \"" + key + "\" must be an array");
  std::vector<double> out;
  for (const auto& v : obj.at(key)) {
    if (!v.is_number()) throw invalid_input(where + ": \"" + key + "\" entries must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::int64_t> get_counts(const nlohmann::json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_array()) throw invalid_input(where + ": \"" + key + "\" must be an array");
  std::vector<std::int64_t> out;
  for (const auto& v : obj.at(key)) {
    if (!v.is_number_integer()) throw invalid_input(where + ": \"" + key + "\" entries must be integers");
    out.push_back(v.get<std::int64_t>());
  }
  return out;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Collects output files so a failed run can take them back.
class OutputSink {
 public:
  explicit OutputSink(fs::path dir) : dir_(std::move(dir)) {
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_);
      created_ = true;
    } else if (!fs::is_directory(dir_)) {
      throw invalid_input("output path is not a directory: " + dir_.string());
    }
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    written_.push_back(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw capacity_error("could not write " + path.string());
    files_.push_back({name, hex64(fnv1a64(content)), content.size()});
  }

  void rollback() noexcept {
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
    if (created_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }

  const std::vector<ManifestFile>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  bool created_ = false;
  std::vector<fs::path> written_;
  std::vector<ManifestFile> files_;
};

std::string join_sizes(const std::vector<std::int64_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ";" : "") + std::to_string(v[i]);
  return out;
}

std::string scheme_field(const std::vector<std::vector<std::int64_t>>& per_class) {
  std::string out;
  for (std::size_t l = 0; l < per_class.size(); ++l) out += (l ? "|" : "") + join_sizes(per_class[l]);
  return out;
}

std::string coincidence_row(const SamplingScheme& s, const PoissonReport& r) {
  std::vector<std::vector<std::int64_t>> w, ws;
  for (std::size_t l = 0; l < s.w.size(); ++l) {
    w.push_back({s.w[l]});
    ws.push_back({s.wstar[l]});
  }
  return scheme_field(w) + ',' + scheme_field(s.zA) + ',' + scheme_field(s.zB) + ',' + scheme_field(ws) + ',' +
         poisson_report_csv_row(r);
}

struct Context {
  const ExperimentConfig& cfg;
  OutputSink& sink;
  RunManifest& manifest;
  std::ostringstream summary;

  std::uint64_t seed(std::string_view tag) {
    const auto s = stage_seed(cfg, tag);
    manifest.stage_seeds[std::string(tag)] = s;
    return s;
  }
};

std::string distance_summary(const DistanceLaw& law) {
  std::ostringstream out;
  out << "replicates " << law.total << ", P[D = inf] = " << num(law.infinite_fraction());
  return out.str();
}

void run_spectral(Context& ctx) {
  const auto s = derived_scalars(ctx.cfg.model);
  const auto report = identity_report(s);
  auto doc = spectral_to_json(s);
  doc["identities_pass"] = report.all_pass();
  doc["max_identity_residual"] = report.max_residual();
  const auto c = c0_c1_estimate(s, 20);
  doc["c0_hat"] = c.c0_hat;
  doc["c1_hat"] = c.c1_hat;
  ctx.sink.write("spectral.json", doc.dump(2) + "\n");
  std::ostringstream csv;
  csv << "name,residual,tolerance,pass\n";
  for (const auto& check : report.checks)
    csv << check.name << ',' << num(check.residual) << ',' << num(check.tolerance) << ','
        << (check.pass ? "true" : "false") << '\n';
  ctx.sink.write("identities.csv", csv.str());
  ctx.summary << "tau = " << num(s.tau) << ", kappa = " << num(s.kappa) << ", i0 = " << s.i0
              << ", phi = " << num(s.phi_n) << ", identities " << (report.all_pass() ? "pass" : "FAIL");
}

DistanceLaw run_graph_law(Context& ctx) {
  const auto law =
      empirical_distance_law(ctx.cfg.model, ctx.cfg.k1, ctx.cfg.k2, ctx.cfg.reps.graph, ctx.seed("graph"), ctx.cfg.workers);
  ctx.sink.write("distance_law.csv", law.to_csv());
  return law;
}

void run_graph_dist(Context& ctx) { ctx.summary << distance_summary(run_graph_law(ctx)); }

WPools run_pools(Context& ctx, const SpectralData& s) {
  const int horizon = ctx.cfg.horizon.value_or(default_horizon(s));
  auto pools = build_pools(ctx.cfg.model, s, ctx.cfg.k1, ctx.cfg.k2, horizon, ctx.cfg.reps.pool, ctx.seed("pools"),
                           ctx.cfg.workers);
  std::ostringstream csv;
  csv << "pool,w\n";
  for (const double w : pools.pool_A) csv << "A," << num(w) << '\n';
  for (const double w : pools.pool_B) csv << "B," << num(w) << '\n';
  ctx.sink.write("w_pools.csv", csv.str());
  return pools;
}

Eigen::VectorXd run_survival(Context& ctx) {
  const auto surv = survival_prob(ctx.cfg.model);
  std::ostringstream sv;
  sv << "type,survival\n";
  for (Eigen::Index k = 0; k < surv.size(); ++k) sv << k + 1 << ',' << num(surv(k)) << '\n';
  ctx.sink.write("survival.csv", sv.str());
  return surv;
}

void run_bp(Context& ctx) {
  const auto& p = ctx.cfg.model;
  const auto surv = run_survival(ctx);

  const int G = ctx.cfg.generations;
  const auto reps = static_cast<std::size_t>(ctx.cfg.reps.bp);
  std::vector<Trajectory> runs(reps);
  const auto base = ctx.seed("bp");
  const std::vector<int> start{ctx.cfg.k1};
  parallel_for(reps, ctx.cfg.workers, [&](std::size_t r) { runs[r] = simulate(p, start, G, derive_seed(base, "bp", r)); });
  std::ostringstream means;
  means << "generation,side,type,mean,std_error\n";
  auto emit = [&](int g, char side, std::size_t type, auto&& count) {
    double sum = 0, sum2 = 0;
    for (const auto& t : runs) {
      const double x = static_cast<double>(count(t));
      sum += x;
      sum2 += x * x;
    }
    const double n = static_cast<double>(runs.size());
    const double mean = sum / n;
    const double var = n > 1 ? std::max(sum2 / n - mean * mean, 0.0) * n / (n - 1) : 0.0;
    means << g << ',' << side << ',' << type + 1 << ',' << num(mean) << ',' << num(std::sqrt(var / n)) << '\n';
  };
  for (int g = 0; g <= G; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    if (g > 0)
      for (std::size_t j = 0; j < static_cast<std::size_t>(p.J()); ++j)
        emit(g, 'Y', j, [&](const Trajectory& t) { return t.Y[gi - 1][j]; });
    for (std::size_t k = 0; k < static_cast<std::size_t>(p.K()); ++k)
      emit(g, 'X', k, [&](const Trajectory& t) { return t.X[gi][k]; });
  }
  ctx.sink.write("bp_means.csv", means.str());

  ctx.summary << "survival " << num(surv(ctx.cfg.k1)) << " (type " << ctx.cfg.k1 + 1 << ")";
  if (surv(ctx.cfg.k1) > 0 && surv(ctx.cfg.k2) > 0) {
    const auto s = derived_scalars(p);
    const auto pools = run_pools(ctx, s);
    double mean = 0;
    for (const double w : pools.pool_A) mean += w;
    ctx.summary << ", W pool mean " << num(mean / static_cast<double>(pools.pool_A.size())) << " at horizon "
                << pools.horizon;
  }
}

void run_coincidence(Context& ctx) {
  std::ostringstream csv;
  csv << "w,zA,zB,wstar," << poisson_report_csv_header();
  std::int64_t rows = 0, failures = 0;
  const auto base = ctx.seed("coincidence");
  auto add = [&](const SamplingScheme& s) {
    const auto r = poisson_check(s, ctx.cfg.reps.mc, derive_seed(base, "scheme", static_cast<std::uint64_t>(rows)),
                                 ctx.cfg.workers);
    csv << coincidence_row(s, r);
    ++rows;
    if (!r.pass) ++failures;
  };
  if (ctx.cfg.scheme) {
    add(*ctx.cfg.scheme);
  } else {
    // Default sweep: one class, up to two draws per side of sizes 0..3.
    std::vector<std::vector<std::int64_t>> lists{{}};
    for (std::int64_t a = 0; a <= 3; ++a) {
      lists.push_back({a});
      for (std::int64_t b = 0; b <= 3; ++b) lists.push_back({a, b});
    }
    for (std::int64_t w = 2; w <= 8; ++w)
      for (const auto& a : lists)
        for (const auto& b : lists)
          for (std::int64_t ws = 0; ws <= 1; ++ws) {
            const auto fits = [&](const auto& v) { return std::all_of(v.begin(), v.end(), [&](auto z) { return z <= w; }); };
            if (fits(a) && fits(b)) add({{w}, {a}, {b}, {ws}});
          }
  }
  ctx.sink.write("coincidence.csv", csv.str());
  ctx.summary << rows << " schemes, " << failures << " bound failures";
}

void run_approx(Context& ctx) {
  const auto s = derived_scalars(ctx.cfg.model);
  const auto pools = run_pools(ctx, s);
  const auto law = approx_law(s, pools, ctx.cfg.u_lo, ctx.cfg.u_hi);
  ctx.sink.write("approx.csv", law.to_csv());
  ctx.summary << "i0 = " << s.i0 << ", defect = " << num(law.defect);
}

void run_compare(Context& ctx) {
  const auto law = run_graph_law(ctx);
  const auto surv = run_survival(ctx);
  const double sa = surv(ctx.cfg.k1), sb = surv(ctx.cfg.k2);
  std::optional<SpectralData> s;
  if (sa * sb > 0) {
    try {
      s = derived_scalars(ctx.cfg.model);
    } catch (const Error& e) {
      if (e.kind() != Error::Kind::Numerical) throw;
    }
  }
  ComparisonTable table;
  if (!s) {
    table = compare_defect_only(law, sa, sb);
  } else {
    const auto pools = run_pools(ctx, *s);
    ctx.sink.write("approx.csv", approx_law(*s, pools, ctx.cfg.u_lo, ctx.cfg.u_hi).to_csv());
    CompareOptions opts;
    opts.u_lo = ctx.cfg.u_lo;
    opts.u_hi = ctx.cfg.u_hi;
    opts.c25 = ctx.cfg.c25;
    table = compare(law, *s, pools, opts);
  }
  ctx.sink.write("comparison.csv", table.to_csv());
  ctx.summary << distance_summary(law) << "; max |diff| = " << num(table.max_abs_diff)
              << ", defect diff = " << num(table.defect_diff);
}

void run_rank1(Context& ctx) {
  if (!ctx.cfg.rank1) throw invalid_input("rank1 subcommand requires a \"rank1\" model block");
  const auto built = rank1_build(*ctx.cfg.rank1, ctx.cfg.model.n, ctx.cfg.model.m);
  const auto pf = perron(mean_matrices(built.params).MX);
  const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
  double max_rel = rel(built.tau, pf.tau);
  for (int k = 0; k < built.params.K(); ++k) {
    max_rel = std::max(max_rel, rel(built.mu(k), pf.left(k)));
    max_rel = std::max(max_rel, rel(built.nu(k), pf.right(k)));
  }
  const auto db = degree_bound(built.params);
  nlohmann::json doc;
  doc["tau_closed_form"] = built.tau;
  doc["tau_numeric"] = pf.tau;
  doc["mu_closed_form"] = std::vector<double>(built.mu.data(), built.mu.data() + built.mu.size());
  doc["mu_numeric"] = std::vector<double>(pf.left.data(), pf.left.data() + pf.left.size());
  doc["nu_closed_form"] = std::vector<double>(built.nu.data(), built.nu.data() + built.nu.size());
  doc["nu_numeric"] = std::vector<double>(pf.right.data(), pf.right.data() + pf.right.size());
  doc["max_relative_difference"] = max_rel;
  doc["degree_bound"] = {{"bound", db.bound}, {"tau", db.tau}, {"slack", db.slack}};
  ctx.sink.write("rank1.json", doc.dump(2) + "\n");
  ctx.summary << "tau closed form " << num(built.tau) << ", numeric " << num(pf.tau) << ", max rel diff "
              << num(max_rel) << ", degree-bound slack " << num(db.slack);
}

void run_ghosts(Context& ctx) {
  const auto s = derived_scalars(ctx.cfg.model);
  const auto rows = ghost_scaling(ctx.cfg.model, s, ctx.cfg.k1, ctx.cfg.k2, ctx.cfg.depth, ctx.cfg.reps.ghosts,
                                  ctx.seed("ghosts"), ctx.cfg.workers);
  ctx.sink.write("ghosts.csv", ghost_table_csv(rows));
  ctx.summary << "depth " << ctx.cfg.depth;
  try {
    ctx.summary << ", log-slope of ratio_X over i >= 2: " << num(log_slope(rows, 2, ctx.cfg.depth));
  } catch (const Error&) {
    ctx.summary << ", too few positive ratios for a slope";
  }
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  const std::string where = "config";
  if (!doc.is_object()) throw invalid_input("config: expected a JSON object");
  check_keys(doc,
             {"model", "rank1", "k1", "k2", "reps", "horizon", "generations", "depth", "seed", "parallelism", "workers",
              "output_dir", "c25", "u_window", "scheme"},
             where);
  ExperimentConfig cfg;
  cfg.source = doc;
  if (!doc.contains("seed")) throw invalid_input("seed required");
  if (!doc.at("seed").is_number_integer() || (doc.at("seed").is_number_integer() && !doc.at("seed").is_number_unsigned() &&
                                               doc.at("seed").get<std::int64_t>() < 0))
    throw invalid_input("config: \"seed\" must be a nonnegative integer");
  cfg.seed = doc.at("seed").get<std::uint64_t>();

  if (doc.contains("model") == doc.contains("rank1")) throw invalid_input("exactly one model block");
  if (doc.contains("model")) {
    cfg.model = model_from_json(doc.at("model"));
  } else {
    const auto& r = doc.at("rank1");
    if (!r.is_object()) throw invalid_input("rank1: expected a JSON object");
    check_keys(r, {"alpha", "beta", "n", "m"}, "rank1");
    Rank1Params params;
    params.alpha = to_eigen(get_reals(r, "alpha", "rank1"));
    params.beta = to_eigen(get_reals(r, "beta", "rank1"));
    const auto n = get_counts(r, "n", "rank1");
    const auto m = get_counts(r, "m", "rank1");
    if (n.size() != static_cast<std::size_t>(params.alpha.size()) || m.size() != static_cast<std::size_t>(params.beta.size()))
      throw invalid_input("rank1: alpha must match n and beta must match m in length");
    cfg.model = rank1_build(params, n, m).params;
    cfg.rank1 = params;
  }

  const int K = cfg.model.K();
  for (const auto* key : {"k1", "k2"}) {
    if (!doc.contains(key)) continue;
    const auto k = get_int(doc, key, 1, where);
    if (k > K) throw invalid_input(std::string("config: \"") + key + "\" = " + std::to_string(k) + " exceeds K = " + std::to_string(K));
    (std::string(key) == "k1" ? cfg.k1 : cfg.k2) = static_cast<int>(k - 1);
  }
  if (cfg.k1 == cfg.k2 && cfg.model.n[static_cast<std::size_t>(cfg.k1)] < 2)
    throw invalid_input("insufficient vertices of requested type");

  if (doc.contains("reps")) {
    const auto& r = doc.at("reps");
    if (!r.is_object()) throw invalid_input("reps: expected a JSON object");
    check_keys(r, {"graph", "pool", "bp", "ghosts", "mc"}, "reps");
    if (r.contains("graph")) cfg.reps.graph = get_int(r, "graph", 1, "reps");
    if (r.contains("pool")) cfg.reps.pool = get_int(r, "pool", 1, "reps");
    if (r.contains("bp")) cfg.reps.bp = get_int(r, "bp", 1, "reps");
    if (r.contains("ghosts")) cfg.reps.ghosts = get_int(r, "ghosts", 1, "reps");
    if (r.contains("mc")) cfg.reps.mc = get_int(r, "mc", 1, "reps");
  }
  if (doc.contains("horizon")) cfg.horizon = static_cast<int>(get_int(doc, "horizon", 1, where));
  if (doc.contains("generations")) cfg.generations = static_cast<int>(get_int(doc, "generations", 0, where));
  if (doc.contains("depth")) cfg.depth = static_cast<int>(get_int(doc, "depth", 1, where));
  // "workers" is accepted as an alias of "parallelism".
  if (doc.contains("parallelism") && doc.contains("workers"))
    throw invalid_input("config: give either \"parallelism\" or \"workers\", not both");
  for (const auto* key : {"parallelism", "workers"})
    if (doc.contains(key)) cfg.workers = static_cast<int>(get_int(doc, key, 1, where));
  if (doc.contains("output_dir")) {
    if (!doc.at("output_dir").is_string()) throw invalid_input("config: \"output_dir\" must be a string");
    cfg.output_dir = doc.at("output_dir").get<std::string>();
  }
  if (doc.contains("c25")) {
    if (!doc.at("c25").is_number() || !(doc.at("c25").get<double>() > 0))
      throw invalid_input("config: \"c25\" must be a positive number");
    cfg.c25 = doc.at("c25").get<double>();
  }
  if (doc.contains("u_window")) {
    const auto& u = doc.at("u_window");
    if (!u.is_array() || u.size() != 2 || !u[0].is_number_integer() || !u[1].is_number_integer() ||
        u[0].get<int>() > u[1].get<int>())
      throw invalid_input("config: \"u_window\" must be [lo, hi] integers with lo <= hi");
    cfg.u_lo = u[0].get<int>();
    cfg.u_hi = u[1].get<int>();
  }
  if (doc.contains("scheme")) cfg.scheme = scheme_from_json(doc.at("scheme"));
  return cfg;
}

ExperimentConfig parse_config(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw invalid_input("config parse error at line " + std::to_string(line) + ": " + e.what());
  }
  return config_from_json(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw invalid_input("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json files_json = nlohmann::json::array();
  for (const auto& f : files) files_json.push_back({{"name", f.name}, {"fnv1a64", f.fnv1a64}, {"bytes", f.bytes}});
  return {{"subcommand", subcommand}, {"config_hash", config_hash}, {"version", version},
          {"seed", seed},             {"workers", workers},         {"stage_seeds", stage_seeds},
          {"started", started},       {"finished", finished},       {"files", files_json}};
}

std::uint64_t stage_seed(const ExperimentConfig& cfg, std::string_view tag) { return derive_seed(cfg.seed, tag, 0); }

std::string config_hash(const ExperimentConfig& cfg) { return hex64(fnv1a64(cfg.source.dump())); }

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"spectral", "graph-dist", "bp",      "coincidence",
                                              "approx",   "compare",    "rank1",   "ghosts"};
  return names;
}

RunResult run_subcommand(const std::string& subcommand, const ExperimentConfig& cfg) {
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), subcommand) == names.end())
    throw invalid_input("unknown subcommand: " + subcommand);

  RunManifest manifest;
  manifest.subcommand = subcommand;
  manifest.config_hash = config_hash(cfg);
  manifest.seed = cfg.seed;
  manifest.workers = cfg.workers;
  manifest.started = utc_now();

  OutputSink sink(cfg.output_dir);
  Context ctx{cfg, sink, manifest, {}};
  try {
    if (subcommand == "spectral") run_spectral(ctx);
    else if (subcommand == "graph-dist") run_graph_dist(ctx);
    else if (subcommand == "bp") run_bp(ctx);
    else if (subcommand == "coincidence") run_coincidence(ctx);
    else if (subcommand == "approx") run_approx(ctx);
    else if (subcommand == "compare") run_compare(ctx);
    else if (subcommand == "rank1") run_rank1(ctx);
    else run_ghosts(ctx);

    manifest.files = sink.files();
    manifest.finished = utc_now();
    sink.write("manifest.json", manifest.to_json().dump(2) + "\n");
  } catch (...) {
    sink.rollback();
    throw;
  }
  return {manifest, ctx.summary.str()};
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return err->kind() == Error::Kind::InvalidInput ? 2 : 3;
  return 3;
}

}  // namespace igdist
