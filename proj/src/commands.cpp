#include "planehash/commands.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "planehash/active_learning.hpp"
#include "planehash/dataset_io.hpp"
#include "planehash/hash_index.hpp"
#include "planehash/learn_hash.hpp"
#include "planehash/oracle_eval.hpp"
#include "planehash/rand_hash.hpp"

namespace planehash::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::map<std::string, json, std::less<>>& defaults() {
  static const std::map<std::string, json, std::less<>> d = {
      {"gen",
       {{"kind", "gaussian_blobs"}, {"n", 1000}, {"d", 16}, {"classes", 2}, {"seed", 0}, {"normalize", false},
        {"separation", 4.0}, {"margin", 0.1}, {"format", "csv"}}},
      {"ingest", {{"input", ""}, {"normalize", false}, {"format", "binary"}, {"seed", 0}}},
      {"bench-collision",
       {{"families", {"AH", "EH", "BH"}}, {"alphas", json::array()}, {"grid", 5}, {"trials", 100000}, {"seed", 0},
        {"dim", 4}}},
      {"rho-curve",
       {{"families", {"AH", "EH", "BH"}}, {"epsilon", 3.0}, {"r_min", 0.01}, {"r_max", 1.0}, {"r_steps", 100},
        {"n", 1000000}, {"c", 2.0}, {"seed", 0}}},
      {"train-lbh",
       {{"dataset", ""}, {"k", 16}, {"num_samples", 500}, {"threshold_fraction", 0.05}, {"seed", 0}, {"scale", 1.0},
        {"max_iterations", 500}, {"initial_step", 1.0}, {"normalize", false}, {"augment", false}}},
      {"build-index",
       {{"dataset", ""}, {"scheme", "BH"}, {"bits", 16}, {"tables", 1}, {"seed", 0}, {"family", ""},
        {"num_samples", 500}, {"threshold_fraction", 0.05}, {"normalize", false}, {"augment", false}}},
      {"query",
       {{"dataset", ""}, {"index", ""}, {"queries", ""}, {"num_queries", 10}, {"radius", 3}, {"top_n", 10},
        {"seed", 0}, {"normalize", false}, {"augment", false}}},
      {"eval",
       {{"dataset", ""}, {"schemes", {"BH", "LBH"}}, {"bits", 16}, {"radii", {3}}, {"num_queries", 50},
        {"query_source", "svm"}, {"labeled_per_class", 5}, {"top_n", 10}, {"seed", 0}, {"normalize", true},
        {"num_samples", 500}, {"threshold_fraction", 0.05}}},
      {"run-al",
       {{"dataset", ""}, {"test_dataset", ""}, {"selector", "exhaustive"}, {"bits", 16}, {"radius", 3}, {"tables", 1},
        {"iterations", 300}, {"initial_per_class", 5}, {"seed", 0}, {"lambda", 1e-4}, {"epochs", 20},
        {"lbh_samples", 500}, {"threshold_fraction", 0.05}, {"normalize", false}}},
  };
  return d;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

Dataset load_dataset(const json& c) {
  const std::string path = c.at("dataset").get<std::string>();
  if (path.empty()) throw InvalidConfiguration("'dataset' is required");
  Dataset d = ingest(path);
  if (c.value("normalize", false)) normalize_columns(d.points);
  return d;
}

Matrix working_points(const Dataset& d, const json& c) {
  return c.value("augment", false) ? augment_with_bias(d.points) : d.points;
}

std::string out_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// --- commands ---------------------------------------------------------------

std::vector<std::string> cmd_gen(const json& c, const std::string& out) {
  SyntheticConfig s;
  s.kind = parse_synthetic_kind(c.at("kind").get<std::string>());
  s.n = c.at("n").get<Eigen::Index>();
  s.d = c.at("d").get<Eigen::Index>();
  s.classes = c.at("classes").get<int>();
  s.seed = c.at("seed").get<std::uint64_t>();
  s.normalize = c.at("normalize").get<bool>();
  s.separation = c.at("separation").get<double>();
  s.margin = c.at("margin").get<double>();
  const std::string format = c.at("format").get<std::string>();
  if (format != "csv" && format != "binary") throw InvalidConfiguration("format must be csv or binary");
  const std::string path = out_path(out, format == "csv" ? "dataset.csv" : "dataset.bin");
  write_dataset(gen_synthetic(s), path);
  return {path};
}

std::vector<std::string> cmd_ingest(const json& c, const std::string& out) {
  const std::string input = c.at("input").get<std::string>();
  if (input.empty()) throw InvalidConfiguration("'input' is required");
  Dataset d = ingest(input);
  if (c.at("normalize").get<bool>()) normalize_columns(d.points);
  const std::string format = c.at("format").get<std::string>();
  if (format != "csv" && format != "binary") throw InvalidConfiguration("format must be csv or binary");
  const std::string path = out_path(out, format == "csv" ? "dataset.csv" : "dataset.bin");
  write_dataset(d, path);
  const std::string summary = out_path(out, "summary.csv");
  write_file_atomic(summary, "n,d,labels\n" + std::to_string(d.size()) + "," + std::to_string(d.dim()) + "," +
                                 (d.has_labels() ? "1" : "0") + "\n");
  return {path, summary};
}

std::vector<std::string> cmd_bench_collision(const json& c, const std::string& out) {
  std::vector<double> alphas = c.at("alphas").get<std::vector<double>>();
  if (alphas.empty()) {
    const int grid = c.at("grid").get<int>();
    if (grid < 2) throw InvalidConfiguration("grid must be at least 2");
    for (int i = 0; i < grid; ++i) alphas.push_back(std::numbers::pi / 2 * double(i) / double(grid - 1));
  }
  const auto trials = c.at("trials").get<std::uint64_t>();
  const auto seed = c.at("seed").get<std::uint64_t>();
  const auto dim = c.at("dim").get<Eigen::Index>();
  std::string csv = "family,alpha,r,analytic_p,empirical_p,trials,abs_error\n";
  std::uint64_t stream = 0;
  for (const auto& name : c.at("families")) {
    const Family f = parse_family(name.get<std::string>());
    for (double a : alphas) {
      const double analytic = collision_prob(f, a);
      const double empirical = estimate_collision(f, a, trials, derive_seed(seed, stream++), dim);
      csv += std::string(to_string(f)) + "," + fmt(a) + "," + fmt(a * a) + "," + fmt(analytic) + "," + fmt(empirical) +
             "," + std::to_string(trials) + "," + fmt(std::abs(empirical - analytic)) + "\n";
    }
  }
  const std::string path = out_path(out, "collision.csv");
  write_file_atomic(path, csv);
  return {path};
}

std::vector<std::string> cmd_rho_curve(const json& c, const std::string& out) {
  const double eps = c.at("epsilon").get<double>();
  const double r_min = c.at("r_min").get<double>();
  const double r_max = c.at("r_max").get<double>();
  const int steps = c.at("r_steps").get<int>();
  const auto n = c.at("n").get<std::uint64_t>();
  const double cc = c.at("c").get<double>();
  if (steps < 1 || !(r_max >= r_min)) throw InvalidConfiguration("bad r grid");
  std::string csv = "family,r,epsilon,p1,p2,rho,k_bits,num_tables,valid\n";
  for (const auto& name : c.at("families")) {
    const Family f = parse_family(name.get<std::string>());
    for (int i = 0; i < steps; ++i) {
      const double r = steps == 1 ? r_min : r_min + (r_max - r_min) * double(i) / double(steps - 1);
      csv += std::string(to_string(f)) + "," + fmt(r) + "," + fmt(eps) + ",";
      try {
        const LSHParams p = lsh_params(f, r, eps, n, cc);
        csv += fmt(p.p1) + "," + fmt(p.p2) + "," + fmt(p.rho) + "," + std::to_string(p.k_bits) + "," +
               std::to_string(p.num_tables) + ",1\n";
      } catch (const InvalidParameters&) {
        csv += "nan,nan,nan,0,0,0\n";
      }
    }
  }
  const std::string path = out_path(out, "rho.csv");
  write_file_atomic(path, csv);
  return {path};
}

LearnConfig learn_config(const json& c, int k, std::uint64_t seed) {
  LearnConfig lc;
  lc.k = k;
  lc.num_samples = c.at("num_samples").get<int>();
  lc.threshold_fraction = c.at("threshold_fraction").get<double>();
  lc.seed = seed;
  lc.optimizer.scale = c.value("scale", 1.0);
  lc.optimizer.max_iterations = c.value("max_iterations", 500);
  lc.optimizer.initial_step = c.value("initial_step", 1.0);
  return lc;
}

std::vector<std::string> cmd_train_lbh(const json& c, const std::string& out) {
  const Dataset d = load_dataset(c);
  const Matrix pts = working_points(d, c);
  LearnConfig lc = learn_config(c, c.at("k").get<int>(), c.at("seed").get<std::uint64_t>());
  lc.num_samples = std::min<int>(lc.num_samples, static_cast<int>(pts.cols()));
  const LearnResult r = train_lbh(pts, lc);
  const std::string fam = out_path(out, "lbh.json");
  write_file_atomic(fam, family_to_json(r.family));
  std::string csv = "bit,iterations,surrogate_final,quantized_final\n";
  for (int j = 0; j < r.family.k(); ++j)
    csv += std::to_string(j) + "," + std::to_string(r.family.meta.iterations[j]) + "," +
           fmt(r.family.meta.surrogate_final[j]) + "," + fmt(r.family.meta.quantized_final[j]) + "\n";
  csv += "# objective_before=" + fmt(r.family.meta.objective_before) +
         " objective_after=" + fmt(r.family.meta.objective_after) + "\n";
  const std::string trace = out_path(out, "train.csv");
  write_file_atomic(trace, csv);
  return {fam, trace};
}

std::vector<std::string> cmd_build_index(const json& c, const std::string& out) {
  const Dataset d = load_dataset(c);
  const Matrix pts = working_points(d, c);
  const Scheme scheme = parse_scheme(c.at("scheme").get<std::string>());
  const int bits = c.at("bits").get<int>();
  const int tables = c.at("tables").get<int>();
  const auto seed = c.at("seed").get<std::uint64_t>();
  if (tables < 1) throw InvalidConfiguration("tables must be at least 1");
  std::vector<HashFamily> families;
  const std::string family_path = c.at("family").get<std::string>();
  for (int t = 0; t < tables; ++t) {
    const std::uint64_t ts = derive_seed(seed, static_cast<std::uint64_t>(t));
    if (scheme != Scheme::LBH) {
      families.push_back(HashFamily::random(scheme, pts.rows(), bits, ts));
    } else if (!family_path.empty()) {
      if (tables != 1) throw InvalidConfiguration("a family file provides exactly one table");
      families.push_back(HashFamily::lbh(family_from_json(read_file(family_path))));
    } else {
      LearnConfig lc = learn_config(c, bits, ts);
      lc.num_samples = std::min<int>(lc.num_samples, static_cast<int>(pts.cols()));
      families.push_back(HashFamily::lbh(train_lbh(pts, lc).family));
    }
  }
  const HammingIndex index = build_index(pts, std::move(families));
  const std::string path = out_path(out, "index.phx");
  index.save(path);
  std::string csv = "table,buckets,largest_bucket\n";
  for (std::size_t t = 0; t < index.num_tables(); ++t) {
    std::size_t largest = 0;
    for (const auto& kv : index.buckets(t)) largest = std::max(largest, kv.second.size());
    csv += std::to_string(t) + "," + std::to_string(index.buckets(t).size()) + "," + std::to_string(largest) + "\n";
  }
  const std::string stats = out_path(out, "index_stats.csv");
  write_file_atomic(stats, csv);
  return {path, stats};
}

std::vector<Vector> random_queries(Eigen::Index dim, int count, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x9E));
  std::vector<Vector> qs;
  for (int i = 0; i < count; ++i) qs.push_back(gaussian_vector(rng, dim));
  return qs;
}

std::vector<std::string> cmd_query(const json& c, const std::string& out) {
  const Dataset d = load_dataset(c);
  const Matrix pts = working_points(d, c);
  const std::string index_path = c.at("index").get<std::string>();
  if (index_path.empty()) throw InvalidConfiguration("'index' is required");
  const HammingIndex index = HammingIndex::load(index_path);
  if (index.dim() != pts.rows() || index.size() != pts.cols()) throw InvalidInput("index does not match dataset");
  const int radius = c.at("radius").get<int>();
  const auto top_n = c.at("top_n").get<std::size_t>();
  const auto seed = c.at("seed").get<std::uint64_t>();

  std::vector<Vector> queries;
  const std::string qpath = c.at("queries").get<std::string>();
  if (!qpath.empty()) {
    const Dataset q = ingest(qpath);
    if (q.dim() != pts.rows()) throw InvalidInput("query dimension does not match index");
    for (Eigen::Index i = 0; i < q.size(); ++i) queries.push_back(q.points.col(i));
  } else {
    queries = random_queries(pts.rows(), c.at("num_queries").get<int>(), seed);
  }

  std::string csv = "query,best_id,best_margin,best_alpha,candidates,probes,fallback,oracle_id,oracle_margin\n";
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const QueryResult r = query_hyperplane(index, HyperplaneQuery(queries[i]), radius, pts);
    const GroundTruth truth = brute_force_search(queries[i], pts, 1);
    csv += std::to_string(i) + ",";
    if (r.best_id)
      csv += std::to_string(*r.best_id) + "," + fmt(r.best_margin) + "," +
             fmt(angle_between(pts.col(*r.best_id), queries[i]).alpha);
    else
      csv += ",,";
    csv += "," + std::to_string(r.candidate_ids.size()) + "," + std::to_string(r.buckets_probed) + "," +
           (r.fallback_used ? "1" : "0") + "," + std::to_string(truth.front().id) + "," + fmt(truth.front().margin) + "\n";
  }
  const std::string path = out_path(out, "query.csv");
  write_file_atomic(path, csv);

  const EvalReport rep = evaluate_scheme(index, queries, pts, radius, top_n, seed);
  const std::string eval = out_path(out, "eval.csv");
  write_file_atomic(eval, std::string(kEvalCsvHeader) + "\n" + report_csv_rows(to_string(index.scheme()), rep));
  return {path, eval};
}

std::vector<std::string> cmd_eval(const json& c, const std::string& out) {
  Dataset d = load_dataset(c);
  const Matrix pts = augment_with_bias(d.points);
  const int bits = c.at("bits").get<int>();
  const auto seed = c.at("seed").get<std::uint64_t>();
  const int nq = c.at("num_queries").get<int>();
  const auto top_n = c.at("top_n").get<std::size_t>();
  const std::string source = c.at("query_source").get<std::string>();
  std::vector<Vector> queries;
  if (source == "svm") {
    queries = svm_hyperplane_queries(d, nq, c.at("labeled_per_class").get<int>(), SvmConfig{}, seed);
  } else if (source == "random") {
    queries = random_queries(pts.rows(), nq, seed);
  } else {
    throw InvalidConfiguration("query_source must be svm or random");
  }

  std::string csv = std::string(kEvalCsvHeader) + "\n";
  for (const auto& name : c.at("schemes")) {
    const Scheme scheme = parse_scheme(name.get<std::string>());
    const std::uint64_t fs_seed = derive_seed(seed, 0xF00D);
    HashFamily family = [&] {
      if (scheme == Scheme::LBH) {
        LearnConfig lc = learn_config(c, bits, fs_seed);
        lc.num_samples = std::min<int>(lc.num_samples, static_cast<int>(pts.cols()));
        return HashFamily::lbh(train_lbh(pts, lc).family);
      }
      const int b = scheme == Scheme::AH ? std::min(64, 2 * bits) : bits;
      return HashFamily::random(scheme, pts.rows(), b, fs_seed);
    }();
    const HammingIndex index = build_index(pts, std::move(family));
    for (const auto& radius : c.at("radii"))
      csv += report_csv_rows(to_string(scheme), evaluate_scheme(index, queries, pts, radius.get<int>(), top_n, seed));
  }
  csv += "random," + std::string("0,mean_angle,") + fmt(random_point_mean_angle(queries, pts, seed)) + "\n";
  const std::string path = out_path(out, "eval.csv");
  write_file_atomic(path, csv);
  return {path};
}

std::vector<std::string> cmd_run_al(const json& c, const std::string& out) {
  const Dataset pool = load_dataset(c);
  std::optional<Dataset> test;
  if (const auto tp = c.at("test_dataset").get<std::string>(); !tp.empty()) {
    test = ingest(tp);
    if (c.at("normalize").get<bool>()) normalize_columns(test->points);
  }
  ALConfig al;
  al.selector.kind = parse_selector(c.at("selector").get<std::string>());
  al.selector.bits = c.at("bits").get<int>();
  al.selector.radius = c.at("radius").get<int>();
  al.selector.tables = c.at("tables").get<int>();
  al.selector.seed = derive_seed(c.at("seed").get<std::uint64_t>(), 0x5E1);
  al.selector.lbh_samples = c.at("lbh_samples").get<int>();
  al.selector.threshold_fraction = c.at("threshold_fraction").get<double>();
  al.iterations = c.at("iterations").get<int>();
  al.initial_per_class = c.at("initial_per_class").get<int>();
  al.seed = c.at("seed").get<std::uint64_t>();
  al.svm.lambda = c.at("lambda").get<double>();
  al.svm.epochs = c.at("epochs").get<int>();
  const ALHistory h = run_al_experiment(pool, al, test ? &*test : nullptr);
  const std::string path = out_path(out, "history.csv");
  write_file_atomic(path, history_csv(h));
  return {path};
}

using Handler = std::vector<std::string> (*)(const json&, const std::string&);

const std::map<std::string, Handler, std::less<>>& handlers() {
  static const std::map<std::string, Handler, std::less<>> h = {
      {"gen", cmd_gen},           {"ingest", cmd_ingest}, {"bench-collision", cmd_bench_collision},
      {"rho-curve", cmd_rho_curve}, {"train-lbh", cmd_train_lbh}, {"build-index", cmd_build_index},
      {"query", cmd_query},       {"eval", cmd_eval},     {"run-al", cmd_run_al},
  };
  return h;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"gen",         "ingest", "bench-collision", "rho-curve", "train-lbh",
                                                 "build-index", "query",  "eval",            "run-al"};
  return names;
}

Config default_config(std::string_view command) {
  const auto it = defaults().find(command);
  if (it == defaults().end()) throw InvalidConfiguration("unknown command '" + std::string(command) + "'");
  return it->second;
}

Config resolve_config(std::string_view command, const Config& user) {
  Config resolved = default_config(command);
  const Config* src = &user;
  if (user.is_object() && user.contains("command") && user.contains("config")) {
    if (user.at("command").get<std::string>() != command)
      throw InvalidConfiguration("manifest was written by '" + user.at("command").get<std::string>() + "'");
    src = &user.at("config");
  }
  if (src->is_null()) return resolved;
  if (!src->is_object()) throw InvalidConfiguration("config must be a JSON object");
  for (const auto& [key, value] : src->items()) {
    if (!resolved.contains(key))
      throw InvalidConfiguration("unknown key '" + key + "' for command '" + std::string(command) + "'");
    const auto& def = resolved[key];
    const bool ok = def.type() == value.type() || (def.is_number() && value.is_number()) ||
                    (def.is_array() && value.is_array());
    if (!ok) throw InvalidConfiguration("key '" + key + "' has the wrong type");
    // Keep floating defaults floating so manifests stay type-stable.
    resolved[key] = def.is_number_float() && value.is_number() ? json(value.get<double>()) : value;
  }
  return resolved;
}

Config load_config(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw InvalidConfiguration("cannot parse config " + path + ": " + e.what());
  }
}

std::vector<std::string> run_command(std::string_view command, const Config& config, const std::string& out_dir) {
  const auto it = handlers().find(command);
  if (it == handlers().end()) throw InvalidConfiguration("unknown command '" + std::string(command) + "'");
  const Config resolved = resolve_config(command, config);
  fs::create_directories(out_dir);
  std::vector<std::string> outputs;
  try {
    outputs = it->second(resolved, out_dir);
  } catch (const json::exception& e) {
    throw InvalidConfiguration(std::string(command) + ": " + e.what());
  }
  json manifest;
  manifest["tool"] = "planehash";
  manifest["version"] = kVersion;
  manifest["command"] = command;
  manifest["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION);
  manifest["config"] = resolved;
  auto& files = manifest["outputs"] = json::array();
  for (const auto& p : outputs) files.push_back(fs::path(p).filename().string());
  const std::string mpath = out_path(out_dir, "manifest.json");
  write_file_atomic(mpath, manifest.dump(2) + "\n");
  outputs.push_back(mpath);
  return outputs;
}

}  // namespace planehash::cli
