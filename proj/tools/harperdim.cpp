// harperdim: command-line front end.
//
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include "harperdim/cantor.hpp"
#include "harperdim/contfrac.hpp"
#include "harperdim/harper.hpp"
#include "harperdim/io.hpp"
#include "harperdim/specapprox.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace harperdim;
using io::Json;

constexpr const char* kVersion = "0.1.0";

struct Globals {
  unsigned threads = 1;
  std::string out;
  std::string manifest;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json arguments_of(const CLI::App* app) {
  Json args = Json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->count() == 0 || opt->get_name() == "--help") continue;
    std::string name = opt->get_name(false, true);
    while (!name.empty() && name.front() == '-') name.erase(name.begin());
    const auto& res = opt->results();
    args[name] = res.size() == 1 ? Json(res.front()) : Json(res);
  }
  return args;
}

/// Writes data to --out (or stdout) and the run manifest next to it
/// (or to --manifest, or stderr).
void emit(const Globals& g, const CLI::App* cmd, const std::string& command, const std::string& data,
          const Json& extra = Json::object()) {
  if (g.out.empty())
    std::cout << data;
  else
    io::write_file(g.out, data);
  Json m;
  m["tool"] = "harperdim";
  m["version"] = kVersion;
  m["command"] = command;
  m["arguments"] = arguments_of(cmd);
  m["threads"] = g.threads;
  m["outputs"] = g.out.empty() ? Json::array({"<stdout>"}) : Json::array({g.out});
  for (const auto& [k, v] : extra.items()) m[k] = v;
  m["created"] = utc_now();
  const std::string text = io::dump(m);
  if (!g.manifest.empty())
    io::write_file(g.manifest, text);
  else if (!g.out.empty())
    io::write_file(g.out + ".manifest.json", text);
  else
    std::cerr << text;
}

std::string default_config() {
  const char* env = std::getenv("HARPERDIM_CONFIG");
  return env && *env ? env : "defaults";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral band structures and dimension estimates for the critical almost Mathieu operator"};
  app.set_version_flag("--version", kVersion);
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--out", g.out, "Output file (default: stdout)");
  app.add_option("--manifest", g.manifest, "Manifest file (default: <out>.manifest.json, or stderr)");

  // harper
  auto* harper_cmd = app.add_subcommand("harper", "Band structures at rational frequencies");
  harper_cmd->require_subcommand(1);
  std::int64_t p = 1, q = 1, qmax = 10;
  double lambda = 1;
  std::string format = "csv";
  auto* bands = harper_cmd->add_subcommand("bands", "Bands of the Floquet matrices at p/q");
  bands->add_option("--p", p, "Numerator")->required();
  bands->add_option("--q", q, "Denominator")->required();
  bands->add_option("--lambda", lambda, "Coupling")->capture_default_str();
  bands->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  auto* butterfly = harper_cmd->add_subcommand("butterfly", "Bands for all coprime p/q with q <= qmax");
  butterfly->add_option("--qmax", qmax, "Largest denominator")->required()->check(CLI::Range(1, 2000));
  butterfly->add_option("--lambda", lambda, "Coupling")->capture_default_str();

  // dim
  auto* dim_cmd = app.add_subcommand("dim", "Box-counting dimension estimates");
  dim_cmd->require_subcommand(1);
  std::string alpha;
  std::size_t depth = 40;
  std::int64_t qcap = specapprox::kDefaultQCap;
  std::string floor = "largest";
  std::optional<double> delta_max, delta_min;
  double ratio = 2;
  std::vector<std::int64_t> n_list{10, 15, 20};
  auto add_policy = [&](CLI::App* c) {
    c->add_option("--depth", depth, "Deepest convergent index")->capture_default_str();
    c->add_option("--qcap", qcap, "Largest affordable q")->capture_default_str();
    c->add_option("--floor", floor, "Default finest scale: largest or smallest band length")
        ->check(CLI::IsMember({"largest", "smallest"}))
        ->capture_default_str();
    c->add_option("--delta-max", delta_max, "Coarsest scale");
    c->add_option("--delta-min", delta_min, "Finest scale");
    c->add_option("--ratio", ratio, "Scale ratio")->capture_default_str();
  };
  auto* box = dim_cmd->add_subcommand("box", "Box dimension of the approximant spectrum");
  box->add_option("--alpha", alpha, "Frequency: [a1,...;t1,...] or a decimal in (0,1)")->required();
  add_policy(box);
  auto* wa = dim_cmd->add_subcommand("wa-curve", "Estimates for [n,n,...] next to log 2 / log n");
  wa->add_option("--n", n_list, "Values of n")->delimiter(',')->capture_default_str();
  add_policy(wa);

  // cantor
  auto* cantor_cmd = app.add_subcommand("cantor", "Covering-tree simulator and dimension bounds");
  cantor_cmd->require_subcommand(1);
  std::string config = default_config();
  std::string tree_path;
  std::uint64_t seed = 1;
  std::size_t tree_depth = 3;
  std::string nodes = "auto";
  std::optional<double> fixed_ratio;
  bool no_spread = false, packed = false, strict = false;
  auto* build = cantor_cmd->add_subcommand("build", "Build a covering tree");
  build->add_option("--alpha", alpha, "Frequency")->required();
  build->add_option("--config", config, "Constants file or 'defaults' (env HARPERDIM_CONFIG)")->capture_default_str();
  build->add_option("--depth", tree_depth, "Generations below the roots")->capture_default_str();
  build->add_option("--seed", seed, "Layout seed")->capture_default_str();
  build->add_option("--nodes", nodes, "Store nodes: all, none, or auto (<= 100000 nodes)")
      ->check(CLI::IsMember({"auto", "all", "none"}))
      ->capture_default_str();
  build->add_option("--fixed-ratio", fixed_ratio, "Self-similar layout with this child ratio");
  build->add_flag("--no-spread", no_spread, "Always use the smallest admissible child count");
  build->add_flag("--packed", packed, "Gaps between children at the c1/a floor");

  double profile_C = 100, profile_K = 25;
  std::optional<double> h_override;
  std::size_t max_nodes = 2'000'000;
  auto* check = cantor_cmd->add_subcommand("check", "Validate a covering tree");
  check->add_option("--tree", tree_path, "Tree JSON")->required();
  check->add_option("--C", profile_C, "Constant of the edge-shift and root-gap checks")->capture_default_str();
  check->add_option("--K", profile_K, "Window of the gap and length profile checks")->capture_default_str();
  check->add_option("--shift", h_override, "Override h = 2 pi (alpha - p_m/q_m)");
  check->add_option("--max-nodes", max_nodes, "Node budget")->capture_default_str();

  std::size_t stats_depth = cantor::kDefaultStatsDepth;
  auto* bound = cantor_cmd->add_subcommand("bound", "Dimension lower bounds from quotient statistics");
  bound->add_option("--alpha", alpha, "Frequency")->required();
  bound->add_option("--config", config, "Constants file or 'defaults'")->capture_default_str();
  bound->add_option("--depth", stats_depth, "Depth of the A*, G* estimates")->capture_default_str();
  bound->add_flag("--strict", strict, "Fail when a hypothesis does not hold");

  cantor::ConsistencyOptions copt;
  std::size_t first_gen = 0;
  auto* consistency = cantor_cmd->add_subcommand("consistency", "Local dimensions and box slope against the bound");
  consistency->add_option("--tree", tree_path, "Tree JSON")->required();
  consistency->add_option("--samples", copt.samples, "Sampled points")->capture_default_str();
  consistency->add_option("--seed", copt.seed, "Sampling seed")->capture_default_str();
  consistency->add_option("--per-generation", copt.per_generation, "Radii per generation")->capture_default_str();
  consistency->add_option("--first-generation", first_gen, "First ladder generation (default depth/2)");

  // cf
  auto* cf_cmd = app.add_subcommand("cf", "Continued-fraction utilities");
  cf_cmd->require_subcommand(1);
  std::size_t cf_depth = 20;
  auto* cf_stats = cf_cmd->add_subcommand("stats", "beta, A*, G* estimates");
  cf_stats->add_option("--alpha", alpha, "Frequency")->required();
  cf_stats->add_option("--depth", cf_depth, "Number of quotients")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto policy = [&] {
    specapprox::ScalePolicy pol;
    pol.floor = floor == "smallest" ? specapprox::ScalePolicy::Floor::SmallestBand
                                    : specapprox::ScalePolicy::Floor::LargestBand;
    pol.delta_max = delta_max;
    pol.delta_min = delta_min;
    pol.ratio = ratio;
    return pol;
  };

  try {
    std::ostringstream os;
    if (*bands) {
      const auto bs = harper::band_set(p, q, lambda);
      if (format == "json")
        os << io::dump(io::to_json(bs));
      else
        io::write_bands_csv(os, bs);
      emit(g, bands, "harper bands", os.str());
    } else if (*butterfly) {
      io::write_butterfly_csv(os, harper::butterfly(qmax, lambda, g.threads));
      emit(g, butterfly, "harper butterfly", os.str());
    } else if (*box) {
      const auto cf = io::parse_alpha(alpha, depth + 1);
      const auto fit = specapprox::box_dimension(cf, depth, policy(), qcap);
      Json j = io::to_json(fit);
      j["alpha"] = cf.to_string();
      os << io::dump(j);
      emit(g, box, "dim box", os.str());
    } else if (*wa) {
      io::write_curve_csv(os, specapprox::wilkinson_austin_curve(n_list, depth, policy(), qcap, g.threads));
      emit(g, wa, "dim wa-curve", os.str());
    } else if (*build) {
      const auto cf = io::parse_alpha(alpha);
      const auto k = cantor::load_constants(config);
      cantor::LayoutOptions layout;
      layout.spread = !no_spread;
      layout.fixed_ratio = fixed_ratio;
      layout.packed = packed;
      const auto tree = cantor::build_tree(cf, k, tree_depth, seed, layout);
      Json j;
      if (nodes == "all") {
        j = io::to_json(tree, true);
      } else if (nodes == "auto") {
        try {
          j = io::to_json(tree, true, 100'000);
        } catch (const Error&) {
          j = io::to_json(tree, false);
          std::cerr << "note: tree has more than 100000 nodes; storing generator parameters only\n";
        }
      } else {
        j = io::to_json(tree, false);
      }
      os << io::dump(j);
      emit(g, build, "cantor build", os.str(), {{"seed", seed}});
    } else if (*check) {
      const auto tree = io::tree_from_json(io::parse_json(io::read_file(tree_path)));
      cantor::ValidateOptions vopt;
      vopt.max_nodes = max_nodes;
      const auto rep = cantor::validate_tree(tree, vopt);
      Json j;
      j["constraints"] = io::to_json(rep);
      if (tree.depth() >= 1) {
        cantor::ProfileOptions popt;
        popt.K = profile_K;
        popt.max_nodes = max_nodes;
        j["profile"] = io::to_json(cantor::validate_profile(tree, h_override.value_or(tree.h()), profile_C, popt));
      } else {
        j["profile"] = nullptr;
      }
      os << io::dump(j);
      std::cerr << (rep.all_pass() ? "all covering constraints hold\n" : "covering constraints violated\n");
      emit(g, check, "cantor check", os.str());
    } else if (*bound) {
      const auto cf = io::parse_alpha(alpha);
      const auto k = cantor::load_constants(config);
      const auto s = stats(cf, stats_depth);
      const auto sc = cantor::spectrum_bound_constants(k);
      Json j;
      j["alpha"] = cf.to_string();
      j["constants"] = io::to_json(k);
      j["depth"] = stats_depth;
      j["a_star"] = s.a_star_estimate;
      j["g_star"] = s.g_star_estimate;
      j["tilde_C"] = cantor::tilde_c(k);
      Json cb{{"value", cantor::cantor_bound_formula(s, k)}, {"hypotheses_hold", true}, {"error", nullptr}};
      try {
        cantor::cantor_bound(cf, k, stats_depth);
      } catch (const Error& e) {
        if (strict) throw;
        cb["hypotheses_hold"] = false;
        cb["error"] = e.what();
      }
      Json sb{{"value", cantor::spectrum_bound_formula(s, sc.C_prime)},
              {"C", sc.C},
              {"C_prime", sc.C_prime},
              {"in_class", true},
              {"error", nullptr}};
      try {
        cantor::spectrum_bound(cf, sc, stats_depth);
      } catch (const Error& e) {
        if (strict) throw;
        sb["in_class"] = false;
        sb["error"] = e.what();
      }
      j["cantor_bound"] = cb;
      j["spectrum_bound"] = sb;
      os << io::dump(j);
      emit(g, bound, "cantor bound", os.str());
    } else if (*consistency) {
      const auto tree = io::tree_from_json(io::parse_json(io::read_file(tree_path)));
      if (first_gen > 0) copt.first_generation = first_gen;
      const auto rep = cantor::dimension_consistency(tree, tree.cf(), tree.constants(), copt);
      os << io::dump(io::to_json(rep));
      emit(g, consistency, "cantor consistency", os.str(), {{"seed", copt.seed}});
    } else if (*cf_stats) {
      const auto cf = io::parse_alpha(alpha, cf_depth);
      io::write_stats_csv(os, cf, stats(cf, cf_depth));
      emit(g, cf_stats, "cf stats", os.str());
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed input: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
