#pragma once

// CSV and JSON forms of the module results. Numbers are written with
// shortest round-trip formatting so reruns are byte-identical.

#include "harperdim/cantor.hpp"
#include "harperdim/contfrac.hpp"
#include "harperdim/harper.hpp"
#include "harperdim/specapprox.hpp"

#include <json.hpp>

#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace harperdim::io {

using Json = nlohmann::ordered_json;

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void csv_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << csv_field(fields[i]);
  }
  os << "\r\n";
}

inline std::string num(double v) { return format_double(v); }
inline std::string num(std::int64_t v) { return std::to_string(v); }

// ---- continued fractions -------------------------------------------------

inline Json big_to_json(const BigInt& v) {
  if (v <= std::numeric_limits<std::int64_t>::max()) return v.convert_to<std::int64_t>();
  return v.str();
}

inline BigInt big_from_json(const Json& j) {
  if (j.is_number_integer()) return BigInt(j.get<std::int64_t>());
  if (j.is_string()) return BigInt(j.get<std::string>());
  throw Error("expected an integer or a decimal string");
}

inline Json to_json(const ContinuedFraction& cf) {
  Json j;
  j["prefix"] = Json::array();
  for (const auto& a : cf.prefix()) j["prefix"].push_back(big_to_json(a));
  if (cf.tail()) {
    j["tail"] = Json::array();
    for (const auto& a : *cf.tail()) j["tail"].push_back(big_to_json(a));
  } else {
    j["tail"] = nullptr;
  }
  return j;
}

inline ContinuedFraction cf_from_json(const Json& j) {
  std::vector<BigInt> prefix;
  for (const auto& a : j.at("prefix")) prefix.push_back(big_from_json(a));
  std::optional<std::vector<BigInt>> tail;
  if (j.contains("tail") && !j.at("tail").is_null()) {
    tail.emplace();
    for (const auto& a : j.at("tail")) tail->push_back(big_from_json(a));
  }
  return ContinuedFraction(std::move(prefix), std::move(tail));
}

/// "[a1,...;t1,...]" literal, or a decimal real expanded to max_quotients.
inline ContinuedFraction parse_alpha(const std::string& text, std::size_t max_quotients = 64) {
  if (!text.empty() && text.front() == '[') return ContinuedFraction::parse(text);
  HighReal x;
  try {
    x = HighReal(text);
  } catch (const std::exception&) {
    throw Error("cannot parse frequency '" + text + "'");
  }
  if (!(x > 0 && x < 1)) throw Error("frequency must lie in (0, 1)");
  return expand<HighReal>(x, max_quotients).cf;
}

inline void write_stats_csv(std::ostream& os, const ContinuedFraction& cf, const FrequencyStats& s) {
  csv_row(os, {"alpha", "depth", "beta", "a_star", "g_star"});
  csv_row(os, {cf.to_string(), std::to_string(s.depth), num(s.beta_estimate), num(s.a_star_estimate),
               num(s.g_star_estimate)});
}

// ---- band structures -----------------------------------------------------

inline const std::vector<std::string>& band_header() {
  static const std::vector<std::string> h = {"p", "q", "lambda", "ell", "gamma", "delta"};
  return h;
}

inline void write_band_rows(std::ostream& os, const harper::BandSet& bs) {
  for (const auto& b : bs.bands)
    csv_row(os, {num(bs.p), num(bs.q), num(bs.lambda), std::to_string(b.index), num(b.lower), num(b.upper)});
}

inline void write_bands_csv(std::ostream& os, const harper::BandSet& bs) {
  csv_row(os, band_header());
  write_band_rows(os, bs);
}

/// One row per band, ordered by (q, p, ell).
inline void write_butterfly_csv(std::ostream& os, const std::vector<harper::BandSet>& sets) {
  csv_row(os, band_header());
  for (const auto& bs : sets) write_band_rows(os, bs);
}

inline Json to_json(const harper::BandSet& bs) {
  Json j;
  j["p"] = bs.p;
  j["q"] = bs.q;
  j["lambda"] = bs.lambda;
  j["approximate"] = bs.approximate;
  j["bands"] = Json::array();
  for (const auto& b : bs.bands) j["bands"].push_back({{"ell", b.index}, {"gamma", b.lower}, {"delta", b.upper}});
  return j;
}

// ---- dimension fits -------------------------------------------------------

inline Json to_json(const specapprox::DimensionFit& f) {
  Json j;
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["residual"] = f.residual;
  j["out_of_range"] = f.out_of_range;
  j["q"] = f.q;
  j["depth"] = f.depth;
  j["window"] = {{"delta_min", f.window_min}, {"delta_max", f.window_max}};
  j["ladder"] = Json::array();
  for (std::size_t i = 0; i < f.scales.size(); ++i)
    j["ladder"].push_back({{"delta", f.scales[i]}, {"count", f.counts[i]}});
  return j;
}

inline void write_curve_csv(std::ostream& os, const std::vector<specapprox::CurvePoint>& pts) {
  csv_row(os, {"n", "depth", "q", "slope", "conjectured", "ratio", "residual"});
  for (const auto& p : pts)
    csv_row(os, {num(p.n), std::to_string(p.fit.depth), num(p.fit.q), num(p.fit.slope), num(p.conjectured),
                 num(p.fit.slope / p.conjectured), num(p.fit.residual)});
}

// ---- covering trees -------------------------------------------------------

inline Json to_json(const cantor::HSConstants& k) {
  return {{"m", k.m},   {"m_hat", k.m_hat}, {"M", k.M},   {"C1", k.C1},     {"b1", k.b1},    {"b2", k.b2},
          {"c1", k.c1}, {"d1", k.d1},       {"d2", k.d2}, {"eps0", k.eps0}, {"eps1", k.eps1}};
}

inline cantor::HSConstants constants_from_json(const Json& j) {
  cantor::HSConstants k;
  k.m = j.at("m").get<std::size_t>();
  k.m_hat = j.at("m_hat").get<std::size_t>();
  k.M = j.at("M").get<double>();
  k.C1 = j.at("C1").get<double>();
  k.b1 = j.at("b1").get<double>();
  k.b2 = j.at("b2").get<double>();
  k.c1 = j.at("c1").get<double>();
  k.d1 = j.at("d1").get<double>();
  k.d2 = j.at("d2").get<double>();
  k.eps0 = j.at("eps0").get<double>();
  k.eps1 = j.at("eps1").get<double>();
  k.validate();
  return k;
}

inline Json segment_json(const cantor::Segment& s) { return Json::array({format_real(s.lo), format_real(s.hi)}); }

inline cantor::Segment segment_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw Error("segment must be [lo, hi]");
  auto coord = [](const Json& v) { return v.is_string() ? Coord(v.get<std::string>()) : Coord(v.get<double>()); };
  return {coord(j[0]), coord(j[1])};
}

/// Tree document. Nodes are keyed by word ("1.3.-2.0"); with
/// include_nodes = false the nodes field is null and readers regenerate the
/// tree from the generator parameters.
inline Json to_json(const cantor::CoveringTree& t, bool include_nodes, std::size_t max_nodes = 2'000'000) {
  Json j;
  j["format"] = "harperdim.covering-tree";
  j["version"] = 1;
  j["alpha"] = to_json(t.cf());
  j["constants"] = to_json(t.constants());
  j["depth"] = t.depth();
  j["seed"] = t.seed();
  j["layout"] = {{"spread", t.layout().spread},
                 {"fixed_ratio", t.layout().fixed_ratio ? Json(*t.layout().fixed_ratio) : Json(nullptr)},
                 {"packed", t.layout().packed}};
  j["root_frequency"] = {{"p", t.root_p()}, {"q", t.root_q()}};
  j["h"] = t.h();
  j["roots"] = Json::array();
  for (const auto& r : t.roots()) j["roots"].push_back(segment_json(r));
  if (include_nodes) {
    Json nodes = Json::object();
    for (const auto& [w, s] : t.materialize(max_nodes)) nodes[cantor::to_string(w)] = segment_json(s);
    j["nodes"] = std::move(nodes);
  } else {
    j["nodes"] = nullptr;
  }
  return j;
}

inline cantor::CoveringTree tree_from_json(const Json& j) {
  if (j.value("format", "") != "harperdim.covering-tree") throw Error("not a covering-tree document");
  const ContinuedFraction cf = cf_from_json(j.at("alpha"));
  const cantor::HSConstants k = constants_from_json(j.at("constants"));
  cantor::LayoutOptions layout;
  const Json& l = j.at("layout");
  layout.spread = l.at("spread").get<bool>();
  if (!l.at("fixed_ratio").is_null()) layout.fixed_ratio = l.at("fixed_ratio").get<double>();
  layout.packed = l.at("packed").get<bool>();
  const auto depth = j.at("depth").get<std::size_t>();
  const auto seed = j.at("seed").get<std::uint64_t>();
  if (j.at("nodes").is_null()) return cantor::CoveringTree(cf, k, depth, seed, layout);
  std::map<cantor::Word, cantor::Segment> nodes;
  for (const auto& [key, value] : j.at("nodes").items()) nodes[cantor::parse_word(key)] = segment_from_json(value);
  return cantor::CoveringTree::with_nodes(cf, k, depth, seed, layout, std::move(nodes));
}

inline Json to_json(const cantor::ValidationReport& r) {
  Json j;
  j["all_pass"] = r.all_pass();
  j["nodes_visited"] = r.nodes_visited;
  j["truncated"] = r.truncated;
  j["checks"] = Json::array();
  for (const auto& c : r.checks) {
    Json cj{{"name", c.name}, {"pass", c.pass}, {"skipped", c.skipped}, {"checked", c.checked}};
    cj["margin"] = std::isfinite(c.margin) ? Json(c.margin) : Json(nullptr);
    cj["witness"] = c.witness ? Json(cantor::to_string(*c.witness)) : Json(nullptr);
    cj["detail"] = c.detail;
    j["checks"].push_back(std::move(cj));
  }
  j["notes"] = r.notes;
  return j;
}

inline Json to_json(const cantor::ConsistencyReport& r) {
  Json j;
  j["depth"] = r.depth;
  j["local_dimension_min"] = r.local_dimension_min;
  j["cantor_bound"] = r.cantor_value;
  j["box_slope"] = r.box_slope;
  j["closed_form"] = r.closed_form ? Json(*r.closed_form) : Json(nullptr);
  j["tolerance"] = r.tolerance;
  j["local_ok"] = r.local_ok;
  j["box_ok"] = r.box_ok;
  j["log_r"] = {{"checked", r.log_r_checked}, {"violations", r.log_r_violations}};
  j["flags"] = r.flags;
  return j;
}

inline Json to_json(const cantor::BoundChain& b) {
  return {{"cantor_bound", b.cantor_value}, {"spectrum_bound", b.spectrum_value}, {"a_star", b.a_star},
          {"g_star", b.g_star},       {"b1_below_2", b.b1_below_2},   {"chain_holds", b.chain_holds}};
}

// ---- files ------------------------------------------------------------------

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << content;
  if (!f) throw Error("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed JSON: ") + e.what());
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace harperdim::io
