#include "switchsynth/io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "switchsynth/errors.hpp"

namespace switchsynth {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ConfigurationError(field + ": " + msg);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}
std::string at_index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) fail(path.empty() ? "config" : path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) fail(join(path, key), "unknown field");
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

const json& need(const json& obj, const char* key, const std::string& path) {
  const json* j = find(obj, key);
  if (!j) fail(join(path, key), "required field is missing");
  return *j;
}

double number(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  fail(path, "expected a number");
}

double finite(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

long integer(const json& j, const std::string& path) {
  if (j.is_number_integer()) return j.get<long>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::floor(v) == v && std::abs(v) < 1e15) return static_cast<long>(v);
  }
  fail(path, "expected an integer");
}

bool boolean(const json& j, const std::string& path) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<long>() != 0;
  fail(path, "expected a boolean");
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

Eigen::VectorXd vector(const json& j, const std::string& path, Eigen::Index expected = -1) {
  array(j, path);
  if (expected >= 0 && static_cast<Eigen::Index>(j.size()) != expected) {
    fail(path, "expected " + std::to_string(expected) + " entries, got " + std::to_string(j.size()));
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = finite(j[i], at_index(path, i));
  return v;
}

Eigen::MatrixXd matrix(const json& j, const std::string& path, Eigen::Index rows, Eigen::Index cols) {
  array(j, path);
  if (static_cast<Eigen::Index>(j.size()) != rows) {
    fail(path, "expected " + std::to_string(rows) + " rows, got " + std::to_string(j.size()));
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    m.row(r) = vector(j[static_cast<std::size_t>(r)], at_index(path, static_cast<std::size_t>(r)), cols).transpose();
  }
  return m;
}

Box box(const json& j, const std::string& path, std::size_t expected) {
  array(j, path);
  if (j.size() != expected) {
    fail(path, "expected " + std::to_string(expected) + " intervals, got " + std::to_string(j.size()));
  }
  std::vector<Interval> iv;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = at_index(path, i);
    const Eigen::VectorXd v = vector(j[i], p, 2);
    if (!(v[0] <= v[1])) fail(p, "lower bound exceeds upper bound");
    iv.push_back({v[0], v[1]});
  }
  return Box(std::move(iv));
}

json num(double v) {
  if (std::isfinite(v)) return v;
  if (v > 0) return "inf";
  if (v < 0) return "-inf";
  return "nan";
}

json to_json(const Box& b) {
  json out = json::array();
  for (const auto& i : b.intervals()) out.push_back({num(i.lo), num(i.hi)});
  return out;
}

json to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(num(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v[i]));
  return out;
}

std::string extension_name(const ExtensionSpec& e) {
  return e.mode == ExtensionMode::lower_only ? "lower" : "symmetric";
}

ExtensionSpec parse_extension(const json& j, const std::string& path) {
  const std::string s = string(j, path);
  if (s == "lower" || s == "lower_only") return {ExtensionMode::lower_only};
  if (s == "symmetric") return {ExtensionMode::symmetric};
  fail(path, "expected 'lower' or 'symmetric'");
}

// ---------------------------------------------------------------- config

ModeConstraints parse_constraints(const json* j, const std::string& path) {
  ModeConstraints out;
  if (!j) return out;
  allow_keys(*j, path, {"global_max_active", "per_component_max_active"});
  if (const json* g = find(*j, "global_max_active")) {
    const long v = integer(*g, join(path, "global_max_active"));
    if (v < 0) fail(join(path, "global_max_active"), "must be >= 0");
    out.global_max_active = static_cast<int>(v);
  }
  if (const json* p = find(*j, "per_component_max_active")) {
    const std::string pp = join(path, "per_component_max_active");
    array(*p, pp);
    if (p->size() != 2) fail(pp, "expected two entries (null for no limit)");
    for (std::size_t c = 0; c < 2; ++c) {
      if ((*p)[c].is_null()) continue;
      const long v = integer((*p)[c], at_index(pp, c));
      if (v < 0) fail(at_index(pp, c), "must be >= 0");
      out.per_component_max_active[c] = static_cast<int>(v);
    }
  }
  return out;
}

std::array<std::vector<std::string>, 2> parse_mode_labels(const json& j, const std::string& path,
                                                          const std::array<int, 2>& split) {
  array(j, path);
  std::array<std::vector<std::string>, 2> labels;
  const std::size_t expected = split[1] == 0 ? 1 : 2;
  if (j.size() != expected && j.size() != 2) {
    fail(path, "expected one entry per component");
  }
  for (std::size_t c = 0; c < j.size(); ++c) {
    const std::string p = at_index(path, c);
    const json& e = j[c];
    allow_keys(e, p, {"actuators", "labels"});
    const json* act = find(e, "actuators");
    const json* lab = find(e, "labels");
    if ((act != nullptr) == (lab != nullptr)) fail(p, "give exactly one of 'actuators' or 'labels'");
    if (act) {
      const long n = integer(*act, join(p, "actuators"));
      if (n < 0 || n > 20) fail(join(p, "actuators"), "must be in [0, 20]");
      labels[c] = ModeSet::binary_labels(static_cast<int>(n));
    } else {
      array(*lab, join(p, "labels"));
      for (std::size_t i = 0; i < lab->size(); ++i) {
        labels[c].push_back(string((*lab)[i], at_index(join(p, "labels"), i)));
      }
    }
  }
  if (j.size() == 1) labels[1] = {""};
  return labels;
}

// Number of actuators behind each component's labels, for additive specs.
std::array<std::size_t, 2> actuator_counts(const ModeSet& modes, const std::string& path) {
  std::array<std::size_t, 2> out{};
  for (Component c : {Component::first, Component::second}) {
    const auto labels = modes.labels(c);
    out[index_of(c)] = labels.front().size();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i].size() != out[index_of(c)] || modes.active_count(c, static_cast<int>(i)) < 0) {
        fail(path, "actuator terms need binary mode labels of a common length per component");
      }
    }
  }
  return out;
}

struct MapTerms {
  std::vector<Eigen::MatrixXd> mats;
  std::vector<Eigen::VectorXd> offsets;
};

// Per-joint-mode (matrix, offset) pairs from `base` + `actuators`, or from an
// explicit `modes` list. `mkey`/`ckey` name the matrix and offset fields.
MapTerms parse_mode_maps(const json& j, const std::string& path, const ModeSet& modes,
                         Eigen::Index n, const char* mkey, const char* ckey) {
  MapTerms out;
  const std::size_t joints = modes.joint_size();
  const json* base = find(j, "base");
  const json* act = find(j, "actuators");
  const json* list = find(j, "modes");
  if (list && (base || act)) fail(path, "'modes' cannot be combined with 'base'/'actuators'");
  if (!list && !base) fail(join(path, "base"), "required field is missing (or give 'modes')");

  if (list) {
    const std::string lp = join(path, "modes");
    array(*list, lp);
    out.mats.assign(joints, Eigen::MatrixXd());
    out.offsets.assign(joints, Eigen::VectorXd());
    std::vector<char> seen(joints, 0);
    for (std::size_t i = 0; i < list->size(); ++i) {
      const std::string p = at_index(lp, i);
      const json& e = (*list)[i];
      allow_keys(e, p, {"mode", mkey, ckey});
      const std::string label = string(need(e, "mode", p), join(p, "mode"));
      std::optional<std::size_t> joint;
      for (std::size_t q = 0; q < joints; ++q) {
        if (modes.joint_label(q) == label) joint = q;
      }
      if (!joint) fail(join(p, "mode"), "unknown mode '" + label + "'");
      if (seen[*joint]) fail(join(p, "mode"), "mode '" + label + "' given twice");
      seen[*joint] = 1;
      out.mats[*joint] = matrix(need(e, mkey, p), join(p, mkey), n, n);
      out.offsets[*joint] = vector(need(e, ckey, p), join(p, ckey), n);
    }
    for (std::size_t q = 0; q < joints; ++q) {
      if (!seen[q]) fail(lp, "mode '" + modes.joint_label(q) + "' is not specified");
    }
    return out;
  }

  const std::string bp = join(path, "base");
  allow_keys(*base, bp, {mkey, ckey});
  const Eigen::MatrixXd m0 = find(*base, mkey) ? matrix(*find(*base, mkey), join(bp, mkey), n, n)
                                               : Eigen::MatrixXd::Zero(n, n);
  const Eigen::VectorXd c0 = find(*base, ckey) ? vector(*find(*base, ckey), join(bp, ckey), n)
                                               : Eigen::VectorXd::Zero(n);
  std::vector<Eigen::MatrixXd> dm;
  std::vector<Eigen::VectorXd> dc;
  std::array<std::size_t, 2> counts{0, 0};
  if (act) {
    const std::string ap = join(path, "actuators");
    counts = actuator_counts(modes, ap);
    array(*act, ap);
    if (act->size() != counts[0] + counts[1]) {
      fail(ap, "expected " + std::to_string(counts[0] + counts[1]) +
                   " entries (component 1 actuators, then component 2)");
    }
    for (std::size_t i = 0; i < act->size(); ++i) {
      const std::string p = at_index(ap, i);
      allow_keys((*act)[i], p, {mkey, ckey});
      const json* mm = find((*act)[i], mkey);
      const json* cc = find((*act)[i], ckey);
      dm.push_back(mm ? matrix(*mm, join(p, mkey), n, n) : Eigen::MatrixXd::Zero(n, n));
      dc.push_back(cc ? vector(*cc, join(p, ckey), n) : Eigen::VectorXd::Zero(n));
    }
  } else if (joints != 1) {
    fail(join(path, "actuators"), "required when there is more than one mode");
  }
  for (std::size_t q = 0; q < joints; ++q) {
    Eigen::MatrixXd m = m0;
    Eigen::VectorXd c = c0;
    if (act) {
      const auto [m1, m2] = modes.split_joint(q);
      const std::string l1 = modes.label(Component::first, m1);
      const std::string l2 = modes.label(Component::second, m2);
      for (std::size_t a = 0; a < counts[0]; ++a) {
        if (l1[a] == '1') {
          m += dm[a];
          c += dc[a];
        }
      }
      for (std::size_t a = 0; a < counts[1]; ++a) {
        if (l2[a] == '1') {
          m += dm[counts[0] + a];
          c += dc[counts[0] + a];
        }
      }
    }
    out.mats.push_back(std::move(m));
    out.offsets.push_back(std::move(c));
  }
  return out;
}

SwitchedSystem parse_system(const json& j, const std::string& path) {
  allow_keys(j, path, {"split", "modes", "constraints", "continuous", "discrete"});
  const std::string sp = join(path, "split");
  const Eigen::VectorXd split_v = vector(need(j, "split", path), sp, 2);
  std::array<int, 2> split{};
  for (int c = 0; c < 2; ++c) {
    if (split_v[c] < 0 || std::floor(split_v[c]) != split_v[c]) fail(sp, "entries must be non-negative integers");
    split[c] = static_cast<int>(split_v[c]);
  }
  if (split[0] + split[1] < 1) fail(sp, "dimension must be >= 1");
  const Eigen::Index n = split[0] + split[1];

  const ModeConstraints constraints = parse_constraints(find(j, "constraints"), join(path, "constraints"));
  ModeSet modes = [&] {
    try {
      return ModeSet(parse_mode_labels(need(j, "modes", path), join(path, "modes"), split), constraints);
    } catch (const ConfigurationError& e) {
      if (std::string(e.what()).rfind(join(path, "modes"), 0) == 0) throw;
      fail(join(path, "modes"), e.what());
    }
  }();

  const json* cont = find(j, "continuous");
  const json* disc = find(j, "discrete");
  if ((cont != nullptr) == (disc != nullptr)) fail(path, "give exactly one of 'continuous' or 'discrete'");

  if (cont) {
    const std::string cp = join(path, "continuous");
    allow_keys(*cont, cp, {"tau_s", "discretization", "base", "actuators", "modes", "offset_sensitivity"});
    ContinuousSpec spec;
    spec.split = split;
    spec.tau_s = finite(need(*cont, "tau_s", cp), join(cp, "tau_s"));
    if (!(spec.tau_s > 0)) fail(join(cp, "tau_s"), "must be > 0");
    if (const json* d = find(*cont, "discretization")) {
      const std::string s = string(*d, join(cp, "discretization"));
      if (s == "exact") {
        spec.method = Discretization::exact;
      } else if (s == "component_hold") {
        spec.method = Discretization::component_hold;
      } else {
        fail(join(cp, "discretization"), "expected 'exact' or 'component_hold'");
      }
    }
    MapTerms terms = parse_mode_maps(*cont, cp, modes, n, "A", "c");
    spec.drift = std::move(terms.mats);
    spec.offset = std::move(terms.offsets);
    if (const json* e = find(*cont, "offset_sensitivity")) {
      spec.offset_sensitivity = vector(*e, join(cp, "offset_sensitivity"), n);
    }
    spec.modes = std::move(modes);
    try {
      return discretize(spec);
    } catch (const ConfigurationError& e) {
      fail(cp, e.what());
    }
  }

  const std::string dp = join(path, "discrete");
  allow_keys(*disc, dp, {"tau_s", "base", "actuators", "modes", "offset_sensitivity"});
  double tau = 1.0;
  if (const json* t = find(*disc, "tau_s")) {
    tau = finite(*t, join(dp, "tau_s"));
    if (!(tau > 0)) fail(join(dp, "tau_s"), "must be > 0");
  }
  MapTerms terms = parse_mode_maps(*disc, dp, modes, n, "M", "offset");
  std::vector<AffineMap> maps;
  for (std::size_t q = 0; q < terms.mats.size(); ++q) maps.emplace_back(terms.mats[q], terms.offsets[q]);
  std::vector<Eigen::VectorXd> sens;
  if (const json* e = find(*disc, "offset_sensitivity")) {
    const std::string ep = join(dp, "offset_sensitivity");
    array(*e, ep);
    if (!e->empty() && (*e)[0].is_array()) {
      if (e->size() != maps.size()) fail(ep, "expected one vector per joint mode");
      for (std::size_t q = 0; q < e->size(); ++q) sens.push_back(vector((*e)[q], at_index(ep, q), n));
    } else {
      sens.assign(maps.size(), vector(*e, ep, n));
    }
  }
  try {
    return SwitchedSystem(split, std::move(modes), std::move(maps), std::move(sens), tau);
  } catch (const ConfigurationError& e) {
    fail(dp, e.what());
  }
}

SynthesisMode parse_mode(const json& j, const std::string& path) {
  const std::string s = string(j, path);
  if (s == "centralized") return SynthesisMode::centralized;
  if (s == "distributed") return SynthesisMode::distributed;
  if (s == "stability") return SynthesisMode::stability;
  fail(path, "expected 'centralized', 'distributed' or 'stability'");
}

void parse_synthesis(const json* j, const std::string& path, Config& cfg) {
  if (!j) return;
  allow_keys(*j, path, {"mode", "K", "D", "epsilon", "eta", "max_rings", "extension", "strategy",
                        "slack", "threads", "max_extension"});
  SynthesisOptions& o = cfg.options;
  if (const json* v = find(*j, "mode")) cfg.mode = parse_mode(*v, join(path, "mode"));
  const auto int_field = [&](const char* key, int lo) -> std::optional<int> {
    const json* v = find(*j, key);
    if (!v) return std::nullopt;
    const long x = integer(*v, join(path, key));
    if (x < lo || x > 1'000'000) fail(join(path, key), "must be >= " + std::to_string(lo));
    return static_cast<int>(x);
  };
  if (auto v = int_field("K", 1)) o.max_pattern_length = *v;
  if (auto v = int_field("D", 0)) o.max_depth = *v;
  if (auto v = int_field("max_rings", 1)) o.max_rings = *v;
  if (auto v = int_field("threads", 0)) o.threads = static_cast<unsigned>(*v);
  if (const json* v = find(*j, "epsilon")) {
    const double e = finite(*v, join(path, "epsilon"));
    if (!(e >= 0)) fail(join(path, "epsilon"), "must be >= 0");
    cfg.epsilon = e;
  }
  if (const json* v = find(*j, "eta")) {
    o.eta = finite(*v, join(path, "eta"));
    if (!(o.eta > 0)) fail(join(path, "eta"), "must be > 0");
  }
  if (const json* v = find(*j, "slack")) {
    o.slack = finite(*v, join(path, "slack"));
    if (!(o.slack >= 0)) fail(join(path, "slack"), "must be >= 0");
  }
  if (const json* v = find(*j, "max_extension")) {
    o.max_extension = finite(*v, join(path, "max_extension"));
    if (!(o.max_extension > 0)) fail(join(path, "max_extension"), "must be > 0");
  }
  if (const json* v = find(*j, "extension")) o.extension = parse_extension(*v, join(path, "extension"));
  if (const json* v = find(*j, "strategy")) {
    const std::string s = string(*v, join(path, "strategy"));
    if (s == "adaptive") {
      o.strategy = TilingStrategy::adaptive;
    } else if (s == "uniform") {
      o.strategy = TilingStrategy::uniform;
    } else {
      fail(join(path, "strategy"), "expected 'adaptive' or 'uniform'");
    }
  }
  if (cfg.mode != SynthesisMode::centralized && !cfg.epsilon) {
    fail(join(path, "epsilon"), "required for " + to_string(cfg.mode) + " mode");
  }
}

RuntimeSettings parse_runtime(const json* j, const std::string& path, Eigen::Index n,
                              const std::filesystem::path& base_dir) {
  RuntimeSettings r;
  if (!j) return r;
  allow_keys(*j, path, {"x0", "max_steps", "schedule"});
  if (const json* x = find(*j, "x0")) {
    const std::string xp = join(path, "x0");
    array(*x, xp);
    for (std::size_t i = 0; i < x->size(); ++i) {
      const Eigen::VectorXd v = vector((*x)[i], at_index(xp, i), n);
      r.x0.emplace_back(v.data(), v.data() + v.size());
    }
  }
  if (const json* m = find(*j, "max_steps")) {
    r.max_steps = integer(*m, join(path, "max_steps"));
    if (r.max_steps < 0) fail(join(path, "max_steps"), "must be >= 0");
  }
  if (const json* s = find(*j, "schedule")) {
    std::filesystem::path p = string(*s, join(path, "schedule"));
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    r.schedule = p.lexically_normal().string();
  }
  return r;
}

// --------------------------------------------------------------- artifact

json tiling_to_json(const Tiling& t) {
  json nodes = json::array();
  for (const auto& node : t.nodes()) {
    json contact = json::array();
    for (const auto& fc : node.tile.contact) contact.push_back({fc.lower ? 1 : 0, fc.upper ? 1 : 0});
    nodes.push_back({{"box", to_json(node.tile.box)},
                     {"depth", node.tile.depth},
                     {"contact", std::move(contact)},
                     {"parent", node.parent},
                     {"first_child", node.first_child},
                     {"leaf", node.leaf}});
  }
  return {{"root", to_json(t.root())}, {"nodes", std::move(nodes)}};
}

Tiling tiling_from_json(const json& j, const std::string& path, std::size_t dims) {
  const Box root = box(need(j, "root", path), join(path, "root"), dims);
  const json& nodes = array(need(j, "nodes", path), join(path, "nodes"));
  std::vector<Tiling::Node> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string p = at_index(join(path, "nodes"), i);
    const json& e = nodes[i];
    Tiling::Node node;
    node.tile.id = i;
    node.tile.box = box(need(e, "box", p), join(p, "box"), dims);
    node.tile.depth = static_cast<int>(integer(need(e, "depth", p), join(p, "depth")));
    const json& contact = array(need(e, "contact", p), join(p, "contact"));
    if (contact.size() != dims) fail(join(p, "contact"), "expected one pair per dimension");
    for (std::size_t d = 0; d < dims; ++d) {
      const json& pair = array(contact[d], at_index(join(p, "contact"), d));
      if (pair.size() != 2) fail(at_index(join(p, "contact"), d), "expected [lower, upper]");
      node.tile.contact.push_back({boolean(pair[0], join(p, "contact")), boolean(pair[1], join(p, "contact"))});
    }
    node.parent = integer(need(e, "parent", p), join(p, "parent"));
    node.first_child = static_cast<std::size_t>(integer(need(e, "first_child", p), join(p, "first_child")));
    node.leaf = boolean(need(e, "leaf", p), join(p, "leaf"));
    out.push_back(std::move(node));
  }
  try {
    return Tiling::from_nodes(root, std::move(out));
  } catch (const ConfigurationError& e) {
    fail(path, e.what());
  }
}

json seq_to_json(const ModeSequence& s) { return json(s); }

ModeSequence seq_from_json(const json& j, const std::string& path) {
  array(j, path);
  ModeSequence s;
  for (std::size_t i = 0; i < j.size(); ++i) s.push_back(static_cast<int>(integer(j[i], at_index(path, i))));
  return s;
}

json ring_to_json(const Ring& r) {
  json table = json::array();
  for (const auto& tc : r.table) {
    table.push_back({{"tile", tc.tile},
                     {"pattern", {seq_to_json(tc.pattern.first), seq_to_json(tc.pattern.second)}},
                     {"a_tile", num(tc.a_tile)},
                     {"certificate", to_json(tc.certificate)}});
  }
  json out = {{"index", r.index},
              {"a", num(r.a)},
              {"base", to_json(r.base)},
              {"extended", to_json(r.extended)},
              {"K", r.max_pattern_length},
              {"extension", extension_name(r.extension)},
              {"tiling", tiling_to_json(r.tiling)},
              {"table", std::move(table)}};
  if (r.epsilon) out["epsilon"] = num(*r.epsilon);
  return out;
}

Ring ring_from_json(const json& j, const std::string& path, std::size_t dims) {
  Ring r;
  r.index = static_cast<int>(integer(need(j, "index", path), join(path, "index")));
  r.a = number(need(j, "a", path), join(path, "a"));
  r.base = box(need(j, "base", path), join(path, "base"), dims);
  r.extended = box(need(j, "extended", path), join(path, "extended"), dims);
  r.max_pattern_length = static_cast<int>(integer(need(j, "K", path), join(path, "K")));
  r.extension = parse_extension(need(j, "extension", path), join(path, "extension"));
  if (const json* e = find(j, "epsilon")) r.epsilon = number(*e, join(path, "epsilon"));
  r.tiling = tiling_from_json(need(j, "tiling", path), join(path, "tiling"), dims);
  const json& table = array(need(j, "table", path), join(path, "table"));
  for (std::size_t i = 0; i < table.size(); ++i) {
    const std::string p = at_index(join(path, "table"), i);
    const json& e = table[i];
    TileControl tc;
    tc.tile = static_cast<std::size_t>(integer(need(e, "tile", p), join(p, "tile")));
    const json& pat = array(need(e, "pattern", p), join(p, "pattern"));
    if (pat.size() != 2) fail(join(p, "pattern"), "expected [first, second]");
    tc.pattern.first = seq_from_json(pat[0], join(p, "pattern[0]"));
    tc.pattern.second = seq_from_json(pat[1], join(p, "pattern[1]"));
    tc.a_tile = number(need(e, "a_tile", p), join(p, "a_tile"));
    tc.certificate = box(need(e, "certificate", p), join(p, "certificate"), dims);
    r.table.push_back(std::move(tc));
  }
  return r;
}

json dist_ring_to_json(const DistRing& r) {
  json comps = json::array();
  for (const auto& c : r.components) {
    json table = json::array();
    for (const auto& lc : c.table) {
      table.push_back({{"tile", lc.tile}, {"pattern", seq_to_json(lc.pattern)}, {"a_tile", num(lc.a_tile)}});
    }
    comps.push_back({{"base", to_json(c.base)},
                     {"extended", to_json(c.extended)},
                     {"k", c.k},
                     {"alpha", c.alpha},
                     {"tiling", tiling_to_json(c.tiling)},
                     {"table", std::move(table)}});
  }
  return {{"index", r.index},
          {"a", num(r.a)},
          {"epsilon", num(r.epsilon)},
          {"ell", r.ell},
          {"stability", r.stability},
          {"K", r.max_pattern_length},
          {"extension", extension_name(r.extension)},
          {"components", std::move(comps)}};
}

DistRing dist_ring_from_json(const json& j, const std::string& path, std::array<int, 2> split) {
  DistRing r;
  r.index = static_cast<int>(integer(need(j, "index", path), join(path, "index")));
  r.a = number(need(j, "a", path), join(path, "a"));
  r.epsilon = number(need(j, "epsilon", path), join(path, "epsilon"));
  r.ell = static_cast<int>(integer(need(j, "ell", path), join(path, "ell")));
  r.stability = boolean(need(j, "stability", path), join(path, "stability"));
  r.max_pattern_length = static_cast<int>(integer(need(j, "K", path), join(path, "K")));
  r.extension = parse_extension(need(j, "extension", path), join(path, "extension"));
  const json& comps = array(need(j, "components", path), join(path, "components"));
  if (comps.size() != 2) fail(join(path, "components"), "expected two components");
  for (std::size_t c = 0; c < 2; ++c) {
    const std::string p = at_index(join(path, "components"), c);
    const auto dims = static_cast<std::size_t>(split[c]);
    const json& e = comps[c];
    ComponentRing& cr = r.components[c];
    cr.base = box(need(e, "base", p), join(p, "base"), dims);
    cr.extended = box(need(e, "extended", p), join(p, "extended"), dims);
    cr.k = static_cast<int>(integer(need(e, "k", p), join(p, "k")));
    cr.alpha = static_cast<int>(integer(need(e, "alpha", p), join(p, "alpha")));
    cr.tiling = tiling_from_json(need(e, "tiling", p), join(p, "tiling"), dims);
    const json& table = array(need(e, "table", p), join(p, "table"));
    for (std::size_t i = 0; i < table.size(); ++i) {
      const std::string tp = at_index(join(p, "table"), i);
      LocalControl lc;
      lc.tile = static_cast<std::size_t>(integer(need(table[i], "tile", tp), join(tp, "tile")));
      lc.pattern = seq_from_json(need(table[i], "pattern", tp), join(tp, "pattern"));
      lc.a_tile = number(need(table[i], "a_tile", tp), join(tp, "a_tile"));
      cr.table.push_back(std::move(lc));
    }
  }
  return r;
}

json system_to_json(const SwitchedSystem& sys) {
  const ModeSet& modes = sys.modes();
  json labels = json::array();
  for (Component c : {Component::first, Component::second}) {
    json l = json::array();
    for (const auto& s : modes.labels(c)) l.push_back(s);
    labels.push_back(std::move(l));
  }
  json cons = json::object();
  if (modes.constraints().global_max_active) cons["global_max_active"] = *modes.constraints().global_max_active;
  json per = json::array();
  for (const auto& p : modes.constraints().per_component_max_active) per.push_back(p ? json(*p) : json(nullptr));
  cons["per_component_max_active"] = std::move(per);
  json dyn = json::array();
  for (const auto& m : sys.all_dynamics()) dyn.push_back({{"M", to_json(m.matrix)}, {"offset", to_json(m.offset)}});
  json sens = json::array();
  for (const auto& e : sys.all_offset_sensitivity()) sens.push_back(to_json(e));
  return {{"split", {sys.split()[0], sys.split()[1]}},
          {"labels", std::move(labels)},
          {"constraints", std::move(cons)},
          {"tau_s", num(sys.sampling_period())},
          {"dynamics", std::move(dyn)},
          {"offset_sensitivity", std::move(sens)}};
}

SwitchedSystem system_from_json(const json& j, const std::string& path) {
  const Eigen::VectorXd sv = vector(need(j, "split", path), join(path, "split"), 2);
  const std::array<int, 2> split{static_cast<int>(sv[0]), static_cast<int>(sv[1])};
  const Eigen::Index n = split[0] + split[1];
  const json& labels = array(need(j, "labels", path), join(path, "labels"));
  if (labels.size() != 2) fail(join(path, "labels"), "expected two label lists");
  std::array<std::vector<std::string>, 2> l;
  for (std::size_t c = 0; c < 2; ++c) {
    const json& lc = array(labels[c], at_index(join(path, "labels"), c));
    for (std::size_t i = 0; i < lc.size(); ++i) l[c].push_back(string(lc[i], at_index(join(path, "labels"), c)));
  }
  ModeSet modes(std::move(l), parse_constraints(find(j, "constraints"), join(path, "constraints")));
  const json& dyn = array(need(j, "dynamics", path), join(path, "dynamics"));
  std::vector<AffineMap> maps;
  for (std::size_t q = 0; q < dyn.size(); ++q) {
    const std::string p = at_index(join(path, "dynamics"), q);
    maps.emplace_back(matrix(need(dyn[q], "M", p), join(p, "M"), n, n),
                      vector(need(dyn[q], "offset", p), join(p, "offset"), n));
  }
  std::vector<Eigen::VectorXd> sens;
  if (const json* e = find(j, "offset_sensitivity")) {
    array(*e, join(path, "offset_sensitivity"));
    for (std::size_t q = 0; q < e->size(); ++q) sens.push_back(vector((*e)[q], at_index(join(path, "offset_sensitivity"), q), n));
  }
  const double tau = number(need(j, "tau_s", path), join(path, "tau_s"));
  try {
    return SwitchedSystem(split, std::move(modes), std::move(maps), std::move(sens), tau);
  } catch (const ConfigurationError& e) {
    fail(path, e.what());
  }
}

StopReason parse_stop(const std::string& s, const std::string& path) {
  for (StopReason r : {StopReason::max_rings, StopReason::below_eta, StopReason::refinement_failure,
                       StopReason::no_progress}) {
    if (to_string(r) == s) return r;
  }
  fail(path, "unknown stop reason '" + s + "'");
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError(std::string(what) + ": cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

Config parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(std::string("config: invalid JSON: ") + e.what());
  }
  allow_keys(doc, "", {"name", "description", "system", "R", "synthesis", "runtime"});
  Config cfg;
  cfg.system = parse_system(need(doc, "system", ""), "system");
  cfg.R = box(need(doc, "R", ""), "R", static_cast<std::size_t>(cfg.system.dimension()));
  parse_synthesis(find(doc, "synthesis"), "synthesis", cfg);
  cfg.runtime = parse_runtime(find(doc, "runtime"), "runtime", cfg.system.dimension(), base_dir);
  if (cfg.mode == SynthesisMode::distributed) {
    try {
      check_distributable(cfg.system);
    } catch (const ConfigurationError& e) {
      fail("system", e.what());
    }
  }
  cfg.hash = fnv1a_hex(doc.dump());
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path, "config"), path.parent_path());
}

std::string artifact_to_json(const ControllerArtifact& a) {
  json syn = {{"K", a.options.max_pattern_length},
              {"D", a.options.max_depth},
              {"extension", extension_name(a.options.extension)},
              {"eta", num(a.options.eta)},
              {"max_rings", a.options.max_rings},
              {"slack", num(a.options.slack)},
              {"strategy", a.options.strategy == TilingStrategy::adaptive ? "adaptive" : "uniform"},
              {"max_extension", num(a.options.max_extension)}};
  if (a.epsilon) syn["epsilon"] = num(*a.epsilon);
  json rt = {{"x0", a.runtime.x0}, {"max_steps", a.runtime.max_steps}, {"schedule", a.runtime.schedule}};
  json rings = json::array();
  for (const auto& r : a.rings) rings.push_back(ring_to_json(r));
  json dist = json::array();
  for (const auto& r : a.dist_rings) dist.push_back(dist_ring_to_json(r));
  json doc = {{"format", "switchsynth-controller"},
              {"metadata", {{"config_hash", a.config_hash}, {"tool_version", a.tool_version}}},
              {"mode", to_string(a.mode)},
              {"system", system_to_json(a.system)},
              {"R", to_json(a.R)},
              {"synthesis", std::move(syn)},
              {"runtime", std::move(rt)},
              {"stop", {{"reason", to_string(a.stop_reason)}, {"detail", a.stop_detail}}},
              {"rings", std::move(rings)},
              {"stability", a.stability ? ring_to_json(*a.stability) : json(nullptr)},
              {"dist_rings", std::move(dist)},
              {"dist_stability", a.dist_stability ? dist_ring_to_json(*a.dist_stability) : json(nullptr)}};
  return doc.dump(1);
}

ControllerArtifact artifact_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(std::string("artifact: invalid JSON: ") + e.what());
  }
  const std::string root = "artifact";
  if (!doc.is_object()) fail(root, "expected an object");
  if (const json* f = find(doc, "format"); !f || *f != "switchsynth-controller") {
    fail(join(root, "format"), "not a controller artifact");
  }
  ControllerArtifact a;
  const json& meta = need(doc, "metadata", root);
  a.config_hash = string(need(meta, "config_hash", "artifact.metadata"), "artifact.metadata.config_hash");
  a.tool_version = string(need(meta, "tool_version", "artifact.metadata"), "artifact.metadata.tool_version");
  a.mode = parse_mode(need(doc, "mode", root), "artifact.mode");
  a.system = system_from_json(need(doc, "system", root), "artifact.system");
  const auto n = static_cast<std::size_t>(a.system.dimension());
  a.R = box(need(doc, "R", root), "artifact.R", n);

  const json& syn = need(doc, "synthesis", root);
  const std::string sp = "artifact.synthesis";
  a.options.max_pattern_length = static_cast<int>(integer(need(syn, "K", sp), join(sp, "K")));
  a.options.max_depth = static_cast<int>(integer(need(syn, "D", sp), join(sp, "D")));
  a.options.extension = parse_extension(need(syn, "extension", sp), join(sp, "extension"));
  a.options.eta = number(need(syn, "eta", sp), join(sp, "eta"));
  a.options.max_rings = static_cast<int>(integer(need(syn, "max_rings", sp), join(sp, "max_rings")));
  a.options.slack = number(need(syn, "slack", sp), join(sp, "slack"));
  a.options.strategy = string(need(syn, "strategy", sp), join(sp, "strategy")) == "uniform"
                           ? TilingStrategy::uniform
                           : TilingStrategy::adaptive;
  a.options.max_extension = number(need(syn, "max_extension", sp), join(sp, "max_extension"));
  if (const json* e = find(syn, "epsilon")) a.epsilon = number(*e, join(sp, "epsilon"));

  const json& rt = need(doc, "runtime", root);
  const json& x0 = array(need(rt, "x0", "artifact.runtime"), "artifact.runtime.x0");
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const Eigen::VectorXd v = vector(x0[i], at_index("artifact.runtime.x0", i), static_cast<Eigen::Index>(n));
    a.runtime.x0.emplace_back(v.data(), v.data() + v.size());
  }
  a.runtime.max_steps = integer(need(rt, "max_steps", "artifact.runtime"), "artifact.runtime.max_steps");
  a.runtime.schedule = string(need(rt, "schedule", "artifact.runtime"), "artifact.runtime.schedule");

  const json& stop = need(doc, "stop", root);
  a.stop_reason = parse_stop(string(need(stop, "reason", "artifact.stop"), "artifact.stop.reason"),
                             "artifact.stop.reason");
  a.stop_detail = string(need(stop, "detail", "artifact.stop"), "artifact.stop.detail");

  const json& rings = array(need(doc, "rings", root), "artifact.rings");
  for (std::size_t i = 0; i < rings.size(); ++i) a.rings.push_back(ring_from_json(rings[i], at_index("artifact.rings", i), n));
  if (const json* s = find(doc, "stability")) a.stability = ring_from_json(*s, "artifact.stability", n);
  const json& dist = array(need(doc, "dist_rings", root), "artifact.dist_rings");
  for (std::size_t i = 0; i < dist.size(); ++i) {
    a.dist_rings.push_back(dist_ring_from_json(dist[i], at_index("artifact.dist_rings", i), a.system.split()));
  }
  if (const json* s = find(doc, "dist_stability")) {
    a.dist_stability = dist_ring_from_json(*s, "artifact.dist_stability", a.system.split());
  }
  return a;
}

void save_artifact(const ControllerArtifact& artifact, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("artifact: cannot write " + path.string());
  out << artifact_to_json(artifact) << '\n';
  if (!out) throw ConfigurationError("artifact: write failed for " + path.string());
}

ControllerArtifact load_artifact(const std::filesystem::path& path) {
  return artifact_from_json(read_file(path, "artifact"));
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const SwitchedSystem& sys) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "step,time_s";
  for (int i = 1; i <= sys.dimension(); ++i) out << ",x_" << i;
  out << ",mode_label,ring,phase\n";
  for (const auto& p : traj.points) {
    out << p.step << ',' << static_cast<double>(p.step) * sys.sampling_period();
    for (Eigen::Index i = 0; i < p.x.size(); ++i) out << ',' << p.x[i];
    out << ',' << (p.joint ? csv_quote(sys.modes().joint_label(*p.joint)) : std::string()) << ','
        << p.ring << ',' << p.phase << '\n';
  }
  out.precision(old_precision);
}

void write_geometry_csv(std::ostream& out, const ControllerArtifact& a) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "kind,ring,component,tile,dim,lo,hi\n";
  const auto rows = [&](const std::string& kind, int ring, int comp, long tile, const Box& b) {
    for (std::size_t d = 0; d < b.dims(); ++d) {
      out << kind << ',' << ring << ',' << comp << ',' << tile << ',' << d + 1 << ',' << b[d].lo
          << ',' << b[d].hi << '\n';
    }
  };
  rows("R", 0, 0, -1, a.R);
  const auto central = [&](const Ring& r) {
    rows("ring_base", r.index, 0, -1, r.base);
    rows("ring_extended", r.index, 0, -1, r.extended);
    for (std::size_t id : r.tiling.leaves()) {
      rows("tile", r.index, 0, static_cast<long>(id), r.tiling.tile(id).box);
    }
  };
  for (const auto& r : a.rings) central(r);
  if (a.stability) central(*a.stability);
  const auto dist = [&](const DistRing& r) {
    for (int c = 0; c < 2; ++c) {
      const ComponentRing& cr = r.components[static_cast<std::size_t>(c)];
      rows("ring_base", r.index, c + 1, -1, cr.base);
      rows("ring_extended", r.index, c + 1, -1, cr.extended);
      for (std::size_t id : cr.tiling.leaves()) {
        rows("tile", r.index, c + 1, static_cast<long>(id), cr.tiling.tile(id).box);
      }
    }
  };
  for (const auto& r : a.dist_rings) dist(r);
  if (a.dist_stability) dist(*a.dist_stability);
  out.precision(old_precision);
}

void write_report_csv(std::ostream& out, const VerificationReport& report) {
  out << "id,passed,detail\n";
  for (const auto& e : report.entries) {
    out << csv_quote(e.id) << ',' << (e.passed ? 1 : 0) << ',' << csv_quote(e.detail) << '\n';
  }
}

}  // namespace switchsynth
