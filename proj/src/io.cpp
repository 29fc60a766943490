#include "qisdp/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "qisdp/error.hpp"
#include "qisdp/ipm.hpp"

namespace qisdp {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

// ---------------------------------------------------------------- SDPA

namespace {

std::vector<std::string> tokens_of(std::string line) {
  for (char& c : line)
    if (c == '{' || c == '}' || c == '(' || c == ')' || c == ',' || c == '\t' || c == '\r') c = ' ';
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string t; ss >> t;) out.push_back(t);
  return out;
}

bool parse_int(const std::string& t, long& v) {
  char* end = nullptr;
  v = std::strtol(t.c_str(), &end, 10);
  return end && *end == '\0' && !t.empty();
}

bool parse_double(const std::string& t, double& v) {
  char* end = nullptr;
  v = std::strtod(t.c_str(), &end);
  return end && *end == '\0' && !t.empty();
}

struct BlockSlot {
  bool lp = false;
  int index = 0;   // SDP block index or nonneg offset
  int size = 0;
};

}  // namespace

ConeProblem parse_sdpa(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  int stage = 0;
  long m = -1, nblocks = -1;
  std::vector<long> sizes;
  std::vector<double> b;
  struct Entry {
    int mat, blk, i, j;
    double v;
    int line;
  };
  std::vector<Entry> entries;
  bool header_done = false;

  while (std::getline(in, line)) {
    ++lineno;
    if (!header_done && !line.empty() && (line[0] == '*' || line[0] == '"')) continue;
    const auto tok = tokens_of(line);
    if (tok.empty()) continue;
    header_done = true;
    if (stage == 0 || stage == 1) {
      long v;
      if (!parse_int(tok[0], v) || v < (stage == 0 ? 0 : 1))
        throw ParseError(lineno, stage == 0 ? "expected the number of constraints" : "expected the number of blocks");
      (stage == 0 ? m : nblocks) = v;
      ++stage;
      continue;
    }
    if (stage == 2) {
      for (const auto& t : tok) {
        long v;
        if (!parse_int(t, v)) break;
        if (v == 0) throw ParseError(lineno, "block size 0");
        sizes.push_back(v);
        if (static_cast<long>(sizes.size()) == nblocks) break;
      }
      if (static_cast<long>(sizes.size()) == nblocks) stage = m > 0 ? 3 : 4;
      continue;
    }
    if (stage == 3) {
      for (const auto& t : tok) {
        double v;
        if (!parse_double(t, v)) break;
        b.push_back(v);
        if (static_cast<long>(b.size()) == m) break;
      }
      if (static_cast<long>(b.size()) == m) stage = 4;
      continue;
    }
    if (tok.size() != 5) throw ParseError(lineno, "expected 'mat block i j value'");
    long mat, blk, i, j;
    double v;
    if (!parse_int(tok[0], mat) || !parse_int(tok[1], blk) || !parse_int(tok[2], i) || !parse_int(tok[3], j) ||
        !parse_double(tok[4], v))
      throw ParseError(lineno, "malformed entry");
    if (mat < 0 || mat > m) throw ParseError(lineno, "matrix index out of range");
    if (blk < 1 || blk > nblocks) throw ParseError(lineno, "block index out of range");
    const long n = std::abs(sizes[blk - 1]);
    if (i < 1 || j < 1 || i > n || j > n) throw ParseError(lineno, "entry index out of range");
    if (sizes[blk - 1] < 0 && i != j) throw ParseError(lineno, "off-diagonal entry in a diagonal block");
    entries.push_back({static_cast<int>(mat), static_cast<int>(blk - 1), static_cast<int>(std::min(i, j)) - 1,
                       static_cast<int>(std::max(i, j)) - 1, v, lineno});
  }
  if (stage < 4) throw ParseError(lineno, "unexpected end of input in the header");

  BlockStructure s;
  std::vector<BlockSlot> slots;
  for (long sz : sizes) {
    if (sz > 0) {
      slots.push_back({false, static_cast<int>(s.sdp_blocks.size()), static_cast<int>(sz)});
      s.sdp_blocks.push_back(static_cast<int>(sz));
    } else {
      slots.push_back({true, s.nonneg_dim, static_cast<int>(-sz)});
      s.nonneg_dim += static_cast<int>(-sz);
    }
  }
  ConeProblem p(s);
  std::vector<SymBlockMat> mats(m + 1, SymBlockMat(s));
  std::map<std::tuple<int, int, int, int>, double> seen;
  for (const auto& e : entries) {
    auto key = std::make_tuple(e.mat, e.blk, e.i, e.j);
    if (auto it = seen.find(key); it != seen.end()) {
      if (it->second != e.v) throw ParseError(e.line, "conflicting duplicate entry");
      continue;
    }
    seen.emplace(key, e.v);
    const BlockSlot& sl = slots[e.blk];
    SymBlockMat& t = mats[e.mat];
    if (sl.lp) {
      t.nonneg(sl.index + e.i) = e.v;
    } else {
      t.blocks[sl.index](e.i, e.j) = e.v;
      t.blocks[sl.index](e.j, e.i) = e.v;
    }
  }
  p.c = mats[0];
  for (long k = 1; k <= m; ++k) p.add_constraint(mats[k], b[k - 1]);
  return p;
}

std::string write_sdpa(const ConeProblem& input) {
  input.check_shapes();
  const ConeProblem p = input.structure.free_dim > 0 ? split_free(input) : input;
  const auto& s = p.structure;
  std::string out;
  const int nblocks = static_cast<int>(s.sdp_blocks.size()) + (s.nonneg_dim > 0 ? 1 : 0);
  if (nblocks == 0) throw invalid_argument("problem has no cone coordinates");
  out += fmt::format("{}\n{}\n", p.m(), nblocks);
  std::vector<std::string> sz;
  for (int n : s.sdp_blocks) sz.push_back(std::to_string(n));
  if (s.nonneg_dim > 0) sz.push_back(std::to_string(-s.nonneg_dim));
  out += fmt::format("{}\n", fmt::join(sz, " "));
  std::vector<std::string> bs;
  for (int i = 0; i < p.m(); ++i) bs.push_back(fmt::format("{:.17g}", p.b(i)));
  out += fmt::format("{}\n", fmt::join(bs, " "));
  for (int k = 0; k <= p.m(); ++k) {
    const SymBlockMat& t = k == 0 ? p.c : p.a[k - 1];
    for (std::size_t bl = 0; bl < s.sdp_blocks.size(); ++bl)
      for (int i = 0; i < s.sdp_blocks[bl]; ++i)
        for (int j = i; j < s.sdp_blocks[bl]; ++j)
          if (double v = t.blocks[bl](i, j); v != 0.0)
            out += fmt::format("{} {} {} {} {:.17g}\n", k, bl + 1, i + 1, j + 1, v);
    for (int i = 0; i < s.nonneg_dim; ++i)
      if (double v = t.nonneg(i); v != 0.0)
        out += fmt::format("{} {} {} {} {:.17g}\n", k, s.sdp_blocks.size() + 1, i + 1, i + 1, v);
  }
  return out;
}

// ---------------------------------------------------------------- JSON

Json matrix_to_json(const CMat& m) {
  Json re = Json::array(), im = Json::array();
  bool complex = false;
  for (int i = 0; i < m.rows(); ++i) {
    Json r = Json::array(), c = Json::array();
    for (int j = 0; j < m.cols(); ++j) {
      r.push_back(m(i, j).real());
      c.push_back(m(i, j).imag());
      if (m(i, j).imag() != 0.0) complex = true;
    }
    re.push_back(r);
    im.push_back(c);
  }
  Json j{{"re", re}};
  if (complex) j["im"] = im;
  return j;
}

namespace {

Mat real_matrix(const Json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw invalid_argument(std::string(what) + " must be a nested array");
  const auto rows = j.size(), cols = j[0].size();
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw invalid_argument(std::string(what) + " rows differ in length");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw invalid_argument(std::string(what) + " entries must be numbers");
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

template <class T>
T get(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw invalid_argument(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw invalid_argument(std::string("field '") + key + "' has the wrong type");
  }
}

Json expr_terms(const std::map<int, double>& t) {
  Json a = Json::array();
  for (const auto& [k, v] : t) a.push_back(Json::array({k, v}));
  return a;
}

ScalarExpr scalar_from_json(const Json& j) {
  ScalarExpr e(j.value("constant", 0.0));
  if (j.contains("terms"))
    for (const auto& t : j.at("terms")) {
      if (!t.is_array() || t.size() != 2) throw invalid_argument("scalar terms are [param, coef] pairs");
      e += ScalarExpr::param(t[0].get<int>(), t[1].get<double>());
    }
  return e;
}

}  // namespace

CMat matrix_from_json(const Json& j) {
  if (j.is_array()) return real_matrix(j, "matrix").cast<cplx>();
  if (!j.is_object() || !j.contains("re")) throw invalid_argument("matrix needs a 're' field");
  const Mat re = real_matrix(j.at("re"), "re");
  CMat m = re.cast<cplx>();
  if (j.contains("im")) {
    const Mat im = real_matrix(j.at("im"), "im");
    if (im.rows() != re.rows() || im.cols() != re.cols()) throw dimension_error("re and im parts differ in shape");
    m.imag() = im;
  }
  return m;
}

Json model_to_json(const Model& m) {
  Json vars = Json::array();
  for (const auto& v : m.vars())
    vars.push_back({{"name", v.name},
                    {"rows", v.rows},
                    {"cols", v.cols},
                    {"structure", to_string(v.structure)},
                    {"field", to_string(v.field)}});
  Json lmis = Json::array();
  for (const auto& l : m.lmis()) {
    Json j{{"label", l.label}};
    if (l.direct_var >= 0) {
      j["var"] = m.vars()[l.direct_var].name;
    } else {
      j["constant"] = matrix_to_json(l.expr.constant);
      Json terms = Json::array();
      for (const auto& [k, c] : l.expr.terms) terms.push_back({{"param", k}, {"coef", matrix_to_json(c)}});
      j["terms"] = terms;
    }
    lmis.push_back(j);
  }
  Json eqs = Json::array();
  for (const auto& e : m.equalities())
    eqs.push_back({{"label", e.label}, {"constant", e.expr.constant}, {"terms", expr_terms(e.expr.terms)}});
  const ScalarExpr obj = m.maximizing() ? -m.objective() : m.objective();
  return {{"format", "qisdp.model"},
          {"version", 1},
          {"variables", vars},
          {"objective",
           {{"sense", m.maximizing() ? "maximize" : "minimize"},
            {"constant", obj.constant},
            {"terms", expr_terms(obj.terms)}}},
          {"lmis", lmis},
          {"equalities", eqs}};
}

Model model_from_json(const Json& j) {
  if (get<std::string>(j, "format") != "qisdp.model") throw invalid_argument("not a model document");
  if (get<int>(j, "version") != 1) throw invalid_argument("unsupported model version");
  Model m;
  for (const auto& v : get<Json>(j, "variables"))
    m.declare(get<std::string>(v, "name"), get<int>(v, "rows"), get<int>(v, "cols"),
              structure_from_string(v.value("structure", "full")), field_from_string(v.value("field", "real")));
  for (const auto& l : j.value("lmis", Json::array())) {
    const std::string label = l.value("label", "");
    if (l.contains("var")) {
      m.add_psd(m.var(get<std::string>(l, "var")), label);
      continue;
    }
    const CMat c = matrix_from_json(get<Json>(l, "constant"));
    MatExpr e = MatExpr::constant_of(c);
    for (const auto& t : l.value("terms", Json::array())) {
      const int k = get<int>(t, "param");
      const CMat f = matrix_from_json(get<Json>(t, "coef"));
      if (f.rows() != c.rows() || f.cols() != c.cols()) throw dimension_error("LMI coefficient shape mismatch");
      if (!e.terms.emplace(k, f).second) throw invalid_argument("parameter repeated in an LMI");
    }
    m.add_psd(e, label);
  }
  for (const auto& e : j.value("equalities", Json::array())) m.add_equality(scalar_from_json(e), e.value("label", ""));
  const Json obj = j.value("objective", Json::object());
  const std::string sense = obj.value("sense", "minimize");
  if (sense != "minimize" && sense != "maximize") throw invalid_argument("objective sense must be minimize or maximize");
  m.set_objective(scalar_from_json(obj), sense == "maximize");
  return m;
}

ScenarioFile scenario_from_json(const Json& j) {
  ScenarioFile s;
  if (!j.is_object()) throw invalid_argument("scenario must be a JSON object");
  const std::string type = j.value("type", "bell");
  if (type == "prepare_measure") {
    s.prepare_measure = true;
    s.preparations = get<int>(j, "preparations");
    s.measurements = get<int>(j, "measurements");
    s.outcomes = j.value("outcomes", 2);
    s.dimension = j.value("dimension", 0);
    s.scenario = Scenario::prepare_measure(s.preparations, s.measurements, s.outcomes);
    for (const auto& t : get<Json>(j, "witness")) {
      PmTerm p{get<int>(t, "b"), get<int>(t, "x"), get<int>(t, "y"), get<double>(t, "coef")};
      if (p.x < 0 || p.x >= s.preparations || p.y < 0 || p.y >= s.measurements || p.b < 0 || p.b >= s.outcomes)
        throw invalid_argument("witness term out of range");
      s.witness.push_back(p);
    }
    return s;
  }
  if (type != "bell") throw invalid_argument("unknown scenario type '" + type + "'");
  s.scenario.outcomes = get<std::vector<std::vector<int>>>(j, "outcomes");
  if (j.contains("labels")) s.scenario.labels = get<std::vector<std::string>>(j, "labels");
  s.scenario.validate();
  s.local_dims = j.value("local_dims", std::vector<int>{});
  if (!s.local_dims.empty() && static_cast<int>(s.local_dims.size()) != s.scenario.parties())
    throw invalid_argument("one local dimension per party is required");
  const Json bell = get<Json>(j, "bell");
  s.bell.constant = bell.value("constant", 0.0);
  for (const auto& t : get<Json>(bell, "terms")) {
    BellTerm b{get<std::vector<int>>(t, "outcomes"), get<std::vector<int>>(t, "settings"), get<double>(t, "coef")};
    if (static_cast<int>(b.outcomes.size()) != s.scenario.parties() || b.settings.size() != b.outcomes.size())
      throw invalid_argument("Bell term arity does not match the party count");
    for (int p = 0; p < s.scenario.parties(); ++p)
      if (b.settings[p] < 0 || b.settings[p] >= s.scenario.settings(p) || b.outcomes[p] < 0 ||
          b.outcomes[p] >= s.scenario.outcomes[p][b.settings[p]])
        throw invalid_argument("Bell term out of range");
    s.bell.terms.push_back(b);
  }
  return s;
}

Json scenario_to_json(const ScenarioFile& s) {
  if (s.prepare_measure) {
    Json w = Json::array();
    for (const auto& t : s.witness) w.push_back({{"b", t.b}, {"x", t.x}, {"y", t.y}, {"coef", t.coef}});
    Json j{{"type", "prepare_measure"},
           {"preparations", s.preparations},
           {"measurements", s.measurements},
           {"outcomes", s.outcomes},
           {"witness", w}};
    if (s.dimension > 0) j["dimension"] = s.dimension;
    return j;
  }
  Json terms = Json::array();
  for (const auto& t : s.bell.terms) terms.push_back({{"outcomes", t.outcomes}, {"settings", t.settings}, {"coef", t.coef}});
  Json j{{"type", "bell"}, {"outcomes", s.scenario.outcomes}, {"bell", {{"constant", s.bell.constant}, {"terms", terms}}}};
  if (!s.local_dims.empty()) j["local_dims"] = s.local_dims;
  return j;
}

// ---------------------------------------------------------------- graphs

Graph parse_graph(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  Graph g;
  bool have_n = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const auto tok = tokens_of(line);
    if (tok.empty()) continue;
    long a, b;
    if (!have_n) {
      if (tok.size() != 1 || !parse_int(tok[0], a) || a < 1) throw ParseError(lineno, "expected the vertex count");
      g.n = static_cast<int>(a);
      have_n = true;
      continue;
    }
    if (tok[0] == "w") {
      double w;
      if (tok.size() != 3 || !parse_int(tok[1], a) || !parse_double(tok[2], w)) throw ParseError(lineno, "expected 'w i weight'");
      if (a < 0 || a >= g.n) throw ParseError(lineno, "vertex out of range");
      if (g.weights.empty()) g.weights.assign(g.n, 1.0);
      g.weights[a] = w;
      continue;
    }
    if (tok.size() != 2 || !parse_int(tok[0], a) || !parse_int(tok[1], b)) throw ParseError(lineno, "expected 'u v'");
    if (a < 0 || b < 0 || a >= g.n || b >= g.n) throw ParseError(lineno, "vertex out of range");
    if (a == b) throw ParseError(lineno, "self-loop");
    g.edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
  }
  if (!have_n) throw ParseError(0, "empty graph file");
  g.validate();
  return g;
}

std::string write_graph(const Graph& g) {
  std::string out = fmt::format("{}\n", g.n);
  for (auto [u, v] : g.edges) out += fmt::format("{} {}\n", u, v);
  for (std::size_t i = 0; i < g.weights.size(); ++i) out += fmt::format("w {} {:.17g}\n", i, g.weights[i]);
  return out;
}

Polynomial polynomial_from_json(const Json& j) {
  Polynomial p;
  p.nvars = get<int>(j, "nvars");
  if (p.nvars < 1) throw invalid_argument("polynomial needs at least one variable");
  for (const auto& t : get<Json>(j, "terms")) p.add(get<std::vector<int>>(t, "exps"), get<double>(t, "coef"));
  return p;
}

}  // namespace qisdp
