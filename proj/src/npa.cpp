#include "qisdp/npa.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <set>

#include "qisdp/error.hpp"

namespace qisdp {

void Scenario::validate() const {
  if (outcomes.empty()) throw invalid_argument("scenario needs at least one party");
  for (const auto& p : outcomes) {
    if (p.empty()) throw invalid_argument("every party needs at least one setting");
    for (int o : p)
      if (o < 1) throw invalid_argument("outcome counts must be at least 1");
  }
  if (!labels.empty() && labels.size() != outcomes.size())
    throw invalid_argument("scenario labels must match the party count");
}

Scenario Scenario::binary(int parties, int settings) {
  if (parties < 1 || settings < 1) throw invalid_argument("scenario counts must be positive");
  Scenario s;
  s.outcomes.assign(parties, std::vector<int>(settings, 2));
  return s;
}

Scenario Scenario::prepare_measure(int preparations, int measurements, int outcomes) {
  if (preparations < 1 || measurements < 1 || outcomes < 1)
    throw invalid_argument("scenario counts must be positive");
  Scenario s;
  s.outcomes = {std::vector<int>(preparations, 2), std::vector<int>(measurements, outcomes)};
  s.labels = {"prepare", "measure"};
  return s;
}

// ---------------------------------------------------------------- words

Word commute_parties(const Word& w) {
  Word out = w;
  std::stable_sort(out.begin(), out.end(),
                   [](const Symbol& a, const Symbol& b) { return a.party < b.party; });
  return out;
}

std::optional<Word> reduce_word(const Word& w) {
  const Word sorted = commute_parties(w);
  Word out;
  out.reserve(sorted.size());
  for (const Symbol& s : sorted) {
    if (!out.empty() && out.back().party == s.party && out.back().setting == s.setting) {
      if (out.back().outcome == s.outcome) continue;  // idempotent
      return std::nullopt;                             // orthogonal outcomes
    }
    out.push_back(s);
  }
  return out;
}

Word adjoint(const Word& w) { return Word(w.rbegin(), w.rend()); }

std::string to_string(const Word& w) {
  if (w.empty()) return "1";
  std::string out;
  for (const Symbol& s : w) {
    if (!out.empty()) out += ' ';
    out += s.party < 26 ? std::string(1, static_cast<char>('A' + s.party)) : "P" + std::to_string(s.party);
    out += std::to_string(s.setting) + "|" + std::to_string(s.outcome);
  }
  return out;
}

namespace {

bool shortlex_less(const Word& a, const Word& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

struct ShortLex {
  bool operator()(const Word& a, const Word& b) const { return shortlex_less(a, b); }
};

Word concat(const Word& a, const Word& b) {
  Word w = a;
  w.insert(w.end(), b.begin(), b.end());
  return w;
}

}  // namespace

std::vector<Symbol> alphabet(const Scenario& s) {
  s.validate();
  std::vector<Symbol> out;
  for (int p = 0; p < s.parties(); ++p)
    for (int x = 0; x < s.settings(p); ++x)
      for (int a = 0; a + 1 < s.outcomes[p][x]; ++a) out.push_back({p, x, a});
  return out;
}

NpaLevel NpaLevel::parse(const std::string& text) {
  NpaLevel l;
  std::string t;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) t += static_cast<char>(std::toupper(c));
  if (t == "1+AB") {
    l.k = 1;
    l.plus_ab = true;
    return l;
  }
  try {
    std::size_t used = 0;
    l.k = std::stoi(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
  } catch (const std::exception&) {
    throw invalid_argument("invalid hierarchy level '" + text + "'");
  }
  if (l.k < 1) throw invalid_argument("hierarchy level must be at least 1");
  return l;
}

std::string NpaLevel::str() const { return plus_ab ? "1+AB" : std::to_string(k); }

std::vector<Word> generate_words(const Scenario& s, const NpaLevel& level) {
  if (level.k < 1) throw invalid_argument("hierarchy level must be at least 1");
  const auto letters = alphabet(s);
  std::set<Word, ShortLex> all{Word{}};
  std::vector<Word> frontier{Word{}};
  for (int len = 1; len <= level.k; ++len) {
    std::set<Word, ShortLex> next;
    for (const Word& w : frontier)
      for (const Symbol& l : letters) {
        auto r = reduce_word(concat(w, {l}));
        if (r && static_cast<int>(r->size()) == len) next.insert(*r);
      }
    frontier.assign(next.begin(), next.end());
    all.insert(next.begin(), next.end());
  }
  if (level.plus_ab) {
    for (const Symbol& a : letters)
      for (const Symbol& b : letters)
        if (a.party < b.party) all.insert(Word{a, b});
  }
  return {all.begin(), all.end()};
}

Word class_key(const Word& reduced) {
  auto adj = reduce_word(adjoint(reduced));
  if (!adj) return reduced;
  return shortlex_less(*adj, reduced) ? *adj : reduced;
}

MomentModel build_moment_model(const Scenario& s, const NpaLevel& level) {
  MomentModel mm;
  mm.scenario = s;
  mm.words = generate_words(s, level);
  const int n = mm.size();
  mm.cell_class.assign(n, std::vector<int>(n, -1));
  for (int i = 0; i < n; ++i) {
    const Word left = adjoint(mm.words[i]);
    for (int j = i; j < n; ++j) {
      auto r = reduce_word(concat(left, mm.words[j]));
      if (!r) continue;
      const Word key = class_key(*r);
      auto [it, inserted] = mm.class_index.emplace(key, mm.num_classes());
      if (inserted) mm.class_words.push_back(key);
      mm.cell_class[i][j] = mm.cell_class[j][i] = it->second;
    }
  }
  mm.identity_class = mm.cell_class[0][0];
  return mm;
}

std::optional<int> MomentModel::class_of(const Word& w) const {
  auto r = reduce_word(w);
  if (!r) return std::nullopt;
  auto it = class_index.find(class_key(*r));
  if (it == class_index.end()) return std::nullopt;
  return it->second;
}

ScalarExpr MomentModel::probability(const std::vector<int>& outcomes,
                                    const std::vector<int>& settings) const {
  const int np = scenario.parties();
  if (static_cast<int>(outcomes.size()) != np || static_cast<int>(settings.size()) != np)
    throw invalid_argument("probability needs one outcome and one setting per party");
  // expand each party's projector into independent symbols
  std::vector<std::pair<double, Word>> acc{{1.0, Word{}}};
  for (int p = 0; p < np; ++p) {
    const int x = settings[p], a = outcomes[p];
    if (x < 0 || x >= scenario.settings(p)) throw invalid_argument("setting out of range");
    const int o = scenario.outcomes[p][x];
    if (a < 0 || a >= o) throw invalid_argument("outcome out of range");
    std::vector<std::pair<double, Word>> local;
    if (a + 1 < o) {
      local.push_back({1.0, Word{{p, x, a}}});
    } else {
      local.push_back({1.0, Word{}});
      for (int b = 0; b + 1 < o; ++b) local.push_back({-1.0, Word{{p, x, b}}});
    }
    std::vector<std::pair<double, Word>> next;
    for (const auto& [c1, w1] : acc)
      for (const auto& [c2, w2] : local) next.push_back({c1 * c2, concat(w1, w2)});
    acc = std::move(next);
  }
  ScalarExpr e;
  for (const auto& [c, w] : acc) {
    if (!reduce_word(w)) continue;
    auto cls = class_of(w);
    if (!cls) throw model_error("moment <" + to_string(w) + "> is not in the moment matrix at this level");
    e.terms[*cls] += c;
  }
  return e;
}

Mat MomentModel::gamma(const Vec& moments) const {
  if (moments.size() != num_classes()) throw dimension_error("moment vector size mismatch");
  const int n = size();
  Mat g = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (cell_class[i][j] >= 0) g(i, j) = moments(cell_class[i][j]);
  return g;
}

Mat MomentModel::pattern(int c) const {
  const int n = size();
  Mat g = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (cell_class[i][j] == c) g(i, j) = 1.0;
  return g;
}

// ---------------------------------------------------------------- programs

Model moment_program(const MomentModel& mm) {
  Model m;
  auto y = m.declare("moments", mm.num_classes(), 1);
  MatExpr g(mm.size(), mm.size());
  for (int c = 0; c < mm.num_classes(); ++c) g.terms.emplace(y.first_param + c, mm.pattern(c).cast<cplx>());
  m.add_psd(g, "Gamma");
  m.add_equality(m.param(y.first_param + mm.identity_class) - 1.0, "normalization");
  return m;
}

BellExpr BellExpr::chsh() {
  BellExpr e;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          e.terms.push_back({{a, b}, {x, y}, ((a + b + x * y) % 2) ? -1.0 : 1.0});
  return e;
}

ScalarExpr bell_objective(const MomentModel& mm, const BellExpr& e) {
  ScalarExpr s(e.constant);
  for (const auto& t : e.terms) s += t.coef * mm.probability(t.outcomes, t.settings);
  return s;
}

namespace {

NpaResult finish(ModelResult run, const MomentModel* mm) {
  NpaResult r;
  r.status = run.solution.status;
  r.value = run.value;
  r.moments = run.params;
  if (mm) r.gamma = mm->gamma(run.params);
  r.run = std::move(run);
  return r;
}

}  // namespace

NpaResult solve_bell(const Scenario& s, const NpaLevel& level, const BellExpr& bell,
                     const std::vector<BellConstraint>& extra, const NpaOptions& opt) {
  const MomentModel mm = build_moment_model(s, level);
  Model m = moment_program(mm);
  for (const auto& c : extra) m.add_equality(bell_objective(mm, c.expr) - c.value);
  m.maximize(bell_objective(mm, bell));
  return finish(solve_model(m, opt.compile, opt.solver), &mm);
}

std::vector<PmTerm> qrac_terms() {
  std::vector<PmTerm> t;
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 2; ++y) t.push_back({(x >> y) & 1, x, y, 1.0 / 8.0});
  return t;
}

void add_mlp_constraints(Model& m, const MomentModel& mm, int d) {
  if (d < 1) throw invalid_argument("dimension bound must be at least 1");
  for (int x = 0; x < mm.scenario.settings(0); ++x) {
    auto c = mm.class_of(Word{{0, x, 0}});
    if (!c) throw model_error("preparation flag moment missing");
    m.add_equality(m.param(*c) - 1.0 / d, "mlp x=" + std::to_string(x));
  }
}

NpaResult mlp_solve(const Scenario& pm, const NpaLevel& level, int d,
                    const std::vector<PmTerm>& witness, const NpaOptions& opt) {
  if (pm.parties() != 2) throw invalid_argument("prepare-and-measure scenarios have two parties");
  const MomentModel mm = build_moment_model(pm, level);
  Model m = moment_program(mm);
  add_mlp_constraints(m, mm, d);
  ScalarExpr obj;
  for (const auto& t : witness)
    obj += (t.coef * d) * mm.probability({0, t.b}, {t.x, t.y});
  m.maximize(obj);
  return finish(solve_model(m, opt.compile, opt.solver), &mm);
}

// ---------------------------------------------------------------- NV

NvBasis nv_build_basis(const NvSampler& sample, const NvOptions& opt) {
  if (opt.stall_limit < 1 || opt.max_draws < 1 || !(opt.tol > 0))
    throw invalid_argument("invalid NV options");
  std::mt19937_64 rng(opt.seed);
  NvBasis out;
  int stall = 0;
  while (out.draws < opt.max_draws) {
    const Mat g = sample(rng);
    ++out.draws;
    Mat r = g;
    for (int pass = 0; pass < 2; ++pass)
      for (const Mat& b : out.basis) r -= (b.array() * r.array()).sum() * b;
    const double rn = r.norm();
    if (rn > opt.tol * std::max(1.0, g.norm())) {
      out.basis.push_back(r / rn);
      stall = 0;
    } else if (++stall >= opt.stall_limit) {
      return out;
    }
  }
  throw numerical_error("NV basis did not stabilize within " + std::to_string(opt.max_draws) + " draws");
}

namespace {

CVec haar_vector(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CVec v(d);
  for (int i = 0; i < d; ++i) v(i) = cplx(g(rng), g(rng));
  return v / v.norm();
}

CMat haar_unitary(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMat m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<CMat> qr(m);
  return qr.householderQ();
}

}  // namespace

PmNv::PmNv(const PmSpec& spec) : spec_(spec) {
  if (spec.dim < 1 || spec.states < 1 || spec.measurements < 1 || spec.level < 1)
    throw invalid_argument("invalid prepare-and-measure specification");
  if (spec.rank < 0 || spec.rank > spec.dim) throw invalid_argument("projector rank out of range");
  std::vector<PmSymbol> letters;
  for (int x = 0; x < spec.states; ++x) letters.push_back({true, x});
  for (int y = 0; y < spec.measurements; ++y) letters.push_back({false, y});
  monomials_.push_back({});
  std::size_t start = 0;
  for (int len = 1; len <= spec.level; ++len) {
    const std::size_t end = monomials_.size();
    for (std::size_t k = start; k < end; ++k)
      for (const auto& l : letters) {
        if (!monomials_[k].empty() && monomials_[k].back() == l) continue;
        auto w = monomials_[k];
        w.push_back(l);
        monomials_.push_back(std::move(w));
      }
    start = end;
  }
}

int PmNv::index_of(const std::vector<PmSymbol>& w) const {
  for (int i = 0; i < size(); ++i)
    if (monomials_[i] == w) return i;
  throw model_error("monomial not present at this level");
}

Mat PmNv::sample(std::mt19937_64& rng) const {
  const int d = spec_.dim;
  std::vector<CMat> rho, proj;
  for (int x = 0; x < spec_.states; ++x) {
    const CVec v = haar_vector(d, rng);
    rho.push_back(v * v.adjoint());
  }
  for (int y = 0; y < spec_.measurements; ++y) {
    const CMat u = haar_unitary(d, rng);
    const CMat q = u.leftCols(spec_.rank);
    proj.push_back(q * q.adjoint());
  }
  const int n = size();
  std::vector<CMat> ops(n);
  for (int i = 0; i < n; ++i) {
    CMat o = CMat::Identity(d, d);
    for (const auto& s : monomials_[i]) o = o * (s.state ? rho[s.index] : proj[s.index]);
    ops[i] = o;
  }
  Mat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = (ops[i].adjoint() * ops[j]).trace().real() / d;
      g(i, j) = g(j, i) = v;
    }
  return g;
}

NvSampler PmNv::sampler() const {
  return [self = *this](std::mt19937_64& rng) { return self.sample(rng); };
}

Mat PmNv::game(const std::vector<PmTerm>& terms) const {
  const int n = size();
  const double d = spec_.dim;
  Mat g = Mat::Zero(n, n);
  auto put = [&](int i, int j, double w) {
    g(i, j) += 0.5 * w;
    g(j, i) += 0.5 * w;
  };
  for (const auto& t : terms) {
    if (t.x < 0 || t.x >= spec_.states || t.y < 0 || t.y >= spec_.measurements || t.b < 0 || t.b > 1)
      throw invalid_argument("witness term out of range");
    const int ix = index_of({{true, t.x}});
    const int iy = index_of({{false, t.y}});
    // P(0|x,y) = Tr(rho_x P_y), P(1|x,y) = Tr(rho_x) - Tr(rho_x P_y)
    if (t.b == 0) {
      put(ix, iy, t.coef * d);
    } else {
      put(0, ix, t.coef * d);
      put(ix, iy, -t.coef * d);
    }
  }
  return g;
}

NvSampler bell_sampler(const MomentModel& mm, const std::vector<int>& local_dims) {
  const Scenario& s = mm.scenario;
  if (static_cast<int>(local_dims.size()) != s.parties())
    throw invalid_argument("one local dimension per party is required");
  for (int p = 0; p < s.parties(); ++p)
    for (int o : s.outcomes[p])
      if (o - 1 > local_dims[p]) throw invalid_argument("local dimension too small for the outcomes");
  return [mm, local_dims](std::mt19937_64& rng) {
    const Scenario& sc = mm.scenario;
    int total = 1;
    for (int d : local_dims) total *= d;
    // rank-1 projectors onto columns of a Haar unitary, lifted to the full space
    std::map<Symbol, CMat> ops;
    for (int p = 0; p < sc.parties(); ++p)
      for (int x = 0; x < sc.settings(p); ++x) {
        const CMat u = haar_unitary(local_dims[p], rng);
        for (int a = 0; a + 1 < sc.outcomes[p][x]; ++a) {
          CMat local = u.col(a) * u.col(a).adjoint();
          CMat full = CMat::Identity(1, 1);
          for (int q = 0; q < sc.parties(); ++q)
            full = kron(full, q == p ? local : CMat(CMat::Identity(local_dims[q], local_dims[q])));
          ops.emplace(Symbol{p, x, a}, std::move(full));
        }
      }
    const CVec psi = haar_vector(total, rng);
    const int n = mm.size();
    std::vector<CVec> v(n);
    for (int i = 0; i < n; ++i) {
      CVec w = psi;
      const Word& word = mm.words[i];
      for (auto it = word.rbegin(); it != word.rend(); ++it) w = ops.at(*it) * w;
      v[i] = w;
    }
    Mat g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) g(i, j) = g(j, i) = v[i].dot(v[j]).real();
    return g;
  };
}

Mat bell_game(const MomentModel& mm, const BellExpr& e, double* constant) {
  const ScalarExpr obj = bell_objective(mm, e);
  const int n = mm.size();
  Mat g = Mat::Zero(n, n);
  for (const auto& [c, w] : obj.terms) {
    bool placed = false;
    for (int i = 0; i < n && !placed; ++i)
      for (int j = i; j < n && !placed; ++j)
        if (mm.cell_class[i][j] == c) {
          g(i, j) += 0.5 * w;
          g(j, i) += 0.5 * w;
          placed = true;
        }
  }
  if (constant) *constant = obj.constant;
  return g;
}

NpaResult nv_solve(const std::vector<Mat>& basis, const Mat& game, double constant,
                   const NpaOptions& opt) {
  if (basis.empty()) throw invalid_argument("NV basis is empty");
  const Eigen::Index n = basis.front().rows();
  if (game.rows() != n || game.cols() != n) throw dimension_error("game matrix size mismatch");
  Model m;
  auto c = m.declare("coefficients", static_cast<int>(basis.size()), 1);
  MatExpr g(static_cast<int>(n), static_cast<int>(n));
  ScalarExpr norm(-1.0), obj(constant);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const int p = c.first_param + static_cast<int>(k);
    g.terms.emplace(p, basis[k].cast<cplx>());
    norm += ScalarExpr::param(p, basis[k](0, 0));
    const double w = (game.array() * basis[k].array()).sum();
    if (w != 0.0) obj += ScalarExpr::param(p, w);
  }
  m.add_psd(g, "Gamma");
  m.add_equality(norm, "normalization");
  m.maximize(obj);
  ModelResult run = solve_model(m, opt.compile, opt.solver);
  NpaResult r;
  r.status = run.solution.status;
  r.value = run.value;
  r.moments = run.params;
  r.gamma = Mat::Zero(n, n);
  for (std::size_t k = 0; k < basis.size(); ++k) r.gamma += run.params(static_cast<Eigen::Index>(k)) * basis[k];
  r.run = std::move(run);
  return r;
}

}  // namespace qisdp
