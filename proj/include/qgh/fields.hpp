#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "qgh/distoq.hpp"

namespace qgh {

/// Section as a coefficient rule on labels. Each label stands for its basis
/// element rescaled to unit normalized-trace norm, sqrt(d) B_label, so a rule
/// means the same thing on every member that carries the label.
struct Section {
  std::string name;
  std::map<std::string, double> coeffs;
};

/// Coefficients of the section on q; throws when a label is missing.
inline Vec evaluate_section(const Section& s, const Cqms& q) {
  Vec c = Vec::Zero(q.size());
  const double sd = std::sqrt(static_cast<double>(q.space().matrix_dim()));
  for (const auto& [label, v] : s.coeffs) {
    const int i = q.space().find(label);
    if (i < 0) throw DomainError("section '" + s.name + "' undefined on " + q.name() + " (label " + label + ")");
    c(i) = v * sd;
  }
  return c;
}

inline Section section_from(const std::string& name, const Cqms& q, const Vec& c, double drop_below = 0.0) {
  Section s;
  s.name = name;
  const double sd = std::sqrt(static_cast<double>(q.space().matrix_dim()));
  for (int i = 0; i < q.size(); ++i)
    if (std::abs(c(i)) > drop_below) s.coeffs[q.space().label(i)] = c(i) / sd;
  return s;
}

class ParamFamily {
 public:
  ParamFamily(std::string name, std::vector<std::string> params, int t0,
              std::vector<std::shared_ptr<const Cqms>> members)
      : name_(std::move(name)), params_(std::move(params)), t0_(t0), members_(std::move(members)) {
    if (params_.empty() || params_.size() != members_.size()) throw DimensionError("ParamFamily: params/members");
    if (t0_ < 0 || t0_ >= size()) throw DomainError("ParamFamily: t0 out of range");
    unit_ = section_from("unit", member(t0_), member(t0_).space().unit(), 1e-14);
    for (int t = 0; t < size(); ++t) {
      const Cqms& q = member(t);
      if (q.group().size() != member(t0_).group().size())
        throw DomainError("ParamFamily: members sampled on different groups");
      if ((evaluate_section(unit_, q) - q.space().unit()).norm() > 1e-9)
        throw DomainError("ParamFamily: unit section does not give the unit of " + q.name());
    }
  }

  const std::string& name() const { return name_; }
  int size() const { return static_cast<int>(params_.size()); }
  int t0() const { return t0_; }
  const std::string& param(int t) const { return params_.at(static_cast<size_t>(t)); }
  const std::vector<std::string>& params() const { return params_; }
  const Cqms& member(int t) const { return *members_.at(static_cast<size_t>(t)); }
  const Section& unit_section() const { return unit_; }

  /// Labels carried by every member.
  std::set<std::string> common_labels() const {
    std::set<std::string> out(member(0).space().labels().begin(), member(0).space().labels().end());
    for (int t = 1; t < size(); ++t) {
      const auto& l = member(t).space().labels();
      std::set<std::string> next;
      for (const auto& s : l)
        if (out.count(s)) next.insert(s);
      out = std::move(next);
    }
    return out;
  }

  /// max radius estimate over the members.
  double max_radius() const {
    double r = 0.0;
    for (int t = 0; t < size(); ++t) r = std::max(r, radius(member(t)).value);
    return r;
  }

 private:
  std::string name_;
  std::vector<std::string> params_;
  int t0_;
  std::vector<std::shared_ptr<const Cqms>> members_;
  Section unit_;
};

/// Sections from a net of D_R(A_{t0}) at resolution delta, restricted to the
/// labels every member carries.
inline std::vector<Section> net_sections(const ParamFamily& fam, double R, double delta, int budget,
                                         std::uint64_t seed = 23) {
  const Cqms& q0 = fam.member(fam.t0());
  const auto net = ball_net_shared(q0, R, delta, budget, seed);
  const auto common = fam.common_labels();
  std::vector<Section> out;
  for (size_t k = 0; k < net->points.size(); ++k) {
    Section s = section_from("net" + std::to_string(k), q0, net->points[k]);
    for (auto it = s.coeffs.begin(); it != s.coeffs.end();)
      it = common.count(it->first) ? std::next(it) : s.coeffs.erase(it);
    out.push_back(std::move(s));
  }
  return out;
}

struct CriterionRow {
  std::string t;
  bool pass = false;
  double worst_gap = 0.0;     // max over net points of the distance to the sections
  double certificate = 0.0;   // covering certificate of the eps/4 net
  int net_size = 0;
};

struct CriterionTable {
  double eps = 0.0, R = 0.0;
  int sections = 0;
  std::vector<CriterionRow> rows;
  bool all_pass() const {
    for (const auto& r : rows)
      if (!r.pass) return false;
    return true;
  }
};

/// For each t: is every point of ball_net(A_t, R, eps/4) within eps (open
/// ball) of some section evaluated at t?
inline CriterionTable criterion_iii_check(const ParamFamily& fam, const std::vector<Section>& sections, double eps,
                                          double R, int budget = 256, std::uint64_t seed = 29) {
  if (sections.empty()) throw DomainError("criterion_iii_check: no sections");
  if (!(eps > 0.0)) throw DomainError("criterion_iii_check: need eps > 0");
  CriterionTable tab;
  tab.eps = eps;
  tab.R = R;
  tab.sections = static_cast<int>(sections.size());
  for (int t = 0; t < fam.size(); ++t) {
    const Cqms& q = fam.member(t);
    std::vector<CMatrix> centers;
    for (const auto& s : sections) centers.push_back(q.matrix(evaluate_section(s, q)));
    const auto net = ball_net_shared(q, R, eps / 4.0, budget, seed);
    std::vector<double> gaps(net->matrices.size());
    parallel_for(static_cast<int>(gaps.size()), [&](int i) {
      gaps[static_cast<size_t>(i)] = detail::distance_to_set(net->matrices[static_cast<size_t>(i)], centers);
    });
    CriterionRow row;
    row.t = fam.param(t);
    row.worst_gap = *std::max_element(gaps.begin(), gaps.end());
    row.pass = in_open_ball(row.worst_gap, eps);
    row.certificate = net->covering_certificate;
    row.net_size = static_cast<int>(net->points.size());
    tab.rows.push_back(row);
  }
  return tab;
}

/// Criterion (iii) over an eps schedule, sections from net_sections at eps/2.
struct CriterionSchedule {
  std::vector<CriterionTable> tables;
  bool pass() const {
    for (const auto& t : tables)
      if (!t.all_pass()) return false;
    return true;
  }
};

inline CriterionSchedule criterion_iii_schedule(const ParamFamily& fam, const std::vector<double>& eps_list, double R,
                                                int budget = 256, int section_budget = 2048) {
  CriterionSchedule out;
  for (double eps : eps_list) {
    const auto sections = net_sections(fam, R, eps / 2.0, section_budget);
    out.tables.push_back(criterion_iii_check(fam, sections, eps, R, budget));
  }
  return out;
}

// ---------------------------------------------------------------------------

struct MultiplicityProfile {
  std::vector<std::string> characters;
  std::vector<std::string> params;
  std::vector<std::vector<int>> mul;   // mul[t][gamma]
  double max_deviation = 0.0;
  bool locally_constant = false;       // every t on the grid agrees with t0
  bool lower_semicontinuous = false;   // mul(t0) <= min over adjacent grid points
};

inline MultiplicityProfile multiplicity_profile(const ParamFamily& fam, const std::vector<IrrepCharacter>& chars,
                                                double integer_tol = 0.05) {
  MultiplicityProfile p;
  for (const auto& c : chars) p.characters.push_back(c.label);
  p.params = fam.params();
  for (int t = 0; t < fam.size(); ++t) {
    const Cqms& q = fam.member(t);
    std::vector<int> row;
    for (const auto& c : chars) {
      const MultiplicityResult r = multiplicity_raw(q.action(), c, &q.space());
      if (r.deviation > integer_tol || r.value < 0)
        throw QuadratureError("multiplicity of " + c.label + " on " + q.name() + ": not an integer", r.raw);
      p.max_deviation = std::max(p.max_deviation, r.deviation);
      row.push_back(r.value);
    }
    p.mul.push_back(std::move(row));
  }
  const int t0 = fam.t0();
  const auto& base = p.mul[static_cast<size_t>(t0)];
  p.locally_constant = true;
  for (const auto& row : p.mul)
    if (row != base) p.locally_constant = false;
  p.lower_semicontinuous = true;
  for (size_t g = 0; g < chars.size(); ++g) {
    int nb = std::numeric_limits<int>::max();
    if (t0 > 0) nb = std::min(nb, p.mul[static_cast<size_t>(t0 - 1)][g]);
    if (t0 + 1 < fam.size()) nb = std::min(nb, p.mul[static_cast<size_t>(t0 + 1)][g]);
    if (fam.size() > 1 && base[g] > nb) p.lower_semicontinuous = false;
  }
  return p;
}

/// Characters of the group acting on q: Z_q^2 for tori, Z_m for cycles, spins
/// 0..lmax for spheres (lmax < 0: the top spin of q).
inline std::vector<IrrepCharacter> characters_for(const Cqms& q, int lmax = -1) {
  const std::string& f = q.meta().family;
  if (f == "torus" || f == "scalar") return torus_characters(q.group(), static_cast<int>(q.meta().params.at("q")), 2);
  if (f == "sphere") return so3_characters(q.group(), lmax >= 0 ? lmax : static_cast<int>(q.meta().params.at("two_j")));
  if (f == "cycle") {
    const int m = static_cast<int>(q.meta().params.at("m"));
    std::vector<IrrepCharacter> out;
    for (int k = 0; k < m; ++k) {
      IrrepCharacter c{"(" + std::to_string(k) + ")", 1, {}};
      for (int x = 0; x < q.group().size(); ++x)
        c.values.push_back(std::polar(1.0, 2.0 * M_PI * k * q.group().coords[static_cast<size_t>(x)][0] / m));
      out.push_back(std::move(c));
    }
    return out;
  }
  throw DomainError("characters_for: unknown family " + f);
}

/// Characters shared by a family (spheres: up to the largest spin present).
inline std::vector<IrrepCharacter> family_characters(const ParamFamily& fam) {
  int lmax = -1;
  for (int t = 0; t < fam.size(); ++t)
    if (fam.member(t).meta().family == "sphere")
      lmax = std::max(lmax, static_cast<int>(fam.member(t).meta().params.at("two_j")));
  return characters_for(fam.member(fam.t0()), lmax);
}

// ---------------------------------------------------------------------------

struct TrendRow {
  std::string t;
  std::string map_kind;
  double upper = 0.0, lower = 0.0, slack = 0.0;
  bool degraded = false;
  std::string error;  // non-empty when the bound could not be computed
};

struct TrendTable {
  std::vector<TrendRow> rows;
  bool decreasing = false;  // upper nonincreasing as t approaches t0
  bool lower_positive_off_t0 = false;
  bool predicted_convergence = false;  // multiplicity verdict, when supplied
};

/// dist_oq bounds of (A_t, A_{t0}) over the grid. map_kind empty: per-pair
/// default. R <= 0: plain dist_oq.
inline TrendTable convergence_study(const ParamFamily& fam, const std::string& map_kind, const DistOqOptions& opt,
                                    const MultiplicityProfile* mul = nullptr) {
  TrendTable tab;
  const Cqms& B = fam.member(fam.t0());
  for (int t = 0; t < fam.size(); ++t) {
    const Cqms& A = fam.member(t);
    TrendRow row;
    row.t = fam.param(t);
    try {
      row.map_kind = map_kind.empty() ? default_map_kind(A, B) : map_kind;
      const ComparisonMap phi = make_comparison(row.map_kind, A, B, opt.R > 0.0 ? opt.R : radius(A).value);
      const DistOqReport up = dist_oq_upper(A, B, phi, opt);
      const DistOqLowerReport lo = dist_oq_lower(A, B, opt);
      row.upper = up.upper;
      row.slack = up.slack;
      row.lower = lo.value;
      row.degraded = up.degraded;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    tab.rows.push_back(row);
  }
  // Walk outward from t0 on each side; upper must not increase.
  tab.decreasing = true;
  tab.lower_positive_off_t0 = true;
  const int t0 = fam.t0();
  for (int t = 0; t < fam.size(); ++t) {
    const auto& r = tab.rows[static_cast<size_t>(t)];
    if (!r.error.empty()) {
      tab.decreasing = false;
      continue;
    }
    if (t != t0 && !(r.lower > 0.0)) tab.lower_positive_off_t0 = false;
    const int inner = t < t0 ? t + 1 : t - 1;
    if (t == t0) continue;
    if (r.upper < tab.rows[static_cast<size_t>(inner)].upper - 1e-12) tab.decreasing = false;
  }
  if (fam.size() == 1) tab.lower_positive_off_t0 = false;
  if (mul) tab.predicted_convergence = mul->locally_constant;
  return tab;
}

// ---------------------------------------------------------------------------

struct BundledFamily {
  std::string name;
  std::shared_ptr<ParamFamily> family;
  // Criterion (iii) schedule. Nets are budget-capped, so eps stays near half
  // the radius; a section budget of 2048 resolves the tori there.
  std::vector<double> eps_schedule;
  // Every member carries every label of t0, so sections are not truncated.
  bool common_sections = true;
};

inline std::shared_ptr<const Cqms> share(Cqms q) { return std::make_shared<const Cqms>(std::move(q)); }

/// Same member at every grid point. A low-dimensional member so the identity
/// comparison certifies within net budgets.
inline BundledFamily constant_family(int m = 3) {
  auto c = share(commutative_cycle(m));
  return {"constant", std::make_shared<ParamFamily>("constant", std::vector<std::string>{"0", "1", "2"}, 1,
                                                    std::vector<std::shared_ptr<const Cqms>>{c, c, c}),
          {1.2}};
}

/// Fuzzy tori M_q over the grid p = 1..q-1 (theta = 2p/q), t0 = p0.
inline BundledFamily torus_family(int q = 5, std::vector<int> ps = {1, 2}, int p0 = 1) {
  std::vector<std::string> params;
  std::vector<std::shared_ptr<const Cqms>> members;
  int t0 = -1;
  for (size_t k = 0; k < ps.size(); ++k) {
    params.push_back("p=" + std::to_string(ps[k]));
    members.push_back(share(fuzzy_torus(q, ps[k])));
    if (ps[k] == p0) t0 = static_cast<int>(k);
  }
  return {"torus", std::make_shared<ParamFamily>("torus", params, t0, members), {1.2, 1.0}};
}

/// A_{t0} = R e, A_t = M_q for t != t0; sections come from the scalar side.
inline BundledFamily degenerate_family(int q = 3) {
  auto s = share(scalar_torus(q));
  auto m = share(fuzzy_torus(q, 1));
  return {"degenerate", std::make_shared<ParamFamily>("degenerate", std::vector<std::string>{"0", "1", "2"}, 0,
                                                      std::vector<std::shared_ptr<const Cqms>>{s, m, m}),
          {1.2, 1.0}};
}

/// Fuzzy spheres 2j = 1..top, t0 = the top level.
inline BundledFamily sphere_family(int top = 3, const SphereGrid& grid = {}) {
  std::vector<std::string> params;
  std::vector<std::shared_ptr<const Cqms>> members;
  for (int tj = 1; tj <= top; ++tj) {
    params.push_back("2j=" + std::to_string(tj));
    members.push_back(share(fuzzy_sphere(tj, grid)));
  }
  return {"sphere", std::make_shared<ParamFamily>("sphere", params, top - 1, members), {0.6, 0.5}, false};
}

inline BundledFamily bundled_family(const std::string& name, const SphereGrid& grid = {}) {
  if (name == "constant") return constant_family();
  if (name == "torus") return torus_family();
  if (name == "degenerate") return degenerate_family();
  if (name == "sphere") return sphere_family(3, grid);
  throw DomainError("unknown family '" + name + "'");
}

inline std::vector<std::string> bundled_family_names() { return {"constant", "torus", "degenerate", "sphere"}; }

struct AgreementRecord {
  std::string family;
  bool criterion_iii = false;
  bool multiplicity_constant = false;
  bool lower_semicontinuous = false;
  bool agree() const { return criterion_iii == multiplicity_constant; }
};

/// Criterion (iii) over the family's eps schedule against local constancy of
/// the multiplicities.
inline AgreementRecord agreement_check(const BundledFamily& b, int budget = 256) {
  AgreementRecord rec;
  rec.family = b.name;
  const ParamFamily& fam = *b.family;
  const double R = fam.max_radius();
  rec.criterion_iii = criterion_iii_schedule(fam, b.eps_schedule, R, budget).pass();
  const MultiplicityProfile p = multiplicity_profile(fam, family_characters(fam));
  rec.multiplicity_constant = p.locally_constant;
  rec.lower_semicontinuous = p.lower_semicontinuous;
  return rec;
}

}  // namespace qgh
