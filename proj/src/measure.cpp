#include "spcf/measure.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace spcf {

Polytope unit_box_polytope(std::size_t dim) {
  Polytope p;
  p.dim = dim;
  for (std::size_t i = 0; i < dim; ++i) {
    std::vector<Rat> up(dim, Rat(0)), down(dim, Rat(0));
    up[i] = 1;
    down[i] = -1;
    p.rows.push_back(std::move(up));
    p.rhs.emplace_back(1);
    p.rows.push_back(std::move(down));
    p.rhs.emplace_back(0);
  }
  return p;
}

void add_halfspace(Polytope& p, std::vector<Rat> coeffs, Rat b) {
  if (coeffs.size() != p.dim) throw std::invalid_argument("halfspace dimension mismatch");
  p.rows.push_back(std::move(coeffs));
  p.rhs.push_back(std::move(b));
}

std::optional<Polytope> linearize(const ConstraintSet& cs) {
  Polytope p = unit_box_polytope(cs.var_count);
  for (const auto& c : cs.items) {
    auto af = affine_of(c.value);
    if (!af) return std::nullopt;
    std::vector<Rat> row(cs.var_count, Rat(0));
    for (const auto& [idx, coeff] : af->coeffs) {
      if (idx >= cs.var_count) return std::nullopt;
      row[idx] = coeff;
    }
    switch (c.rel) {
      case Rel::LeqZero:  // V <= 0
        add_halfspace(p, std::move(row), -af->constant);
        break;
      case Rel::GtZero:   // V > 0, closure V >= 0
      case Rel::GeqZero:  // V >= 0
        for (auto& v : row) v = -v;
        add_halfspace(p, std::move(row), af->constant);
        break;
    }
  }
  return p;
}

namespace {

struct Rows {
  std::size_t dim;
  std::vector<std::vector<Rat>> a;
  std::vector<Rat> b;
};

std::string rows_key(const Rows& r) {
  std::vector<std::string> lines;
  lines.reserve(r.a.size());
  for (std::size_t i = 0; i < r.a.size(); ++i) {
    std::string line;
    for (const auto& c : r.a[i]) {
      line += rat_to_string(c);
      line.push_back(',');
    }
    line.push_back('|');
    line += rat_to_string(r.b[i]);
    lines.push_back(std::move(line));
  }
  std::sort(lines.begin(), lines.end());
  std::string key = std::to_string(r.dim) + ";";
  for (auto& l : lines) {
    key += l;
    key.push_back(';');
  }
  return key;
}

// Feasibility/normal form; returns false when certainly empty or flat.
bool normalize(Rows& r) {
  std::map<std::vector<std::string>, std::pair<std::vector<Rat>, Rat>> canon;
  for (std::size_t i = 0; i < r.a.size(); ++i) {
    std::size_t j0 = r.dim;
    for (std::size_t j = 0; j < r.dim; ++j) {
      if (r.a[i][j] != 0) {
        j0 = j;
        break;
      }
    }
    if (j0 == r.dim) {
      if (r.b[i] < 0) return false;  // 0 <= b violated
      continue;
    }
    Rat scale = abs(r.a[i][j0]);
    std::vector<Rat> row = r.a[i];
    for (auto& v : row) v /= scale;
    Rat rhs = r.b[i] / scale;
    std::vector<std::string> key;
    key.reserve(row.size());
    for (const auto& v : row) key.push_back(rat_to_string(v));
    auto it = canon.find(key);
    if (it == canon.end()) {
      canon.emplace(std::move(key), std::make_pair(std::move(row), std::move(rhs)));
    } else if (rhs < it->second.second) {
      it->second.second = rhs;
    }
  }
  // implicit equalities / infeasible opposite pairs
  for (const auto& [key, rowb] : canon) {
    std::vector<std::string> neg;
    neg.reserve(key.size());
    for (const auto& v : rowb.first) neg.push_back(rat_to_string(-v));
    auto it = canon.find(neg);
    if (it != canon.end()) {
      if (rowb.second + it->second.second <= 0) return false;  // empty or flat
    }
  }
  // variable bounds from single-variable rows, then prune/detect by interval
  std::vector<std::optional<Rat>> lo(r.dim), hi(r.dim);
  for (const auto& [key, rowb] : canon) {
    (void)key;
    std::size_t nz = 0, jvar = 0;
    for (std::size_t j = 0; j < r.dim; ++j) {
      if (rowb.first[j] != 0) {
        ++nz;
        jvar = j;
      }
    }
    if (nz != 1) continue;
    if (rowb.first[jvar] > 0) {
      Rat u = rowb.second / rowb.first[jvar];
      if (!hi[jvar] || u < *hi[jvar]) hi[jvar] = u;
    } else {
      Rat l = rowb.second / rowb.first[jvar];
      if (!lo[jvar] || l > *lo[jvar]) lo[jvar] = l;
    }
  }
  Rows out;
  out.dim = r.dim;
  for (auto& [key, rowb] : canon) {
    (void)key;
    bool have_bounds = true;
    Rat maxv(0), minv(0);
    for (std::size_t j = 0; j < r.dim && have_bounds; ++j) {
      const Rat& c = rowb.first[j];
      if (c == 0) continue;
      if (c > 0) {
        if (!hi[j] || !lo[j]) have_bounds = false;
        else {
          maxv += c * *hi[j];
          minv += c * *lo[j];
        }
      } else {
        if (!hi[j] || !lo[j]) have_bounds = false;
        else {
          maxv += c * *lo[j];
          minv += c * *hi[j];
        }
      }
    }
    if (have_bounds) {
      if (minv > rowb.second) return false;        // infeasible
      std::size_t nz = 0;
      for (std::size_t j = 0; j < r.dim; ++j)
        if (rowb.first[j] != 0) ++nz;
      if (nz > 1 && maxv <= rowb.second) continue;  // redundant over the bounds
    }
    out.a.push_back(std::move(rowb.first));
    out.b.push_back(std::move(rowb.second));
  }
  r = std::move(out);
  return true;
}

Rat volume_rec(Rows rows, std::unordered_map<std::string, Rat>& memo) {
  if (!normalize(rows)) return Rat(0);
  if (rows.dim == 0) return Rat(1);  // feasible point
  if (rows.dim == 1) {
    std::optional<Rat> lo, hi;
    for (std::size_t i = 0; i < rows.a.size(); ++i) {
      const Rat& c = rows.a[i][0];
      if (c > 0) {
        Rat u = rows.b[i] / c;
        if (!hi || u < *hi) hi = u;
      } else if (c < 0) {
        Rat l = rows.b[i] / c;
        if (!lo || l > *lo) lo = l;
      }
    }
    if (!lo || !hi) throw std::logic_error("unbounded 1-d polytope");
    Rat w = *hi - *lo;
    return w > 0 ? w : Rat(0);
  }

  std::string key = rows_key(rows);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;

  // V = (1/d) * sum_i b_i * vol(face_i) / |a_{i,j(i)}|
  Rat total(0);
  for (std::size_t i = 0; i < rows.a.size(); ++i) {
    if (rows.b[i] == 0) continue;  // contributes b_i * F_i = 0
    // pivot: largest |coefficient|
    std::size_t jp = rows.dim;
    Rat best(0);
    for (std::size_t j = 0; j < rows.dim; ++j) {
      Rat mag = abs(rows.a[i][j]);
      if (mag > best) {
        best = mag;
        jp = j;
      }
    }
    if (jp == rows.dim) continue;  // all-zero row (kept only if b >= 0)
    Rows face;
    face.dim = rows.dim - 1;
    const auto& ai = rows.a[i];
    for (std::size_t l = 0; l < rows.a.size(); ++l) {
      if (l == i) continue;
      const auto& al = rows.a[l];
      Rat factor = al[jp] / ai[jp];
      std::vector<Rat> row;
      row.reserve(face.dim);
      for (std::size_t j = 0; j < rows.dim; ++j) {
        if (j == jp) continue;
        row.push_back(al[j] - factor * ai[j]);
      }
      face.a.push_back(std::move(row));
      face.b.push_back(rows.b[l] - factor * rows.b[i]);
    }
    Rat fvol = volume_rec(std::move(face), memo);
    if (fvol != 0) total += rows.b[i] * fvol / abs(ai[jp]);
  }
  total /= static_cast<long>(rows.dim);
  if (total < 0) total = 0;  // exact cancellation can land at 0, never below
  memo.emplace(std::move(key), total);
  return total;
}

}  // namespace

Rat volume_exact(const Polytope& p) {
  Rows rows;
  rows.dim = p.dim;
  rows.a = p.rows;
  rows.b = p.rhs;
  std::unordered_map<std::string, Rat> memo;
  return volume_rec(std::move(rows), memo);
}

std::vector<ConstraintSet> split_components(const ConstraintSet& cs) {
  // union-find over constraint indices keyed by shared variables
  std::vector<std::size_t> parent(cs.items.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::map<std::size_t, std::size_t> var_owner;
  std::function<void(const Term&, std::set<std::size_t>&)> vars_of = [&](const Term& t, std::set<std::size_t>& out) {
    if (t->tag == Tag::SampleVar) out.insert(t->sample_index);
    for (const auto& k : t->kids) vars_of(k, out);
  };
  for (std::size_t i = 0; i < cs.items.size(); ++i) {
    std::set<std::size_t> vs;
    vars_of(cs.items[i].value, vs);
    for (std::size_t v : vs) {
      auto it = var_owner.find(v);
      if (it == var_owner.end()) {
        var_owner[v] = i;
      } else {
        parent[find(i)] = find(it->second);
      }
    }
  }
  std::map<std::size_t, ConstraintSet> groups;
  for (std::size_t i = 0; i < cs.items.size(); ++i) {
    auto& g = groups[find(i)];
    g.var_count = cs.var_count;
    g.trivially_unsat = false;
    g.items.push_back(cs.items[i]);
  }
  std::vector<ConstraintSet> out;
  out.reserve(groups.size());
  for (auto& [k, g] : groups) {
    (void)k;
    out.push_back(std::move(g));
  }
  return out;
}

namespace {

std::vector<std::size_t> constrained_vars(const ConstraintSet& cs) {
  std::set<std::size_t> vs;
  std::function<void(const Term&)> rec = [&](const Term& t) {
    if (t->tag == Tag::SampleVar) vs.insert(t->sample_index);
    for (const auto& k : t->kids) rec(k);
  };
  for (const auto& c : cs.items) rec(c.value);
  return {vs.begin(), vs.end()};
}

// Remaps a component's constraints onto dense local variable indices.
ConstraintSet localize(const ConstraintSet& cs, const std::vector<std::size_t>& vars,
                       std::map<std::size_t, std::size_t>& to_local) {
  to_local.clear();
  for (std::size_t i = 0; i < vars.size(); ++i) to_local[vars[i]] = i;
  std::function<Term(const Term&)> remap = [&](const Term& t) -> Term {
    if (t->tag == Tag::SampleVar) return mk_sample_var(to_local.at(t->sample_index));
    if (t->kids.empty()) return t;
    TermNode n = *t;
    for (auto& k : n.kids) k = remap(k);
    return std::make_shared<const TermNode>(std::move(n));
  };
  ConstraintSet out;
  out.var_count = vars.size();
  for (const auto& c : cs.items) out.items.push_back(Constraint{remap(c.value), c.rel});
  return out;
}

// Single-component sweep over the component's own dimensions.
SweepResult sweep_component(const ConstraintSet& cs, const SweepOptions& opts) {
  SweepResult res;
  if (cs.items.empty()) {
    res.estimate = MeasureEstimate(Rat(1), Rat(1));
    return res;
  }
  std::vector<std::size_t> dims = constrained_vars(cs);
  if (dims.empty()) dims.push_back(0);
  VarBox root(cs.var_count, Interval(Rat(0), Rat(1)));
  Rat lower(0), outside(0);
  std::deque<VarBox> work{std::move(root)};
  auto box_vol = [&](const VarBox& b) {
    Rat v(1);
    for (std::size_t d : dims) v *= b[d].width();
    return v;
  };
  while (!work.empty()) {
    if ((Rat(1) - outside) - lower <= opts.target_gap) break;
    VarBox box = std::move(work.front());
    work.pop_front();
    Rat v = box_vol(box);
    BoxClass cls = check_box(cs, box);
    if (cls == BoxClass::Inside) {
      lower += v;
      if (opts.collect_boxes) res.inside.push_back(std::move(box));
    } else if (cls == BoxClass::Outside) {
      outside += v;
    } else if (res.splits < opts.max_splits) {
      ++res.splits;
      std::size_t best_dim = dims.front();
      Rat best_w(-1);
      for (std::size_t d : dims) {
        if (box[d].width() > best_w) {
          best_w = box[d].width();
          best_dim = d;
        }
      }
      Interval iv = box[best_dim];
      Rat mid = (iv.lo + iv.hi) / 2;
      VarBox left = box, right = std::move(box);
      left[best_dim] = Interval(iv.lo, mid);
      right[best_dim] = Interval(mid, iv.hi);
      work.push_back(std::move(left));
      work.push_back(std::move(right));
    }
    // straddling boxes past the split budget stay unresolved
  }
  res.estimate = MeasureEstimate(lower, Rat(1) - outside);
  return res;
}

}  // namespace

SweepResult sweep_measure(const ConstraintSet& cs, const SweepOptions& opts) {
  if (cs.trivially_unsat) {
    SweepResult r;
    r.estimate = MeasureEstimate(Rat(0), Rat(0));
    return r;
  }
  if (cs.items.empty()) {
    SweepResult r;
    r.estimate = MeasureEstimate(Rat(1), Rat(1));
    return r;
  }
  if (opts.collect_boxes) {
    // Certificate mode sweeps the full box so emitted boxes are complete
    // interval traces; no factorization.
    return sweep_component(cs, opts);
  }
  std::vector<ConstraintSet> comps = split_components(cs);
  SweepOptions per = opts;
  if (comps.size() > 1) per.target_gap = opts.target_gap / static_cast<long>(comps.size());
  SweepResult out;
  out.estimate = MeasureEstimate(Rat(1), Rat(1));
  for (const auto& comp : comps) {
    SweepResult r = sweep_component(comp, per);
    out.splits += r.splits;
    out.estimate.lower *= r.estimate.lower;
    out.estimate.upper *= r.estimate.upper;
  }
  return out;
}

MeasureEstimate measure(const ConstraintSet& cs, const SweepOptions& sweep_opts) {
  if (cs.trivially_unsat) return MeasureEstimate(Rat(0), Rat(0));
  if (cs.var_count == 0) {
    // no samples: constraints are constant; Sat is {eps} or empty
    for (const auto& c : cs.items) {
      VarBox none;
      Interval v = eval_sym(c.value, none);
      bool ok = c.rel == Rel::LeqZero ? v.hi <= 0 : c.rel == Rel::GtZero ? v.lo > 0 : v.lo >= 0;
      if (!ok) return MeasureEstimate(Rat(0), Rat(0));
    }
    return MeasureEstimate(Rat(1), Rat(1));
  }
  std::vector<ConstraintSet> comps = split_components(cs);
  MeasureEstimate out(Rat(1), Rat(1));
  SweepOptions per = sweep_opts;
  if (comps.size() > 1) per.target_gap = sweep_opts.target_gap / static_cast<long>(comps.size());
  for (const auto& comp : comps) {
    std::vector<std::size_t> vars = constrained_vars(comp);
    std::map<std::size_t, std::size_t> to_local;
    ConstraintSet local = localize(comp, vars, to_local);
    if (auto poly = linearize(local)) {
      Rat v = volume_exact(*poly);
      out.lower *= v;
      out.upper *= v;
    } else {
      SweepResult r = sweep_component(local, per);
      out.lower *= r.estimate.lower;
      out.upper *= r.estimate.upper;
    }
  }
  return out;
}

}  // namespace spcf
