#include "spcf/exectree.hpp"

#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "spcf/measure.hpp"
#include "spcf/semantics.hpp"
#include "spcf/typecheck.hpp"

namespace spcf {

namespace {

ExecTree leaf(Term v) {
  auto n = std::make_shared<ExecNode>();
  n->kind = ExecNode::Leaf;
  n->value = std::move(v);
  return n;
}

ExecTree fix_node(ExecTree child) {
  auto n = std::make_shared<ExecNode>();
  n->kind = ExecNode::FixNode;
  n->left = std::move(child);
  return n;
}

ExecTree score_node(ExecTree child, Term guard) {
  auto n = std::make_shared<ExecNode>();
  n->kind = ExecNode::ScoreNode;
  n->left = std::move(child);
  n->value = std::move(guard);
  return n;
}

ExecTree branch(ExecTree l, ExecTree r, Term guard, bool red) {
  auto n = std::make_shared<ExecNode>();
  n->kind = ExecNode::Branch;
  n->left = std::move(l);
  n->right = std::move(r);
  n->value = std::move(guard);
  n->red = red;
  return n;
}

ExecTree choose(ExecNode::Kind kind, ExecTree child, Term guard) {
  auto n = std::make_shared<ExecNode>();
  n->kind = kind;
  n->left = std::move(child);
  n->value = std::move(guard);
  return n;
}

using Fold = std::function<ExecTree(const Term&)>;

ExecTree fold_tree(const ExecTree& t, const Fold& k) {
  switch (t->kind) {
    case ExecNode::Leaf:
      return k(t->value);
    case ExecNode::FixNode:
      return fix_node(fold_tree(t->left, k));
    case ExecNode::ScoreNode:
      return score_node(fold_tree(t->left, k), t->value);
    case ExecNode::Branch:
      return branch(fold_tree(t->left, k), fold_tree(t->right, k), t->value, t->red);
    default:
      throw TreeError("cannot fold a strategy node");
  }
}

struct Builder {
  std::size_t fresh = 0;

  ExecTree eval(const Term& t) {
    if (is_value(t)) {
      if (t->tag == Tag::Fix) throw TreeError("nested recursion is not supported");
      return leaf(t);
    }
    switch (t->tag) {
      case Tag::Sample:
        return leaf(mk_sample_var(fresh++));

      case Tag::App: {
        ExecTree t1 = eval(t->kids[0]);
        return fold_tree(t1, [&](const Term& x) {
          ExecTree t2 = eval(t->kids[1]);
          return fold_tree(t2, [&](const Term& y) -> ExecTree {
            if (x->tag == Tag::HoleMu) return fix_node(leaf(mk_star()));
            if (x->tag == Tag::Lam) return eval(substitute(x->kids[0], {{x->name, y}}));
            if (x->tag == Tag::Fix) throw TreeError("nested recursion is not supported");
            throw TreeError("application of non-function in tree construction");
          });
        });
      }

      case Tag::If: {
        ExecTree tg = eval(t->kids[0]);
        return fold_tree(tg, [&](const Term& g) {
          if (contains_tag(g, Tag::StarValue))
            throw TreeError("recursive outcome reached a guard (progress violation)");
          bool red = contains_tag(g, Tag::UnknownArg);
          ExecTree l = eval(t->kids[1]);
          ExecTree r = eval(t->kids[2]);
          return branch(std::move(l), std::move(r), g, red);
        });
      }

      case Tag::Score: {
        ExecTree tm = eval(t->kids[0]);
        return fold_tree(tm, [&](const Term& v) {
          if (contains_tag(v, Tag::StarValue))
            throw TreeError("recursive outcome reached a score (progress violation)");
          return score_node(leaf(v), v);
        });
      }

      case Tag::Prim: {
        // evaluate arguments left to right, then combine the leaf values
        std::function<ExecTree(std::size_t, std::vector<Term>&)> go = [&](std::size_t i,
                                                                          std::vector<Term>& acc) -> ExecTree {
          if (i == t->kids.size()) {
            for (const auto& v : acc)
              if (v->tag == Tag::StarValue) return leaf(mk_star());
            bool all_const = t->prim.kind == PrimKind::Linear;
            std::vector<Rat> args;
            if (all_const) {
              for (const auto& v : acc) {
                if (v->tag != Tag::Num) {
                  all_const = false;
                  break;
                }
                args.push_back(v->num.lo);
              }
            }
            if (all_const) return leaf(mk_num(prim_eval(t->prim, args)));
            return leaf(mk_boxed_prim(t->prim, acc));
          }
          ExecTree ti = eval(t->kids[i]);
          return fold_tree(ti, [&](const Term& v) {
            acc.push_back(v);
            ExecTree rest = go(i + 1, acc);
            acc.pop_back();
            return rest;
          });
        };
        std::vector<Term> acc;
        return go(0, acc);
      }

      default:
        throw TreeError("unexpected term in tree construction: " + term_to_string(t));
    }
  }
};

}  // namespace

Term instantiate_body(const Term& fixpoint, const Term& arg_value) {
  if (fixpoint->tag != Tag::Fix) throw TreeError("not a fixpoint");
  return substitute(fixpoint->kids[0], {{fixpoint->name, arg_value}, {fixpoint->fun_name, mk_hole_mu()}});
}

BuiltTree build_tree(const Term& fixpoint) {
  if (fixpoint->tag != Tag::Fix) throw TreeError("not a fixpoint");
  if (count_tag(fixpoint->kids[0], Tag::Fix) != 0) throw TreeError("nested recursion is not supported");
  TypePtr ty = typecheck(fixpoint);
  if (ty->kind != SimpleType::Arrow || ty->dom->kind != SimpleType::Real || ty->cod->kind != SimpleType::Real)
    throw TreeError("fixpoint must be first-order (R -> R)");
  Term body = instantiate_body(fixpoint, mk_unknown_arg());
  if (!progress_check(body)) throw TreeError("progress check failed: recursive outcomes may reach a guard");
  Builder b;
  BuiltTree out;
  out.tree = b.eval(body);
  out.var_count = b.fresh;
  return out;
}

namespace {

void collect_vars(const Term& t, std::set<std::size_t>& out) {
  if (t->tag == Tag::SampleVar) out.insert(t->sample_index);
  for (const auto& k : t->kids) collect_vars(k, out);
}

// all sample variables in the subtree (guards, scores, leaf values)
std::set<std::size_t> subtree_vars(const ExecTree& t, bool& ok) {
  std::set<std::size_t> vars;
  if (t->value) collect_vars(t->value, vars);
  if (t->left) {
    auto l = subtree_vars(t->left, ok);
    if (t->kind == ExecNode::Branch && t->red) {
      std::set<std::size_t> guard_vars;
      collect_vars(t->value, guard_vars);
      for (auto v : guard_vars)
        if (l.count(v)) ok = false;
    }
    vars.insert(l.begin(), l.end());
  }
  if (t->right) {
    auto r = subtree_vars(t->right, ok);
    if (t->kind == ExecNode::Branch && t->red) {
      std::set<std::size_t> guard_vars;
      collect_vars(t->value, guard_vars);
      for (auto v : guard_vars)
        if (r.count(v)) ok = false;
    }
    vars.insert(r.begin(), r.end());
  }
  return vars;
}

}  // namespace

bool sufficient_independence(const ExecTree& tree) {
  bool ok = true;
  subtree_vars(tree, ok);
  return ok;
}

std::vector<ExecTree> strategies(const ExecTree& tree) {
  switch (tree->kind) {
    case ExecNode::Leaf:
      return {tree};
    case ExecNode::FixNode: {
      std::vector<ExecTree> out;
      for (auto& c : strategies(tree->left)) out.push_back(fix_node(c));
      return out;
    }
    case ExecNode::ScoreNode: {
      std::vector<ExecTree> out;
      for (auto& c : strategies(tree->left)) out.push_back(score_node(c, tree->value));
      return out;
    }
    case ExecNode::Branch: {
      std::vector<ExecTree> out;
      if (tree->red) {
        for (auto& l : strategies(tree->left)) out.push_back(choose(ExecNode::ChooseLeft, l, tree->value));
        for (auto& r : strategies(tree->right)) out.push_back(choose(ExecNode::ChooseRight, r, tree->value));
      } else {
        for (auto& l : strategies(tree->left))
          for (auto& r : strategies(tree->right)) out.push_back(branch(l, r, tree->value, false));
      }
      return out;
    }
    default:
      throw TreeError("strategies of a strategy");
  }
}

std::size_t tree_rank(const ExecTree& tree) {
  switch (tree->kind) {
    case ExecNode::Leaf:
      return 0;
    case ExecNode::FixNode:
      return 1 + tree_rank(tree->left);
    case ExecNode::ScoreNode:
    case ExecNode::ChooseLeft:
    case ExecNode::ChooseRight:
      return tree_rank(tree->left);
    case ExecNode::Branch:
      return std::max(tree_rank(tree->left), tree_rank(tree->right));
  }
  return 0;
}

namespace {

void paths_rec(const ExecTree& t, std::vector<Constraint>& cur, std::size_t mu, std::size_t var_count,
               std::vector<TreePath>& out) {
  switch (t->kind) {
    case ExecNode::Leaf: {
      TreePath p;
      p.constraints.items = cur;
      p.constraints.var_count = var_count;
      p.mu_count = mu;
      out.push_back(std::move(p));
      return;
    }
    case ExecNode::FixNode:
      paths_rec(t->left, cur, mu + 1, var_count, out);
      return;
    case ExecNode::ScoreNode: {
      if (contains_tag(t->value, Tag::UnknownArg))
        throw TreeError("score condition depends on the unknown argument");
      cur.push_back(Constraint{t->value, Rel::GeqZero});
      paths_rec(t->left, cur, mu, var_count, out);
      cur.pop_back();
      return;
    }
    case ExecNode::ChooseLeft:
    case ExecNode::ChooseRight:
      paths_rec(t->left, cur, mu, var_count, out);
      return;
    case ExecNode::Branch: {
      if (t->red) throw TreeError("red branch in a strategy");
      cur.push_back(Constraint{t->value, Rel::LeqZero});
      paths_rec(t->left, cur, mu, var_count, out);
      cur.pop_back();
      cur.push_back(Constraint{t->value, Rel::GtZero});
      paths_rec(t->right, cur, mu, var_count, out);
      cur.pop_back();
      return;
    }
  }
}

Rat exact_path_measure(const ConstraintSet& cs) {
  for (const auto& c : cs.items) {
    if (!affine_of(c.value)) throw TreeError("non-linear white guard: " + term_to_string(c.value));
  }
  MeasureEstimate m = measure(cs);
  if (m.lower != m.upper) throw TreeError("expected exact measure for linear constraints");
  return m.lower;
}

}  // namespace

std::vector<TreePath> strategy_paths(const ExecTree& strategy, std::size_t var_count) {
  std::vector<TreePath> out;
  std::vector<Constraint> cur;
  paths_rec(strategy, cur, 0, var_count, out);
  return out;
}

Rat path_prob(const ExecTree& strategy, std::size_t var_count, std::size_t n) {
  Rat total(0);
  for (const auto& p : strategy_paths(strategy, var_count)) {
    if (p.mu_count <= n) total += exact_path_measure(p.constraints);
  }
  return total;
}

std::string papprox_to_string(const PApprox& p) {
  if (p.mass.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [n, w] : p.mass) {
    if (!first) out += " + ";
    first = false;
    out += rat_to_string(w) + "*d" + std::to_string(n);
  }
  return out;
}

PApprox p_approx(const BuiltTree& built) {
  PApprox result;
  result.rank = tree_rank(built.tree);
  std::vector<ExecTree> strats = strategies(built.tree);
  if (strats.empty()) throw TreeError("no strategies");
  // cumulative P(S, n) per strategy, then pointwise min
  std::vector<Rat> min_cum(result.rank + 1, Rat(0));
  bool first = true;
  for (const auto& s : strats) {
    std::vector<TreePath> paths = strategy_paths(s, built.var_count);
    std::vector<Rat> cum(result.rank + 1, Rat(0));
    for (const auto& p : paths) {
      Rat w = exact_path_measure(p.constraints);
      for (std::size_t n = p.mu_count; n <= result.rank; ++n) cum[n] += w;
    }
    if (first) {
      min_cum = cum;
      first = false;
    } else {
      for (std::size_t n = 0; n <= result.rank; ++n)
        if (cum[n] < min_cum[n]) min_cum[n] = cum[n];
    }
  }
  Rat prev(0);
  for (std::size_t n = 0; n <= result.rank; ++n) {
    Rat w = min_cum[n] - prev;
    prev = min_cum[n];
    if (w != 0) result.mass[n] = w;
  }
  return result;
}

std::map<std::size_t, double> empirical_counting_pattern(const Term& fixpoint, const Rat& arg,
                                                         std::size_t samples, std::uint64_t seed) {
  Term body = instantiate_body(fixpoint, mk_num(arg));
  std::mt19937_64 rng(seed);
  std::map<std::size_t, std::size_t> tally;
  const std::size_t trace_len = 1024;
  for (std::size_t i = 0; i < samples; ++i) {
    StdTrace tr;
    tr.reserve(trace_len);
    for (std::size_t j = 0; j < trace_len; ++j) {
      std::uint64_t k = rng() >> 12;
      tr.emplace_back(2 * mpz_class(k) + 1, mpz_class(1) << 53);
    }
    CountResult r = run_counting(body, tr, 100000);
    if (r.status == RunStatus::Stuck && r.consumed < tr.size()) {
      // possibly a value with leftover trace: re-run on the exact prefix
      StdTrace exact(tr.begin(), tr.begin() + static_cast<long>(r.consumed));
      r = run_counting(body, exact, 100000);
    }
    if (r.status == RunStatus::Value) ++tally[r.calls];
  }
  std::map<std::size_t, double> out;
  for (const auto& [n, c] : tally) out[n] = static_cast<double>(c) / static_cast<double>(samples);
  return out;
}

std::string tree_to_dot(const ExecTree& tree) {
  std::ostringstream os;
  os << "digraph exec {\n  node [fontname=monospace];\n";
  std::size_t next = 0;
  std::function<std::size_t(const ExecTree&)> rec = [&](const ExecTree& t) -> std::size_t {
    std::size_t id = next++;
    switch (t->kind) {
      case ExecNode::Leaf:
        os << "  n" << id << " [shape=circle,label=\"" << term_to_string(t->value) << "\"];\n";
        break;
      case ExecNode::FixNode: {
        os << "  n" << id << " [shape=box,label=\"rec\"];\n";
        std::size_t c = rec(t->left);
        os << "  n" << id << " -> n" << c << ";\n";
        break;
      }
      case ExecNode::ScoreNode: {
        os << "  n" << id << " [shape=box,label=\"score " << term_to_string(t->value) << "\"];\n";
        std::size_t c = rec(t->left);
        os << "  n" << id << " -> n" << c << ";\n";
        break;
      }
      case ExecNode::Branch: {
        os << "  n" << id << " [shape=circle," << (t->red ? "color=red," : "") << "label=\""
           << term_to_string(t->value) << "\"];\n";
        std::size_t l = rec(t->left);
        std::size_t r = rec(t->right);
        os << "  n" << id << " -> n" << l << " [label=L];\n";
        os << "  n" << id << " -> n" << r << " [label=R];\n";
        break;
      }
      case ExecNode::ChooseLeft:
      case ExecNode::ChooseRight: {
        os << "  n" << id << " [shape=diamond,label=\""
           << (t->kind == ExecNode::ChooseLeft ? "L" : "R") << "\"];\n";
        std::size_t c = rec(t->left);
        os << "  n" << id << " -> n" << c << ";\n";
        break;
      }
    }
    return id;
  };
  rec(tree);
  os << "}\n";
  return os.str();
}

}  // namespace spcf
