#include "spcf/typecheck.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace spcf {

TypePtr ty_real() {
  static TypePtr r = std::make_shared<const SimpleType>(SimpleType{SimpleType::Real, nullptr, nullptr});
  return r;
}

TypePtr ty_real_top() {
  static TypePtr r = std::make_shared<const SimpleType>(SimpleType{SimpleType::RealTop, nullptr, nullptr});
  return r;
}

TypePtr ty_arrow(TypePtr dom, TypePtr cod) {
  return std::make_shared<const SimpleType>(SimpleType{SimpleType::Arrow, std::move(dom), std::move(cod)});
}

bool type_equal(const TypePtr& a, const TypePtr& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind) return false;
  if (a->kind != SimpleType::Arrow) return true;
  return type_equal(a->dom, b->dom) && type_equal(a->cod, b->cod);
}

std::string type_to_string(const TypePtr& t) {
  switch (t->kind) {
    case SimpleType::Real:
      return "R";
    case SimpleType::RealTop:
      return "R^T";
    case SimpleType::Arrow: {
      std::string d = type_to_string(t->dom);
      if (t->dom->kind == SimpleType::Arrow) d = "(" + d + ")";
      return d + " -> " + type_to_string(t->cod);
    }
  }
  return "?";
}

namespace {

// Unification types for inference.
struct UTy;
using UPtr = std::shared_ptr<UTy>;

struct UTy {
  enum Kind { Real, Arrow, Var } kind;
  UPtr dom, cod;
  UPtr link;  // union-find parent for Var
};

UPtr u_real() { return std::make_shared<UTy>(UTy{UTy::Real, nullptr, nullptr, nullptr}); }
UPtr u_var() { return std::make_shared<UTy>(UTy{UTy::Var, nullptr, nullptr, nullptr}); }
UPtr u_arrow(UPtr d, UPtr c) { return std::make_shared<UTy>(UTy{UTy::Arrow, std::move(d), std::move(c), nullptr}); }

UPtr find(UPtr t) {
  while (t->kind == UTy::Var && t->link) t = t->link;
  return t;
}

bool occurs(const UPtr& var, UPtr t) {
  t = find(t);
  if (t == var) return true;
  if (t->kind == UTy::Arrow) return occurs(var, t->dom) || occurs(var, t->cod);
  return false;
}

void unify(UPtr a, UPtr b) {
  a = find(a);
  b = find(b);
  if (a == b) return;
  if (a->kind == UTy::Var) {
    if (occurs(a, b)) throw TypeError("infinite type");
    a->link = b;
    return;
  }
  if (b->kind == UTy::Var) {
    unify(b, a);
    return;
  }
  if (a->kind != b->kind) throw TypeError("type mismatch");
  if (a->kind == UTy::Arrow) {
    unify(a->dom, b->dom);
    unify(a->cod, b->cod);
  }
}

UPtr from_simple(const TypePtr& t) {
  if (t->kind == SimpleType::Arrow) return u_arrow(from_simple(t->dom), from_simple(t->cod));
  return u_real();  // R^T does not occur in plain inference
}

TypePtr to_simple(UPtr t) {
  t = find(t);
  switch (t->kind) {
    case UTy::Real:
      return ty_real();
    case UTy::Var:
      return ty_real();  // unconstrained: default R
    case UTy::Arrow:
      return ty_arrow(to_simple(t->dom), to_simple(t->cod));
  }
  return ty_real();
}

UPtr infer(const Term& t, std::map<std::string, UPtr>& env) {
  switch (t->tag) {
    case Tag::Var: {
      auto it = env.find(t->name);
      if (it == env.end()) throw TypeError("unbound variable " + t->name);
      return it->second;
    }
    case Tag::Num:
    case Tag::IntervalNum:
    case Tag::Sample:
    case Tag::SampleVar:
    case Tag::StarValue:
    case Tag::UnknownArg:
      return u_real();
    case Tag::HoleMu:
      return u_arrow(u_real(), u_real());
    case Tag::Lam: {
      UPtr a = u_var();
      auto saved = env.find(t->name) != env.end() ? std::optional<UPtr>(env[t->name]) : std::nullopt;
      env[t->name] = a;
      UPtr b = infer(t->kids[0], env);
      if (saved)
        env[t->name] = *saved;
      else
        env.erase(t->name);
      return u_arrow(a, b);
    }
    case Tag::Fix: {
      UPtr a = u_var(), b = u_var();
      auto savedx = env.find(t->name) != env.end() ? std::optional<UPtr>(env[t->name]) : std::nullopt;
      auto savedf = env.find(t->fun_name) != env.end() ? std::optional<UPtr>(env[t->fun_name]) : std::nullopt;
      env[t->name] = a;
      env[t->fun_name] = u_arrow(a, b);
      UPtr r = infer(t->kids[0], env);
      unify(r, b);
      if (savedx)
        env[t->name] = *savedx;
      else
        env.erase(t->name);
      if (savedf)
        env[t->fun_name] = *savedf;
      else
        env.erase(t->fun_name);
      return u_arrow(a, b);
    }
    case Tag::App: {
      UPtr f = infer(t->kids[0], env);
      UPtr a = infer(t->kids[1], env);
      UPtr r = u_var();
      unify(f, u_arrow(a, r));
      return r;
    }
    case Tag::If: {
      UPtr g = infer(t->kids[0], env);
      unify(g, u_real());
      UPtr a = infer(t->kids[1], env);
      UPtr b = infer(t->kids[2], env);
      unify(a, b);
      return a;
    }
    case Tag::Prim:
    case Tag::BoxedPrim: {
      for (const auto& k : t->kids) unify(infer(k, env), u_real());
      return u_real();
    }
    case Tag::Score: {
      unify(infer(t->kids[0], env), u_real());
      return u_real();
    }
  }
  throw TypeError("unreachable");
}

}  // namespace

TypePtr typecheck(const Term& t, const std::map<std::string, TypePtr>& env) {
  std::map<std::string, UPtr> uenv;
  for (const auto& [k, v] : env) uenv[k] = from_simple(v);
  return to_simple(infer(t, uenv));
}

namespace {

// ---- progress system --------------------------------------------------
//
// Types over the two-point base lattice R <= R^T with the usual arrow
// variance. All queries are of the form "is M derivable at tau"; the
// judgment is upward closed in tau via subsumption, so the checker works
// with candidate lower decorations enumerated from the simple-type shape.

bool subtype(const TypePtr& a, const TypePtr& b) {
  if (a->kind == SimpleType::Real) return b->kind == SimpleType::Real || b->kind == SimpleType::RealTop;
  if (a->kind == SimpleType::RealTop) return b->kind == SimpleType::RealTop;
  if (b->kind != SimpleType::Arrow) return false;
  return subtype(b->dom, a->dom) && subtype(a->cod, b->cod);
}

// All decorations of a simple shape (R positions freely R or R^T).
std::vector<TypePtr> decorations(const TypePtr& shape) {
  if (shape->kind != SimpleType::Arrow) return {ty_real(), ty_real_top()};
  std::vector<TypePtr> out;
  for (const auto& d : decorations(shape->dom))
    for (const auto& c : decorations(shape->cod)) out.push_back(ty_arrow(d, c));
  return out;
}

struct ProgressChecker {
  std::map<const TermNode*, TypePtr> shapes;

  void compute_shapes(const Term& t, std::map<std::string, TypePtr>& env) {
    // records the erased simple type of every node (for App enumeration)
    shapes[t.get()] = typecheck_node(t, env);
  }

  TypePtr typecheck_node(const Term& t, std::map<std::string, TypePtr>& env);

  bool derivable(const Term& t, std::map<std::string, TypePtr>& env, const TypePtr& want);
};

TypePtr ProgressChecker::typecheck_node(const Term& t, std::map<std::string, TypePtr>& env) {
  TypePtr ty;
  switch (t->tag) {
    case Tag::Var:
      ty = env.at(t->name);
      break;
    case Tag::Num:
    case Tag::IntervalNum:
    case Tag::Sample:
    case Tag::SampleVar:
    case Tag::StarValue:
    case Tag::UnknownArg:
      ty = ty_real();
      break;
    case Tag::HoleMu:
      ty = ty_arrow(ty_real(), ty_real());
      break;
    case Tag::Lam: {
      // shape from full inference once, then walk consistently
      TypePtr whole = shapes.count(t.get()) ? shapes.at(t.get()) : nullptr;
      if (!whole) {
        std::map<std::string, TypePtr> e2 = env;
        whole = typecheck(t, e2);
      }
      auto saved = env.find(t->name) != env.end() ? std::optional<TypePtr>(env[t->name]) : std::nullopt;
      env[t->name] = whole->dom;
      typecheck_node(t->kids[0], env);
      if (saved)
        env[t->name] = *saved;
      else
        env.erase(t->name);
      ty = whole;
      break;
    }
    case Tag::Fix: {
      TypePtr whole = shapes.count(t.get()) ? shapes.at(t.get()) : nullptr;
      if (!whole) {
        std::map<std::string, TypePtr> e2 = env;
        whole = typecheck(t, e2);
      }
      auto savedx = env.find(t->name) != env.end() ? std::optional<TypePtr>(env[t->name]) : std::nullopt;
      auto savedf = env.find(t->fun_name) != env.end() ? std::optional<TypePtr>(env[t->fun_name]) : std::nullopt;
      env[t->name] = whole->dom;
      env[t->fun_name] = whole;
      typecheck_node(t->kids[0], env);
      if (savedx)
        env[t->name] = *savedx;
      else
        env.erase(t->name);
      if (savedf)
        env[t->fun_name] = *savedf;
      else
        env.erase(t->fun_name);
      ty = whole;
      break;
    }
    case Tag::App: {
      TypePtr f = typecheck_node(t->kids[0], env);
      typecheck_node(t->kids[1], env);
      if (f->kind != SimpleType::Arrow) throw TypeError("application of non-function");
      ty = f->cod;
      break;
    }
    case Tag::If: {
      typecheck_node(t->kids[0], env);
      TypePtr a = typecheck_node(t->kids[1], env);
      typecheck_node(t->kids[2], env);
      ty = a;
      break;
    }
    case Tag::Prim:
    case Tag::BoxedPrim:
    case Tag::Score:
      for (const auto& k : t->kids) typecheck_node(k, env);
      ty = ty_real();
      break;
  }
  shapes[t.get()] = ty;
  return ty;
}

// Erase R^T decorations back to the plain shape.
TypePtr erase(const TypePtr& t) {
  if (t->kind == SimpleType::Arrow) return ty_arrow(erase(t->dom), erase(t->cod));
  return ty_real();
}

bool ProgressChecker::derivable(const Term& t, std::map<std::string, TypePtr>& env, const TypePtr& want) {
  switch (t->tag) {
    case Tag::Var: {
      auto it = env.find(t->name);
      return it != env.end() && subtype(it->second, want);
    }
    case Tag::Num:
    case Tag::IntervalNum:
    case Tag::Sample:
    case Tag::SampleVar:
    case Tag::UnknownArg:
      return subtype(ty_real(), want);
    case Tag::StarValue:
      return subtype(ty_real_top(), want);
    case Tag::HoleMu:
      return subtype(ty_arrow(ty_real_top(), ty_real_top()), want);
    case Tag::Lam: {
      if (want->kind != SimpleType::Arrow) return false;
      // abs gives alpha -> beta <= want for some alpha >= want->dom
      for (const auto& alpha : decorations(erase(want->dom))) {
        if (!subtype(want->dom, alpha)) continue;
        auto saved = env.find(t->name) != env.end() ? std::optional<TypePtr>(env[t->name]) : std::nullopt;
        env[t->name] = alpha;
        bool ok = derivable(t->kids[0], env, want->cod);
        if (saved)
          env[t->name] = *saved;
        else
          env.erase(t->name);
        if (ok) return true;
      }
      return false;
    }
    case Tag::Fix: {
      if (want->kind != SimpleType::Arrow) return false;
      for (const auto& alpha : decorations(erase(want->dom))) {
        if (!subtype(want->dom, alpha)) continue;
        for (const auto& self : decorations(erase(want))) {
          if (!subtype(self, want)) continue;
          auto savedx = env.find(t->name) != env.end() ? std::optional<TypePtr>(env[t->name]) : std::nullopt;
          auto savedf = env.find(t->fun_name) != env.end() ? std::optional<TypePtr>(env[t->fun_name]) : std::nullopt;
          env[t->name] = alpha;
          env[t->fun_name] = self;
          bool ok = derivable(t->kids[0], env, want->cod);
          if (savedx)
            env[t->name] = *savedx;
          else
            env.erase(t->name);
          if (savedf)
            env[t->fun_name] = *savedf;
          else
            env.erase(t->fun_name);
          if (ok) return true;
        }
      }
      return false;
    }
    case Tag::App: {
      auto it = shapes.find(t->kids[1].get());
      TypePtr shape = it != shapes.end() ? it->second : ty_real();
      for (const auto& alpha : decorations(shape)) {
        if (derivable(t->kids[0], env, ty_arrow(alpha, want)) && derivable(t->kids[1], env, alpha)) return true;
      }
      return false;
    }
    case Tag::If: {
      return derivable(t->kids[0], env, ty_real()) && derivable(t->kids[1], env, want) &&
             derivable(t->kids[2], env, want);
    }
    case Tag::Score:
      return subtype(ty_real(), want) && derivable(t->kids[0], env, ty_real());
    case Tag::Prim:
    case Tag::BoxedPrim: {
      // all arguments at R (result R), or all at R^T (result R^T)
      auto args_at = [&](const TypePtr& at) {
        for (const auto& k : t->kids)
          if (!derivable(k, env, at)) return false;
        return true;
      };
      if (subtype(ty_real(), want) && args_at(ty_real())) return true;
      if (subtype(ty_real_top(), want) && args_at(ty_real_top())) return true;
      return false;
    }
  }
  return false;
}

}  // namespace

bool progress_check(const Term& body) {
  ProgressChecker pc;
  std::map<std::string, TypePtr> shape_env;
  try {
    pc.typecheck_node(body, shape_env);
  } catch (const TypeError&) {
    return false;
  }
  std::map<std::string, TypePtr> env;
  return pc.derivable(body, env, ty_real_top());
}

}  // namespace spcf
