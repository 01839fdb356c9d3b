// Copyright 2026 The shapeabs Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "shapeabs/dsl.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <functional>
#include <set>

namespace shapeabs {

namespace {

struct BaseSig {
  Op op;
  std::string_view name;
  Type result;
  std::vector<Type> args;
};

const std::vector<BaseSig>& base_functions() {
  static const std::vector<BaseSig> sigs = {
      {Op::Union, "Union", Type::Shape, {Type::Shape, Type::Shape}},
      {Op::SymRef, "SymRef", Type::Shape, {Type::Shape, Type::Axis}},
      {Op::SymTrans,
       "SymTrans",
       Type::Shape,
       {Type::Shape, Type::Axis, Type::Int, Type::Float}},
      {Op::Move, "Move", Type::Shape, {Type::Shape, Type::Float, Type::Float}},
      {Op::Rect, "Rect", Type::Shape, {Type::Float, Type::Float}},
      {Op::Add, "Add", Type::Float, {Type::Float, Type::Float}},
      {Op::Sub, "Sub", Type::Float, {Type::Float, Type::Float}},
      {Op::Mul, "Mul", Type::Float, {Type::Float, Type::Float}},
      {Op::Div, "Div", Type::Float, {Type::Float, Type::Float}},
  };
  return sigs;
}

const BaseSig* base_by_op(Op op) {
  for (const auto& s : base_functions())
    if (s.op == op) return &s;
  return nullptr;
}

const BaseSig* base_by_name(std::string_view name) {
  for (const auto& s : base_functions())
    if (s.name == name) return &s;
  return nullptr;
}

[[noreturn]] void type_error(Type expected, Type found) {
  throw DslError(DslError::Kind::Type,
                 "type error: " + std::string(type_name(expected)) +
                     " expected, " + std::string(type_name(found)) + " found");
}

}  // namespace

bool primitive_in_bounds(const Primitive& p) {
  if (!(p.w > 0.0) || !(p.h > 0.0)) return false;
  const double lim = kSceneBound + kBoundLeniency + 1e-9;
  return std::abs(p.x) + p.w / 2 <= lim && std::abs(p.y) + p.h / 2 <= lim;
}

void validate_scene(const Scene& scene) {
  if (scene.prims.empty() ||
      scene.prims.size() > static_cast<std::size_t>(kMaxScenePrims))
    throw DslError(DslError::Kind::Invalid,
                   "scene '" + scene.id + "' must hold 1..16 primitives");
  for (const auto& p : scene.prims)
    if (!primitive_in_bounds(p))
      throw DslError(DslError::Kind::Invalid,
                     "scene '" + scene.id + "' has an out-of-bounds primitive");
}

std::string_view type_name(Type t) {
  switch (t) {
    case Type::Shape: return "SHAPE";
    case Type::Float: return "FLOAT";
    case Type::Axis: return "AXIS";
    case Type::Int: return "INT";
  }
  return "?";
}

std::string_view op_name(Op op) {
  if (const auto* s = base_by_op(op)) return s->name;
  switch (op) {
    case Op::AxisX: return "AX";
    case Op::AxisY: return "AY";
    case Op::Int: return "INT";
    case Op::Float: return "FLOAT";
    case Op::Param: return "PARAM";
    case Op::Call: return "CALL";
    default: return "?";
  }
}

bool is_parametric_op(Op op) {
  return op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div;
}

bool is_shape_op(Op op) {
  switch (op) {
    case Op::Union:
    case Op::SymRef:
    case Op::SymTrans:
    case Op::Move:
    case Op::Rect:
    case Op::Call: return true;
    default: return false;
  }
}

namespace ex {
Expr lit(double v) {
  Expr e;
  e.op = Op::Float;
  e.value = v;
  return e;
}
Expr integer(int k) {
  Expr e;
  e.op = Op::Int;
  e.index = k;
  return e;
}
Expr axis_x() {
  Expr e;
  e.op = Op::AxisX;
  return e;
}
Expr axis_y() {
  Expr e;
  e.op = Op::AxisY;
  return e;
}
Expr param(int k) {
  Expr e;
  e.op = Op::Param;
  e.index = k;
  return e;
}
static Expr node(Op op, std::vector<Expr> kids) {
  Expr e;
  e.op = op;
  e.children = std::move(kids);
  return e;
}
Expr rect(Expr w, Expr h) { return node(Op::Rect, {std::move(w), std::move(h)}); }
Expr move(Expr s, Expr dx, Expr dy) {
  return node(Op::Move, {std::move(s), std::move(dx), std::move(dy)});
}
Expr symref(Expr s, Expr axis) {
  return node(Op::SymRef, {std::move(s), std::move(axis)});
}
Expr symtrans(Expr s, Expr axis, Expr count, Expr dist) {
  return node(Op::SymTrans,
              {std::move(s), std::move(axis), std::move(count), std::move(dist)});
}
Expr unite(Expr a, Expr b) { return node(Op::Union, {std::move(a), std::move(b)}); }
Expr arith(Op op, Expr a, Expr b) { return node(op, {std::move(a), std::move(b)}); }
Expr call(std::string name, std::vector<Expr> args) {
  Expr e = node(Op::Call, std::move(args));
  e.name = std::move(name);
  return e;
}
}  // namespace ex

// ---------------------------------------------------------------------------
// Library
// ---------------------------------------------------------------------------

const Abstraction* Library::find(std::string_view name) const {
  for (const auto& a : abstractions_)
    if (a.name == name) return &a;
  return nullptr;
}

void Library::add(Abstraction a) {
  if (base_by_name(a.name) || a.name == "AX" || a.name == "AY")
    throw DslError(DslError::Kind::Invalid, "name clashes with a base operator");
  if (find(a.name))
    throw DslError(DslError::Kind::Invalid, "duplicate abstraction " + a.name);
  validate_abstraction(a, this);
  // Keep the id counter ahead of explicitly named Abs_<k> entries.
  if (a.name.rfind("Abs_", 0) == 0) {
    int k = 0;
    auto [p, ec] = std::from_chars(a.name.data() + 4, a.name.data() + a.name.size(), k);
    if (ec == std::errc() && p == a.name.data() + a.name.size())
      next_id_ = std::max(next_id_, k + 1);
  }
  abstractions_.push_back(std::move(a));
}

void Library::remove(std::string_view name) {
  auto it = std::find_if(abstractions_.begin(), abstractions_.end(),
                         [&](const Abstraction& a) { return a.name == name; });
  if (it == abstractions_.end())
    throw DslError(DslError::Kind::UnknownFunction,
                   "cannot remove unknown function " + std::string(name));
  const Abstraction gone = *it;
  abstractions_.erase(it);
  std::function<Expr(const Expr&)> rec = [&](const Expr& e) -> Expr {
    Expr out = e;
    for (auto& c : out.children) c = rec(c);
    if (out.op == Op::Call && out.name == gone.name)
      return rec(substitute(gone.body, out.children));
    return out;
  };
  for (auto& a : abstractions_) a.body = rec(a.body);
}

std::string Library::fresh_name() const {
  int k = next_id_;
  while (find("Abs_" + std::to_string(k))) ++k;
  return "Abs_" + std::to_string(k);
}

namespace {

void collect_direct_params(const Expr& e, bool inside_parametric,
                           std::set<int>& direct) {
  for (const auto& c : e.children) {
    if (c.op == Op::Param) {
      if (!is_parametric_op(e.op)) direct.insert(c.index);
    } else {
      collect_direct_params(c, inside_parametric || is_parametric_op(e.op),
                            direct);
    }
  }
}

}  // namespace

void validate_abstraction(const Abstraction& a, const Library* lib) {
  if (a.name.empty())
    throw DslError(DslError::Kind::Invalid, "abstraction needs a name");
  const Type t = type_of(a.body, lib, a.params);
  if (t != Type::Shape) type_error(Type::Shape, t);
  std::set<int> direct;
  if (a.body.op == Op::Param)
    throw DslError(DslError::Kind::Invalid, "body cannot be a bare parameter");
  collect_direct_params(a.body, false, direct);
  for (std::size_t k = 0; k < a.params.size(); ++k) {
    if (a.params[k] == Type::Shape)
      throw DslError(DslError::Kind::Invalid, "SHAPE parameters are unsupported");
    if (!direct.count(static_cast<int>(k)))
      throw DslError(DslError::Kind::Invalid,
                     a.name + ": parameter P" + std::to_string(k) +
                         " never appears directly in the body");
  }
  if (!(a.omega > 0.0))
    throw DslError(DslError::Kind::Invalid, "omega must be positive");
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

std::string format_float(double v) {
  if (v == 0.0) v = 0.0;  // fold -0
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

namespace {
void print_into(const Expr& e, std::string& out) {
  switch (e.op) {
    case Op::Float: out += format_float(e.value); return;
    case Op::Int: out += std::to_string(e.index); return;
    case Op::AxisX: out += "AX"; return;
    case Op::AxisY: out += "AY"; return;
    case Op::Param:
      out += 'P';
      out += std::to_string(e.index);
      return;
    case Op::Call: out += e.name; break;
    default: out += op_name(e.op); break;
  }
  out += '(';
  for (std::size_t i = 0; i < e.children.size(); ++i) {
    if (i) out += ',';
    print_into(e.children[i], out);
  }
  out += ')';
}
}  // namespace

std::string print(const Expr& e) {
  std::string out;
  print_into(e, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

class Parser {
 public:
  Parser(std::string_view text, const Library* lib,
         std::vector<std::optional<Type>>* params)
      : text_(text), lib_(lib), params_(params) {}

  Expr parse_top(Type expected) {
    Expr e = parse_expr(expected);
    skip_ws();
    if (pos_ != text_.size()) syntax("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void syntax(const std::string& msg) const {
    const std::string where = pos_ >= text_.size()
                                  ? std::string("end-of-input")
                                  : "position " + std::to_string(pos_);
    throw DslError(DslError::Kind::Syntax, "syntax error at " + where + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
            text_[pos_] == '\r'))
      ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c)
      syntax(std::string("expected '") + c + "'");
    ++pos_;
  }

  static bool ident_start(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
  }
  static bool ident_char(char c) {
    return ident_start(c) || (c >= '0' && c <= '9');
  }

  Expr parse_number(Type expected) {
    const std::size_t start = pos_;
    std::size_t end = pos_;
    if (end < text_.size() && (text_[end] == '-' || text_[end] == '+')) ++end;
    bool any = false;
    bool integral = true;
    while (end < text_.size()) {
      char c = text_[end];
      if (c >= '0' && c <= '9') {
        any = true;
      } else if (c == '.' || c == 'e' || c == 'E' ||
                 ((c == '-' || c == '+') &&
                  (text_[end - 1] == 'e' || text_[end - 1] == 'E'))) {
        integral = false;
      } else {
        break;
      }
      ++end;
    }
    if (!any) syntax("malformed number");
    const char* first = text_.data() + start;
    if (*first == '+') ++first;
    if (expected == Type::Int) {
      if (!integral) type_error(Type::Int, Type::Float);
      int k = 0;
      auto [p, ec] = std::from_chars(first, text_.data() + end, k);
      if (ec != std::errc() || p != text_.data() + end) syntax("bad integer");
      pos_ = end;
      return ex::integer(k);
    }
    if (expected != Type::Float) type_error(expected, Type::Float);
    double v = 0.0;
    auto [p, ec] = std::from_chars(first, text_.data() + end, v);
    if (ec != std::errc() || p != text_.data() + end) syntax("bad number");
    pos_ = end;
    return ex::lit(v);
  }

  Expr parse_expr(Type expected) {
    skip_ws();
    if (pos_ >= text_.size()) syntax("expected an expression");
    const char c = text_[pos_];
    if ((c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.')
      return parse_number(expected);
    if (!ident_start(c)) syntax(std::string("unexpected character '") + c + "'");
    const std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    const std::string_view id = text_.substr(start, pos_ - start);

    if (id == "AX" || id == "AY") {
      if (expected != Type::Axis) type_error(expected, Type::Axis);
      return id == "AX" ? ex::axis_x() : ex::axis_y();
    }
    if (params_ && id.size() > 1 && id[0] == 'P' &&
        std::all_of(id.begin() + 1, id.end(),
                    [](char d) { return d >= '0' && d <= '9'; })) {
      const int k = std::stoi(std::string(id.substr(1)));
      if (static_cast<std::size_t>(k) >= params_->size())
        params_->resize(static_cast<std::size_t>(k) + 1);
      auto& slot = (*params_)[static_cast<std::size_t>(k)];
      if (slot && *slot != expected) type_error(expected, *slot);
      slot = expected;
      return ex::param(k);
    }

    if (const auto* sig = base_by_name(id)) {
      if (sig->result != expected) type_error(expected, sig->result);
      Expr e;
      e.op = sig->op;
      parse_args(sig->args, e);
      return e;
    }
    if (lib_) {
      if (const auto* abs = lib_->find(id)) {
        if (expected != Type::Shape) type_error(expected, Type::Shape);
        Expr e;
        e.op = Op::Call;
        e.name = std::string(id);
        parse_args(abs->params, e);
        return e;
      }
    }
    throw DslError(DslError::Kind::UnknownFunction,
                   "unknown function '" + std::string(id) + "'");
  }

  void parse_args(const std::vector<Type>& types, Expr& e) {
    expect('(');
    for (std::size_t i = 0; i < types.size(); ++i) {
      if (i) expect(',');
      e.children.push_back(parse_expr(types[i]));
    }
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ',')
      throw DslError(DslError::Kind::Arity,
                     "too many arguments to " + std::string(print_head(e)));
    expect(')');
  }

  static std::string print_head(const Expr& e) {
    return e.op == Op::Call ? e.name : std::string(op_name(e.op));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  const Library* lib_;
  std::vector<std::optional<Type>>* params_;
};

}  // namespace

Expr parse(std::string_view text, const Library* lib,
           std::vector<std::optional<Type>>* params, Type expected) {
  Parser p(text, lib, params);
  return p.parse_top(expected);
}

// ---------------------------------------------------------------------------
// Typing
// ---------------------------------------------------------------------------

Type type_of(const Expr& e, const Library* lib, std::span<const Type> params) {
  auto check_args = [&](const std::vector<Type>& want) {
    if (e.children.size() != want.size())
      throw DslError(DslError::Kind::Arity,
                     "arity mismatch for " +
                         (e.op == Op::Call ? e.name : std::string(op_name(e.op))));
    for (std::size_t i = 0; i < want.size(); ++i) {
      const Type got = type_of(e.children[i], lib, params);
      if (got != want[i]) type_error(want[i], got);
    }
  };
  switch (e.op) {
    case Op::Float: return Type::Float;
    case Op::Int: return Type::Int;
    case Op::AxisX:
    case Op::AxisY: return Type::Axis;
    case Op::Param:
      if (e.index < 0 || static_cast<std::size_t>(e.index) >= params.size())
        throw DslError(DslError::Kind::Eval,
                       "unbound parameter P" + std::to_string(e.index));
      return params[static_cast<std::size_t>(e.index)];
    case Op::Call: {
      const Abstraction* a = lib ? lib->find(e.name) : nullptr;
      if (!a)
        throw DslError(DslError::Kind::UnknownFunction,
                       "unknown function '" + e.name + "'");
      check_args(a->params);
      return Type::Shape;
    }
    default: {
      const auto* sig = base_by_op(e.op);
      check_args(sig->args);
      return sig->result;
    }
  }
}

// ---------------------------------------------------------------------------
// Substitution / inlining
// ---------------------------------------------------------------------------

Expr substitute(const Expr& body, std::span<const Expr> args) {
  if (body.op == Op::Param) {
    if (body.index < 0 || static_cast<std::size_t>(body.index) >= args.size())
      throw DslError(DslError::Kind::Eval,
                     "unbound parameter P" + std::to_string(body.index));
    return args[static_cast<std::size_t>(body.index)];
  }
  Expr out = body;
  for (auto& c : out.children) c = substitute(c, args);
  return out;
}

Expr inline_calls(const Expr& e, const Library& lib) {
  if (e.op != Op::Call && !uses_calls(e)) return e;
  Expr out = e;
  for (auto& c : out.children) c = inline_calls(c, lib);
  if (out.op == Op::Call) {
    const Abstraction* a = lib.find(out.name);
    if (!a)
      throw DslError(DslError::Kind::UnknownFunction,
                     "unknown abstraction '" + out.name + "'");
    if (a->params.size() != out.children.size())
      throw DslError(DslError::Kind::Arity, "arity mismatch for " + out.name);
    return inline_calls(substitute(a->body, out.children), lib);
  }
  return out;
}

bool uses_calls(const Expr& e) {
  if (e.op == Op::Call) return true;
  return std::any_of(e.children.begin(), e.children.end(),
                     [](const Expr& c) { return uses_calls(c); });
}

void collect_calls(const Expr& e, std::vector<std::string>& out) {
  if (e.op == Op::Call) out.push_back(e.name);
  for (const auto& c : e.children) collect_calls(c, out);
}

std::size_t expr_size(const Expr& e) {
  std::size_t n = 1;
  for (const auto& c : e.children) n += expr_size(c);
  return n;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

double eval_float(const Expr& e) {
  double v = 0.0;
  switch (e.op) {
    case Op::Float: v = e.value; break;
    case Op::Add: v = eval_float(e.children[0]) + eval_float(e.children[1]); break;
    case Op::Sub: v = eval_float(e.children[0]) - eval_float(e.children[1]); break;
    case Op::Mul: v = eval_float(e.children[0]) * eval_float(e.children[1]); break;
    case Op::Div: v = eval_float(e.children[0]) / eval_float(e.children[1]); break;
    case Op::Param:
      throw DslError(DslError::Kind::Eval,
                     "unbound parameter P" + std::to_string(e.index));
    default:
      throw DslError(DslError::Kind::Type,
                     "type error: FLOAT expected, " +
                         std::string(op_name(e.op)) + " found");
  }
  if (!std::isfinite(v))
    throw DslError(DslError::Kind::Eval, "non-finite float value");
  return v;
}

namespace {

bool is_x_axis(const Expr& e) {
  if (e.op == Op::AxisX) return true;
  if (e.op == Op::AxisY) return false;
  if (e.op == Op::Param)
    throw DslError(DslError::Kind::Eval,
                   "unbound parameter P" + std::to_string(e.index));
  throw DslError(DslError::Kind::Type, "type error: AXIS expected");
}

void exec_into(const Expr& e, std::vector<Primitive>& out) {
  switch (e.op) {
    case Op::Rect:
      out.push_back({eval_float(e.children[0]), eval_float(e.children[1]), 0.0, 0.0});
      return;
    case Op::Move: {
      const std::size_t first = out.size();
      exec_into(e.children[0], out);
      const double dx = eval_float(e.children[1]);
      const double dy = eval_float(e.children[2]);
      for (std::size_t i = first; i < out.size(); ++i) {
        out[i].x += dx;
        out[i].y += dy;
      }
      return;
    }
    case Op::SymRef: {
      const std::size_t first = out.size();
      exec_into(e.children[0], out);
      const bool ax = is_x_axis(e.children[1]);
      const std::size_t last = out.size();
      for (std::size_t i = first; i < last; ++i) {
        Primitive p = out[i];
        if (ax)
          p.x = -p.x;
        else
          p.y = -p.y;
        out.push_back(p);
      }
      return;
    }
    case Op::SymTrans: {
      const std::size_t first = out.size();
      exec_into(e.children[0], out);
      const bool ax = is_x_axis(e.children[1]);
      const Expr& ke = e.children[2];
      if (ke.op != Op::Int)
        throw DslError(DslError::Kind::Eval, "SymTrans count must be an integer");
      const int k = ke.index;
      if (k < 1 || k > 4)
        throw DslError(DslError::Kind::Eval, "integer out of [1,4]");
      const double d = eval_float(e.children[3]);
      const std::size_t last = out.size();
      for (int i = 1; i <= k; ++i) {
        const double off = i * (d / k);
        for (std::size_t j = first; j < last; ++j) {
          Primitive p = out[j];
          if (ax)
            p.x += off;
          else
            p.y += off;
          out.push_back(p);
        }
      }
      return;
    }
    case Op::Union:
      exec_into(e.children[0], out);
      exec_into(e.children[1], out);
      return;
    case Op::Call:
      throw DslError(DslError::Kind::UnknownFunction,
                     "call to '" + e.name + "' needs a library to execute");
    case Op::Param:
      throw DslError(DslError::Kind::Eval,
                     "unbound parameter P" + std::to_string(e.index));
    default:
      throw DslError(DslError::Kind::Type,
                     "type error: SHAPE expected, " + std::string(op_name(e.op)) +
                         " found");
  }
}

}  // namespace

std::vector<Primitive> execute(const Expr& e, const Library* lib) {
  std::vector<Primitive> out;
  if (lib && uses_calls(e)) {
    exec_into(inline_calls(e, *lib), out);
  } else {
    exec_into(e, out);
  }
  return out;
}

}  // namespace shapeabs
