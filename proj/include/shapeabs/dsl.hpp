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

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "shapeabs/weights.hpp"

namespace shapeabs {

// ---------------------------------------------------------------------------
// Scenes
// ---------------------------------------------------------------------------

/// Axis-aligned rectangle given by its size and center.
struct Primitive {
  double w = 0.0;
  double h = 0.0;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Primitive&, const Primitive&) = default;
};

inline constexpr double kSceneBound = 1.0;
inline constexpr double kBoundLeniency = 0.1;
inline constexpr int kMaxScenePrims = 16;

/// True when w,h > 0 and every corner lies in [-1.1, 1.1]^2.
bool primitive_in_bounds(const Primitive& p);

struct Scene {
  std::string id;
  std::vector<Primitive> prims;
};

/// Throws DslError when the scene violates size or bounds invariants.
void validate_scene(const Scene& scene);

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

enum class Type : std::uint8_t { Shape, Float, Axis, Int };

enum class Op : std::uint8_t {
  Union,
  SymRef,
  SymTrans,
  Move,
  Rect,
  Add,
  Sub,
  Mul,
  Div,
  AxisX,
  AxisY,
  Int,
  Float,
  Param,
  Call,
};

std::string_view type_name(Type t);
std::string_view op_name(Op op);
bool is_parametric_op(Op op);  // Add / Sub / Mul / Div
bool is_shape_op(Op op);       // base shape operators and Call

/// Typed term over the shape language. Plain value type.
struct Expr {
  Op op = Op::Float;
  double value = 0.0;  // Float literal
  int index = 0;       // Int literal, or Param slot
  std::string name;    // Call target
  std::vector<Expr> children;

  friend bool operator==(const Expr&, const Expr&) = default;
};

namespace ex {
Expr lit(double v);
Expr integer(int k);
Expr axis_x();
Expr axis_y();
Expr param(int k);
Expr rect(Expr w, Expr h);
Expr move(Expr s, Expr dx, Expr dy);
Expr symref(Expr s, Expr axis);
Expr symtrans(Expr s, Expr axis, Expr count, Expr dist);
Expr unite(Expr a, Expr b);
Expr arith(Op op, Expr a, Expr b);
Expr call(std::string name, std::vector<Expr> args);
}  // namespace ex

// ---------------------------------------------------------------------------
// Library
// ---------------------------------------------------------------------------

struct Abstraction {
  std::string name;
  std::vector<Type> params;
  Expr body;
  double omega = 0.25;
};

class Library {
 public:
  ObjectiveConfig config;

  const std::vector<Abstraction>& abstractions() const { return abstractions_; }
  const Abstraction* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  /// Validates and appends; throws DslError on a duplicate name or an
  /// ill-formed body.
  void add(Abstraction a);

  /// Removes an abstraction. Bodies of later abstractions that call it are
  /// inlined so the library stays closed. Base operators cannot be removed.
  void remove(std::string_view name);

  /// Fresh unique name of the form Abs_<k>.
  std::string fresh_name() const;
  int next_id() const { return next_id_; }
  void set_next_id(int id) { next_id_ = id; }

 private:
  std::vector<Abstraction> abstractions_;
  int next_id_ = 0;
};

/// Checks the direct-occurrence and typing invariants of an abstraction.
void validate_abstraction(const Abstraction& a, const Library* lib);

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class DslError : public std::runtime_error {
 public:
  enum class Kind { Syntax, Type, UnknownFunction, Arity, Eval, Invalid };
  DslError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// ---------------------------------------------------------------------------
// Text format, typing, evaluation
// ---------------------------------------------------------------------------

/// Shortest round-trip decimal representation.
std::string format_float(double v);

std::string print(const Expr& e);

/// Parses prefix functional notation, e.g. `Move(Rect(0.4,0.2),0.1,0.3)`.
/// `lib` resolves abstraction calls. When `params` is non-null, `P<k>`
/// references are accepted; entries that are nullopt are inferred from use,
/// others are checked.
Expr parse(std::string_view text, const Library* lib = nullptr,
           std::vector<std::optional<Type>>* params = nullptr,
           Type expected = Type::Shape);

/// Result type of a well-typed expression; throws DslError otherwise.
Type type_of(const Expr& e, const Library* lib = nullptr,
             std::span<const Type> params = {});

/// Replaces P<k> with args[k].
Expr substitute(const Expr& body, std::span<const Expr> args);

/// Beta-reduces every abstraction call, recursively.
Expr inline_calls(const Expr& e, const Library& lib);

bool uses_calls(const Expr& e);
void collect_calls(const Expr& e, std::vector<std::string>& out);

double eval_float(const Expr& e);

/// Executes a closed SHAPE expression. Calls are inlined through `lib`.
std::vector<Primitive> execute(const Expr& e, const Library* lib = nullptr);

/// Number of nodes in the tree.
std::size_t expr_size(const Expr& e);

}  // namespace shapeabs
