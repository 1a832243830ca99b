#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace isp::dsl {

using Int = std::int64_t;
using List = std::vector<Int>;

// A value no instruction can produce; lets a spec ask for the impossible.
struct Marker {
  std::string text;
  friend bool operator==(const Marker&, const Marker&) = default;
};

using Value = std::variant<Int, List, Marker>;

enum class FaultKind { StackUnderflow, TypeMismatch, Overflow, EmptyList, EmptyStack, UnknownOp };

struct Fault {
  FaultKind kind;
  std::size_t position = 0;
  friend bool operator==(const Fault&, const Fault&) = default;
};

using Outcome = std::variant<Value, Fault>;

inline bool is_fault(const Outcome& o) { return std::holds_alternative<Fault>(o); }

enum class Type { Int, List, Marker };

inline Type type_of(const Value& v) {
  if (std::holds_alternative<Int>(v)) return Type::Int;
  if (std::holds_alternative<List>(v)) return Type::List;
  return Type::Marker;
}

enum class Op : std::uint8_t {
  Push0, Push1, Push2, Push3,
  Add, Sub, Mul, Neg, Inc,
  Dup, Swap, Drop, Over,
  Reverse, Sort, Tail, MapInc, FilterPos,
  Length, Sum, Head, Maximum,
  Concat, Cons,
};

inline constexpr std::size_t kOpCount = 24;

inline constexpr std::array<std::string_view, kOpCount> kOpNames = {
    "push0", "push1",   "push2", "push3",   "add",     "sub",        "mul",    "neg",
    "inc",   "dup",     "swap",  "drop",    "over",    "reverse",    "sort",   "tail",
    "map_inc", "filter_pos", "length", "sum", "head", "maximum", "concat", "cons",
};

inline std::string_view name_of(Op op) { return kOpNames[static_cast<std::size_t>(op)]; }

inline std::optional<Op> parse_op(std::string_view name) {
  for (std::size_t i = 0; i < kOpCount; ++i)
    if (kOpNames[i] == name) return static_cast<Op>(i);
  return std::nullopt;
}

/// Alphabet ranked from most to least common, used when sampling
/// corpus programs.
inline std::vector<std::string> ranked_alphabet() {
  return {"dup",  "push1",  "add",     "swap",   "sum",    "length",     "push0", "head",
          "sub",  "reverse", "sort",   "over",   "push2",  "mul",        "tail",  "drop",
          "concat", "map_inc", "maximum", "inc", "filter_pos", "cons",    "neg",   "push3"};
}

// Pops/pushes per op, with Int/List operands. `any` marks polymorphic slots.
struct Signature {
  std::vector<std::optional<Type>> pops;  // top of stack last
};

inline Signature signature(Op op) {
  using T = std::optional<Type>;
  const T I = Type::Int, L = Type::List, A = std::nullopt;
  switch (op) {
    case Op::Push0: case Op::Push1: case Op::Push2: case Op::Push3: return {{}};
    case Op::Add: case Op::Sub: case Op::Mul: return {{I, I}};
    case Op::Neg: case Op::Inc: return {{I}};
    case Op::Dup: case Op::Drop: return {{A}};
    case Op::Swap: case Op::Over: return {{A, A}};
    case Op::Reverse: case Op::Sort: case Op::Tail: case Op::MapInc: case Op::FilterPos:
    case Op::Length: case Op::Sum: case Op::Head: case Op::Maximum: return {{L}};
    case Op::Concat: return {{L, L}};
    case Op::Cons: return {{I, L}};
  }
  return {};
}

/// Static type stack, used to keep generated programs well formed.
class TypeStack {
 public:
  TypeStack() = default;
  explicit TypeStack(std::vector<Type> types) : types_(std::move(types)) {}

  bool accepts(Op op) const {
    const auto sig = signature(op);
    if (sig.pops.size() > types_.size()) return false;
    const std::size_t base = types_.size() - sig.pops.size();
    for (std::size_t k = 0; k < sig.pops.size(); ++k) {
      const Type t = types_[base + k];
      if (t == Type::Marker) return false;
      if (sig.pops[k] && *sig.pops[k] != t) return false;
    }
    return true;
  }

  // Precondition: accepts(op).
  void apply(Op op) {
    const auto n = types_.size();
    switch (op) {
      case Op::Push0: case Op::Push1: case Op::Push2: case Op::Push3:
        types_.push_back(Type::Int); break;
      case Op::Add: case Op::Sub: case Op::Mul:
        types_.pop_back(); break;
      case Op::Neg: case Op::Inc: break;
      case Op::Dup: types_.push_back(types_.back()); break;
      case Op::Swap: std::swap(types_[n - 1], types_[n - 2]); break;
      case Op::Drop: types_.pop_back(); break;
      case Op::Over: types_.push_back(types_[n - 2]); break;
      case Op::Reverse: case Op::Sort: case Op::Tail: case Op::MapInc: case Op::FilterPos: break;
      case Op::Length: case Op::Sum: case Op::Head: case Op::Maximum:
        types_.back() = Type::Int; break;
      case Op::Concat: types_.pop_back(); break;
      case Op::Cons: types_.pop_back(); types_.back() = Type::List; break;
    }
  }

  std::size_t depth() const { return types_.size(); }
  const std::vector<Type>& types() const { return types_; }

 private:
  std::vector<Type> types_;
};

using Program = std::vector<Op>;

inline Program parse_program(const std::vector<std::string>& names) {
  Program p;
  p.reserve(names.size());
  for (const auto& n : names) {
    auto op = parse_op(n);
    if (!op) throw std::invalid_argument("unknown DSL instruction \"" + n + "\"");
    p.push_back(*op);
  }
  return p;
}

inline std::vector<std::string> program_names(const Program& p) {
  std::vector<std::string> out;
  out.reserve(p.size());
  for (Op op : p) out.emplace_back(name_of(op));
  return out;
}

/// True when the program type-checks from the given input types and leaves
/// at least one value on the stack.
inline bool well_formed(const Program& program, const std::vector<Type>& inputs) {
  TypeStack ts(inputs);
  for (Op op : program) {
    if (!ts.accepts(op)) return false;
    ts.apply(op);
  }
  return ts.depth() > 0;
}

namespace detail {
inline bool checked_add(Int a, Int b, Int& out) { return !__builtin_add_overflow(a, b, &out); }
inline bool checked_sub(Int a, Int b, Int& out) { return !__builtin_sub_overflow(a, b, &out); }
inline bool checked_mul(Int a, Int b, Int& out) { return !__builtin_mul_overflow(a, b, &out); }
}  // namespace detail

/// Runs a program on an initial stack holding `inputs` (first input deepest)
/// and returns the top of the final stack. Faults are returned, never thrown.
inline Outcome evaluate(const Program& program, std::span<const Value> inputs) {
  std::vector<Value> st(inputs.begin(), inputs.end());
  std::size_t pc = 0;
  auto fault = [&](FaultKind k) { return Outcome{Fault{k, pc}}; };
  for (; pc < program.size(); ++pc) {
    const Op op = program[pc];
    const auto sig = signature(op);
    if (st.size() < sig.pops.size()) return fault(FaultKind::StackUnderflow);
    const std::size_t base = st.size() - sig.pops.size();
    for (std::size_t k = 0; k < sig.pops.size(); ++k) {
      const Type t = type_of(st[base + k]);
      if (t == Type::Marker || (sig.pops[k] && *sig.pops[k] != t))
        return fault(FaultKind::TypeMismatch);
    }
    auto int_at = [&](std::size_t from_top) -> Int& {
      return std::get<Int>(st[st.size() - 1 - from_top]);
    };
    auto list_at = [&](std::size_t from_top) -> List& {
      return std::get<List>(st[st.size() - 1 - from_top]);
    };
    switch (op) {
      case Op::Push0: st.emplace_back(Int{0}); break;
      case Op::Push1: st.emplace_back(Int{1}); break;
      case Op::Push2: st.emplace_back(Int{2}); break;
      case Op::Push3: st.emplace_back(Int{3}); break;
      case Op::Add: case Op::Sub: case Op::Mul: {
        const Int b = int_at(0), a = int_at(1);
        Int r = 0;
        const bool ok = op == Op::Add   ? detail::checked_add(a, b, r)
                        : op == Op::Sub ? detail::checked_sub(a, b, r)
                                        : detail::checked_mul(a, b, r);
        if (!ok) return fault(FaultKind::Overflow);
        st.pop_back();
        int_at(0) = r;
        break;
      }
      case Op::Neg: {
        Int r = 0;
        if (!detail::checked_sub(0, int_at(0), r)) return fault(FaultKind::Overflow);
        int_at(0) = r;
        break;
      }
      case Op::Inc: {
        Int r = 0;
        if (!detail::checked_add(int_at(0), 1, r)) return fault(FaultKind::Overflow);
        int_at(0) = r;
        break;
      }
      case Op::Dup: st.push_back(st.back()); break;
      case Op::Swap: std::swap(st[st.size() - 1], st[st.size() - 2]); break;
      case Op::Drop: st.pop_back(); break;
      case Op::Over: st.push_back(st[st.size() - 2]); break;
      case Op::Reverse: std::reverse(list_at(0).begin(), list_at(0).end()); break;
      case Op::Sort: std::sort(list_at(0).begin(), list_at(0).end()); break;
      case Op::Tail: {
        auto& l = list_at(0);
        if (l.empty()) return fault(FaultKind::EmptyList);
        l.erase(l.begin());
        break;
      }
      case Op::MapInc:
        for (Int& x : list_at(0))
          if (!detail::checked_add(x, 1, x)) return fault(FaultKind::Overflow);
        break;
      case Op::FilterPos: {
        auto& l = list_at(0);
        l.erase(std::remove_if(l.begin(), l.end(), [](Int x) { return x <= 0; }), l.end());
        break;
      }
      case Op::Length: {
        const auto n = static_cast<Int>(list_at(0).size());
        st.back() = n;
        break;
      }
      case Op::Sum: {
        Int s = 0;
        for (Int x : list_at(0))
          if (!detail::checked_add(s, x, s)) return fault(FaultKind::Overflow);
        st.back() = s;
        break;
      }
      case Op::Head: {
        const auto& l = list_at(0);
        if (l.empty()) return fault(FaultKind::EmptyList);
        const Int x = l.front();  // copy before the list is replaced
        st.back() = x;
        break;
      }
      case Op::Maximum: {
        const auto& l = list_at(0);
        if (l.empty()) return fault(FaultKind::EmptyList);
        const Int x = *std::max_element(l.begin(), l.end());
        st.back() = x;
        break;
      }
      case Op::Concat: {
        List b = std::move(list_at(0));
        st.pop_back();
        auto& a = list_at(0);
        a.insert(a.end(), b.begin(), b.end());
        break;
      }
      case Op::Cons: {
        List xs = std::move(list_at(0));
        st.pop_back();
        const Int x = int_at(0);
        xs.insert(xs.begin(), x);
        st.back() = std::move(xs);
        break;
      }
    }
  }
  if (st.empty()) return fault(FaultKind::EmptyStack);
  return Outcome{std::move(st.back())};
}

inline Outcome evaluate(const Program& program, const std::vector<Value>& inputs) {
  return evaluate(program, std::span<const Value>(inputs));
}

// Integers, integer arrays, or strings (markers).
inline Value value_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return j.get<Int>();
  if (j.is_array()) {
    List l;
    for (const auto& x : j) {
      if (!x.is_number_integer()) throw std::invalid_argument("list elements must be integers");
      l.push_back(x.get<Int>());
    }
    return l;
  }
  if (j.is_string()) return Marker{j.get<std::string>()};
  throw std::invalid_argument("unsupported value " + j.dump());
}

inline nlohmann::json value_to_json(const Value& v) {
  if (auto* i = std::get_if<Int>(&v)) return *i;
  if (auto* l = std::get_if<List>(&v)) return *l;
  return std::get<Marker>(v).text;
}

struct TestCase {
  std::vector<Value> inputs;
  Value output;
};

struct TestCaseSpec {
  std::vector<TestCase> cases;

  std::vector<Type> input_types() const {
    std::vector<Type> out;
    for (const auto& v : cases.front().inputs) out.push_back(type_of(v));
    return out;
  }

  void validate() const {
    if (cases.empty()) throw std::invalid_argument("spec needs at least one test case");
    const auto arity = cases.front().inputs.size();
    const auto types = input_types();
    for (const auto& c : cases) {
      if (c.inputs.size() != arity)
        throw std::invalid_argument("inconsistent input arity across test cases");
      for (std::size_t k = 0; k < arity; ++k)
        if (type_of(c.inputs[k]) != types[k])
          throw std::invalid_argument("inconsistent input types across test cases");
    }
  }
};

// {"cases": [{"inputs": [...], "output": ...}, ...]}
inline TestCaseSpec spec_from_json(const nlohmann::json& j) {
  TestCaseSpec spec;
  if (!j.is_object() || !j.contains("cases") || !j["cases"].is_array())
    throw std::invalid_argument("spec must be an object with a \"cases\" array");
  for (const auto& c : j["cases"]) {
    TestCase tc;
    if (!c.contains("inputs") || !c["inputs"].is_array() || !c.contains("output"))
      throw std::invalid_argument("each case needs \"inputs\" and \"output\"");
    for (const auto& v : c["inputs"]) tc.inputs.push_back(value_from_json(v));
    tc.output = value_from_json(c["output"]);
    spec.cases.push_back(std::move(tc));
  }
  spec.validate();
  return spec;
}

inline nlohmann::json spec_to_json(const TestCaseSpec& spec) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : spec.cases) {
    nlohmann::json in = nlohmann::json::array();
    for (const auto& v : c.inputs) in.push_back(value_to_json(v));
    cases.push_back({{"inputs", in}, {"output", value_to_json(c.output)}});
  }
  return {{"cases", cases}};
}

inline bool passes(const Program& program, const TestCaseSpec& spec) {
  for (const auto& c : spec.cases) {
    const auto out = evaluate(program, c.inputs);
    if (is_fault(out) || std::get<Value>(out) != c.output) return false;
  }
  return true;
}

}  // namespace isp::dsl
