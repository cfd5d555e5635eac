#include "xce/program.hpp"

#include <array>
#include <istream>
#include <ostream>
#include <sstream>

namespace xce {

namespace {

struct OpMeta {
  OpKind kind;
  const char* name;
  int arity;
};

const std::array<OpMeta, 28>& op_meta() {
  static const std::array<OpMeta, 28> meta = {{
      {OpKind::neg, "neg", 1},
      {OpKind::sqrt_op, "sqrt", 1},
      {OpKind::sin_op, "sin", 1},
      {OpKind::cos_op, "cos", 1},
      {OpKind::arctan, "arctan", 1},
      {OpKind::log_op, "log", 1},
      {OpKind::exp_op, "exp", 1},
      {OpKind::tanh_op, "tanh", 1},
      {OpKind::abs_op, "abs", 1},
      {OpKind::normcdf, "normcdf", 1},
      {OpKind::log_guard, "logg", 1},
      {OpKind::sqrt_guard, "sqrtg", 1},
      {OpKind::pow_const, "powc", 1},
      {OpKind::scale_const, "scalec", 1},
      {OpKind::add_const, "addc", 1},
      {OpKind::add, "add", 2},
      {OpKind::sub, "sub", 2},
      {OpKind::mul, "mul", 2},
      {OpKind::div, "div", 2},
      {OpKind::div_guard, "divg", 2},
      {OpKind::arctan2, "arctan2", 2},
      {OpKind::matvec, "matvec", 2},
      {OpKind::matmul, "matmul", 2},
      {OpKind::dot, "dot", 2},
      {OpKind::sum_reduce, "sum", 1},
      {OpKind::transpose, "transpose", 1},
      {OpKind::slice, "slice", 1},
      {OpKind::concat, "concat", 2},
      // copy appended below (array sized to fit)
  }};
  return meta;
}

const OpMeta* find_meta(OpKind k) {
  static const OpMeta copy_meta{OpKind::copy, "copy", 1};
  if (k == OpKind::copy) return &copy_meta;
  for (const auto& m : op_meta())
    if (m.kind == k) return &m;
  return nullptr;
}

bool is_scalar(Shape s) { return s.rows == 1 && s.cols == 1; }

}  // namespace

const char* op_name(OpKind k) {
  const OpMeta* m = find_meta(k);
  if (!m) fail(ErrorCode::UnsupportedOp, "unnamed op kind");
  return m->name;
}

OpKind op_from_name(const std::string& name) {
  if (name == "copy") return OpKind::copy;
  for (const auto& m : op_meta())
    if (name == m.name) return m.kind;
  fail(ErrorCode::UnsupportedOp, "unknown op: " + name);
}

bool op_is_unary(OpKind k) { return find_meta(k)->arity == 1; }
bool op_is_binary(OpKind k) { return find_meta(k)->arity == 2; }

Shape shape_of(const Program& p, int ref) {
  if (ref < 0 || ref >= p.n_values()) fail(ErrorCode::ShapeError, "value ref out of range");
  if (ref < static_cast<int>(p.inputs.size()))
    return p.inputs[static_cast<std::size_t>(ref)].second;
  return infer_shape(p, p.ops[static_cast<std::size_t>(ref - p.inputs.size())]);
}

Shape infer_shape(const Program& p, const ElementalOp& op) {
  auto arg = [&](int a) { return shape_of(p, op.args.at(static_cast<std::size_t>(a))); };
  switch (op.kind) {
    case OpKind::neg:
    case OpKind::sqrt_op:
    case OpKind::sin_op:
    case OpKind::cos_op:
    case OpKind::arctan:
    case OpKind::log_op:
    case OpKind::exp_op:
    case OpKind::tanh_op:
    case OpKind::abs_op:
    case OpKind::normcdf:
    case OpKind::log_guard:
    case OpKind::sqrt_guard:
    case OpKind::pow_const:
    case OpKind::scale_const:
    case OpKind::add_const:
    case OpKind::copy:
      return arg(0);
    case OpKind::add:
    case OpKind::sub:
    case OpKind::mul:
    case OpKind::div:
    case OpKind::div_guard:
    case OpKind::arctan2: {
      Shape a = arg(0), b = arg(1);
      if (a == b) return a;
      if (is_scalar(a)) return b;
      if (is_scalar(b)) return a;
      fail(ErrorCode::ShapeError, "binary operands must match or broadcast a scalar");
    }
    case OpKind::matvec: {
      Shape w = arg(0), x = arg(1);
      if (x.cols != 1 || w.cols != x.rows)
        fail(ErrorCode::ShapeError, "matvec expects (m,n) x (n,1)");
      return {w.rows, 1};
    }
    case OpKind::matmul: {
      Shape a = arg(0), b = arg(1);
      if (a.cols != b.rows) fail(ErrorCode::ShapeError, "matmul inner dims differ");
      return {a.rows, b.cols};
    }
    case OpKind::dot: {
      Shape a = arg(0), b = arg(1);
      if (!(a == b) || a.cols != 1) fail(ErrorCode::ShapeError, "dot expects equal vectors");
      return {1, 1};
    }
    case OpKind::sum_reduce:
      return {1, 1};
    case OpKind::transpose: {
      Shape a = arg(0);
      return {a.cols, a.rows};
    }
    case OpKind::slice: {
      Shape a = arg(0);
      if (op.r0 < 0 || op.c0 < 0 || op.rows < 1 || op.cols < 1 ||
          op.r0 + op.rows > a.rows || op.c0 + op.cols > a.cols)
        fail(ErrorCode::ShapeError, "slice window out of bounds");
      return {op.rows, op.cols};
    }
    case OpKind::concat: {
      Shape a = arg(0), b = arg(1);
      if (op.axis == 0) {
        if (a.cols != b.cols) fail(ErrorCode::ShapeError, "concat rows: columns differ");
        return {a.rows + b.rows, a.cols};
      }
      if (a.rows != b.rows) fail(ErrorCode::ShapeError, "concat cols: rows differ");
      return {a.rows, a.cols + b.cols};
    }
  }
  fail(ErrorCode::UnsupportedOp, "unhandled op kind");
}

void validate(const Program& p) {
  for (std::size_t t = 0; t < p.ops.size(); ++t) {
    const ElementalOp& op = p.ops[t];
    const OpMeta* meta = find_meta(op.kind);
    if (!meta) fail(ErrorCode::UnsupportedOp, "bad op kind");
    if (static_cast<int>(op.args.size()) != meta->arity)
      fail(ErrorCode::ShapeError, std::string("arity mismatch for ") + meta->name);
    for (int a : op.args)
      if (a < 0 || a >= static_cast<int>(p.inputs.size() + t))
        fail(ErrorCode::ShapeError, "op reads an undefined value");
    infer_shape(p, op);  // throws on bad shapes
  }
  if (p.outputs.empty()) fail(ErrorCode::ShapeError, "program has no outputs");
  for (int ref : p.outputs)
    if (ref < 0 || ref >= p.n_values())
      fail(ErrorCode::ShapeError, "output ref out of range");
}

void save_program(const Program& p, std::ostream& os) {
  for (const auto& [name, shape] : p.inputs)
    os << "input " << name << " " << shape.rows << " " << shape.cols << "\n";
  for (std::size_t t = 0; t < p.ops.size(); ++t) {
    const ElementalOp& op = p.ops[t];
    os << "%" << (p.inputs.size() + t) << " = " << op_name(op.kind);
    for (int a : op.args) os << " %" << a;
    switch (op.kind) {
      case OpKind::pow_const:
      case OpKind::scale_const:
      case OpKind::add_const: {
        std::ostringstream tmp;
        tmp.precision(17);
        tmp << op.c;
        os << " c=" << tmp.str();
        break;
      }
      case OpKind::slice:
        os << " r0=" << op.r0 << " c0=" << op.c0 << " rows=" << op.rows
           << " cols=" << op.cols;
        break;
      case OpKind::concat:
        os << " axis=" << op.axis;
        break;
      default:
        break;
    }
    os << "\n";
  }
  for (int ref : p.outputs) os << "output %" << ref << "\n";
}

namespace {

int parse_ref(const std::string& tok) {
  if (tok.empty() || tok[0] != '%') fail(ErrorCode::ParseError, "expected %ref: " + tok);
  return std::stoi(tok.substr(1));
}

}  // namespace

Program load_program(std::istream& is) {
  Program p;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head) || head.empty() || head[0] == '#') continue;
    if (head == "input") {
      std::string name;
      Shape s;
      if (!(ls >> name >> s.rows >> s.cols))
        fail(ErrorCode::ParseError, "bad input line: " + line);
      p.inputs.emplace_back(name, s);
      continue;
    }
    if (head == "output") {
      std::string tok;
      if (!(ls >> tok)) fail(ErrorCode::ParseError, "bad output line");
      p.outputs.push_back(parse_ref(tok));
      continue;
    }
    // "%K = kind %A [%B] [key=value...]"
    int def = parse_ref(head);
    std::string eq, kind_name;
    if (!(ls >> eq >> kind_name) || eq != "=")
      fail(ErrorCode::ParseError, "bad op line: " + line);
    if (def != p.n_values())
      fail(ErrorCode::ParseError, "op refs must be defined in order");
    ElementalOp op;
    op.kind = op_from_name(kind_name);
    std::string tok;
    while (ls >> tok) {
      if (tok[0] == '%') {
        op.args.push_back(parse_ref(tok));
        continue;
      }
      auto pos = tok.find('=');
      if (pos == std::string::npos)
        fail(ErrorCode::ParseError, "bad attribute: " + tok);
      std::string key = tok.substr(0, pos), val = tok.substr(pos + 1);
      if (key == "c") op.c = std::stod(val);
      else if (key == "r0") op.r0 = std::stoi(val);
      else if (key == "c0") op.c0 = std::stoi(val);
      else if (key == "rows") op.rows = std::stoi(val);
      else if (key == "cols") op.cols = std::stoi(val);
      else if (key == "axis") op.axis = std::stoi(val);
      else fail(ErrorCode::ParseError, "unknown attribute: " + key);
    }
    p.ops.push_back(op);
  }
  validate(p);
  return p;
}

}  // namespace xce
