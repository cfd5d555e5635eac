#include "xce/tasks.hpp"

#include <array>
#include <cmath>

namespace xce {

namespace {

struct Builder {
  Program p;

  int input(const std::string& name, int rows = 1, int cols = 1) {
    p.inputs.emplace_back(name, Shape{rows, cols});
    return static_cast<int>(p.inputs.size()) - 1;
  }
  int emit(ElementalOp op) {
    p.ops.push_back(std::move(op));
    return p.n_values() - 1;
  }
  int un(OpKind k, int a) { return emit({k, {a}}); }
  int bin(OpKind k, int a, int b) { return emit({k, {a, b}}); }

  int add(int a, int b) { return bin(OpKind::add, a, b); }
  int sub(int a, int b) { return bin(OpKind::sub, a, b); }
  int mul(int a, int b) { return bin(OpKind::mul, a, b); }
  int div(int a, int b) { return bin(OpKind::div, a, b); }
  int dot(int a, int b) { return bin(OpKind::dot, a, b); }
  int neg(int a) { return un(OpKind::neg, a); }
  int sqrt(int a) { return un(OpKind::sqrt_op, a); }
  int sin(int a) { return un(OpKind::sin_op, a); }
  int cos(int a) { return un(OpKind::cos_op, a); }
  int log(int a) { return un(OpKind::log_op, a); }
  int exp(int a) { return un(OpKind::exp_op, a); }
  int tanh(int a) { return un(OpKind::tanh_op, a); }
  int abs(int a) { return un(OpKind::abs_op, a); }
  int atan2(int y, int x) { return bin(OpKind::arctan2, y, x); }
  int normcdf(int a) { return un(OpKind::normcdf, a); }
  int sum(int a) { return un(OpKind::sum_reduce, a); }
  int matvec(int w, int x) { return bin(OpKind::matvec, w, x); }
  int scalec(int a, double c) {
    ElementalOp op{OpKind::scale_const, {a}};
    op.c = c;
    return emit(op);
  }
  int addc(int a, double c) {
    ElementalOp op{OpKind::add_const, {a}};
    op.c = c;
    return emit(op);
  }
  int powc(int a, double c) {
    ElementalOp op{OpKind::pow_const, {a}};
    op.c = c;
    return emit(op);
  }
  int slice(int a, int r0, int rows) {
    ElementalOp op{OpKind::slice, {a}};
    op.r0 = r0;
    op.c0 = 0;
    op.rows = rows;
    op.cols = 1;
    return emit(op);
  }
  int concat(int a, int b) {
    ElementalOp op{OpKind::concat, {a, b}};
    op.axis = 0;
    return emit(op);
  }
  void output(int ref) { p.outputs.push_back(ref); }
};

constexpr double kGamma = 1.4;

Program roeflux_1d() {
  Builder b;
  int ul0 = b.input("ul0"), ul1 = b.input("ul1"), ul2 = b.input("ul2");
  int ur0 = b.input("ur0"), ur1 = b.input("ur1"), ur2 = b.input("ur2");

  auto pressure = [&](int u0, int u1, int u2) {
    return b.scalec(b.sub(u2, b.div(b.mul(u1, u1), b.scalec(u0, 2.0))), kGamma - 1.0);
  };
  auto enthalpy = [&](int u0, int u2, int pr) { return b.div(b.add(u2, pr), u0); };

  int vl = b.div(ul1, ul0);
  int pl = pressure(ul0, ul1, ul2);
  int hl = enthalpy(ul0, ul2, pl);
  int vr = b.div(ur1, ur0);
  int pr = pressure(ur0, ur1, ur2);
  int hr = enthalpy(ur0, ur2, pr);

  int du0 = b.sub(ul0, ur0);
  int ulr0 = b.sqrt(b.mul(ul0, ur0));
  int sql = b.sqrt(ul0);
  int sqr = b.sqrt(ur0);
  int w1 = b.add(sql, sqr);  // standard density-weighted average denominator

  int dp = b.sub(pl, pr);
  int dv = b.sub(vl, vr);

  int u = b.div(b.add(b.mul(sql, vl), b.mul(sqr, vr)), w1);
  int h = b.div(b.add(b.mul(sql, hl), b.mul(sqr, hr)), w1);
  int q2 = b.mul(u, u);
  int a2 = b.scalec(b.sub(h, b.scalec(q2, 0.5)), kGamma - 1.0);
  int a = b.sqrt(a2);
  int n = b.mul(ulr0, a);

  int upa = b.add(u, a);
  int uma = b.sub(u, a);
  int lp = b.abs(upa);
  int l = b.abs(u);
  int ln = b.abs(uma);

  int dpn = b.div(dp, n);
  int c0 = b.mul(b.sub(du0, b.div(dp, a2)), l);
  int c1 = b.mul(b.add(dv, dpn), lp);
  int c2 = b.mul(b.sub(dv, dpn), ln);

  auto flux = [&](int u0, int u1, int u2, int prr) {
    int f1 = b.add(prr, b.div(b.mul(u1, u1), u0));
    int f2 = b.mul(b.div(u1, u0), b.add(prr, u2));
    return std::array<int, 3>{u1, f1, f2};
  };
  auto Fl = flux(ul0, ul1, ul2, pl);
  auto Fr = flux(ur0, ur1, ur2, pr);
  int F0 = b.add(Fl[0], Fr[0]);
  int F1 = b.add(Fl[1], Fr[1]);
  int F2 = b.add(Fl[2], Fr[2]);

  int alpha = b.div(ulr0, b.scalec(a, 2.0));
  int ac1 = b.mul(alpha, c1);
  int ac2 = b.mul(alpha, c2);
  int dF0 = b.sub(b.add(c0, ac1), ac2);
  int dF1 = b.sub(b.add(b.mul(c0, u), b.mul(ac1, upa)), b.mul(ac2, uma));
  int ua = b.mul(u, a);
  int dF2 = b.sub(b.add(b.scalec(b.mul(c0, q2), 0.5), b.mul(ac1, b.add(h, ua))),
                  b.mul(ac2, b.sub(h, ua)));

  b.output(b.scalec(b.sub(F0, dF0), 0.5));
  b.output(b.scalec(b.sub(F1, dF1), 0.5));
  b.output(b.scalec(b.sub(F2, dF2), 0.5));
  return b.p;
}

Program roeflux_3d() {
  Builder b;
  int ul0 = b.input("ul0"), ul = b.input("ul", 3), ul4 = b.input("ul4");
  int ur0 = b.input("ur0"), ur = b.input("ur", 3), ur4 = b.input("ur4");

  auto pressure = [&](int u0, int uv, int u4) {
    return b.scalec(b.sub(u4, b.div(b.dot(uv, uv), b.scalec(u0, 2.0))), kGamma - 1.0);
  };
  auto enthalpy = [&](int u0, int u4, int pr) { return b.div(b.add(u4, pr), u0); };

  int du0 = b.sub(ul0, ur0);
  int du = b.sub(ul, ur);
  int du4 = b.sub(ul4, ur4);
  int vl = b.div(ul, ul0);
  int vr = b.div(ur, ur0);

  int sql = b.sqrt(ul0);
  int sqr = b.sqrt(ur0);
  int w1 = b.add(sql, sqr);  // standard density-weighted average denominator
  int t = b.div(b.add(b.mul(sql, vl), b.mul(sqr, vr)), w1);

  int pl = pressure(ul0, ul, ul4);
  int hl = enthalpy(ul0, ul4, pl);
  int pr = pressure(ur0, ur, ur4);
  int hr = enthalpy(ur0, ur4, pr);
  int h = b.div(b.add(b.mul(sql, hl), b.mul(sqr, hr)), w1);

  int q2 = b.dot(t, t);
  int a2 = b.scalec(b.sub(h, b.scalec(q2, 0.5)), kGamma - 1.0);
  int a = b.sqrt(a2);

  int t1 = b.slice(t, 0, 1), t2 = b.slice(t, 1, 1), t3 = b.slice(t, 2, 1);
  int lp = b.add(t1, a);
  int l = t1;
  int lnm = b.sub(t1, a);  // doubles as the remaining eigenvalue

  int du1 = b.slice(du, 0, 1), du2 = b.slice(du, 1, 1), du3 = b.slice(du, 2, 1);

  int c3 = b.mul(l, b.mul(b.scalec(b.powc(a2, -1.0), kGamma - 1.0),
                          b.sub(b.add(b.mul(b.sub(h, q2), du0), b.dot(t, du)), du4)));
  int k1 = b.sub(du0, c3);
  int k2 = b.div(b.sub(du1, b.mul(t1, du0)), a);
  int c0 = b.mul(b.scalec(b.sub(k1, k2), 0.5), lnm);
  int c1 = b.mul(l, b.sub(b.div(du2, t2), du0));
  int c2 = b.mul(l, b.sub(b.div(du3, t3), du1));
  int c4 = b.mul(b.scalec(b.add(k1, k2), 0.5), lp);

  auto flux = [&](int u0, int uv, int u4, int vv, int prr) {
    (void)u0;
    int v1 = b.slice(vv, 0, 1);
    int uvs = b.mul(uv, v1);
    int mid = b.concat(b.add(b.slice(uvs, 0, 1), prr), b.slice(uvs, 1, 2));
    int f0 = b.slice(uv, 0, 1);
    int f4 = b.mul(v1, b.add(prr, u4));
    return std::array<int, 3>{f0, mid, f4};
  };
  auto Fl = flux(ul0, ul, ul4, vl, pl);
  auto Fr = flux(ur0, ur, ur4, vr, pr);
  int F0 = b.add(Fl[0], Fr[0]);
  int Fm = b.add(Fl[1], Fr[1]);
  int F4 = b.add(Fl[2], Fr[2]);

  int dF0 = b.add(b.add(c0, c3), b.mul(c4, lp));
  int dF1 = b.add(b.add(b.mul(c0, lnm), b.mul(c3, t1)), b.mul(c4, lp));
  int dF2 = b.mul(b.add(b.add(b.add(b.add(c0, c1), c2), c3), c4), t2);
  int dF3 = b.mul(b.add(b.add(b.add(c0, c2), c3), c4), t3);
  int t1a = b.mul(t1, a);
  int dF4 = b.add(b.add(b.add(b.add(b.mul(c0, b.sub(h, t1a)), b.mul(c1, b.mul(t2, t2))),
                              b.mul(c2, b.mul(t3, t3))),
                        b.scalec(b.mul(c3, q2), 0.5)),
                  b.mul(c4, b.add(h, t1a)));
  int dFm = b.concat(b.concat(dF1, dF2), dF3);

  b.output(b.scalec(b.sub(F0, dF0), 0.5));
  b.output(b.scalec(b.sub(Fm, dFm), 0.5));
  b.output(b.scalec(b.sub(F4, dF4), 0.5));
  return b.p;
}

Program robotarm_6dof() {
  Builder b;
  int x[7];
  for (int i = 1; i <= 6; ++i) x[i] = b.input("t" + std::to_string(i));
  int c[7], s[7];
  for (int i = 1; i <= 6; ++i) {
    c[i] = b.cos(x[i]);
    s[i] = b.sin(x[i]);
  }
  int s23 = b.add(b.mul(c[2], s[3]), b.mul(s[2], c[3]));
  int c23 = b.sub(b.mul(c[2], c[3]), b.mul(s[2], s[3]));

  int ax = b.add(b.mul(s[5], b.add(b.mul(b.mul(c[1], c23), c[4]), b.mul(s[1], s[4]))),
                 b.mul(b.mul(c[1], s23), c[5]));
  int ay = b.add(b.mul(s[5], b.sub(b.mul(b.mul(s[1], c23), c[4]), b.mul(c[1], s[4]))),
                 b.mul(b.mul(s[1], s23), c[5]));
  int az = b.sub(b.mul(b.mul(s23, c[4]), s[5]), b.mul(c23, c[5]));
  int w = b.add(b.mul(c23, s[5]), b.mul(b.mul(s23, c[4]), c[5]));
  int s234 = b.mul(s23, s[4]);
  int nz = b.sub(b.mul(c[6], w), b.mul(s234, s[6]));
  int oz = b.sub(b.neg(b.mul(s[6], w)), b.mul(s234, c[6]));

  int z = b.atan2(ay, ax);
  int yhat = b.atan2(b.sqrt(b.addc(b.neg(b.mul(az, az)), 1.0)), az);
  int zhat = b.atan2(b.neg(oz), nz);

  int base = b.addc(b.add(b.add(b.scalec(c[2], 890.0), b.scalec(c23, 50.0)),
                          b.scalec(s23, 1035.0)),
                    175.0);
  int x1 = b.scalec(b.add(b.mul(s[5], b.add(b.mul(b.mul(c[1], c23), c[4]), b.mul(s[1], s[4]))),
                          b.mul(b.mul(c[1], s23), c[5])),
                    185.0);
  int px = b.add(x1, b.mul(c[1], base));
  int y1 = b.scalec(b.add(b.mul(s[5], b.add(b.mul(b.mul(c[1], c23), c[4]), b.mul(c[1], s[4]))),
                          b.mul(b.mul(s[1], s23), c[5])),
                    185.0);
  int py = b.add(y1, b.mul(s[1], base));
  int pz = b.addc(b.add(b.sub(b.add(b.scalec(s[2], 890.0), b.scalec(s23, 50.0)),
                              b.scalec(c23, 1035.0)),
                        b.scalec(az, 185.0)),
                  575.0);

  b.output(px);
  b.output(py);
  b.output(pz);
  b.output(z);
  b.output(yhat);
  b.output(zhat);
  return b.p;
}

Program humanheartdipole() {
  Builder b;
  int x[9];
  for (int i = 1; i <= 8; ++i) x[i] = b.input("x" + std::to_string(i));
  // measured constants from the standard data set
  const double s_mx = 0.485, s_my = -0.0019, s_a = -0.0581, s_b = 0.015;
  const double s_c = 0.105, s_d = 0.0406, s_e = 0.167, s_f = -0.399;

  b.output(b.addc(b.add(x[1], x[2]), -s_mx));
  b.output(b.addc(b.add(x[3], x[4]), -s_my));
  b.output(b.addc(b.sub(b.sub(b.add(b.mul(x[5], x[1]), b.mul(x[6], x[2])),
                              b.mul(x[7], x[3])),
                        b.mul(x[8], x[4])),
                  -s_a));
  b.output(b.addc(b.add(b.add(b.add(b.mul(x[7], x[1]), b.mul(x[8], x[2])),
                              b.mul(x[5], x[3])),
                        b.mul(x[6], x[4])),
                  -s_b));
  {
    int d57 = b.sub(b.mul(x[5], x[5]), b.mul(x[7], x[7]));
    int d68 = b.sub(b.mul(x[6], x[6]), b.mul(x[8], x[8]));
    int t1 = b.mul(x[1], d57);
    int t2 = b.scalec(b.mul(b.mul(x[1], x[5]), x[7]), 2.0);
    int t3 = b.mul(x[2], d68);
    int t4 = b.scalec(b.mul(b.mul(x[4], x[6]), x[8]), 2.0);
    b.output(b.addc(b.sub(b.add(b.sub(t1, t2), t3), t4), -s_c));
  }
  {
    int d57 = b.sub(b.mul(x[5], x[5]), b.mul(x[7], x[7]));
    int d68 = b.sub(b.mul(x[6], x[6]), b.mul(x[8], x[8]));
    int t1 = b.mul(x[3], d57);
    int t2 = b.scalec(b.mul(b.mul(x[1], x[5]), x[7]), 2.0);
    int t3 = b.mul(x[4], d68);
    int t4 = b.scalec(b.mul(b.mul(x[2], x[6]), x[8]), 2.0);
    b.output(b.addc(b.add(b.add(b.add(t1, t2), t3), t4), -s_d));
  }
  {
    int x5sq = b.mul(x[5], x[5]), x7sq = b.mul(x[7], x[7]);
    int x6sq = b.mul(x[6], x[6]), x8sq = b.mul(x[8], x[8]);
    int t1 = b.mul(b.mul(x[1], x[5]), b.sub(x5sq, b.scalec(x7sq, 3.0)));
    int t2 = b.mul(b.mul(x[3], x[7]), b.sub(x7sq, b.scalec(x5sq, 3.0)));
    int t3 = b.mul(b.mul(x[2], x[6]), b.sub(x6sq, b.scalec(x8sq, 3.0)));
    int t4 = b.mul(b.mul(x[4], x[8]), b.sub(x8sq, b.scalec(x6sq, 3.0)));
    b.output(b.addc(b.add(b.add(b.add(t1, t2), t3), t4), -s_e));
  }
  {
    int x5sq = b.mul(x[5], x[5]), x7sq = b.mul(x[7], x[7]);
    int x6sq = b.mul(x[6], x[6]), x8sq = b.mul(x[8], x[8]);
    int t1 = b.mul(b.mul(x[3], x[5]), b.sub(x5sq, b.scalec(x7sq, 3.0)));
    int t2 = b.mul(b.mul(x[1], x[7]), b.sub(x7sq, b.scalec(x5sq, 3.0)));
    int t3 = b.mul(b.mul(x[4], x[6]), b.sub(x6sq, b.scalec(x8sq, 3.0)));
    int t4 = b.mul(b.mul(x[2], x[8]), b.sub(x8sq, b.scalec(x6sq, 3.0)));
    b.output(b.addc(b.sub(b.add(b.sub(t1, t2), t3), t4), -s_f));
  }
  return b.p;
}

Program propanecombustion() {
  Builder b;
  int x[12];
  for (int i = 1; i <= 11; ++i) x[i] = b.input("x" + std::to_string(i));
  const double k5 = 1.930e-1, k6 = 2.597e-3, k7 = 3.448e-3;
  const double k8 = 1.799e-5, k9 = 2.155e-4, k10 = 3.846e-5;
  const double rair = 10.0, patm = 40.0;

  int px = b.scalec(b.powc(x[11], -1.0), patm);  // p / x11
  int spx = b.sqrt(px);
  int sq4 = b.sqrt(x[4]);
  int s12 = b.sqrt(b.mul(x[1], x[2]));
  int t47 = b.mul(b.mul(sq4, x[7]), spx);

  b.output(b.addc(b.add(x[1], x[4]), -3.0));
  b.output(b.addc(
      b.add(b.add(b.add(b.add(b.add(b.add(b.scalec(x[1], 2.0), x[2]), x[4]), x[7]), x[8]),
                  x[9]),
            b.scalec(x[10], 2.0)),
      -rair));
  b.output(b.addc(b.add(b.add(b.add(b.scalec(x[2], 2.0), b.scalec(x[5], 2.0)), x[6]), x[7]),
                  -8.0));
  b.output(b.addc(b.add(b.scalec(x[3], 2.0), x[9]), -4.0 * rair));
  b.output(b.add(b.scalec(b.sqrt(b.mul(x[2], x[4])), k5), b.mul(x[1], x[5])));
  b.output(b.sub(b.scalec(s12, k6), t47));
  b.output(b.sub(b.scalec(s12, k7), t47));
  b.output(b.sub(b.scalec(x[1], k8), b.mul(b.mul(x[4], x[8]), px)));
  b.output(b.sub(b.mul(b.scalec(x[1], k9), b.sqrt(x[3])), b.mul(b.mul(x[4], x[9]), spx)));
  b.output(b.sub(b.scalec(b.mul(x[1], x[1]), k10),
                 b.mul(b.mul(b.mul(x[4], x[4]), x[10]), px)));
  int acc = x[11];
  for (int i = 10; i >= 1; --i) acc = b.sub(acc, x[i]);
  b.output(acc);
  return b.p;
}

Program blackscholes() {
  Builder b;
  int s = b.input("S"), k = b.input("K"), r = b.input("r");
  int sig = b.input("sigma"), t = b.input("T");

  int rt = b.mul(r, t);
  int f = b.mul(b.exp(rt), s);
  int st = b.mul(sig, b.sqrt(t));
  int d1 = b.mul(b.powc(st, -1.0),
                 b.add(b.log(b.div(f, k)), b.div(b.mul(sig, sig), b.scalec(t, 2.0))));
  int d2 = b.sub(d1, st);
  int price = b.mul(b.exp(b.neg(rt)),
                    b.sub(b.mul(f, b.normcdf(d1)), b.mul(k, b.normcdf(d2))));
  b.output(price);
  return b.p;
}

Program mlp2() {
  Builder b;
  int x = b.input("x", 4), y = b.input("y", 4);
  int w1 = b.input("W1", 8, 4), b1 = b.input("b1", 8);
  int w2 = b.input("W2", 8, 8), b2 = b.input("b2", 8);
  int w3 = b.input("W3", 4, 8), b3 = b.input("b3", 4);

  int h1 = b.tanh(b.add(b.matvec(w1, x), b1));
  int mu = b.scalec(b.sum(h1), 1.0 / 8.0);
  int cen = b.sub(h1, mu);
  int var = b.scalec(b.sum(b.mul(cen, cen)), 1.0 / 8.0);
  int ln = b.div(cen, b.sqrt(b.addc(var, 1e-5)));
  int h2 = b.tanh(b.add(b.matvec(w2, ln), b2));
  int logits = b.add(b.matvec(w3, h2), b3);
  int loss = b.sub(b.log(b.sum(b.exp(logits))), b.dot(y, logits));
  b.output(loss);
  return b.p;
}

}  // namespace

Program build_task(const std::string& name) {
  if (name == "roeflux_1d") return roeflux_1d();
  if (name == "roeflux_3d") return roeflux_3d();
  if (name == "robotarm_6dof") return robotarm_6dof();
  if (name == "humanheartdipole") return humanheartdipole();
  if (name == "propanecombustion") return propanecombustion();
  if (name == "blackscholes") return blackscholes();
  if (name == "mlp2") return mlp2();
  fail(ErrorCode::UnknownTask, "unknown task: " + name);
}

std::vector<std::string> task_names() {
  return {"roeflux_1d",        "roeflux_3d",   "robotarm_6dof", "humanheartdipole",
          "propanecombustion", "blackscholes", "mlp2"};
}

std::vector<std::vector<double>> task_probe_point(const std::string& name) {
  if (name == "roeflux_1d")
    return {{1.0}, {0.1}, {2.0}, {1.1}, {0.2}, {2.2}};
  if (name == "roeflux_3d")
    return {{1.0}, {0.1, 0.15, 0.05}, {2.0}, {1.1}, {0.2, 0.1, 0.15}, {2.2}};
  if (name == "robotarm_6dof")
    return {{0.3}, {0.5}, {-0.4}, {0.7}, {0.2}, {-0.6}};
  if (name == "humanheartdipole")
    return {{0.3}, {0.4}, {-0.2}, {0.5}, {0.6}, {-0.3}, {0.7}, {0.2}};
  if (name == "propanecombustion")
    return {{1.2}, {0.8}, {1.5}, {1.8}, {0.6}, {0.9}, {1.1}, {0.7}, {1.3}, {0.5}, {11.0}};
  if (name == "blackscholes")
    return {{1.2}, {1.0}, {0.05}, {0.3}, {1.5}};
  if (name == "mlp2") {
    std::vector<std::vector<double>> pt;
    std::mt19937_64 eng(20240901ull);
    auto vec = [&](int n) {
      std::vector<double> v(static_cast<std::size_t>(n));
      for (double& x : v) x = rng_signed(eng);
      return v;
    };
    pt.push_back(vec(4));
    std::vector<double> onehot(4, 0.0);
    onehot[1] = 1.0;
    pt.push_back(onehot);
    pt.push_back(vec(32));  // W1
    pt.push_back(vec(8));
    pt.push_back(vec(64));  // W2
    pt.push_back(vec(8));
    pt.push_back(vec(32));  // W3
    pt.push_back(vec(4));
    return pt;
  }
  fail(ErrorCode::UnknownTask, "unknown task: " + name);
}

}  // namespace xce
