#pragma once

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "linkforge/micp/model.hpp"

namespace linkforge::micp {

// Shortest round-trip decimal; keeps exports byte-stable across runs.
inline std::string fmt_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("fmt_double failed");
  return std::string(buf, p);
}

namespace detail {

inline void put_term(std::ostringstream& os, const LinTerm& t) {
  os << ' ' << t.size();
  for (auto& [i, c] : t) os << ' ' << i << ':' << fmt_double(c);
}

struct Reader {
  std::istringstream in;
  explicit Reader(const std::string& s) : in(s) {}
  std::string word() {
    std::string w;
    if (!(in >> w)) throw std::runtime_error("model parse: unexpected end");
    return w;
  }
  int integer() { return std::stoi(word()); }
  double real() {
    const std::string w = word();
    double v;
    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || p != w.data() + w.size())
      throw std::runtime_error("model parse: bad number '" + w + "'");
    return v;
  }
  LinTerm term() {
    LinTerm t;
    const int n = integer();
    for (int k = 0; k < n; ++k) {
      const std::string w = word();
      const auto colon = w.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error("model parse: bad term '" + w + "'");
      double c;
      auto [p, ec] = std::from_chars(w.data() + colon + 1, w.data() + w.size(), c);
      if (ec != std::errc())
        throw std::runtime_error("model parse: bad coefficient '" + w + "'");
      t.push_back({std::stoi(w.substr(0, colon)), c});
    }
    return t;
  }
  void expect(const std::string& tok) {
    const std::string w = word();
    if (w != tok)
      throw std::runtime_error("model parse: expected '" + tok + "', got '" + w + "'");
  }
};

// Gray-coded logarithmic reformulation of an SOS set using fresh binaries;
// used only for export toward external MILP solvers.
inline void append_log_encoding(MicpModel& m, const SosSet& set, int set_index) {
  const int n = (int)set.vars.size();
  const int slots = set.type == 1 ? n : n - 1;  // codes: members, or segments
  if (slots <= 1) return;
  int bits = 0;
  while ((1 << bits) < slots) ++bits;
  std::vector<int> b(bits);
  for (int k = 0; k < bits; ++k)
    b[k] = m.add_var("sosbin_" + std::to_string(set_index) + "_" + std::to_string(k),
                     0, 1, true);
  auto gray = [](int i) { return i ^ (i >> 1); };
  for (int k = 0; k < bits; ++k) {
    LinTerm ones, zeros;
    double ones_cap = 0, zeros_cap = 0;
    for (int j = 0; j < n; ++j) {
      bool all_one = true, all_zero = true;
      if (set.type == 1) {
        const int code = gray(j);
        all_one = (code >> k) & 1;
        all_zero = !all_one;
      } else {
        // member j touches segments j-1 and j
        for (int seg : {j - 1, j}) {
          if (seg < 0 || seg >= slots) continue;
          if ((gray(seg) >> k) & 1) all_zero = false;
          else all_one = false;
        }
      }
      const double ub = m.variables[set.vars[j]].ub;
      if (all_one) { ones.push_back({set.vars[j], 1.0}); ones_cap += ub; }
      if (all_zero) { zeros.push_back({set.vars[j], 1.0}); zeros_cap += ub; }
    }
    if (!ones.empty()) {
      ones.push_back({b[k], -ones_cap});
      m.linear.push_back({ones, Rel::LE, 0.0});
    }
    if (!zeros.empty()) {
      zeros.push_back({b[k], zeros_cap});
      m.linear.push_back({zeros, Rel::LE, zeros_cap});
    }
  }
}

}  // namespace detail

// Replace every SOS set by its logarithmic binary encoding; the result has no
// SOS sets and the same feasible projection onto the original variables.
inline MicpModel log_encode_sos(const MicpModel& model) {
  MicpModel out = model;
  out.sos.clear();
  for (size_t s = 0; s < model.sos.size(); ++s)
    detail::append_log_encoding(out, model.sos[s], (int)s);
  return out;
}

// Deterministic MPS-style text (ASCII, LF); parse_model inverts it exactly.
inline std::string export_model(const MicpModel& model, bool log_sos = false) {
  const MicpModel* mp = &model;
  MicpModel transformed;
  if (log_sos) {
    transformed = log_encode_sos(model);
    mp = &transformed;
  }
  const MicpModel& m = *mp;
  std::ostringstream os;
  os << "LINKFORGE-MICP 1\n";
  os << "VARS " << m.variables.size() << "\n";
  for (const Variable& v : m.variables)
    os << "V " << v.name << ' ' << fmt_double(v.lb) << ' ' << fmt_double(v.ub)
       << ' ' << (v.binary ? 'B' : 'C') << "\n";
  os << "ROWS " << m.linear.size() << "\n";
  for (const LinRow& r : m.linear) {
    os << "R " << (r.rel == Rel::LE ? "LE" : r.rel == Rel::EQ ? "EQ" : "GE")
       << ' ' << fmt_double(r.rhs);
    detail::put_term(os, r.coefs);
    os << "\n";
  }
  os << "SOS " << m.sos.size() << "\n";
  for (const SosSet& s : m.sos) {
    os << "S " << s.type << ' ' << s.vars.size();
    for (int v : s.vars) os << ' ' << v;
    os << "\n";
  }
  os << "QUADS " << m.quads.size() << "\n";
  for (const QuadCon& q : m.quads) {
    os << "Q " << q.terms.size() << ' ' << fmt_double(q.rhs_const);
    detail::put_term(os, q.rhs_lin);
    os << "\n";
    for (const AffineRow& t : q.terms) {
      os << "T " << fmt_double(t.constant);
      detail::put_term(os, t.coefs);
      os << "\n";
    }
  }
  os << "OBJ " << m.objective.quad.size() << ' ' << fmt_double(m.objective.constant);
  detail::put_term(os, m.objective.lin);
  os << "\n";
  for (auto& [i, j, c] : m.objective.quad)
    os << "QT " << i << ' ' << j << ' ' << fmt_double(c) << "\n";
  os << "ENDATA\n";
  return os.str();
}

inline MicpModel parse_model(const std::string& text) {
  detail::Reader rd(text);
  MicpModel m;
  rd.expect("LINKFORGE-MICP");
  rd.expect("1");
  rd.expect("VARS");
  const int nv = rd.integer();
  for (int i = 0; i < nv; ++i) {
    rd.expect("V");
    Variable v;
    v.name = rd.word();
    v.lb = rd.real();
    v.ub = rd.real();
    v.binary = rd.word() == "B";
    m.variables.push_back(std::move(v));
  }
  rd.expect("ROWS");
  const int nr = rd.integer();
  for (int i = 0; i < nr; ++i) {
    rd.expect("R");
    LinRow r;
    const std::string rel = rd.word();
    r.rel = rel == "LE" ? Rel::LE : rel == "EQ" ? Rel::EQ : Rel::GE;
    r.rhs = rd.real();
    r.coefs = rd.term();
    m.linear.push_back(std::move(r));
  }
  rd.expect("SOS");
  const int ns = rd.integer();
  for (int i = 0; i < ns; ++i) {
    rd.expect("S");
    SosSet s;
    s.type = rd.integer();
    const int n = rd.integer();
    for (int k = 0; k < n; ++k) s.vars.push_back(rd.integer());
    m.sos.push_back(std::move(s));
  }
  rd.expect("QUADS");
  const int nq = rd.integer();
  for (int i = 0; i < nq; ++i) {
    rd.expect("Q");
    QuadCon q;
    const int nt = rd.integer();
    q.rhs_const = rd.real();
    q.rhs_lin = rd.term();
    for (int t = 0; t < nt; ++t) {
      rd.expect("T");
      AffineRow row;
      row.constant = rd.real();
      row.coefs = rd.term();
      q.terms.push_back(std::move(row));
    }
    m.quads.push_back(std::move(q));
  }
  rd.expect("OBJ");
  const int nqt = rd.integer();
  m.objective.constant = rd.real();
  m.objective.lin = rd.term();
  for (int i = 0; i < nqt; ++i) {
    rd.expect("QT");
    const int a = rd.integer(), b = rd.integer();
    m.objective.quad.push_back({a, b, rd.real()});
  }
  rd.expect("ENDATA");
  return m;
}

}  // namespace linkforge::micp
