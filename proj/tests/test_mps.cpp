#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "linkforge/micp/build.hpp"
#include "linkforge/micp/mps.hpp"

using namespace linkforge;
using namespace linkforge::micp;

namespace {

ProblemSpec tiny_spec() {
  ProblemSpec s;
  s.max_nodes = 3;
  s.resolution = 3;
  s.timesteps = 4;
  for (int d = 1; d <= 4; ++d) {
    const double a = M_PI * d / 2;
    s.target.push_back({0.3 * std::cos(a), 0.3 * std::sin(a)});
  }
  return s;
}

bool same_model(const MicpModel& a, const MicpModel& b) {
  return export_model(a) == export_model(b);
}

}  // namespace

TEST_CASE("doubles print shortest and survive the round trip") {
  CHECK(fmt_double(0.1) == "0.1");
  CHECK(fmt_double(-1.0) == "-1");
  CHECK(fmt_double(2 * M_PI) == fmt_double(2 * M_PI));
  for (double v : {0.1, 1e-300, -3.5e17, M_PI, 0.0, 1.0 / 3}) {
    const std::string s = fmt_double(v);
    double back;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == v);
  }
}

TEST_CASE("export parses back to an identical model, byte for byte") {
  auto [model, layout] = build_model(tiny_spec());
  const std::string text = export_model(model);
  CHECK(text.rfind("LINKFORGE-MICP 1\n", 0) == 0);
  CHECK(text.find("ENDATA\n") != std::string::npos);

  const MicpModel back = parse_model(text);
  CHECK(export_model(back) == text);  // exact fixed point
  CHECK(back.num_vars() == model.num_vars());
  CHECK(back.linear.size() == model.linear.size());
  CHECK(back.sos.size() == model.sos.size());
  CHECK(back.quads.size() == model.quads.size());
  CHECK(same_model(back, model));
}

TEST_CASE("export is deterministic across rebuilds") {
  auto [m1, l1] = build_model(tiny_spec());
  auto [m2, l2] = build_model(tiny_spec());
  CHECK(export_model(m1) == export_model(m2));
}

TEST_CASE("tiny model export matches the golden snapshot") {
  std::ifstream in(std::string(LF_TEST_DATA_DIR) + "/tiny_model.txt",
                   std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream golden;
  golden << in.rdbuf();
  auto [model, layout] = build_model(tiny_spec());
  CHECK(export_model(model) == golden.str());
}

TEST_CASE("malformed text is rejected") {
  CHECK_THROWS_AS(parse_model(""), std::runtime_error);
  CHECK_THROWS_AS(parse_model("LINKFORGE-MICP 2\n"), std::runtime_error);
  auto [model, layout] = build_model(tiny_spec());
  std::string text = export_model(model);
  text.resize(text.size() / 2);
  CHECK_THROWS(parse_model(text));
}

TEST_CASE("logarithmic encoding replaces SOS sets faithfully") {
  // SOS1 over three unit-bounded vars
  MicpModel m;
  for (int i = 0; i < 3; ++i) m.add_var("v" + std::to_string(i), 0, 1);
  m.sos.push_back({1, {0, 1, 2}});
  MicpModel enc = log_encode_sos(m);
  CHECK(enc.sos.empty());
  CHECK(enc.num_vars() == 5);  // two selector bits

  auto feasible = [&](std::vector<double> x) {
    x.resize(enc.num_vars(), 0.0);
    // try all bit patterns; the relaxed member values stay fixed
    for (int bits = 0; bits < 4; ++bits) {
      x[3] = bits & 1;
      x[4] = (bits >> 1) & 1;
      double worst = 0.0;
      for (const LinRow& r : enc.linear) {
        const double lhs = eval_term(r.coefs, x);
        worst = std::max(worst, r.rel == Rel::LE ? lhs - r.rhs : r.rhs - lhs);
      }
      if (worst <= 1e-12) return true;
    }
    return false;
  };
  CHECK(feasible({1, 0, 0}));
  CHECK(feasible({0, 1, 0}));
  CHECK(feasible({0, 0, 1}));
  CHECK(feasible({0, 0, 0}));
  CHECK_FALSE(feasible({0.5, 0, 0.5}));  // two nonzeros, not SOS1

  // SOS2 over four members: consecutive pairs allowed, gaps not
  MicpModel m2;
  for (int i = 0; i < 4; ++i) m2.add_var("w" + std::to_string(i), 0, 1);
  m2.sos.push_back({2, {0, 1, 2, 3}});
  MicpModel enc2 = log_encode_sos(m2);
  CHECK(enc2.sos.empty());

  auto feas2 = [&](std::vector<double> x) {
    x.resize(enc2.num_vars(), 0.0);
    const int extra = enc2.num_vars() - 4;
    for (int bits = 0; bits < (1 << extra); ++bits) {
      for (int k = 0; k < extra; ++k) x[4 + k] = (bits >> k) & 1;
      double worst = 0.0;
      for (const LinRow& r : enc2.linear) {
        const double lhs = eval_term(r.coefs, x);
        worst = std::max(worst, r.rel == Rel::LE ? lhs - r.rhs : r.rhs - lhs);
      }
      if (worst <= 1e-12) return true;
    }
    return false;
  };
  CHECK(feas2({0.5, 0.5, 0, 0}));
  CHECK(feas2({0, 0.3, 0.7, 0}));
  CHECK(feas2({0, 0, 0.2, 0.8}));
  CHECK(feas2({0, 0, 0, 1}));
  CHECK_FALSE(feas2({0.5, 0, 0.5, 0}));
  CHECK_FALSE(feas2({0.4, 0, 0, 0.6}));
}

TEST_CASE("log-encoded export carries no SOS section") {
  auto [model, layout] = build_model(tiny_spec());
  const std::string text = export_model(model, true);
  CHECK(text.find("\nSOS 0\n") != std::string::npos);
  CHECK(text.find("sosbin_") != std::string::npos);
}
