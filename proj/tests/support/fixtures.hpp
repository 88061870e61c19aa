#pragma once

#include <string>

#include "pepakit/derivation.hpp"
#include "pepakit/model.hpp"

namespace fixtures {

inline std::string model1(int m, int n, double a = 1.0, double b = 1.0, double d = 1.0) {
  return "a = " + std::to_string(a) + ";\nb = " + std::to_string(b) +
         ";\nd = " + std::to_string(d) +
         ";\n"
         "User1 = (task1, a).User2;\n"
         "User2 = (task2, b).User1;\n"
         "Sever1 = (task1, a).Sever2;\n"
         "Sever2 = (reset, d).Sever1;\n"
         "system User1[" +
         std::to_string(m) + "] <task1> Sever1[" + std::to_string(n) + "];\n";
}

// r'_alpha = 1, r''_alpha = 3, r_alpha = 2 and distinct values elsewhere.
inline std::string model2(int a, int b) {
  return "ra1 = 1.0; ra2 = 3.0; ra = 2.0;\n"
         "rb = 1.0; rb2 = 2.0; rg = 1.5; rg2 = 0.5;\n"
         "P1 = (alpha, ra1).P2 + (alpha, ra2).P3;\n"
         "P2 = (beta, rb).P1 + (beta, rb2).P3;\n"
         "P3 = (gamma, rg).P1;\n"
         "Q1 = (alpha, ra).Q2;\n"
         "Q2 = (gamma, rg2).Q1;\n"
         "system P1[" +
         std::to_string(a) + "] <alpha> Q1[" + std::to_string(b) + "];\n";
}

inline std::string pingpong(double p, double q) {
  return "p = " + std::to_string(p) + ";\nq = " + std::to_string(q) +
         ";\n"
         "Ping = (go, p).Pong;\n"
         "Pong = (back, q).Ping;\n"
         "system Ping[1];\n";
}

inline const char* kSelfLoop = "P = (a, 1.0).P;\nsystem P[3];\n";

// Passive server: the client sets the pace of `serve`.
inline const char* kPassive =
    "Client = (serve, 2.0).Think;\n"
    "Think = (think, 1.0).Client;\n"
    "Server = (serve, infty).Server;\n"
    "system Client[3] <serve> Server[2];\n";

inline pepakit::Derivation derive(const std::string& text) {
  return pepakit::derive_all(pepakit::parse_model(text));
}

}  // namespace fixtures
