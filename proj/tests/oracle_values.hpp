// Generated by tests/oracles/gen_oracles.py; do not edit.
#pragma once

namespace oracle {

struct SsimCase { int h; int w; int k; double value; };
inline constexpr SsimCase kSsim[] = {
    {16, 20, 0, 0.797109078674577},
    {19, 22, 1, 0.7852304754019712},
    {22, 24, 2, 0.7956029682276389},
    {25, 26, 3, 0.7953347181229415},
    {28, 28, 4, 0.7897645204051266},
    {31, 30, 5, 0.8037123251734407},
    {34, 32, 6, 0.78743708264869},
    {37, 34, 7, 0.7897451434644075},
    {40, 36, 8, 0.7894669893531923},
    {43, 38, 9, 0.7984424743051453},
};

// linear VP schedule, beta 1e-4 .. 0.02, T = 1000
inline constexpr double kVpAbar1 = 0.9999;
inline constexpr double kVpSigma1 = 0.010000500037502575;
inline constexpr double kVpAbar10 = 0.9981052047858344;
inline constexpr double kVpSigma10 = 0.043570543705237386;
inline constexpr double kVpAbar500 = 0.07858724288177824;
inline constexpr double kVpSigma500 = 3.424136619044041;
inline constexpr double kVpAbar1000 = 4.035829765375676e-05;
inline constexpr double kVpSigma1000 = 157.40728081040757;

// two-component GMM, posterior means and responsibilities
struct GmmCase { double x[2]; double sigma; double mean[2]; double resp[2]; double log_density; };
inline constexpr GmmCase kGmm[] = {
    {{0.3, 0.1}, 0.5, {0.17075508904864312, -0.019959309207068066}, {0.5486211278583559, 0.45137887214164407}, -2.8974079907832846},
    {{2.0, -1.0}, 0.1, {1.9652836574460892, -0.9614733277405388}, {0.9999999953670176, 4.632982351410441e-09}, -4.672722000151923},
    {{-0.4, 0.9}, 1.5, {-0.6534960542838582, 0.5982589722083684}, {0.16680344628132282, 0.8331965537186772}, -3.023045027529942},
};

}  // namespace oracle
