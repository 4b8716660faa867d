#pragma once
// generated by tests/oracles/gen_oracles.py (mpmath, 30 digits); do not edit

namespace oracle {

struct Gamma { double re, im, g_re, g_im, lg_re; };
inline constexpr Gamma kGamma[] = {
    {5.0e-1, 0.0, 1.7724538509055160273, 0.0, 5.7236494292470008707e-1},
    {3.7000000000000001776, 0.0, 4.1706517837966040301, 0.0, 1.4280723266653881292},
    {-2.5, 0.0, -9.4530872048294188123e-1, 0.0, -5.6243716497674050673e-2},
    {2.999999999999999889e-1, 2.0, 5.746533756958803346e-2, -7.4984912582646138176e-2, -2.3594493559375710212},
    {-3.2000000000000001776, 1.1000000000000000888, -2.2128397519464269153e-2, 2.0288966421124622127e-2, -3.5058316831751919461},
    {1.25e+1, -7.0, 9.0791512712893088783e+6, 1.7479525032485030136e+7, 1.6795967843201039626e+1},
    {1.0, 3.0e+1, -3.9764735612004935077e-20, -2.5036452591980261356e-20, -4.4504352579811148147e+1},
    {-7.5e-1, -5.0e-1, -1.2803770226673409458, -8.8951655373087322454e-1, 4.4407010279754203821e-1},
    {4.025e+1, 3.0, 2.5205871582761819165e+45, -4.5635455316462766135e+46, 1.0743853715309282918e+2},
};

struct MellinPoint { int d; double alpha, s, re, im; double h_re, h_im, f_re, f_im; };
inline constexpr MellinPoint kMellin[] = {
    {2, 0.5, 0.75, 1.1999999999999999556, 0.0, 8.9784768119179847865e-1, 0.0, 4.0794585676131337202, 0.0},
    {2, 0.25, 0.5, 1.5, 3.0, 3.1990373524696577127e-2, 1.2444653000030530521e-2, 9.4509812022547390544e-2, -2.2933475895154353125e-33},
    {3, 0.75, 1.2, 1.8999999999999999112, -2.0, 1.1830763057372122567e-1, 4.2570977668579529113e-2, 4.7705003592167900768e-1, -4.0525149797617145432e-2},
    {3, 0.5, 0.3, 2.8999999999999999112, 5.0e-1, 5.6536469878018772057e-1, 2.4143651991027429839e-1, 1.6894659942849317363, 1.2249744469870348477},
    {2, 0.75, 0.2, 1.6999999999999999556, 1.0e+1, 1.7167231880622413387e-6, -1.2862384895763688157e-7, 4.7017418952386655189e-4, -1.6646722275435998251e-5},
};

// int_0^inf r^{-z} f(r) dr by direct quadrature, real z inside the strip
struct MellinDirect { int d; double s, z, value; };
inline constexpr MellinDirect kMellinDirect[] = {
    {2, 0.75, 1.0, 4.5834572120135818628},
    {2, 0.5, 1.5, 6.1112762826847758088},
    {3, 0.9, 2.0, 2.7839054473416155405},
    {3, 1.2, 1.5, 2.22387046185295856},
    {2, 0.3, 1.7, 1.0322283561618279514e+1},
};

struct KPoint { int d; double alpha, s, K; };
inline constexpr KPoint kK[] = {
    {2, 0.25, 2.0e-1, 4.858549246065777134e-1},
    {2, 0.25, 5.0e-1, 7.311145296711418006e-1},
    {2, 0.25, 8.0e-1, 8.0505361636252176598e-1},
    {2, 0.5, 2.0e-1, 1.956220598319316526e-1},
    {2, 0.5, 5.0e-1, 3.3333333333333333333e-1},
    {2, 0.5, 8.0e-1, 3.6351274070115659093e-1},
    {2, 0.75, 2.0e-1, 1.6151936142994946513e-1},
    {2, 0.75, 5.0e-1, 2.7789709399701290652e-1},
    {2, 0.75, 8.0e-1, 2.6763492443148451298e-1},
    {3, 0.25, 3.0e-1, 6.5451858522450377923e-1},
    {3, 0.25, 7.5e-1, 9.1186806948898897815e-1},
    {3, 0.25, 1.2, 9.5817162963852705836e-1},
    {3, 0.5, 3.0e-1, 2.9572095758948234367e-1},
    {3, 0.5, 7.5e-1, 4.699928014933125942e-1},
    {3, 0.5, 1.2, 4.7805766139778231909e-1},
    {3, 0.75, 3.0e-1, 2.7141639766729656478e-1},
    {3, 0.75, 7.5e-1, 4.4562280437884453376e-1},
    {3, 0.75, 1.2, 3.973355347492366994e-1},
};

struct DPoint { int d; double alpha, D; };
inline constexpr DPoint kD[] = {
    {2, 0.25, 7.6478207597779999258e-1},
    {2, 0.5, 3.3333333333333333333e-1},
    {2, 0.75, 2.6566339556904168862e-1},
    {3, 0.25, 7.6190476190476190476e-1},
    {3, 0.5, 3.133285343288750628e-1},
    {3, 0.75, 2.3703703703703703704e-1},
};

// J(lambda) = int_0^inf (1 + lambda^2 r^2)^{-d/2-alpha} f(r) dr
struct JPoint { int d; double alpha, s, lambda, J; };
inline constexpr JPoint kJ[] = {
    {2, 0.5, 0.75, 2.0, 2.707517607143259915e-1},
    {2, 0.5, 0.75, 20.0, 3.7856419308615666417e-3},
    {2, 0.25, 0.5, 5.0, 8.5273319451229731888e-2},
    {3, 0.75, 1.2, 2.0, 5.4803317452332457706e-2},
    {3, 0.5, 0.3, 50.0, 8.260414282014432109e-6},
    {2, 0.75, 0.2, 0.5, 2.8564987888301171415},
};

}  // namespace oracle
