#pragma once

namespace sosnet {

// In-repo special functions backing the statistical tests. Series/continued
// fraction cutoffs: Lanczos (g=7, 9 terms) for ln_gamma; modified Lentz with
// eps 1e-15 and at most 200 iterations for the incomplete beta and gamma
// continued fractions; power series until the term drops below 1e-16 of the
// sum for the incomplete gamma series branch.

double ln_gamma(double x);

// Regularized incomplete beta I_x(a, b); satisfies I_x(a,b) + I_{1-x}(b,a) = 1.
double inc_beta(double a, double b, double x);

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

double erf_inrepo(double x);
double normal_cdf(double x);

// Two-sided p for Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

// Survival function of the F distribution: P(F' > f).
double f_sf(double f, double df1, double df2);

// Asymptotic Kolmogorov distribution Q(lambda) = 2*sum (-1)^{k-1} exp(-2k^2 lambda^2).
double kolmogorov_q(double lambda);

}  // namespace sosnet
