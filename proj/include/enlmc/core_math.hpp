#pragma once

namespace enlmc {

/// Largest dimension accepted by the dimension-dependent constants. Beyond
/// this alpha_d under/overflows for the step sizes of interest.
inline constexpr int kMaxDimension = 50;

/// Surface measure of the unit sphere in R^d, 2 pi^{d/2} / Gamma(d/2).
/// s_1 = 2, s_2 = 2 pi, s_3 = 4 pi. Throws std::invalid_argument for d < 1.
double sphere_surface(int d);

/// Volume of the radius-eta ball in R^d, eta^d * s_d / d.
double ball_volume(int d, double eta);

/// Normalisation of the ensemble gradient estimator, d^2 / (s_d eta^d), i.e.
/// d / ball_volume(d, eta). It makes the eta-ball average of the projector
/// (x x^T)/|x|^2 equal to the identity.
double alpha_d(int d, double eta);

/// Conditional density of a particle at its own position after one Langevin
/// step whose noise had squared norm `noise_norm_sq`:
///   (4 pi h)^{-d/2} exp(-|xi|^2 / 2).
double proposal_density(double noise_norm_sq, double h, int d);

/// Gaussian tail mass bounding the probability that the noise-magnitude
/// constraint fires:
///   C_d(r1) = s_d / (2 pi)^{d/2} * int_{r1 sqrt(d/2)}^inf r^{d-1} e^{-r^2/2} dr.
/// Evaluated by adaptive Gauss-Kronrod quadrature (tolerance 1e-10).
double c_d(double r1, int d);

}  // namespace enlmc
