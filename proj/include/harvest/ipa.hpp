#pragma once

#include <string>
#include <vector>

#include "harvest/objective.hpp"
#include "harvest/simulator.hpp"
#include "harvest/trajectory.hpp"

namespace harvest {

// State sensitivities, row-major [row*dim + k].
struct DerivativeState {
    int dim = 0, M = 0, N = 0;
    std::vector<double> X, Y, Z;
    std::vector<std::vector<double>> rho;  // per agent, over that agent's parameter block

    DerivativeState() = default;
    DerivativeState(const Layout& L, int M_, int N_);
    double* Xr(int i) { return X.data() + static_cast<size_t>(i) * dim; }
    double* Yr(int i) { return Y.data() + static_cast<size_t>(i) * dim; }
    double* Zr(int i, int j) { return Z.data() + static_cast<size_t>(i * N + j) * dim; }
    const double* Xr(int i) const { return X.data() + static_cast<size_t>(i) * dim; }
    const double* Yr(int i) const { return Y.data() + static_cast<size_t>(i) * dim; }
    const double* Zr(int i, int j) const { return Z.data() + static_cast<size_t>(i * N + j) * dim; }
};

// xi0 at target i owned by j: X' -> 0, Z'_ij += X'_i
void jump_xi0(DerivativeState& d, int i, int j);
// zeta0: Y'_i += Z'_ij, Z'_ij -> 0
void jump_zeta0(DerivativeState& d, int i, int j);
// owner leaves target i and agent l takes over; tau is the leave-time derivative over columns [col0, col0+n)
void jump_handoff(DerivativeState& d, int i, int l, double mu_p, const double* tau, int col0, int n);

// tau' for a queue guard reaching zero: -x' / (flow before the event)
double tau_prime_queue(double xprime, double flow_pre);
// tau' for a distance guard d - r: -(u.s') / (u.sdot), u the unit vector from the centre to the agent
double tau_prime_range(Vec2 u, Vec2 sprime, Vec2 sdot);

struct IpaOptions {
    bool rho_sensitivity = true;
    double grazing = 1e-9;
};

struct GradientResult {
    std::vector<double> grad;
    bool valid = true;
    std::string reason;
    DerivativeState final_state;
};

GradientResult assemble_gradient(const CostContext& cc, const Layout& L, const std::vector<double>& theta,
                                 const SimTrace& tr, const IpaOptions& opt = {});

// d tau_k / d theta for every logged event (rows in log order)
std::vector<std::vector<double>> event_time_derivatives(const CostContext& cc, const Layout& L,
                                                        const std::vector<double>& theta, const SimTrace& tr,
                                                        const IpaOptions& opt = {});

}  // namespace harvest
