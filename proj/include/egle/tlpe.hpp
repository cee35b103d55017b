#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "egle/estimators.hpp"
#include "egle/gmm.hpp"

namespace egle::tlpe {

// Physical pi-line parameters, per-unit.
struct LineParameters {
    double r = 0.0;  // series resistance
    double x = 0.0;  // series reactance
    double b = 0.0;  // shunt susceptance per end
};

// Admittance-space parameter vector of the regression model:
// Y1 = Re(y), Y2 = -(b + Im(y)), Y3 = -Y1, Y4 = Im(y) with y = 1/(r + jx).
struct YVector {
    double y1 = 0.0;
    double y2 = 0.0;
    double y3 = 0.0;
    double y4 = 0.0;

    Eigen::Vector4d as_vector() const { return {y1, y2, y3, y4}; }
    static YVector from_vector(const Eigen::Vector4d& v) { return {v(0), v(1), v(2), v(3)}; }
};

// One synchronized phasor snapshot of both line ends.
struct PhasorRecord {
    int t = 0;
    std::complex<double> vp, vq;  // bus voltages, per-unit
    std::complex<double> ip, iq;  // currents into the line at each end, per-unit
};

struct ScenarioConfig {
    LineParameters true_params{0.00904, 0.0925, 0.159};
    int s = 250;                          // time instants
    double loading_variation = 0.40;      // fractional span of the load draw
    double base_load = 1.0;               // base load-current magnitude, pu
    gmm::GmmSpec noise_c = gmm::GmmSpec{{0.3, 0.7}, {0.0, 0.005}, {2.25e-6, 2.25e-6}};
    gmm::GmmSpec noise_D = gmm::GmmSpec{{0.3, 0.7}, {0.0, 0.005}, {2.25e-6, 2.25e-6}};
    std::uint64_t seed = 1;
};

struct Measurements {
    std::vector<PhasorRecord> records;        // noisy
    std::vector<PhasorRecord> clean_records;  // generation ground truth
};

/// y = 1 / (r + jx); throws DegenerateImpedance when r^2 + x^2 ~ 0.
YVector line_params_to_y(const LineParameters& p);

/// Inverse of line_params_to_y:
///   r = 2(Y1-Y3) / ((Y1-Y3)^2 + (2Y4)^2)
///   x = -4 Y4   / ((Y1-Y3)^2 + (2Y4)^2)
///   b = -(Y2 + Y4)
/// Throws DegenerateAdmittance when the denominator vanishes.
LineParameters recover_line_params(const YVector& y);

/// Exact pi-line snapshots: per instant, the sending voltage is drawn
/// (magnitude 1 +/- 2%, angle 0 +/- 5 deg), a load current spanning
/// +/-loading_variation/2 around base_load is drawn, and Vq, Ip, Iq are
/// solved from the circuit equations, so
///   Ip = j b Vp + (Vp - Vq) y,  Iq = j b Vq - (Vp - Vq) y
/// hold identically. Deterministic per seed.
std::vector<PhasorRecord> simulate_measurements(const ScenarioConfig& cfg);

/// Additive per-component noise: every rectangular current part gets an
/// independent draw from noise_c, every rectangular voltage part from
/// noise_D. Clean records are retained alongside. Deterministic per seed.
Measurements inject_noise(const std::vector<PhasorRecord>& records, const gmm::GmmSpec& noise_c,
                          const gmm::GmmSpec& noise_D, std::uint64_t seed);

/// Stack the 4-row voltage block of each instant into c = D Y form
/// (n = 4s, p = 4):
///   [ Vpr  Vpi  Vqr  Vqi ]       [ Ipr ]
///   [ Vpi -Vpr  Vqi -Vqr ]  Y =  [ Ipi ]
///   [ Vqr  Vqi  Vpr  Vpi ]       [ Iqr ]
///   [ Vqi -Vqr  Vpi -Vpr ]       [ Iqi ]
estimators::RegressionSystem build_system(const std::vector<PhasorRecord>& records);

}  // namespace egle::tlpe
