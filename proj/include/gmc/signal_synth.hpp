#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gmc/common.hpp"

namespace gmc {

enum class GestureClass : int { Circle = 0, Square = 1, Tick = 2, Cross = 3 };

const char* to_string(GestureClass c);
GestureClass gesture_from_label(int label);
GestureClass gesture_from_string(const std::string& name);

struct GestureParams {
    GestureClass cls = GestureClass::Circle;
    double scale_r = 0.2;     // characteristic stroke extent, meters
    double distance_d = 0.2;  // trajectory center distance from TX, meters
    double duration = 1.0;    // seconds
    double speed_jitter = 0.0; // fraction in [0, 0.5)
    std::uint64_t seed = 0;

    void validate() const;
};

// 1 TX / 2 RX in a line, 10 cm spacing, boresight along +y.
struct RadarGeometry {
    double carrier_hz = 5.8e9;
    Vec3 tx_pos{0.0, 0.0, 0.0};
    Vec3 rx1_pos{-0.10, 0.0, 0.0};
    Vec3 rx2_pos{0.10, 0.0, 0.0};

    double wavelength() const { return kSpeedOfLight / carrier_hz; }
};

struct Trajectory {
    double sample_rate = 0.0;
    std::vector<Vec3> points;
};

inline constexpr double kHandSpeedMax = 4.0; // m/s cap on hand motion

enum class AmplitudeModel { Unit, InverseR2, InverseR4 };

// Channels ordered [RX1-I, RX1-Q, RX2-I, RX2-Q], DC-removed.
struct BasebandSignal {
    double sample_rate = 600.0;
    std::array<std::vector<double>, 4> channels;
    GestureParams meta;
};

// Closed-form gesture path traversed once with a raised-cosine speed
// profile; speed_jitter adds a seeded smooth timing perturbation.
Trajectory generate_trajectory(const GestureParams& params,
                               const RadarGeometry& geometry,
                               double sample_rate);

// Bistatic phase model: round trip L_k(t) = |p-tx| + |p-rx_k|, received
// phasor e^{-j 2 pi L_k / lambda} so a receding target gives negative
// Doppler. AWGN at the requested SNR (signal power measured pre-noise),
// then per-channel mean subtraction.
BasebandSignal simulate_baseband(const Trajectory& traj,
                                 const RadarGeometry& geometry,
                                 AmplitudeModel amplitude_model,
                                 std::optional<double> snr_db,
                                 std::uint64_t noise_seed);

// s_k = I_k + j Q_k for each receiver.
std::array<std::vector<std::complex<double>>, 2>
complex_channels(const BasebandSignal& sig);

} // namespace gmc
