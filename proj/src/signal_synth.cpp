#include "gmc/signal_synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gmc {

const char* to_string(GestureClass c) {
    switch (c) {
        case GestureClass::Circle: return "circle";
        case GestureClass::Square: return "square";
        case GestureClass::Tick: return "tick";
        case GestureClass::Cross: return "cross";
    }
    throw ParamError("invalid gesture class");
}

GestureClass gesture_from_label(int label) {
    if (label < 0 || label > 3) throw ParamError("gesture label out of range 0..3");
    return static_cast<GestureClass>(label);
}

GestureClass gesture_from_string(const std::string& name) {
    for (int i = 0; i < 4; ++i)
        if (name == to_string(static_cast<GestureClass>(i)))
            return static_cast<GestureClass>(i);
    throw ParamError("unknown gesture class: " + name);
}

void GestureParams::validate() const {
    if (!(scale_r > 0.0)) throw ParamError("scale_r must be > 0");
    if (!(distance_d >= 0.05)) throw ParamError("distance_d must be >= 0.05 m");
    if (!(duration > 0.0)) throw ParamError("duration must be > 0");
    if (!(speed_jitter >= 0.0 && speed_jitter < 0.5))
        throw ParamError("speed_jitter must be in [0, 0.5)");
}

namespace {

// Geometric paths as q(u), u in [0,1]; traversal speed is applied later
// through a numeric arc-length reparameterization.

Vec3 circle_path(double u, double scale, const Vec3& c) {
    const double r = 0.5 * scale;
    // Start/end at the point nearest the radar (-y side of the loop).
    const double a = 2.0 * kPi * u - 0.5 * kPi;
    return {c.x + r * std::cos(a), c.y + r * std::sin(a), c.z};
}

// Rounded square, counterclockwise from the bottom-edge midpoint.
// Exact arc-length parameterization per segment.
Vec3 square_path_axis_aligned(double u, double scale, const Vec3& c) {
    const double rc = 0.05 * scale;    // corner radius
    const double half = 0.5 * scale;
    const double e = half - rc;        // straight half-extent
    const double arc = 0.5 * kPi * rc; // quarter-corner length
    const double total = 8.0 * e + 4.0 * arc;
    double s = std::clamp(u, 0.0, 1.0) * total;

    auto line = [&](Vec3 a, Vec3 b, double t) {
        return Vec3{a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, a.z};
    };
    const Vec3 p[] = {
        {c.x, c.y - half, c.z},      // 0 bottom mid
        {c.x + e, c.y - half, c.z},  // 1
        {c.x + half, c.y - e, c.z},  // 2
        {c.x + half, c.y + e, c.z},  // 3
        {c.x + e, c.y + half, c.z},  // 4
        {c.x - e, c.y + half, c.z},  // 5
        {c.x - half, c.y + e, c.z},  // 6
        {c.x - half, c.y - e, c.z},  // 7
        {c.x - e, c.y - half, c.z},  // 8
        {c.x, c.y - half, c.z},      // 9 closes the loop
    };
    const Vec3 cc[] = {
        {c.x + e, c.y - e, c.z}, {c.x + e, c.y + e, c.z},
        {c.x - e, c.y + e, c.z}, {c.x - e, c.y - e, c.z}};
    const double a0[] = {-0.5 * kPi, 0.0, 0.5 * kPi, kPi};

    const double seg_len[] = {e, arc, 2 * e, arc, 2 * e, arc, 2 * e, arc, e};
    int li = 0, ai = 0;
    for (int i = 0; i < 9; ++i) {
        if (s <= seg_len[i] || i == 8) {
            const double t = seg_len[i] > 0 ? s / seg_len[i] : 0.0;
            if (i % 2 == 0) return line(p[li], p[li + 1], std::min(t, 1.0));
            const double ang = a0[ai] + 0.5 * kPi * std::min(t, 1.0);
            return {cc[ai].x + rc * std::cos(ang), cc[ai].y + rc * std::sin(ang), c.z};
        }
        s -= seg_len[i];
        if (i % 2 == 0) ++li; else { ++li; ++ai; }
    }
    return p[0]; // unreachable
}

// The drawn square sits diamond-wise (corners toward and away from the
// radar, strokes diagonal) and is traversed starting from the far
// corner, so the raised-cosine speed peak lands on the near corner.
Vec3 square_path(double u, double scale, const Vec3& c) {
    const double rc = 0.05 * scale;
    const double e = 0.5 * scale - rc;
    const double arc = 0.5 * kPi * rc;
    const double total = 8.0 * e + 4.0 * arc;
    // arc length from the bottom-edge midpoint to the NE corner apex,
    // which the 45-degree rotation below carries onto the far corner
    const double u0 = (3.0 * e + 1.5 * arc) / total;
    double v = u + u0;
    if (v >= 1.0) v -= 1.0;
    const Vec3 p = square_path_axis_aligned(v, scale, {0.0, 0.0, 0.0});
    const double s = std::sqrt(0.5); // rotate +45 degrees about the center
    return {c.x + s * (p.x - p.y), c.y + s * (p.x + p.y), c.z + p.z};
}

// Two joined strokes, lengths 1:2, interior angle 100 degrees; centered
// at c by arc-length centroid.
Vec3 tick_path(double u, double scale, const Vec3& c) {
    const double len1 = scale / 3.0, len2 = 2.0 * scale / 3.0;
    const double a1 = -60.0 * kPi / 180.0;        // short stroke descends
    const double a2 = a1 + 80.0 * kPi / 180.0;    // 180 - 100 degree turn
    const Vec3 d1{std::cos(a1), std::sin(a1), 0.0};
    const Vec3 d2{std::cos(a2), std::sin(a2), 0.0};
    const Vec3 m{0.0, 0.0, 0.0};
    const Vec3 a = m - d1 * len1;
    const Vec3 b = m + d2 * len2;
    const Vec3 mid1 = (a + m) * 0.5, mid2 = (m + b) * 0.5;
    const Vec3 centroid = (mid1 * len1 + mid2 * len2) * (1.0 / (len1 + len2));
    const Vec3 shift = c - centroid;

    const double s = std::clamp(u, 0.0, 1.0) * (len1 + len2);
    if (s <= len1) return a + d1 * s + shift;
    return m + d2 * (s - len1) + shift;
}

// Two diagonal strokes with an out-of-plane lift on the joining move.
Vec3 cross_path(double u, double scale, const Vec3& c) {
    const double w = scale / (2.0 * std::sqrt(2.0));
    const double lift = 0.25 * scale;
    const Vec3 s1a{c.x - w, c.y + w, c.z}, s1b{c.x + w, c.y - w, c.z};
    const Vec3 s2a{c.x + w, c.y + w, c.z}, s2b{c.x - w, c.y - w, c.z};
    u = std::clamp(u, 0.0, 1.0);
    auto lerp = [](const Vec3& a, const Vec3& b, double t) {
        return a + (b - a) * t;
    };
    if (u < 1.0 / 3.0) return lerp(s1a, s1b, 3.0 * u);
    if (u < 2.0 / 3.0) {
        const double t = 3.0 * u - 1.0;
        Vec3 p = lerp(s1b, s2a, t);
        p.z += lift * std::sin(kPi * t);
        return p;
    }
    return lerp(s2a, s2b, 3.0 * u - 2.0);
}

Vec3 path_point(GestureClass cls, double u, double scale, const Vec3& c) {
    switch (cls) {
        case GestureClass::Circle: return circle_path(u, scale, c);
        case GestureClass::Square: return square_path(u, scale, c);
        case GestureClass::Tick: return tick_path(u, scale, c);
        case GestureClass::Cross: return cross_path(u, scale, c);
    }
    throw ParamError("invalid gesture class");
}

} // namespace

Trajectory generate_trajectory(const GestureParams& params,
                               const RadarGeometry& geometry,
                               double sample_rate) {
    params.validate();
    if (!(sample_rate > 0.0)) throw ParamError("sample_rate must be > 0");
    const std::size_t n =
        static_cast<std::size_t>(std::llround(params.duration * sample_rate));
    if (n < 2) throw ParamError("duration * sample_rate must be >= 2 samples");

    const Vec3 center{0.0, params.distance_d, 0.0};

    // Numeric arc-length table over the geometric path.
    constexpr std::size_t kDense = 8192;
    std::vector<Vec3> dense(kDense + 1);
    std::vector<double> cum(kDense + 1, 0.0);
    for (std::size_t i = 0; i <= kDense; ++i)
        dense[i] = path_point(params.cls, static_cast<double>(i) / kDense,
                              params.scale_r, center);
    for (std::size_t i = 1; i <= kDense; ++i)
        cum[i] = cum[i - 1] + distance(dense[i], dense[i - 1]);
    const double total_len = cum.back();

    // Invert arc length to the curve parameter, then evaluate the exact
    // parametric point so samples stay on the path (no chord error).
    auto point_at_arclen = [&](double s) -> Vec3 {
        s = std::clamp(s, 0.0, total_len);
        const auto it = std::lower_bound(cum.begin(), cum.end(), s);
        std::size_t hi = static_cast<std::size_t>(it - cum.begin());
        if (hi == 0) return dense[0];
        const std::size_t lo = hi - 1;
        const double seg = cum[hi] - cum[lo];
        const double t = seg > 0.0 ? (s - cum[lo]) / seg : 0.0;
        const double u = (static_cast<double>(lo) + t) / kDense;
        return path_point(params.cls, u, params.scale_r, center);
    };

    // Raised-cosine progress F(w) = w - sin(2 pi w)/(2 pi); jitter adds
    // seeded low-order sinusoids that vanish at both endpoints.
    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    double jc[3] = {uni(rng), uni(rng), uni(rng)};

    const double max_step = kHandSpeedMax / sample_rate;
    double amp = params.speed_jitter;
    Trajectory traj;
    traj.sample_rate = sample_rate;
    for (int attempt = 0; attempt < 32; ++attempt) {
        traj.points.clear();
        traj.points.reserve(n);
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = static_cast<double>(i) / static_cast<double>(n - 1);
            double f = w - std::sin(2.0 * kPi * w) / (2.0 * kPi);
            for (int k = 0; k < 3; ++k)
                f += amp * jc[k] * std::sin((k + 1) * kPi * w) / ((k + 1) * kPi * 3.0);
            traj.points.push_back(point_at_arclen(f * total_len));
            if (i > 0)
                worst = std::max(worst, distance(traj.points[i], traj.points[i - 1]));
        }
        if (worst <= max_step || amp == 0.0) break;
        amp *= 0.5; // shrink jitter until the hand-speed cap holds
    }

    for (const auto& p : traj.points) {
        if (distance(p, geometry.tx_pos) < 1e-6 ||
            distance(p, geometry.rx1_pos) < 1e-6 ||
            distance(p, geometry.rx2_pos) < 1e-6)
            throw ParamError("trajectory passes through an antenna position");
    }
    return traj;
}

BasebandSignal simulate_baseband(const Trajectory& traj,
                                 const RadarGeometry& geometry,
                                 AmplitudeModel amplitude_model,
                                 std::optional<double> snr_db,
                                 std::uint64_t noise_seed) {
    if (traj.points.empty()) throw ParamError("empty trajectory");
    const std::size_t n = traj.points.size();
    const double lambda = geometry.wavelength();
    const Vec3 rx[2] = {geometry.rx1_pos, geometry.rx2_pos};

    std::array<std::vector<double>, 4> ch;
    for (auto& c : ch) c.resize(n);

    // Amplitude per receiver, normalized so the global max is 1.
    std::array<std::vector<double>, 2> amp;
    double amax = 0.0;
    for (int k = 0; k < 2; ++k) {
        amp[k].resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double rt = distance(traj.points[i], geometry.tx_pos);
            const double rr = distance(traj.points[i], rx[k]);
            if (rt <= 0.0 || rr <= 0.0)
                throw ParamError("trajectory point coincides with an antenna");
            double a = 1.0;
            if (amplitude_model == AmplitudeModel::InverseR2)
                a = 1.0 / (rt * rr);
            else if (amplitude_model == AmplitudeModel::InverseR4)
                a = 1.0 / (rt * rt * rr * rr);
            amp[k][i] = a;
            amax = std::max(amax, a);
        }
    }
    for (int k = 0; k < 2; ++k)
        for (auto& a : amp[k]) a /= amax;

    double sig_power = 0.0;
    for (int k = 0; k < 2; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            const double L = distance(traj.points[i], geometry.tx_pos) +
                             distance(traj.points[i], rx[k]);
            const double phi = -2.0 * kPi * L / lambda;
            ch[2 * k][i] = amp[k][i] * std::cos(phi);
            ch[2 * k + 1][i] = amp[k][i] * std::sin(phi);
            sig_power += ch[2 * k][i] * ch[2 * k][i] +
                         ch[2 * k + 1][i] * ch[2 * k + 1][i];
        }
    }
    sig_power /= static_cast<double>(4 * n);

    if (snr_db) {
        if (sig_power <= 0.0)
            throw ParamError("snr_db given but pre-noise signal power is zero");
        const double sigma =
            std::sqrt(sig_power / std::pow(10.0, *snr_db / 10.0));
        std::mt19937_64 rng(noise_seed);
        std::normal_distribution<double> gauss(0.0, sigma);
        for (auto& c : ch)
            for (auto& v : c) v += gauss(rng);
    }

    // Models the hardware bandpass DC rejection.
    for (auto& c : ch) {
        double mean = 0.0;
        for (double v : c) mean += v;
        mean /= static_cast<double>(n);
        for (auto& v : c) v -= mean;
    }

    BasebandSignal sig;
    sig.sample_rate = traj.sample_rate;
    sig.channels = std::move(ch);
    return sig;
}

std::array<std::vector<std::complex<double>>, 2>
complex_channels(const BasebandSignal& sig) {
    std::array<std::vector<std::complex<double>>, 2> out;
    for (int k = 0; k < 2; ++k) {
        const auto& I = sig.channels[2 * k];
        const auto& Q = sig.channels[2 * k + 1];
        out[k].resize(I.size());
        for (std::size_t i = 0; i < I.size(); ++i)
            out[k][i] = {I[i], Q[i]};
    }
    return out;
}

} // namespace gmc
