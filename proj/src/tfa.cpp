#include "gmc/tfa.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gmc/fft.hpp"

namespace gmc::tfa {

std::vector<double> WindowSpec::values() const {
    if (length < 2) throw ParamError("window length must be >= 2");
    std::vector<double> w(length, 1.0);
    switch (kind) {
        case WindowKind::Rectangular:
            break;
        case WindowKind::Hann:
            for (std::size_t n = 0; n < length; ++n)
                w[n] = 0.5 * (1.0 - std::cos(2.0 * kPi * n /
                                             static_cast<double>(length - 1)));
            break;
        case WindowKind::Gaussian: {
            if (!(gaussian_sigma > 0.0))
                throw ParamError("gaussian window requires sigma > 0");
            const double c = 0.5 * static_cast<double>(length - 1);
            for (std::size_t n = 0; n < length; ++n) {
                const double t = (static_cast<double>(n) - c) / gaussian_sigma;
                w[n] = std::exp(-0.5 * t * t);
            }
            break;
        }
    }
    const double peak = *std::max_element(w.begin(), w.end());
    for (auto& v : w) v /= peak;
    return w;
}

void WaveletSpec::validate() const {
    if (omega0 < 5.0) throw ParamError("wavelet omega0 must be >= 5");
    if (scales.empty()) throw ParamError("wavelet scales must be non-empty");
    double prev = 0.0;
    for (double s : scales) {
        if (!(s > prev)) throw ParamError("scales must be positive and strictly increasing");
        prev = s;
    }
}

WaveletSpec geometric_scales(double f_lo_hz, double f_hi_hz,
                             std::size_t n_scales, double fs, double omega0) {
    if (!(f_lo_hz > 0.0 && f_hi_hz > f_lo_hz))
        throw ParamError("need 0 < f_lo < f_hi");
    if (n_scales < 2) throw ParamError("need >= 2 scales");
    WaveletSpec spec;
    spec.omega0 = omega0;
    // scale decreases with frequency; emit increasing scales (f_hi first)
    const double s_hi = omega0 * fs / (2.0 * kPi * f_hi_hz);
    const double s_lo = omega0 * fs / (2.0 * kPi * f_lo_hz);
    const double ratio = std::pow(s_lo / s_hi,
                                  1.0 / static_cast<double>(n_scales - 1));
    spec.scales.resize(n_scales);
    for (std::size_t i = 0; i < n_scales; ++i)
        spec.scales[i] = s_hi * std::pow(ratio, static_cast<double>(i));
    return spec;
}

StftResult stft(const cvec& signal, double fs, const WindowSpec& window,
                std::size_t hop, std::size_t nfft) {
    if (hop == 0) throw ParamError("hop must be >= 1");
    if (signal.empty()) throw ParamError("empty signal");
    if (window.length > signal.size())
        throw ParamError("window longer than signal");
    const std::size_t L = window.length;
    const std::size_t N = nfft == 0 ? L : nfft;
    if (N < L) throw ParamError("nfft must be >= window length");
    for (const auto& v : signal)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw ParamError("signal contains non-finite values");

    const auto w = window.values();
    const std::size_t n_cols = (signal.size() - 1) / hop + 1;
    const std::size_t half = N / 2;

    StftResult out;
    out.values.assign(N, cvec(n_cols));
    out.freq_axis.resize(N);
    for (std::size_t k = 0; k < N; ++k)
        out.freq_axis[k] = (static_cast<double>(k) - static_cast<double>(half)) *
                           fs / static_cast<double>(N);
    out.time_axis.resize(n_cols);

    fft::cvec frame(N);
    for (std::size_t i = 0; i < n_cols; ++i) {
        const std::size_t start = i * hop;
        out.time_axis[i] = static_cast<double>(start) / fs;
        std::fill(frame.begin(), frame.end(), std::complex<double>(0.0, 0.0));
        for (std::size_t j = 0; j < L; ++j) {
            const std::size_t idx = start + j;
            if (idx < signal.size()) frame[j] = signal[idx] * w[j];
        }
        fft::forward_inplace(frame);
        for (std::size_t k = 0; k < N; ++k)
            out.values[k][i] = frame[(k + N - half) % N]; // fftshift
    }
    return out;
}

TimeFrequencyMap spectrogram(const StftResult& s, bool log_scale) {
    TimeFrequencyMap map;
    map.kind = MapKind::StftMag;
    map.freq_axis = s.freq_axis;
    map.time_axis = s.time_axis;
    map.values.resize(s.values.size());
    for (std::size_t r = 0; r < s.values.size(); ++r) {
        map.values[r].resize(s.values[r].size());
        for (std::size_t c = 0; c < s.values[r].size(); ++c) {
            double m = std::abs(s.values[r][c]);
            map.values[r][c] = log_scale ? std::log10(std::max(m, 1e-12)) : m;
        }
    }
    return map;
}

namespace {

// Truncated analytic Morlet daughter for scale a (samples):
// psi_a[n] = a^{-1/2} pi^{-1/4} e^{j w0 n / a} e^{-(n/a)^2 / 2}, |n| < 5a.
cvec morlet_daughter(double a, double omega0, long& half_support) {
    const long h = static_cast<long>(std::ceil(5.0 * a)) - 1;
    half_support = std::max<long>(h, 0);
    cvec psi(2 * half_support + 1);
    const double norm = std::pow(a, -0.5) * std::pow(kPi, -0.25);
    for (long n = -half_support; n <= half_support; ++n) {
        const double t = static_cast<double>(n) / a;
        psi[static_cast<std::size_t>(n + half_support)] =
            norm * std::exp(-0.5 * t * t) *
            std::complex<double>(std::cos(omega0 * t), std::sin(omega0 * t));
    }
    return psi;
}

} // namespace

CwtResult cwt(const cvec& signal, double fs, const WaveletSpec& wavelet,
              bool use_fft) {
    wavelet.validate();
    if (signal.empty()) throw ParamError("empty signal");
    for (const auto& v : signal)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw ParamError("signal contains non-finite values");
    const std::size_t len = signal.size();

    CwtResult out;
    out.scales = wavelet.scales;
    out.values.reserve(wavelet.scales.size());
    out.freq_axis.reserve(wavelet.scales.size());
    out.time_axis.resize(len);
    for (std::size_t t = 0; t < len; ++t)
        out.time_axis[t] = static_cast<double>(t) / fs;

    fft::cvec sig_fft;
    std::size_t m_cached = 0;

    for (double a : wavelet.scales) {
        long h = 0;
        const cvec psi = morlet_daughter(a, wavelet.omega0, h);
        if (psi.size() > 10 * len)
            throw ParamError("wavelet support exceeds 10x signal length");
        cvec row(len, {0.0, 0.0});
        if (!use_fft) {
            // W[t] = sum_n s[t+n] conj(psi[n])
            for (std::size_t t = 0; t < len; ++t) {
                std::complex<double> acc(0.0, 0.0);
                const long lo = std::max<long>(-h, -static_cast<long>(t));
                const long hi =
                    std::min<long>(h, static_cast<long>(len - 1 - t));
                for (long n = lo; n <= hi; ++n)
                    acc += signal[t + n] *
                           std::conj(psi[static_cast<std::size_t>(n + h)]);
                row[t] = acc;
            }
        } else {
            const std::size_t m =
                fft::next_pow2(len + 2 * static_cast<std::size_t>(h) + 1);
            if (m != m_cached) {
                sig_fft.assign(m, {0.0, 0.0});
                std::copy(signal.begin(), signal.end(), sig_fft.begin());
                fft::forward_inplace(sig_fft);
                m_cached = m;
            }
            fft::cvec ker(m, {0.0, 0.0});
            // kernel v[m] = conj(psi[-m]); negative indices wrap mod m
            for (long n = -h; n <= h; ++n) {
                const std::size_t idx =
                    static_cast<std::size_t>((-n + static_cast<long>(m)) %
                                             static_cast<long>(m));
                ker[idx] = std::conj(psi[static_cast<std::size_t>(n + h)]);
            }
            fft::forward_inplace(ker);
            for (std::size_t k = 0; k < m; ++k) ker[k] *= sig_fft[k];
            fft::inverse_inplace(ker);
            for (std::size_t t = 0; t < len; ++t) row[t] = ker[t];
        }
        out.values.push_back(std::move(row));
        out.freq_axis.push_back(scale_to_frequency(a, wavelet.omega0, fs));
    }
    return out;
}

TimeFrequencyMap scalogram(const CwtResult& c, bool log_scale) {
    TimeFrequencyMap map;
    map.kind = MapKind::CwtMag;
    map.freq_axis = c.freq_axis;
    map.time_axis = c.time_axis;
    map.values.resize(c.values.size());
    for (std::size_t r = 0; r < c.values.size(); ++r) {
        map.values[r].resize(c.values[r].size());
        for (std::size_t t = 0; t < c.values[r].size(); ++t) {
            double m = std::abs(c.values[r][t]);
            map.values[r][t] = log_scale ? std::log10(std::max(m, 1e-12)) : m;
        }
    }
    return map;
}

double scale_to_frequency(double scale, double omega0, double fs) {
    if (!(scale > 0.0)) throw ParamError("scale must be > 0");
    return omega0 / (2.0 * kPi * scale) * fs;
}

cvec dft_oracle(const cvec& signal) {
    const std::size_t n = signal.size();
    if (n == 0) throw ParamError("empty signal");
    cvec out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t m = 0; m < n; ++m) {
            const double ang = -2.0 * kPi * static_cast<double>(k) *
                               static_cast<double>(m) / static_cast<double>(n);
            acc += signal[m] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

namespace {

std::vector<double> resample_axis(const std::vector<double>& axis,
                                  std::size_t out_n) {
    std::vector<double> out(out_n);
    const std::size_t in_n = axis.size();
    for (std::size_t i = 0; i < out_n; ++i) {
        const double pos = out_n > 1
            ? static_cast<double>(i) * static_cast<double>(in_n - 1) /
                  static_cast<double>(out_n - 1)
            : 0.0;
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, in_n - 1);
        const double t = pos - static_cast<double>(lo);
        out[i] = axis[lo] * (1.0 - t) + axis[hi] * t;
    }
    return out;
}

} // namespace

TimeFrequencyMap resize_bilinear(const TimeFrequencyMap& map,
                                 std::size_t out_rows, std::size_t out_cols) {
    if (out_rows < 1 || out_cols < 1) throw ParamError("output dims must be >= 1");
    const std::size_t in_rows = map.rows(), in_cols = map.cols();
    if (in_rows < 1 || in_cols < 1) throw ParamError("empty map");

    TimeFrequencyMap out;
    out.kind = map.kind;
    out.freq_axis = resample_axis(map.freq_axis, out_rows);
    out.time_axis = resample_axis(map.time_axis, out_cols);
    out.values.assign(out_rows, std::vector<double>(out_cols, 0.0));
    for (std::size_t r = 0; r < out_rows; ++r) {
        const double rp = out_rows > 1
            ? static_cast<double>(r) * static_cast<double>(in_rows - 1) /
                  static_cast<double>(out_rows - 1)
            : 0.0;
        const std::size_t r0 = static_cast<std::size_t>(rp);
        const std::size_t r1 = std::min(r0 + 1, in_rows - 1);
        const double tr = rp - static_cast<double>(r0);
        for (std::size_t c = 0; c < out_cols; ++c) {
            const double cp = out_cols > 1
                ? static_cast<double>(c) * static_cast<double>(in_cols - 1) /
                      static_cast<double>(out_cols - 1)
                : 0.0;
            const std::size_t c0 = static_cast<std::size_t>(cp);
            const std::size_t c1 = std::min(c0 + 1, in_cols - 1);
            const double tc = cp - static_cast<double>(c0);
            out.values[r][c] =
                map.values[r0][c0] * (1.0 - tr) * (1.0 - tc) +
                map.values[r0][c1] * (1.0 - tr) * tc +
                map.values[r1][c0] * tr * (1.0 - tc) +
                map.values[r1][c1] * tr * tc;
        }
    }
    return out;
}

void export_csv(const TimeFrequencyMap& map, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    char buf[40];
    f << (map.kind == MapKind::StftMag ? "stft_mag" : "cwt_mag");
    for (double t : map.time_axis) {
        std::snprintf(buf, sizeof buf, ",%.9g", t);
        f << buf;
    }
    f << '\n';
    for (std::size_t r = 0; r < map.rows(); ++r) {
        std::snprintf(buf, sizeof buf, "%.9g", map.freq_axis[r]);
        f << buf;
        for (double v : map.values[r]) {
            std::snprintf(buf, sizeof buf, ",%.9g", v);
            f << buf;
        }
        f << '\n';
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

TimeFrequencyMap import_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    TimeFrequencyMap map;
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty CSV: " + path);
    std::stringstream hdr(line);
    std::string cell;
    std::getline(hdr, cell, ',');
    if (cell == "cwt_mag")
        map.kind = MapKind::CwtMag;
    else if (cell == "stft_mag")
        map.kind = MapKind::StftMag;
    else
        throw std::runtime_error("bad CSV header kind: " + cell);
    while (std::getline(hdr, cell, ','))
        map.time_axis.push_back(std::stod(cell));
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::getline(row, cell, ',');
        map.freq_axis.push_back(std::stod(cell));
        std::vector<double> vals;
        while (std::getline(row, cell, ','))
            vals.push_back(std::stod(cell));
        if (vals.size() != map.time_axis.size())
            throw std::runtime_error("ragged CSV row in " + path);
        map.values.push_back(std::move(vals));
    }
    return map;
}

void export_pgm(const TimeFrequencyMap& map, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    double lo = map.values[0][0], hi = lo;
    for (const auto& row : map.values)
        for (double v : row) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    const double span = hi - lo;
    f << "P5\n" << map.cols() << ' ' << map.rows() << "\n255\n";
    for (const auto& row : map.values)
        for (double v : row) {
            const int px = span > 0.0
                ? static_cast<int>(std::lround(255.0 * (v - lo) / span))
                : 0;
            f.put(static_cast<char>(px));
        }
    if (!f) throw std::runtime_error("write failed: " + path);
}

} // namespace gmc::tfa
