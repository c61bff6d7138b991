#pragma once

#include <complex>
#include <string>
#include <vector>

#include "gmc/common.hpp"

namespace gmc::tfa {

using cvec = std::vector<std::complex<double>>;

enum class WindowKind { Rectangular, Hann, Gaussian };

struct WindowSpec {
    WindowKind kind = WindowKind::Hann;
    std::size_t length = 128;
    double gaussian_sigma = 0.0; // samples; required for Gaussian

    std::vector<double> values() const; // peak-normalized taper
};

enum class MapKind { StftMag, CwtMag };

struct TimeFrequencyMap {
    std::vector<std::vector<double>> values; // n_freq x n_time, >= 0
    std::vector<double> freq_axis;           // Hz per row, strictly monotonic
    std::vector<double> time_axis;           // seconds per column
    MapKind kind = MapKind::StftMag;

    std::size_t rows() const { return values.size(); }
    std::size_t cols() const { return values.empty() ? 0 : values[0].size(); }
};

struct WaveletSpec {
    double omega0 = 6.0;        // Morlet center frequency, rad per unit scale
    std::vector<double> scales; // samples, strictly increasing, > 0

    void validate() const;
};

// Geometric scale grid whose center frequencies cover [f_lo, f_hi] Hz.
WaveletSpec geometric_scales(double f_lo_hz, double f_hi_hz,
                             std::size_t n_scales, double fs,
                             double omega0 = 6.0);

struct StftResult {
    std::vector<cvec> values; // n_freq x n_time, fftshifted rows
    std::vector<double> freq_axis;
    std::vector<double> time_axis;
};

// Frames start at i*hop (tail zero-padded); each frame is windowed,
// zero-padded to nfft and transformed; rows are fftshifted so the axis
// runs monotonically over [-fs/2, fs/2). nfft = 0 means window length.
StftResult stft(const cvec& signal, double fs, const WindowSpec& window,
                std::size_t hop, std::size_t nfft = 0);

// Elementwise magnitude; log10 mode floors magnitudes at 1e-12.
TimeFrequencyMap spectrogram(const StftResult& s, bool log_scale = false);

struct CwtResult {
    std::vector<cvec> values; // n_scales x n_time
    std::vector<double> freq_axis;
    std::vector<double> time_axis;
    std::vector<double> scales;
};

// Analytic Morlet correlation per scale, truncated at |t/a| >= 5.
// use_fft selects the frequency-domain implementation; both routes
// agree to 1e-9 relative.
CwtResult cwt(const cvec& signal, double fs, const WaveletSpec& wavelet,
              bool use_fft = true);

TimeFrequencyMap scalogram(const CwtResult& c, bool log_scale = false);

// f = (omega0 / (2 pi scale)) * fs for scale in samples.
double scale_to_frequency(double scale, double omega0, double fs);

// Direct O(N^2) DFT, the testing oracle for the fast path.
cvec dft_oracle(const cvec& signal);

// Corner-aligned bilinear resampling of values and axes.
TimeFrequencyMap resize_bilinear(const TimeFrequencyMap& map,
                                 std::size_t out_rows, std::size_t out_cols);

// CSV: first line "<kind>,<t0>,<t1>,..." (kind is stft_mag or cwt_mag,
// remaining cells the time axis); then one line per row with the row
// frequency leading. Values printed with %.9g.
void export_csv(const TimeFrequencyMap& map, const std::string& path);
TimeFrequencyMap import_csv(const std::string& path);

// 8-bit binary PGM (P5), min-max scaled; row 0 is the first matrix row.
void export_pgm(const TimeFrequencyMap& map, const std::string& path);

} // namespace gmc::tfa
