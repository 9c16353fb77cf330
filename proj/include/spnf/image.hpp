#pragma once

#include <string>
#include <vector>

#include "spnf/errors.hpp"

namespace spnf {

/// H x W x 3 linear RGB image, row-major (y, x, channel). Values may
/// leave [0, 1]; clamping happens only at 8-bit export.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(std::size_t(w) * h * 3, 0.0) {}

    double& at(int x, int y, int c) { return data[(std::size_t(y) * width + x) * 3 + c]; }
    double at(int x, int y, int c) const { return data[(std::size_t(y) * width + x) * 3 + c]; }
};

/// Stack of s_num RGB spectrum maps: one H x W x 3 image per wavelength
/// band, stored band-major so single-band planes are contiguous.
struct SpectrumStack {
    int width = 0;
    int height = 0;
    int bands = 0;
    std::vector<double> centers_nm;  // optional band metadata, length == bands
    std::vector<double> data;        // [band][y][x][channel]

    SpectrumStack() = default;
    SpectrumStack(int w, int h, int k)
        : width(w), height(h), bands(k), centers_nm(k, 0.0),
          data(std::size_t(w) * h * k * 3, 0.0) {}

    std::size_t band_stride() const { return std::size_t(width) * height * 3; }
    double* band_data(int k) { return data.data() + band_stride() * k; }
    const double* band_data(int k) const { return data.data() + band_stride() * k; }

    double& at(int k, int x, int y, int c) {
        return data[band_stride() * k + (std::size_t(y) * width + x) * 3 + c];
    }
    double at(int k, int x, int y, int c) const {
        return data[band_stride() * k + (std::size_t(y) * width + x) * 3 + c];
    }

    RgbImage band_image(int k) const {
        RgbImage img(width, height);
        const double* src = band_data(k);
        std::copy(src, src + band_stride(), img.data.begin());
        return img;
    }
};

/// Per pixel and channel: kappa * sum over bands. No clamping.
RgbImage compose_rgb(const SpectrumStack& stack, double kappa);

/// 8-bit binary PPM export; values clamped to [0, 1] here and only here.
void write_ppm(const std::string& path, const RgbImage& image);

}  // namespace spnf
