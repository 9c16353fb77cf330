#pragma once

#include <array>
#include <string>
#include <vector>

#include "spnf/errors.hpp"

namespace spnf {

struct Xyz {
    double x = 0.0, y = 0.0, z = 0.0;
};

struct Rgb {
    double r = 0.0, g = 0.0, b = 0.0;
};

/// CIE color matching functions tabulated on an ascending wavelength grid.
struct CmfTable {
    std::vector<double> wavelengths_nm;
    std::vector<double> fx, fy, fz;

    double min_nm() const { return wavelengths_nm.front(); }
    double max_nm() const { return wavelengths_nm.back(); }
    void validate() const;
};

/// Relative spectral power distribution of an illuminant.
struct Spd {
    std::vector<double> wavelengths_nm;
    std::vector<double> power;

    void validate() const;
    /// Linear interpolation; throws OutOfRange outside table coverage.
    double sample(double lambda_nm) const;
};

/// Partition of a wavelength range into s_num bands with centers lambda_c.
struct BandPartition {
    int s_num = 0;
    double lambda_min_nm = 0.0;
    double lambda_max_nm = 0.0;
    double delta_lambda_nm = 0.0;
    std::vector<double> centers_nm;
    bool explicit_centers = false;
};

/// The fixed XYZ -> sRGB conversion matrix M^c (row-major).
struct ConversionMatrix {
    std::array<double, 9> m;
};

ConversionMatrix srgb_matrix();

/// Per-band (wR, wG, wB) weights: M^c * f(lambda_c) * L(lambda_c) * dLambda.
struct BandCoefficients {
    std::vector<std::array<double, 3>> w;  // length s_num

    std::size_t size() const { return w.size(); }
};

/// Linear interpolation of the color matching functions at lambda_nm.
/// Exact at table nodes; throws OutOfRange outside coverage.
std::array<double, 3> cmf_lookup(const CmfTable& table, double lambda_nm);

/// Uniform partition of [lambda_min, lambda_max] into s_num bands;
/// centers at lambda_min + (k + 0.5) * delta.
BandPartition make_partition(int s_num, double lambda_min_nm, double lambda_max_nm);

/// Partition from explicit (strictly ascending) centers, e.g. the 8-band
/// capture-device layout 400..750 nm. delta defaults to the center spacing.
BandPartition make_explicit_partition(const std::vector<double>& centers_nm,
                                      double delta_lambda_nm = 0.0);

/// Normalizing constant: kappa = 1 / sum_k f_Y(l_ck) L(l_ck) dLambda,
/// so the illuminant's composed white-light Y is 1.
double kappa_for_illuminant(const CmfTable& table, const Spd& spd,
                            const BandPartition& partition);

/// X = kappa * sum f_X(l_c) L(l_c) dLambda over band centers; same for Y, Z.
Xyz xyz_from_spd(const CmfTable& table, const Spd& spd,
                 const BandPartition& partition, double kappa);

Rgb rgb_from_xyz(const Xyz& xyz);

BandCoefficients band_coefficients(const CmfTable& table, const Spd& spd,
                                   const BandPartition& partition);

// Built-in data assets (embedded copies of the files under data/).
const CmfTable& cie_1931_2deg();
const Spd& illuminant_d65();
/// Equal-energy illuminant (L = 1) covering [300, 830] nm.
Spd illuminant_equal_energy();

/// Loads a whitespace-separated table with '#' comments: wavelength then
/// fx fy fz per line.
CmfTable load_cmf(const std::string& path);
/// Two-column variant: wavelength then relative power.
Spd load_spd(const std::string& path);

}  // namespace spnf
