#include "spnf/spectral_color.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace spnf {

namespace {

void check_ascending(const std::vector<double>& w, const char* what) {
    if (w.empty())
        throw InvalidArgument(std::string(what) + ": empty wavelength grid");
    for (std::size_t i = 1; i < w.size(); ++i)
        if (!(w[i] > w[i - 1]))
            throw InvalidArgument(std::string(what) + ": wavelengths not strictly ascending");
}

// Returns (index, fraction) of the bracketing interval for lambda.
std::pair<std::size_t, double> bracket(const std::vector<double>& w, double lambda,
                                       const char* what) {
    if (lambda < w.front() || lambda > w.back()) {
        std::ostringstream os;
        os << what << ": lambda " << lambda << " nm outside table coverage ["
           << w.front() << ", " << w.back() << "]";
        throw OutOfRange(os.str());
    }
    auto it = std::upper_bound(w.begin(), w.end(), lambda);
    std::size_t hi = std::min<std::size_t>(it - w.begin(), w.size() - 1);
    std::size_t lo = hi - (hi > 0 ? 1 : 0);
    if (hi == lo)
        return {lo, 0.0};
    double u = (lambda - w[lo]) / (w[hi] - w[lo]);
    return {lo, u};
}

}  // namespace

void CmfTable::validate() const {
    check_ascending(wavelengths_nm, "CmfTable");
    const std::size_t n = wavelengths_nm.size();
    if (fx.size() != n || fy.size() != n || fz.size() != n)
        throw InvalidArgument("CmfTable: column lengths disagree");
    for (std::size_t i = 0; i < n; ++i)
        if (fx[i] < 0.0 || fy[i] < 0.0 || fz[i] < 0.0)
            throw InvalidArgument("CmfTable: negative color matching value");
    if (min_nm() > 380.0 || max_nm() < 780.0)
        throw InvalidArgument("CmfTable: must cover at least [380, 780] nm");
    std::size_t peak = std::max_element(fy.begin(), fy.end()) - fy.begin();
    double peak_nm = wavelengths_nm[peak];
    if (peak_nm < 550.0 || peak_nm > 560.0)
        throw InvalidArgument("CmfTable: f_Y peak outside [550, 560] nm");
}

void Spd::validate() const {
    check_ascending(wavelengths_nm, "Spd");
    if (power.size() != wavelengths_nm.size())
        throw InvalidArgument("Spd: column lengths disagree");
    for (double p : power)
        if (p < 0.0)
            throw InvalidArgument("Spd: negative power");
}

double Spd::sample(double lambda_nm) const {
    auto [lo, u] = bracket(wavelengths_nm, lambda_nm, "Spd");
    if (u == 0.0)
        return power[lo];
    return (1.0 - u) * power[lo] + u * power[lo + 1];
}

std::array<double, 3> cmf_lookup(const CmfTable& table, double lambda_nm) {
    auto [lo, u] = bracket(table.wavelengths_nm, lambda_nm, "cmf_lookup");
    if (u == 0.0)
        return {table.fx[lo], table.fy[lo], table.fz[lo]};
    std::size_t hi = lo + 1;
    return {(1.0 - u) * table.fx[lo] + u * table.fx[hi],
            (1.0 - u) * table.fy[lo] + u * table.fy[hi],
            (1.0 - u) * table.fz[lo] + u * table.fz[hi]};
}

BandPartition make_partition(int s_num, double lambda_min_nm, double lambda_max_nm) {
    if (s_num < 1)
        throw InvalidArgument("make_partition: s_num must be >= 1");
    if (!(lambda_max_nm > lambda_min_nm))
        throw InvalidArgument("make_partition: inverted wavelength range");
    BandPartition p;
    p.s_num = s_num;
    p.lambda_min_nm = lambda_min_nm;
    p.lambda_max_nm = lambda_max_nm;
    p.delta_lambda_nm = (lambda_max_nm - lambda_min_nm) / s_num;
    p.centers_nm.resize(s_num);
    for (int k = 0; k < s_num; ++k)
        p.centers_nm[k] = lambda_min_nm + (k + 0.5) * p.delta_lambda_nm;
    return p;
}

BandPartition make_explicit_partition(const std::vector<double>& centers_nm,
                                      double delta_lambda_nm) {
    if (centers_nm.empty())
        throw InvalidArgument("make_explicit_partition: no centers");
    check_ascending(centers_nm, "make_explicit_partition");
    BandPartition p;
    p.s_num = static_cast<int>(centers_nm.size());
    p.centers_nm = centers_nm;
    p.explicit_centers = true;
    if (delta_lambda_nm <= 0.0) {
        delta_lambda_nm = centers_nm.size() > 1
                              ? (centers_nm.back() - centers_nm.front()) / (centers_nm.size() - 1)
                              : 1.0;
    }
    p.delta_lambda_nm = delta_lambda_nm;
    p.lambda_min_nm = centers_nm.front() - 0.5 * delta_lambda_nm;
    p.lambda_max_nm = centers_nm.back() + 0.5 * delta_lambda_nm;
    return p;
}

double kappa_for_illuminant(const CmfTable& table, const Spd& spd,
                            const BandPartition& partition) {
    double denom = 0.0;
    for (double lc : partition.centers_nm) {
        auto f = cmf_lookup(table, lc);
        denom += f[1] * spd.sample(lc) * partition.delta_lambda_nm;
    }
    if (denom == 0.0)
        throw DegenerateIlluminant("kappa_for_illuminant: zero luminance denominator");
    return 1.0 / denom;
}

Xyz xyz_from_spd(const CmfTable& table, const Spd& spd,
                 const BandPartition& partition, double kappa) {
    Xyz out;
    for (double lc : partition.centers_nm) {
        auto f = cmf_lookup(table, lc);
        double l = spd.sample(lc) * partition.delta_lambda_nm;
        out.x += f[0] * l;
        out.y += f[1] * l;
        out.z += f[2] * l;
    }
    out.x *= kappa;
    out.y *= kappa;
    out.z *= kappa;
    return out;
}

ConversionMatrix srgb_matrix() {
    return {{3.133, -1.616, -0.490,
             -0.978, 1.916, 0.033,
             0.072, -0.229, 1.405}};
}

Rgb rgb_from_xyz(const Xyz& xyz) {
    const auto& m = srgb_matrix().m;
    return {m[0] * xyz.x + m[1] * xyz.y + m[2] * xyz.z,
            m[3] * xyz.x + m[4] * xyz.y + m[5] * xyz.z,
            m[6] * xyz.x + m[7] * xyz.y + m[8] * xyz.z};
}

BandCoefficients band_coefficients(const CmfTable& table, const Spd& spd,
                                   const BandPartition& partition) {
    const auto& m = srgb_matrix().m;
    BandCoefficients out;
    out.w.reserve(partition.centers_nm.size());
    for (double lc : partition.centers_nm) {
        auto f = cmf_lookup(table, lc);
        double l = spd.sample(lc) * partition.delta_lambda_nm;
        out.w.push_back({(m[0] * f[0] + m[1] * f[1] + m[2] * f[2]) * l,
                         (m[3] * f[0] + m[4] * f[1] + m[5] * f[2]) * l,
                         (m[6] * f[0] + m[7] * f[1] + m[8] * f[2]) * l});
    }
    return out;
}

Spd illuminant_equal_energy() {
    Spd s;
    s.wavelengths_nm = {300.0, 830.0};
    s.power = {1.0, 1.0};
    return s;
}

namespace {

std::vector<std::vector<double>> load_columns(const std::string& path, std::size_t ncols,
                                              const char* what) {
    std::ifstream in(path);
    if (!in)
        throw MissingFile(std::string(what) + ": cannot open " + path);
    std::vector<std::vector<double>> cols(ncols);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        double v;
        std::vector<double> row;
        while (ls >> v)
            row.push_back(v);
        if (row.empty())
            continue;
        if (row.size() != ncols) {
            std::ostringstream os;
            os << what << ": " << path << ":" << lineno << ": expected " << ncols
               << " columns, got " << row.size();
            throw IoError(os.str());
        }
        for (std::size_t c = 0; c < ncols; ++c)
            cols[c].push_back(row[c]);
    }
    return cols;
}

}  // namespace

CmfTable load_cmf(const std::string& path) {
    auto cols = load_columns(path, 4, "load_cmf");
    CmfTable t;
    t.wavelengths_nm = std::move(cols[0]);
    t.fx = std::move(cols[1]);
    t.fy = std::move(cols[2]);
    t.fz = std::move(cols[3]);
    t.validate();
    return t;
}

Spd load_spd(const std::string& path) {
    auto cols = load_columns(path, 2, "load_spd");
    Spd s;
    s.wavelengths_nm = std::move(cols[0]);
    s.power = std::move(cols[1]);
    s.validate();
    return s;
}

}  // namespace spnf
