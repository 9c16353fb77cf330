#include "spnf/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace spnf {

RgbImage compose_rgb(const SpectrumStack& stack, double kappa) {
    if (stack.bands == 0 || stack.data.empty())
        throw EmptyStack("compose_rgb: empty spectrum map stack");
    RgbImage out(stack.width, stack.height);
    const std::size_t plane = stack.band_stride();
    for (int k = 0; k < stack.bands; ++k) {
        const double* src = stack.band_data(k);
        for (std::size_t i = 0; i < plane; ++i)
            out.data[i] += src[i];
    }
    for (double& v : out.data)
        v *= kappa;
    return out;
}

void write_ppm(const std::string& path, const RgbImage& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("write_ppm: cannot open " + path);
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<unsigned char> row(std::size_t(image.width) * 3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = std::clamp(image.at(x, y, c), 0.0, 1.0);
                row[std::size_t(x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
        out.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
}

}  // namespace spnf
