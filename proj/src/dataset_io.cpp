#include "spnf/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spnf/random.hpp"

namespace fs = std::filesystem;

namespace spnf {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr char kSfmMagic[4] = {'S', 'F', 'M', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i)
        b[i] = char((v >> (8 * i)) & 0xff);
    buf.append(b, 4);
}

void put_f32(std::string& buf, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

std::uint32_t get_u32(const std::string& buf, std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i)
        v = (v << 8) | std::uint8_t(buf[pos + i]);
    return v;
}

float get_f32(const std::string& buf, std::size_t pos) {
    std::uint32_t bits = get_u32(buf, pos);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

constexpr std::size_t kSfmHeader = 4 + 4 * 3 + 4;

}  // namespace

void sfm_write(const std::string& path, const SpectralFloatMap& map) {
    if (map.width == 0 || map.height == 0 || map.channels == 0)
        throw InvalidArgument("sfm_write: dimensions must be positive");
    const std::size_t numel = std::size_t(map.width) * map.height * map.channels;
    if (map.data.size() != numel)
        throw DimMismatch("sfm_write: payload length does not match header dims");
    std::string buf;
    buf.reserve(kSfmHeader + 4 * numel);
    buf.append(kSfmMagic, 4);
    put_u32(buf, map.width);
    put_u32(buf, map.height);
    put_u32(buf, map.channels);
    put_f32(buf, map.band_center_nm);
    for (float v : map.data)
        put_f32(buf, v);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("sfm_write: cannot open " + path);
    out.write(buf.data(), std::streamsize(buf.size()));
    if (!out)
        throw IoError("sfm_write: write failed for " + path);
}

SpectralFloatMap sfm_read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingFile("sfm_read: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 4 || std::memcmp(buf.data(), kSfmMagic, 4) != 0)
        throw BadMagic("sfm_read: bad magic in " + path);
    if (buf.size() < kSfmHeader)
        throw TruncatedFile("sfm_read: truncated header in " + path);
    SpectralFloatMap map;
    map.width = get_u32(buf, 4);
    map.height = get_u32(buf, 8);
    map.channels = get_u32(buf, 12);
    map.band_center_nm = get_f32(buf, 16);
    const std::size_t numel = std::size_t(map.width) * map.height * map.channels;
    if (buf.size() < kSfmHeader + 4 * numel)
        throw TruncatedFile("sfm_read: payload shorter than declared dims in " + path);
    if (buf.size() > kSfmHeader + 4 * numel)
        throw DimMismatch("sfm_read: trailing bytes after payload in " + path);
    map.data.resize(numel);
    for (std::size_t i = 0; i < numel; ++i)
        map.data[i] = get_f32(buf, kSfmHeader + 4 * i);
    return map;
}

void sfm_validate(const std::string& path, std::uint32_t width, std::uint32_t height,
                  std::uint32_t channels) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingFile("sfm_validate: missing file " + path);
    std::string head(kSfmHeader, '\0');
    in.read(head.data(), kSfmHeader);
    if (in.gcount() < std::streamsize(kSfmHeader))
        throw TruncatedFile("sfm_validate: truncated header in " + path);
    if (std::memcmp(head.data(), kSfmMagic, 4) != 0)
        throw BadMagic("sfm_validate: bad magic in " + path);
    const std::uint32_t w = get_u32(head, 4), h = get_u32(head, 8), c = get_u32(head, 12);
    if (w != width || h != height || c != channels) {
        std::ostringstream os;
        os << "sfm_validate: " << path << ": dims " << w << "x" << h << "x" << c
           << " do not match expected " << width << "x" << height << "x" << channels;
        throw DimMismatch(os.str());
    }
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    if (std::size_t(size) != kSfmHeader + 4 * std::size_t(w) * h * c)
        throw TruncatedFile("sfm_validate: payload size mismatch in " + path);
}

SpectralFloatMap sfm_from_rgb(const RgbImage& image, float band_center_nm) {
    SpectralFloatMap map;
    map.width = std::uint32_t(image.width);
    map.height = std::uint32_t(image.height);
    map.channels = 3;
    map.band_center_nm = band_center_nm;
    map.data.resize(std::size_t(image.width) * image.height * 3);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < image.height; ++y)
            for (int x = 0; x < image.width; ++x)
                map.data[(std::size_t(c) * image.height + y) * image.width + x] =
                    float(image.at(x, y, c));
    return map;
}

RgbImage rgb_from_sfm(const SpectralFloatMap& map) {
    if (map.channels != 3)
        throw DimMismatch("rgb_from_sfm: expected 3 channels, got " +
                          std::to_string(map.channels));
    RgbImage image(int(map.width), int(map.height));
    for (std::uint32_t c = 0; c < 3; ++c)
        for (std::uint32_t y = 0; y < map.height; ++y)
            for (std::uint32_t x = 0; x < map.width; ++x)
                image.at(int(x), int(y), int(c)) = map.at(x, y, c);
    return image;
}

SpectralFloatMap sfm_from_band(const SpectrumStack& stack, int band) {
    return sfm_from_rgb(stack.band_image(band),
                        band < int(stack.centers_nm.size())
                            ? float(stack.centers_nm[band])
                            : 0.0f);
}

double EmissionSpectrum::sample(double lambda_nm) const {
    const double d = (lambda_nm - center_nm) / width_nm;
    return amplitude * std::exp(-0.5 * d * d);
}

double AnalyticScene::density(const Vec3& p) const {
    double sigma = 0.0;
    for (const DensityBlob& b : blobs) {
        const Vec3 d = p - b.center;
        sigma += b.peak_sigma * std::exp(-0.5 * d.dot(d) / (b.radius * b.radius));
    }
    return sigma;
}

void AnalyticScene::band_radiance(const Vec3& p, const std::vector<double>& centers_nm,
                                  double* out) const {
    double total = 0.0;
    std::fill(out, out + centers_nm.size(), 0.0);
    for (const DensityBlob& b : blobs) {
        const Vec3 d = p - b.center;
        const double w = b.peak_sigma * std::exp(-0.5 * d.dot(d) / (b.radius * b.radius));
        total += w;
        for (std::size_t k = 0; k < centers_nm.size(); ++k)
            out[k] += w * b.emission.sample(centers_nm[k]);
    }
    if (total > 1e-300)
        for (std::size_t k = 0; k < centers_nm.size(); ++k)
            out[k] /= total;
}

SpectrumStack oracle_render(const AnalyticScene& scene, const Camera& camera,
                            const BandPartition& partition, int samples_per_ray) {
    camera.validate();
    if (samples_per_ray < 2)
        throw InvalidArgument("oracle_render: need at least 2 samples per ray");
    const int s_num = partition.s_num;
    SpectrumStack stack(camera.width, camera.height, s_num);
    stack.centers_nm = partition.centers_nm;

    const double step = (camera.t_far - camera.t_near) / samples_per_ray;
    std::vector<double> bands(s_num);
    std::vector<double> values(s_num);
    for (int y = 0; y < camera.height; ++y)
        for (int x = 0; x < camera.width; ++x) {
            const Ray ray = generate_ray(camera, x, y);
            std::fill(values.begin(), values.end(), 0.0);
            double trans = 1.0;
            for (int i = 0; i < samples_per_ray; ++i) {
                const double t = camera.t_near + (i + 0.5) * step;
                const Vec3 p = ray.origin + t * ray.direction;
                const double sigma = scene.density(p);
                const double alpha = 1.0 - std::exp(-sigma * step);
                if (alpha > 0.0) {
                    scene.band_radiance(p, partition.centers_nm, bands.data());
                    const double w = trans * alpha;
                    for (int k = 0; k < s_num; ++k)
                        values[k] += w * bands[k];
                }
                trans *= 1.0 - alpha;
                if (trans < 1e-10)
                    break;
            }
            if (scene.white_background)
                for (int k = 0; k < s_num; ++k)
                    values[k] += trans;
            for (int k = 0; k < s_num; ++k)
                for (int c = 0; c < 3; ++c)
                    stack.at(k, x, y, c) = values[k];
        }
    return stack;
}

FieldFn analytic_field_fn(const AnalyticScene& scene, std::vector<double> centers_nm) {
    return [scene, centers = std::move(centers_nm)](
               const std::vector<Vec3>& pos, const std::vector<Vec3>&,
               std::vector<double>& sigma, std::vector<double>& radiance) {
        const std::size_t k = centers.size();
        sigma.resize(pos.size());
        radiance.resize(pos.size() * k * 3);
        std::vector<double> bands(k);
        for (std::size_t i = 0; i < pos.size(); ++i) {
            sigma[i] = scene.density(pos[i]);
            scene.band_radiance(pos[i], centers, bands.data());
            for (std::size_t b = 0; b < k; ++b)
                for (int c = 0; c < 3; ++c)
                    radiance[(i * k + b) * 3 + c] = bands[b];
        }
    };
}

// ---------------------------------------------------------------------------
// Manifest text format (key-value lines, '#' comments, paths relative to
// the manifest file).

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void write_manifest(const std::string& path, const SceneManifest& m) {
    std::ostringstream os;
    os << "# spnf dataset manifest\n";
    os << "format 1\n";
    os << "name " << m.name << "\n";
    os << "snum " << m.partition.s_num << "\n";
    if (m.partition.explicit_centers) {
        os << "partition explicit";
        for (double c : m.partition.centers_nm)
            os << " " << fmt(c);
        os << "\n";
        os << "delta " << fmt(m.partition.delta_lambda_nm) << "\n";
    } else {
        os << "partition uniform " << fmt(m.partition.lambda_min_nm) << " "
           << fmt(m.partition.lambda_max_nm) << "\n";
    }
    os << "illuminant " << m.illuminant << "\n";
    os << "illuminant_mode " << m.illuminant_mode << "\n";
    os << "kappa " << fmt(m.kappa) << "\n";
    if (!m.fusion_weights.empty()) {
        os << "fusion_weights";
        for (double w : m.fusion_weights)
            os << " " << fmt(w);
        os << "\n";
    }
    os << "width " << m.width << "\n";
    os << "height " << m.height << "\n";
    os << "views " << m.views.size() << "\n";
    for (const ViewRecord& v : m.views) {
        os << "view " << v.index << " " << v.split << "\n";
        os << "intrinsics " << fmt(v.camera.fx) << " " << fmt(v.camera.fy) << " "
           << fmt(v.camera.cx) << " " << fmt(v.camera.cy) << "\n";
        os << "range " << fmt(v.camera.t_near) << " " << fmt(v.camera.t_far) << "\n";
        os << "pose";
        for (double x : v.camera.pose.m)
            os << " " << fmt(x);
        os << "\n";
        for (std::size_t k = 0; k < v.band_paths.size(); ++k)
            os << "band " << k << " " << v.band_paths[k] << "\n";
        os << "rgb " << v.rgb_path << "\n";
        os << "endview\n";
    }
    std::ofstream out(path);
    if (!out)
        throw IoError("write_manifest: cannot open " + path);
    out << os.str();
}

SceneManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw MissingFile("read_manifest: cannot open " + path);
    SceneManifest m;
    double uniform_lo = 0.0, uniform_hi = 0.0, delta = 0.0;
    std::vector<double> explicit_centers;
    bool is_explicit = false;
    int snum = 0;
    std::size_t declared_views = 0;
    ViewRecord view;
    bool in_view = false;

    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) -> void {
        throw IoError("read_manifest: " + path + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key))
            continue;
        if (key == "format") {
            int v;
            ls >> v;
            if (v != 1)
                fail("unsupported manifest format");
        } else if (key == "name") {
            ls >> m.name;
        } else if (key == "snum") {
            ls >> snum;
        } else if (key == "partition") {
            std::string kind;
            ls >> kind;
            if (kind == "uniform") {
                ls >> uniform_lo >> uniform_hi;
            } else if (kind == "explicit") {
                is_explicit = true;
                double c;
                while (ls >> c)
                    explicit_centers.push_back(c);
            } else {
                fail("unknown partition kind '" + kind + "'");
            }
        } else if (key == "delta") {
            ls >> delta;
        } else if (key == "illuminant") {
            ls >> m.illuminant;
        } else if (key == "illuminant_mode") {
            ls >> m.illuminant_mode;
        } else if (key == "kappa") {
            ls >> m.kappa;
        } else if (key == "fusion_weights") {
            double w;
            while (ls >> w)
                m.fusion_weights.push_back(w);
        } else if (key == "width") {
            ls >> m.width;
        } else if (key == "height") {
            ls >> m.height;
        } else if (key == "views") {
            ls >> declared_views;
        } else if (key == "view") {
            if (in_view)
                fail("nested view block");
            in_view = true;
            view = ViewRecord{};
            ls >> view.index >> view.split;
            view.camera.width = m.width;
            view.camera.height = m.height;
        } else if (key == "intrinsics") {
            ls >> view.camera.fx >> view.camera.fy >> view.camera.cx >> view.camera.cy;
        } else if (key == "range") {
            ls >> view.camera.t_near >> view.camera.t_far;
        } else if (key == "pose") {
            for (double& x : view.camera.pose.m)
                if (!(ls >> x))
                    fail("pose needs 16 numbers");
        } else if (key == "band") {
            int k;
            std::string p;
            ls >> k >> p;
            if (k != int(view.band_paths.size()))
                fail("band indices must be consecutive");
            view.band_paths.push_back(p);
        } else if (key == "rgb") {
            ls >> view.rgb_path;
        } else if (key == "endview") {
            if (!in_view)
                fail("endview without view");
            m.views.push_back(view);
            in_view = false;
        } else {
            fail("unknown manifest key '" + key + "'");
        }
    }
    if (in_view)
        throw IoError("read_manifest: " + path + ": unterminated view block");
    if (m.views.size() != declared_views)
        throw IoError("read_manifest: " + path + ": declared " +
                      std::to_string(declared_views) + " views, found " +
                      std::to_string(m.views.size()));
    if (snum < 1)
        throw BadPartition("read_manifest: " + path + ": snum must be >= 1");
    if (is_explicit) {
        if (int(explicit_centers.size()) != snum)
            throw BadPartition("read_manifest: " + path + ": explicit centers count != snum");
        m.partition = make_explicit_partition(explicit_centers, delta);
    } else {
        m.partition = make_partition(snum, uniform_lo, uniform_hi);
    }
    return m;
}

SpectrumStack Dataset::load_stack(int view) const {
    const ViewRecord& v = manifest.views.at(view);
    SpectrumStack stack(manifest.width, manifest.height, manifest.partition.s_num);
    stack.centers_nm = manifest.partition.centers_nm;
    for (int k = 0; k < manifest.partition.s_num; ++k) {
        SpectralFloatMap map = sfm_read((fs::path(root_dir) / v.band_paths[k]).string());
        if (int(map.width) != manifest.width || int(map.height) != manifest.height ||
            map.channels != 3)
            throw DimMismatch("Dataset::load_stack: dims mismatch in " + v.band_paths[k]);
        for (int y = 0; y < manifest.height; ++y)
            for (int x = 0; x < manifest.width; ++x)
                for (int c = 0; c < 3; ++c)
                    stack.at(k, x, y, c) = map.at(x, y, c);
    }
    return stack;
}

RgbImage Dataset::load_rgb(int view) const {
    const ViewRecord& v = manifest.views.at(view);
    SpectralFloatMap map = sfm_read((fs::path(root_dir) / v.rgb_path).string());
    if (int(map.width) != manifest.width || int(map.height) != manifest.height)
        throw DimMismatch("Dataset::load_rgb: dims mismatch in " + v.rgb_path);
    return rgb_from_sfm(map);
}

std::vector<int> Dataset::views_with_split(const std::string& split) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < manifest.views.size(); ++i)
        if (manifest.views[i].split == split)
            out.push_back(int(i));
    return out;
}

Dataset load_dataset(const std::string& manifest_path) {
    Dataset ds;
    ds.manifest = read_manifest(manifest_path);
    ds.root_dir = fs::path(manifest_path).parent_path().string();
    if (ds.root_dir.empty())
        ds.root_dir = ".";
    const auto& m = ds.manifest;
    if (m.illuminant_mode == "fusion" &&
        int(m.fusion_weights.size()) != m.partition.s_num)
        throw BadPartition("load_dataset: fusion_weights length != snum");
    for (const ViewRecord& v : m.views) {
        if (int(v.band_paths.size()) != m.partition.s_num)
            throw BadPartition("load_dataset: view " + std::to_string(v.index) + " has " +
                               std::to_string(v.band_paths.size()) + " band maps, snum is " +
                               std::to_string(m.partition.s_num));
        // Rotation block must be invertible.
        const Mat4& p = v.camera.pose;
        const double det = p(0, 0) * (p(1, 1) * p(2, 2) - p(1, 2) * p(2, 1)) -
                           p(0, 1) * (p(1, 0) * p(2, 2) - p(1, 2) * p(2, 0)) +
                           p(0, 2) * (p(1, 0) * p(2, 1) - p(1, 1) * p(2, 0));
        if (std::abs(det) < 1e-12)
            throw InvalidArgument("load_dataset: singular pose for view " +
                                  std::to_string(v.index));
        v.camera.validate();
        for (const std::string& rel : v.band_paths)
            sfm_validate((fs::path(ds.root_dir) / rel).string(), m.width, m.height, 3);
        sfm_validate((fs::path(ds.root_dir) / v.rgb_path).string(), m.width, m.height, 3);
    }
    return ds;
}

double dataset_self_consistency(const Dataset& dataset) {
    const auto& m = dataset.manifest;
    double max_dev = 0.0;
    for (std::size_t v = 0; v < m.views.size(); ++v) {
        SpectrumStack stack = dataset.load_stack(int(v));
        RgbImage stored = dataset.load_rgb(int(v));
        RgbImage rebuilt(m.width, m.height);
        if (m.illuminant_mode == "fusion") {
            for (int k = 0; k < stack.bands; ++k) {
                const double* src = stack.band_data(k);
                for (std::size_t i = 0; i < rebuilt.data.size(); ++i)
                    rebuilt.data[i] += m.fusion_weights[k] * src[i];
            }
        } else {
            rebuilt = compose_rgb(stack, m.kappa);
        }
        for (std::size_t i = 0; i < stored.data.size(); ++i)
            max_dev = std::max(max_dev, std::abs(stored.data[i] - rebuilt.data[i]));
    }
    return max_dev;
}

Spd resolve_illuminant(const std::string& name) {
    if (name == "d65")
        return illuminant_d65();
    if (name == "equal")
        return illuminant_equal_energy();
    return load_spd(name);
}

SceneManifest gen_synthetic(const SynthesisConfig& cfg, const std::string& out_dir) {
    if (cfg.train_views + cfg.test_views < 2)
        throw InvalidArgument("gen_synthetic: need at least 2 views");
    if (cfg.partition.s_num < 1)
        throw BadPartition("gen_synthetic: partition has no bands");
    fs::create_directories(fs::path(out_dir) / "maps");

    const Spd spd = resolve_illuminant(cfg.illuminant);
    const CmfTable& cmf = cie_1931_2deg();
    const double kappa_illum = kappa_for_illuminant(cmf, spd, cfg.partition);
    const bool fusion_mode = cfg.illuminant_mode == "fusion";

    // Per-band display colors: non-negative sRGB response of each band,
    // scaled so stored map values stay within [0, 1].
    const Spd unit = illuminant_equal_energy();
    BandCoefficients coeff = band_coefficients(cmf, fusion_mode ? unit : spd, cfg.partition);
    double peak = 0.0;
    for (auto& w : coeff.w)
        for (double& c : w) {
            c = std::max(0.0, c);
            peak = std::max(peak, c);
        }
    if (peak <= 0.0)
        throw DegenerateIlluminant("gen_synthetic: all band coefficients vanish");
    const double kappa_store = 1.0 / peak;

    SceneManifest m;
    m.name = cfg.name;
    m.partition = cfg.partition;
    m.illuminant = cfg.illuminant;
    m.illuminant_mode = cfg.illuminant_mode;
    m.width = cfg.width;
    m.height = cfg.height;
    if (fusion_mode) {
        m.kappa = 1.0;
        m.fusion_weights.resize(cfg.partition.s_num);
        for (int k = 0; k < cfg.partition.s_num; ++k)
            m.fusion_weights[k] = kappa_illum * spd.sample(cfg.partition.centers_nm[k]) /
                                  kappa_store;
    } else {
        m.kappa = kappa_illum / kappa_store;
    }

    const CounterRng rng{cfg.seed};
    const int n_views = cfg.train_views + cfg.test_views;
    const double focal = 0.5 * cfg.width / std::tan(0.5 * cfg.fov_deg * kPi / 180.0);
    for (int i = 0; i < n_views; ++i) {
        // Seeded pose on the view sphere; elevation kept off the poles.
        const double azimuth = 2.0 * kPi * rng.uniform(0x706f7365, i, 0);
        const double elevation = (rng.uniform(0x706f7365, i, 1) * 2.0 - 1.0) * 1.2;
        const Vec3 eye{cfg.camera_radius * std::cos(elevation) * std::cos(azimuth),
                       cfg.camera_radius * std::sin(elevation),
                       cfg.camera_radius * std::cos(elevation) * std::sin(azimuth)};
        ViewRecord v;
        v.index = i;
        v.split = i < cfg.train_views ? "train" : "test";
        v.camera.width = cfg.width;
        v.camera.height = cfg.height;
        v.camera.fx = v.camera.fy = focal;
        v.camera.cx = cfg.width / 2.0;
        v.camera.cy = cfg.height / 2.0;
        v.camera.pose = look_at(eye, Vec3{0, 0, 0}, Vec3{0, 1, 0});
        v.camera.t_near = cfg.t_near;
        v.camera.t_far = cfg.t_far;
        v.camera.validate();

        SpectrumStack raw = oracle_render(cfg.scene, v.camera, cfg.partition,
                                          cfg.oracle_samples);
        SpectrumStack colored(cfg.width, cfg.height, cfg.partition.s_num);
        colored.centers_nm = cfg.partition.centers_nm;
        for (int k = 0; k < cfg.partition.s_num; ++k)
            for (int y = 0; y < cfg.height; ++y)
                for (int x = 0; x < cfg.width; ++x)
                    for (int c = 0; c < 3; ++c)
                        colored.at(k, x, y, c) =
                            raw.at(k, x, y, c) * coeff.w[k][c] * kappa_store;

        char buf[64];
        for (int k = 0; k < cfg.partition.s_num; ++k) {
            std::snprintf(buf, sizeof buf, "maps/v%03d_b%02d.sfm", i, k);
            v.band_paths.push_back(buf);
            sfm_write((fs::path(out_dir) / buf).string(), sfm_from_band(colored, k));
        }
        RgbImage rgb(cfg.width, cfg.height);
        if (fusion_mode) {
            for (int k = 0; k < cfg.partition.s_num; ++k) {
                const double* src = colored.band_data(k);
                for (std::size_t j = 0; j < rgb.data.size(); ++j)
                    rgb.data[j] += m.fusion_weights[k] * src[j];
            }
        } else {
            rgb = compose_rgb(colored, m.kappa);
        }
        std::snprintf(buf, sizeof buf, "maps/v%03d_rgb.sfm", i);
        v.rgb_path = buf;
        sfm_write((fs::path(out_dir) / buf).string(), sfm_from_rgb(rgb));
        m.views.push_back(std::move(v));
    }
    write_manifest((fs::path(out_dir) / "manifest.txt").string(), m);
    return m;
}

}  // namespace spnf
