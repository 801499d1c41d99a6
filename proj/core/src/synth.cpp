#include "asl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "asl/errors.hpp"
#include "asl/rng.hpp"

namespace asl {

namespace {

constexpr std::uint64_t kSceneTag = 0x5343454eULL;   // scene stream
constexpr std::uint64_t kShuffleTag = 0x53504c54ULL; // split shuffle stream

void paint_rect(LabelMask& mask, SplitMix64& rng, int cls, double area) {
    const int h = mask.height, w = mask.width;
    const double jitter = 0.6 + 1.0 * rng.next_double(); // aspect in [0.6, 1.6]
    int rw = std::clamp(static_cast<int>(std::lround(std::sqrt(area * jitter))), 1, w);
    int rh = std::clamp(static_cast<int>(std::lround(area / rw)), 1, h);
    const int x0 = static_cast<int>(rng.next_below(w - rw + 1));
    const int y0 = static_cast<int>(rng.next_below(h - rh + 1));
    for (int y = y0; y < y0 + rh; ++y)
        for (int x = x0; x < x0 + rw; ++x) mask.at(y, x) = static_cast<std::uint8_t>(cls);
}

void paint_disc(LabelMask& mask, SplitMix64& rng, int cls, double area) {
    const int h = mask.height, w = mask.width;
    const double r = std::max(1.0, std::sqrt(area / 3.14159265358979323846));
    const int ri = std::clamp(static_cast<int>(std::lround(r)), 1, std::min(h, w) / 2);
    const int cx = ri + static_cast<int>(rng.next_below(std::max(1, w - 2 * ri)));
    const int cy = ri + static_cast<int>(rng.next_below(std::max(1, h - 2 * ri)));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= ri * ri)
                mask.at(y, x) = static_cast<std::uint8_t>(cls);
}

// 3x3 box blur with replicate padding; spreads indicators over borders so
// border pixels are genuinely ambiguous once noise is added
Plane box_blur3(const Plane& p) {
    Plane out = make_plane(p.height, p.width);
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
            double sum = 0.0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int sy = std::clamp(y + dy, 0, p.height - 1);
                    const int sx = std::clamp(x + dx, 0, p.width - 1);
                    sum += p.at(sy, sx);
                }
            out.at(y, x) = sum / 9.0;
        }
    return out;
}

} // namespace

void validate(const SceneParams& params) {
    require(params.size_px >= 8, "scene size must be >= 8");
    require(params.num_classes >= 2 && params.num_classes <= 5, "num_classes must be in [2, 5]");
    require(params.imbalance >= 0.0 && params.imbalance <= 0.9, "imbalance must be in [0, 0.9]");
}

Scene gen_scene(std::uint64_t seed, const SceneParams& params) {
    validate(params);
    const int hw = params.size_px;
    const int C = params.num_classes;
    SplitMix64 rng(seed);

    Scene scene;
    scene.mask = make_mask(hw, hw, C);
    if (params.imbalance > 0.0) {
        const int shapes = 1 + static_cast<int>(rng.next_below(3));
        const double area_each = params.imbalance * hw * hw / shapes;
        for (int s = 0; s < shapes; ++s) {
            const int cls = 1 + static_cast<int>(rng.next_below(C - 1));
            if (rng.next_below(2) == 0)
                paint_rect(scene.mask, rng, cls, area_each);
            else
                paint_disc(scene.mask, rng, cls, area_each);
        }
    }

    scene.features = make_tensor(C + 2, hw, hw);
    for (int c = 0; c < C; ++c) {
        Plane ind = make_plane(hw, hw);
        for (int i = 0; i < ind.pixels(); ++i)
            ind.v[i] = scene.mask.labels[i] == c ? 1.0 : 0.0;
        const Plane soft = box_blur3(ind);
        double* ch = scene.features.channel(c);
        for (int i = 0; i < soft.pixels(); ++i)
            ch[i] = soft.v[i] + kFeatureNoiseSigma * rng.next_normal();
    }
    for (int y = 0; y < hw; ++y)
        for (int x = 0; x < hw; ++x) {
            scene.features.at(C, y, x) = hw > 1 ? static_cast<double>(x) / (hw - 1) : 0.0;
            scene.features.at(C + 1, y, x) = hw > 1 ? static_cast<double>(y) / (hw - 1) : 0.0;
        }
    return scene;
}

DatasetSplit gen_dataset(std::uint64_t seed, int count, const SceneParams& params) {
    validate(params);
    require(count >= 4, "dataset count must be >= 4");

    std::vector<Scene> scenes;
    scenes.reserve(count);
    for (int i = 0; i < count; ++i)
        scenes.push_back(gen_scene(derive_seed(seed, kSceneTag, i), params));

    std::vector<int> order(count);
    for (int i = 0; i < count; ++i) order[i] = i;
    SplitMix64 rng(derive_seed(seed, kShuffleTag));
    for (int i = count - 1; i > 0; --i)
        std::swap(order[i], order[rng.next_below(static_cast<std::uint64_t>(i) + 1)]);

    const int hold = std::max(1, count / 4);
    DatasetSplit split;
    split.seed = seed;
    split.hold_out.reserve(hold);
    split.train.reserve(count - hold);
    for (int i = 0; i < count; ++i) {
        if (i < hold)
            split.hold_out.push_back(std::move(scenes[order[i]]));
        else
            split.train.push_back(std::move(scenes[order[i]]));
    }
    return split;
}

std::vector<std::uint8_t> write_mask_pgm(const LabelMask& mask) {
    validate(mask);
    const std::string header =
        "P5\n" + std::to_string(mask.width) + " " + std::to_string(mask.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), mask.labels.begin(), mask.labels.end());
    return out;
}

namespace {

// PGM header token scanner that tracks the byte offset for error reports
struct PgmScanner {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;

    void skip_space_and_comments() {
        while (pos < bytes.size()) {
            const char c = static_cast<char>(bytes[pos]);
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    }

    int read_int(const char* what) {
        skip_space_and_comments();
        if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
            throw ParseError(std::string("PGM: expected ") + what, pos);
        long value = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + (bytes[pos] - '0');
            if (value > 1 << 30) throw ParseError(std::string("PGM: ") + what + " overflows", pos);
            ++pos;
        }
        return static_cast<int>(value);
    }
};

} // namespace

LabelMask read_mask_pgm(std::span<const std::uint8_t> bytes, int num_classes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw ParseError("PGM: only binary \"P5\" files are accepted", 0);
    PgmScanner sc{bytes, 2};
    const int w = sc.read_int("width");
    const int h = sc.read_int("height");
    const int maxval = sc.read_int("maxval");
    if (w < 1 || h < 1) throw ParseError("PGM: non-positive dimensions", sc.pos);
    if (maxval != 255) throw ParseError("PGM: maxval must be 255", sc.pos);
    if (sc.pos >= bytes.size()) throw ParseError("PGM: missing payload", sc.pos);
    ++sc.pos; // single whitespace byte after maxval

    const std::size_t need = static_cast<std::size_t>(w) * h;
    if (bytes.size() - sc.pos < need)
        throw ParseError("PGM: truncated payload", bytes.size());

    LabelMask mask = make_mask(h, w, num_classes);
    for (std::size_t i = 0; i < need; ++i) {
        const std::uint8_t label = bytes[sc.pos + i];
        if (label >= num_classes)
            throw ParseError("PGM: label " + std::to_string(label) + " >= num_classes " +
                                 std::to_string(num_classes),
                             sc.pos + i);
        mask.labels[i] = label;
    }
    return mask;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
    return static_cast<std::uint32_t>(bytes[at]) | (static_cast<std::uint32_t>(bytes[at + 1]) << 8) |
           (static_cast<std::uint32_t>(bytes[at + 2]) << 16) |
           (static_cast<std::uint32_t>(bytes[at + 3]) << 24);
}

static_assert(sizeof(double) == 8, "doubles must be 64-bit");

} // namespace

std::vector<std::uint8_t> write_features_bin(const Tensor3& features) {
    std::vector<std::uint8_t> out = {'A', 'S', 'L', 'F'};
    put_u32(out, static_cast<std::uint32_t>(features.channels));
    put_u32(out, static_cast<std::uint32_t>(features.height));
    put_u32(out, static_cast<std::uint32_t>(features.width));
    const std::size_t payload = features.v.size() * sizeof(double);
    const std::size_t head = out.size();
    out.resize(head + payload);
    std::memcpy(out.data() + head, features.v.data(), payload);
    return out;
}

Tensor3 read_features_bin(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "ASLF", 4) != 0)
        throw ParseError("feature file: bad magic, expected \"ASLF\"", 0);
    if (bytes.size() < 16) throw ParseError("feature file: truncated header", bytes.size());
    const int c = static_cast<int>(get_u32(bytes, 4));
    const int h = static_cast<int>(get_u32(bytes, 8));
    const int w = static_cast<int>(get_u32(bytes, 12));
    if (c < 1 || h < 1 || w < 1 || c > 1 << 16 || h > 1 << 16 || w > 1 << 16)
        throw ParseError("feature file: implausible dimensions", 4);
    Tensor3 t = make_tensor(c, h, w);
    const std::size_t payload = t.v.size() * sizeof(double);
    if (bytes.size() - 16 < payload)
        throw ParseError("feature file: truncated payload", bytes.size());
    std::memcpy(t.v.data(), bytes.data() + 16, payload);
    for (double v : t.v)
        if (!std::isfinite(v)) throw ParseError("feature file: non-finite value", 16);
    return t;
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string idx_name(int i) {
    std::string s = std::to_string(i);
    while (s.size() < 4) s.insert(s.begin(), '0');
    return s;
}

void save_part(const std::filesystem::path& dir, std::span<const Scene> scenes) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const std::string base = idx_name(static_cast<int>(i));
        write_file(dir / (base + ".pgm"), write_mask_pgm(scenes[i].mask));
        write_file(dir / (base + ".aslf"), write_features_bin(scenes[i].features));
    }
}

std::vector<Scene> load_part(const std::filesystem::path& dir, int num_classes) {
    std::vector<Scene> scenes;
    if (!std::filesystem::exists(dir)) return scenes;
    for (int i = 0;; ++i) {
        const std::string base = idx_name(i);
        const std::filesystem::path mask_path = dir / (base + ".pgm");
        if (!std::filesystem::exists(mask_path)) break;
        Scene s;
        s.mask = read_mask_pgm(read_file(mask_path), num_classes);
        s.features = read_features_bin(read_file(dir / (base + ".aslf")));
        require(s.features.height == s.mask.height && s.features.width == s.mask.width,
                "dataset: feature/mask shape mismatch");
        scenes.push_back(std::move(s));
    }
    return scenes;
}

} // namespace

void save_dataset(const std::filesystem::path& root, const DatasetSplit& split,
                  const SceneParams& params) {
    std::filesystem::create_directories(root);
    save_part(root / "train", split.train);
    save_part(root / "holdout", split.hold_out);

    nlohmann::json meta;
    meta["classes"] = params.num_classes;
    meta["count"] = static_cast<int>(split.train.size() + split.hold_out.size());
    meta["imbalance"] = params.imbalance;
    meta["seed"] = split.seed;
    meta["size"] = params.size_px;
    std::ofstream out(root / "meta.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write meta.json in " + root.string());
    out << meta.dump(2) << "\n";
}

LoadedDataset load_dataset(const std::filesystem::path& root) {
    if (!std::filesystem::exists(root))
        throw std::runtime_error("dataset directory not found: " + root.string());

    LoadedDataset ds;
    const std::filesystem::path meta_path = root / "meta.json";
    if (!std::filesystem::exists(meta_path))
        throw std::runtime_error("dataset meta.json not found in: " + root.string());
    nlohmann::json meta;
    try {
        std::ifstream in(meta_path, std::ios::binary);
        in >> meta;
        ds.params.num_classes = meta.at("classes").get<int>();
        ds.params.imbalance = meta.at("imbalance").get<double>();
        ds.params.size_px = meta.at("size").get<int>();
        ds.split.seed = meta.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed meta.json: " + std::string(e.what()));
    }

    ds.split.train = load_part(root / "train", ds.params.num_classes);
    ds.split.hold_out = load_part(root / "holdout", ds.params.num_classes);
    require(!ds.split.train.empty() || !ds.split.hold_out.empty(), "dataset is empty");
    return ds;
}

} // namespace asl
